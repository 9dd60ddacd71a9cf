"""Numerical dynamics of inner functions and holomorphic maps on the disk.

Modules: geometry (Möbius maps, metrics, Stolz angles, distortion), maps
(the catalog), inner_dynamics, inverse_branches, boundary_measure,
periodic_finder and the batch driver in cli.
"""
__version__ = "0.1.0"
