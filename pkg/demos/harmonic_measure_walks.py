"""
Harmonic measure from random walks
==================================

The harmonic measure of a boundary set, seen from a base point, is the
chance that Brownian motion started there first hits the boundary in that
set.  On the disk and the half-plane it is known exactly, so walk-on-spheres
samples can be checked against the Poisson kernel.
"""

import math

import numpy as np

from innerdyn.boundary_measure import (DomainOracle, harmonic_sample, poisson_arc_measure,
                                       poisson_interval_measure, support_density_check)
from innerdyn.maps import PowerMap

S = harmonic_sample(DomainOracle("exact_disk", 0.5), 10**5, rng_seed=1)
arc = (-math.pi / 2, math.pi / 2)
print(f"disk from 0.5, right half circle: {S.arc_fraction(arc):.4f}"
      f" (exact {poisson_arc_measure(0.5, arc):.4f})")
print(f"mean walk length: {S.steps.mean():.1f} steps")

H = harmonic_sample(DomainOracle("exact_halfplane", 1j), 10**5, rng_seed=1)
print(f"half-plane from i, [-1, 1]: {H.interval_fraction((-1, 1)):.4f}"
      f" (exact {poisson_interval_measure(1j, (-1, 1)):.4f})")

###############################################################################
# The basin of 0 for z^2 is the disk itself, but the sampler only knows it
# through membership (does the orbit reach 0?).  Hits still land on the
# unit circle and spread evenly.
B = harmonic_sample(DomainOracle("fatou_component", 0, PowerMap(2)), 2000, rng_seed=1)
probes = np.exp(2j * np.pi * np.arange(64) / 64)
print(f"basin hits: |z| in [{np.abs(B.hits).min():.4f}, {np.abs(B.hits).max():.4f}]")
print("probe coverage at r = 0.1:", support_density_check(B, probes, 0.1))
