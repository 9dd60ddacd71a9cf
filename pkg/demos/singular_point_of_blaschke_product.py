"""
Where an infinite Blaschke product is singular
==============================================

The product with zeros 1 - 2^-k accumulates at 1.  Near that point the map
takes every value of the disk, except a small set, in any neighbourhood.
Away from it the map extends across the circle.  The scan samples crosscut
neighbourhoods and measures how densely their images cover the disk.
"""

from innerdyn.inner_dynamics import radial_limit, singularity_scan
from innerdyn.maps import InfiniteBlaschke

B = InfiniteBlaschke()
scan = singularity_scan(B, eps=0.05, n_samples=10**5)
print("certified singular points:", scan.certified)
for v in scan.verdicts + scan.spot_checks:
    print(f"  {v.point}: {v.status}, largest omitted disk radius {v.omitted_radius:.3f}")

# radial limits: unimodular away from 1, undecided at 1 itself
for xi in (1j, -1, 1):
    r = radial_limit(B, xi)
    print(f"radial limit at {xi}: {r.status}, value {r.value}")
