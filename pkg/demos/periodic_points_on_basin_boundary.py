"""
Repelling periodic points near a basin boundary
===============================================

Near any boundary point x of an attracting basin one can find a repelling
periodic point: follow the orbit of x until it comes back close to x with
enough expansion, then pull a small disk back along the orbit.  The pullback
maps the disk strictly into itself, so it has a unique fixed point, which
is periodic for the map.
"""

import numpy as np

from innerdyn.periodic_finder import (certify_near, density_experiment, oracle_periodic_points,
                                      ray_boundary_point)
from innerdyn.maps import PowerMap, quadratic

f = quadratic(0.2)
x = ray_boundary_point(f, 1.0)
cert, _ = certify_near(f, x, delta=0.1, maxN=12, rng=np.random.default_rng(0))
print(f"seed {x:.6f}")
print(f"period {cert.period}, point {cert.point:.12f}, |multiplier| {abs(cert.multiplier):.3f}")
print(f"residual {cert.residual:.1e}, inclusion margin {cert.inclusion_margin:.3e}")

# the same point among all solutions of f^N(z) = z
roots = np.array([q["point"] for q in oracle_periodic_points(f, cert.period)])
print("distance to nearest oracle root:", np.min(np.abs(roots - cert.point)))

###############################################################################
# For z^2 the certified points are roots of unity of order 2^N - 1, with
# multiplier of modulus 2^N.
rep = density_experiment(PowerMap(2), n_seeds=64)
print("success fraction:", rep.success_fraction)
print("periods found:", dict(sorted(rep.period_histogram.items())))
