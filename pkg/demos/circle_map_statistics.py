"""
Statistics of a boundary map
=============================

An inner function that fixes 0 preserves arc length on the circle.  For
z^2 the boundary map is angle doubling, which is ergodic: a typical orbit
visits each arc in proportion to its length.
"""

import math

from innerdyn.inner_dynamics import ergodicity_experiment, invariance_chi2, lifting_degree
from innerdyn.maps import FiniteBlaschke, PowerMap

g = PowerMap(2)
e = ergodicity_experiment(g, theta0=0.3, n_iter=10**6)
print(f"Kolmogorov-Smirnov discrepancy of 10^6 iterates: {e.discrepancy:.4f}")
for a in e.arcs:
    print(f"  arc {a.arc}: {a.visits} visits, expected {a.expected:.0f}, z={a.zscore:+.2f}")

# invariance of arc length: push 10^6 uniform angles through the map
chi = invariance_chi2(g)
print(f"chi^2 on 64 bins: {chi.statistic:.1f} (99% critical value {chi.critical:.1f})")

###############################################################################
# A degree-two Blaschke product with a zero at -1/2 also fixes 0.  Its circle
# map winds twice around, and arc length is again invariant.
b = FiniteBlaschke([0.0, -0.5])
print("lifting degree:", lifting_degree(b))
print("chi^2 passes:", invariance_chi2(b).passed)

# the irrational rotation by the golden angle is uniquely ergodic
rot = FiniteBlaschke([0.0], complex(math.cos(math.pi * (math.sqrt(5) - 1)),
                                    math.sin(math.pi * (math.sqrt(5) - 1))))
print(f"golden rotation discrepancy: {ergodicity_experiment(rot, 0.3, 10**5).discrepancy:.2e}")
