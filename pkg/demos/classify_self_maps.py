"""
Classifying self-maps of the disk
=================================

Every holomorphic self-map of the disk that is not an elliptic automorphism
has an attracting point, interior or on the circle.  When it is on the
circle, the step sizes of an orbit in the hyperbolic metric tell hyperbolic,
simply parabolic and doubly parabolic maps apart.
"""

import numpy as np

from innerdyn.inner_dynamics import cowen_classify, denjoy_wolff, hyperbolic_steps
from innerdyn.maps import FiniteBlaschke, HalfplaneMoebiusModel, PowerMap

# Four canonical examples: z^2 on the disk, and 2w, w+1, w+i on the upper
# half-plane, carried to the disk by the Cayley map at 1.
maps = {
    "z^2": PowerMap(2),
    "2w": HalfplaneMoebiusModel.affine(2.0, 0.0),
    "w+1": HalfplaneMoebiusModel.affine(1.0, 1.0),
    "w+i": HalfplaneMoebiusModel.affine(1.0, 1j),
}

for name, g in maps.items():
    c = cowen_classify(g)
    print(f"{name:5s} {c.type:17s} dw={c.p:.6f}  multiplier={c.multiplier:.6f}")

# The step sizes: constant log 2 for 2w, a positive floor for w+1, and
# decay like 1/n for w+i.  The 2w orbit reaches the circle to double
# precision after a few dozen steps, so its record is short.
for name in ("2w", "w+1", "w+i"):
    s = hyperbolic_steps(maps[name], 0j, 1000)
    idx = [n for n in (1, 10, 100, 999) if n < len(s)]
    print(f"{name:5s} steps at n={idx}: {np.round(s[idx], 6)}")

###############################################################################
# A Blaschke factor (3z+1)/(z+3) fixes 1 and -1.  The attracting one is 1,
# with angular derivative 8/(z+3)^2 = 1/2 there.
dw = denjoy_wolff(FiniteBlaschke([-1 / 3]))
print("Blaschke factor:", dw.p, dw.multiplier)
