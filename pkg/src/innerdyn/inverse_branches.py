"""Inverse branches of iterates near the unit circle.

Branches are realized by continuation along a stored forward orbit: the
chain remembers one preimage per level and follows it as the target moves.
No global labelling of the preimages is kept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BranchObstruction, CriticalValueError, EssentialSingularity, NotApplicable,
                     NumericalFailure)
from .geometry import (INF, RadialSegmentSpec, StolzAngleSpec, distortion_constant,
                       generalized_angle, hyperbolic_distance_disk, in_stolz_angle,
                       radial_segment_points)
from .maps import MapDescriptor, complex_pair, critical_points, postsingular_approx
from .roots import newton_polish, polynomial_roots

ORBIT_TOL = 1e-10
NEWTON_TOL = 1e-12
NEWTON_ITERS = 8
MIN_STEP = 1e-12
DERIV_FLOOR = 1e-10


# ---------------------------------------------------------------------------
# preimages


@dataclass
class Preimages:
    points: np.ndarray
    residuals: np.ndarray
    critical: bool

    def to_dict(self):
        return {"points": [complex_pair(z) for z in self.points],
                "residuals": self.residuals.tolist(), "critical": self.critical}


def preimages(g: MapDescriptor, w: complex, region_radius: float | None = None,
              strict: bool = False) -> Preimages:
    """All solutions of g(z) = w in the working region.

    Multiple roots (w a critical value within 1e-10) are returned with
    ``critical`` set; with ``strict`` they raise CriticalValueError.
    """
    poly = g.preimage_polynomial(complex(w))
    if poly is None:
        raise NotApplicable(f"{g.kind} has no polynomial preimage equation")
    R = g.region_radius if region_radius is None else region_radius
    roots = polynomial_roots(np.asarray(poly, dtype=complex))
    pts, res = [], []
    for z in roots:
        if abs(g._df(z)) > DERIV_FLOOR:
            z, r = newton_polish(lambda x: g._f(x) - w, g._df, z, tol=1e-14)
        else:
            r = abs(g._f(z) - w)
        if abs(z) <= R:
            pts.append(complex(z))
            res.append(float(r))
    pts_a = np.array(pts, dtype=complex)
    critical = bool(pts_a.size and np.min(np.abs(g._df(pts_a))) < DERIV_FLOOR)
    if not critical and pts_a.size > 1:
        d = np.abs(pts_a[:, None] - pts_a[None, :]) + np.eye(pts_a.size)
        critical = bool(d.min() < 1e-7)
    if critical and strict:
        raise CriticalValueError(complex(w), pts)
    return Preimages(pts_a, np.array(res), critical)


# ---------------------------------------------------------------------------
# branch chains


@dataclass
class BranchChain:
    """An inverse branch of g^n along the orbit x_0 -> x_1 -> ... -> x_n.

    ``pull(z)`` continues the branch from x_n to z and returns the point
    over x_0.  The anchor orbit is fixed; each call starts from it.
    """

    g: MapDescriptor
    orbit: tuple
    validity_radius: float = math.nan
    _critical: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.orbit = tuple(complex(x) for x in self.orbit)
        if not self.orbit:
            raise ValueError("anchor orbit must contain at least x_0")
        for j in range(self.depth):
            r = abs(self.g._f(self.orbit[j]) - self.orbit[j + 1])
            if r > ORBIT_TOL * max(1.0, abs(self.orbit[j + 1])):
                raise ValueError(f"anchor orbit breaks at step {j} (residual {r:.2e})")

    @property
    def depth(self) -> int:
        return len(self.orbit) - 1

    @property
    def top(self) -> complex:
        return self.orbit[-1]

    @property
    def base(self) -> complex:
        return self.orbit[0]

    def critical_set(self) -> list:
        if self._critical is None:
            try:
                self._critical = critical_points(self.g)
            except Exception:  # kinds without a derivative numerator
                self._critical = []
        return self._critical

    def _obstruction(self, where: complex, level: int) -> BranchObstruction:
        crit = self.critical_set()
        near = min(crit, key=lambda c: abs(c - where)) if crit else None
        return BranchObstruction(complex(where), near, level)

    def _correct(self, y0: complex, target: complex):
        f, df = self.g._f, self.g._df
        y = y0
        for it in range(NEWTON_ITERS):
            d = df(y)
            if abs(d) < DERIV_FLOOR:
                return None, True
            step = (f(y) - target) / d
            y = y - step
            if abs(f(y) - target) < NEWTON_TOL * max(1.0, abs(target)):
                return y, False
        return None, False

    def _advance(self, levels: list, w_new: complex):
        """Move the top to w_new; returns the new levels or None on failure."""
        new = [0j] * len(levels)
        new[-1] = w_new
        for j in range(self.depth - 1, -1, -1):
            dy = new[j + 1] - levels[j + 1]
            d = self.g._df(levels[j])
            if abs(d) < DERIV_FLOOR:
                raise self._obstruction(levels[j], j)
            pred = levels[j] + dy / d
            y, singular = self._correct(pred, new[j + 1])
            if singular:
                raise self._obstruction(pred, j)
            if y is None:
                return None
            # reject corrections that look like a jump to another preimage
            if abs(y - pred) > 0.5 * abs(pred - levels[j]) + 1e-10 * max(1.0, abs(y)):
                return None
            new[j] = y
        return new

    def _levels_along(self, levels: list, z: complex) -> list:
        start = levels[-1]
        s, ds = 0.0, 0.125
        while s < 1.0:
            ds = min(ds, 1.0 - s)
            s1 = 1.0 if ds >= 1.0 - s else s + ds
            try:
                new = self._advance(levels, start + s1 * (z - start))
            except EssentialSingularity as exc:
                raise BranchObstruction(complex(exc.point), None, -1) from exc
            if new is None:
                ds *= 0.5
                if ds < MIN_STEP:
                    raise self._obstruction(levels[0], 0)
                continue
            levels, s = new, s1
            ds = min(2.0 * ds, 0.25)
        return levels

    def pull(self, z: complex) -> complex:
        """Depth-n preimage of z on this branch."""
        z = complex(z)
        if self.depth == 0:
            return z
        return self._levels_along(list(self.orbit), z)[0]

    def pull_levels(self, z: complex) -> list:
        """All intermediate points G_n(z), g(G_n(z)), ..., z."""
        if self.depth == 0:
            return [complex(z)]
        return self._levels_along(list(self.orbit), complex(z))

    def track(self, points) -> np.ndarray:
        """Pull back a sequence of targets, continuing from one to the next."""
        levels = list(self.orbit)
        out = np.empty(len(points), dtype=complex)
        for i, z in enumerate(points):
            if self.depth:
                levels = self._levels_along(levels, complex(z))
                out[i] = levels[0]
            else:
                out[i] = z
        return out

    def step_map(self, j: int):
        """Single-step pullback at level j as a chain of depth one."""
        return BranchChain(self.g, self.orbit[j : j + 2])

    def to_dict(self):
        return {"depth": self.depth, "orbit": [complex_pair(x) for x in self.orbit],
                "validity_radius": self.validity_radius}


def continue_branch(chain: BranchChain, z: complex) -> complex:
    return chain.pull(z)


def backward_chain(g: MapDescriptor, xi: complex, depth: int, choices=None,
                   rng: np.random.Generator | None = None) -> BranchChain:
    """Chain of depth ``depth`` whose top is xi.

    ``choices`` picks, level by level, an index into the preimages sorted
    by argument; ``rng`` picks at random; with neither the preimage nearest
    to the previous point is taken.
    """
    pts = [complex(xi)]
    for j in range(depth):
        pre = preimages(g, pts[-1]).points
        if pre.size == 0:
            raise NumericalFailure(f"no preimage of {pts[-1]} in the working region")
        if choices is not None:
            pre = pre[np.argsort(np.angle(pre))]
            z = pre[choices[j] % pre.size]
        elif rng is not None:
            z = pre[rng.integers(pre.size)]
        else:
            z = pre[np.argmin(np.abs(pre - pts[-1]))]
        if g.inner and abs(abs(pts[-1]) - 1) < 1e-12:
            z = z / abs(z)
        pts.append(complex(z))
    return BranchChain(g, tuple(reversed(pts)))


# ---------------------------------------------------------------------------
# well-definedness radius


@dataclass
class WellDefinednessEstimate:
    xi: complex
    depth: int
    rho0: float
    cloud_distance: float
    nearest: complex | None
    validated: bool
    obstructions: int
    samples: list = field(default_factory=list)

    def to_dict(self):
        return {"xi": complex_pair(self.xi), "depth": self.depth, "rho0": self.rho0,
                "cloud_distance": self.cloud_distance,
                "nearest": None if self.nearest is None else complex_pair(self.nearest),
                "validated": self.validated, "obstructions": self.obstructions,
                "samples": self.samples}


def obstruction_distance(g: MapDescriptor, xi: complex, depth: int):
    """Distance from xi to the depth-N postsingular cloud and the declared singular set."""
    xi = complex(xi)
    cloud = postsingular_approx(g, depth)
    pts = list(cloud.points) + [s for s in g.singularities]
    if not pts:
        return math.inf, None
    arr = np.array(pts, dtype=complex)
    k = int(np.argmin(np.abs(arr - xi)))
    return float(abs(arr[k] - xi)), complex(arr[k])


def well_definedness_radius(g: MapDescriptor, xi, N: int, cap: float = 1.0,
                            n_validate: int = 16, seed: int = 0,
                            validate: bool = True) -> WellDefinednessEstimate:
    """rho0 = min(distance from xi to the depth-N obstruction set, cap)."""
    xi = complex(xi)
    if abs(abs(xi) - 1) > 1e-12:
        raise ValueError("xi must lie on the unit circle")
    dist, near = obstruction_distance(g, xi, N)
    if dist < 1e-8:
        return WellDefinednessEstimate(xi, N, 0.0, dist, near, False, 0)
    rho0 = min(dist, cap)
    if not validate or g.preimage_polynomial(xi) is None:
        return WellDefinednessEstimate(xi, N, rho0, dist, near, False, 0)
    rng = np.random.default_rng(seed)
    fails, samples = 0, []
    for _ in range(n_validate):
        n = int(rng.integers(1, N + 1))
        chain = backward_chain(g, xi, n, rng=rng)
        angle = rng.uniform(0, 2 * math.pi)
        target = xi + 0.9 * rho0 * complex(math.cos(angle), math.sin(angle))
        try:
            zn = chain.pull(target)
            ok = True
        except BranchObstruction:
            ok = False
            fails += 1
        samples.append({"depth": n, "target": complex_pair(target), "ok": ok,
                        "value": complex_pair(zn) if ok else None})
    return WellDefinednessEstimate(xi, N, rho0, dist, near, fails == 0, fails, samples)


def rho0_fraction(g: MapDescriptor, N: int, threshold: float, grid: int = 64, cap: float = 1.0) -> float:
    """Fraction of a uniform circle grid with rho0 above ``threshold``."""
    th = 2 * math.pi * np.arange(grid) / grid
    good = 0
    for t in th:
        est = well_definedness_radius(g, complex(math.cos(t), math.sin(t)), N, cap, validate=False)
        good += est.rho0 > threshold
    return good / grid


# ---------------------------------------------------------------------------
# Stolz containment


@dataclass
class StolzContainment:
    contained: bool
    max_angle_observed: float
    max_depth_observed: float
    depths: list
    obstructions: int
    rho: float
    alpha: float
    analytic_rho1: float | None = None

    def to_dict(self):
        return {"contained": self.contained, "max_angle_observed": self.max_angle_observed,
                "max_depth_observed": self.max_depth_observed, "depths": self.depths,
                "obstructions": self.obstructions, "rho": self.rho, "alpha": self.alpha,
                "analytic_rho1": self.analytic_rho1}


def analytic_rho1(rho0: float, alpha: float) -> float:
    """Radius where the distortion bound C(r)/(1 - C(r)) equals tan(alpha), scaled by rho0."""
    t = math.tan(alpha)
    c = t / (1.0 + t)
    r = 1.0 - 1.0 / math.sqrt(1.0 + c)
    assert abs(distortion_constant(r) - c) < 1e-9
    return rho0 * r


def _segment_through(chain: BranchChain, xi, p, alpha, rho, samples):
    seg = radial_segment_points(RadialSegmentSpec(xi, p, rho), samples)
    # continue from the tip (x_n = xi) inward
    imgs = chain.track(seg[::-1])[::-1]
    eta = chain.base
    if abs(abs(eta) - 1) < 1e-9:
        eta = eta / abs(eta)
    spec = StolzAngleSpec(eta, p, alpha, rho)
    inside = np.asarray(in_stolz_angle(imgs, spec))
    ang, dep = generalized_angle(imgs, eta, p)
    return bool(np.all(inside)), float(np.max(ang)), float(np.max(dep))


def stolz_containment_check(g: MapDescriptor, xi, p, alpha: float, rho: float, depth: int,
                            samples: int = 64, choices=None, all_depths: bool = True
                            ) -> StolzContainment:
    """Push the radial segment at (xi, p) through G_n and test the Stolz angle at G_n(xi).

    With ``all_depths`` every n = 1 .. depth is tested on the branch whose
    first n levels are those of the depth-``depth`` chain.
    """
    xi = complex(xi)
    full = backward_chain(g, xi, depth, choices=choices)
    levels = list(full.orbit)
    depths = list(range(1, depth + 1)) if all_depths else [depth]
    ok_all, worst_a, worst_d, per, obs = True, 0.0, 0.0, [], 0
    for n in depths:
        chain = BranchChain(g, tuple(levels[depth - n :]))
        try:
            ok, a, d = _segment_through(chain, xi, p, alpha, rho, samples)
        except BranchObstruction:
            obs += 1
            ok, a, d = False, math.inf, math.inf
        ok_all &= ok
        worst_a, worst_d = max(worst_a, a), max(worst_d, d)
        per.append({"n": n, "contained": ok, "max_angle": a})
    return StolzContainment(ok_all, worst_a, worst_d, per, obs, float(rho), float(alpha))


def bisect_rho1(g: MapDescriptor, xi, p, alpha: float, depth: int, rho_max: float,
                samples: int = 64, iters: int = 30, choices=None) -> float:
    """Largest rho <= rho_max with containment at every depth <= ``depth``."""
    def ok(r):
        return stolz_containment_check(g, xi, p, alpha, r, depth, samples, choices).contained

    if ok(rho_max):
        return float(rho_max)
    lo, hi = 0.0, float(rho_max)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# reflection


def schwarz_reflection_value(g: MapDescriptor, z: complex) -> complex:
    """1 / conj(g(1 / conj z)) for z outside the closed disk."""
    z = complex(z)
    if abs(z) <= 1.0:
        raise ValueError("reflection is defined outside the closed disk")
    w = g(1.0 / z.conjugate())
    if w == 0:
        return INF
    return 1.0 / complex(w).conjugate()


def branch_expansion_pairs(chain: BranchChain, pts) -> np.ndarray:
    """dist(G z, G w) - dist(z, w) over consecutive pairs of disk points."""
    img = chain.track(pts)
    out = []
    for i in range(len(pts) - 1):
        out.append(hyperbolic_distance_disk(img[i], img[i + 1])
                   - hyperbolic_distance_disk(pts[i], pts[i + 1]))
    return np.array(out)
