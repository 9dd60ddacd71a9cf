"""Dynamics of self-maps of the disk.

Denjoy-Wolff points, the elliptic/hyperbolic/parabolic classification,
radial limits, boundary circle maps, singularity detection and empirical
ergodic statistics.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .errors import ConvergenceError, EssentialSingularity, NotApplicable
from .geometry import CrosscutNeighbourhood, is_infinite
from .maps import InfiniteBlaschke, MapDescriptor, complex_pair

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
INTERIOR_TOL = 1e-9
HYPERBOLIC_TOL = 1e-6
PARABOLIC_TOL = 1e-4
STEP_FLOOR = 1e-3
SATURATION = 1e-8


def _dist_disk(z: complex, w: complex, scale: float = 1.0) -> float:
    az, aw = abs(z), abs(w)
    gap = math.sqrt((1 - az) * (1 + az) * (1 - aw) * (1 + aw))
    return scale * 2.0 * math.asinh(abs(z - w) / gap)


def _require_self_map(g: MapDescriptor) -> None:
    if not g.disk_self_map:
        raise NotApplicable(f"{g.kind} is not a self-map of the unit disk")


# ---------------------------------------------------------------------------
# Denjoy-Wolff point


@dataclass
class DenjoyWolff:
    p: complex
    multiplier: float
    interior: bool
    refined: bool = True
    spread: float = 0.0
    residual: float = 0.0

    def to_dict(self):
        return {"p": complex_pair(self.p), "multiplier": self.multiplier,
                "interior": self.interior, "refined": self.refined,
                "spread": self.spread, "residual": self.residual}


def _schroeder_newton(F, dF, d2F, z: complex, iters: int = 100, tol: float = 1e-15):
    """Newton on F/F', which has simple roots even where F has multiple ones."""
    for _ in range(iters):
        f, d = F(z), dF(z)
        if f == 0:
            return z
        if d == 0:
            return z
        dd = d2F(z)
        den = d * d - f * dd
        step = f * d / den if den != 0 else f / d
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            break
    return z


def _second_derivative(g: MapDescriptor, z: complex) -> complex:
    h = 1e-5 * max(1.0, abs(z))
    return (g._df(z + h) - g._df(z - h)) / (2 * h)


def _angle_newton(g: MapDescriptor, theta: float, iters: int = 100) -> float:
    """Solve arg(g(e^{iθ}) e^{-iθ}) = 0 with the multiplicity-safe update."""

    def h(t):
        z = cmath.exp(1j * t)
        return cmath.phase(g._f(z) / z)

    def dh(t):
        z = cmath.exp(1j * t)
        return (z * g._df(z) / g._f(z)).real - 1.0

    for _ in range(iters):
        f, d = h(theta), dh(theta)
        if f == 0:
            break
        e = 1e-6
        dd = (dh(theta + e) - dh(theta - e)) / (2 * e)
        den = d * d - f * dd
        step = f * d / den if den != 0 else (f / d if d != 0 else 0.0)
        theta -= step
        if abs(step) < 1e-16:
            break
    return theta % TWO_PI


def denjoy_wolff(g: MapDescriptor, budget: int = 4000, z0: complex = 0j) -> DenjoyWolff:
    """Attracting point of the iterates of a self-map of the disk."""
    _require_self_map(g)
    z = complex(z0)
    tail = []
    for n in range(budget):
        w = complex(g._f(z))
        if n >= budget - max(10, budget // 10):
            tail.append(w)
        if abs(w - z) < 1e-15:
            z = w
            tail.append(w)
            break
        z = w
    F = lambda x: g._f(x) - x  # noqa: E731
    dF = lambda x: g._df(x) - 1.0  # noqa: E731
    d2F = lambda x: _second_derivative(g, x)  # noqa: E731
    p = _schroeder_newton(F, dF, d2F, z)
    if abs(p) < 1 - INTERIOR_TOL and abs(F(p)) < 1e-12 and abs(g._df(p)) < 1:
        return DenjoyWolff(complex(p), float(abs(g._df(p))), True, True, 0.0, float(abs(F(p))))
    # boundary point: cluster of the orbit
    ang = np.angle(np.array(tail))
    centre = cmath.phase(np.mean(np.exp(1j * ang)))
    spread = float(np.max(np.abs(np.angle(np.exp(1j * (ang - centre)))))) if len(tail) else 0.0
    if abs(z) < 1 - 1e-3 and spread > 1e-3:
        raise ConvergenceError("orbit neither converges inside nor clusters at one boundary point")
    xi = cmath.exp(1j * centre)
    exact = getattr(g, "fixed_points", None)
    if exact is not None:
        cands = [q for q in exact() if abs(abs(q) - 1) < 1e-9]
        if cands:
            p = min(cands, key=lambda q: abs(q - xi))
            return DenjoyWolff(complex(p), float(abs(g._df(p))), False, True, spread,
                               float(abs(g._f(p) - p)))
    if g.analytic_on_circle:
        theta = _angle_newton(g, centre)
        p = cmath.exp(1j * theta)
        refined = True
    elif isinstance(g, InfiniteBlaschke) and abs(xi - g.accumulation_point) < 1e-3:
        return DenjoyWolff(xi, float("nan"), False, False, spread, float("nan"))
    else:
        p = _schroeder_newton(F, dF, d2F, xi)
        refined = abs(abs(p) - 1) < 1e-8
        p = p / abs(p)
    resid = float(abs(g._f(p) - p))
    return DenjoyWolff(complex(p), float(abs(g._df(p))), False, refined, spread, resid)


# ---------------------------------------------------------------------------
# Cowen classification


@dataclass
class CowenClassification:
    type: str
    p: complex
    multiplier: float
    step_tail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"type": self.type, "dw": complex_pair(self.p),
                "multiplier": self.multiplier, "hyperbolic_step_tail": self.step_tail}


def hyperbolic_steps(g: MapDescriptor, z0: complex, n_steps: int, scale: float = 1.0) -> np.ndarray:
    """s_n = dist(g^{n+1}(z0), g^n(z0)) for n = 0 .. n_steps-1.

    The sequence is cut short once the orbit is within 1e-8 of the circle,
    where the distance formula has lost most of its digits.
    """
    out = np.empty(n_steps)
    z = complex(z0)
    for n in range(n_steps):
        w = complex(g._f(z))
        if 1.0 - abs(w) < SATURATION:
            return out[:n]
        out[n] = _dist_disk(w, z, scale)
        z = w
    return out


def cowen_classify(g: MapDescriptor, z0: complex = 0j, n_steps: int = 4000) -> CowenClassification:
    """elliptic / hyperbolic / simply_parabolic / doubly_parabolic / undetermined."""
    dw = denjoy_wolff(g)
    if dw.interior:
        return CowenClassification("elliptic", dw.p, dw.multiplier)
    s = hyperbolic_steps(g, z0, n_steps)
    if s.size < 2:
        return CowenClassification("undetermined", dw.p, dw.multiplier, {"steps": int(s.size)})
    t = s[-max(2, s.size // 4):]
    tail = {"first": float(t[0]), "last": float(t[-1]), "min": float(t.min()), "max": float(t.max())}
    if not math.isfinite(dw.multiplier):
        return CowenClassification("undetermined", dw.p, dw.multiplier, tail)
    if dw.multiplier < 1 - HYPERBOLIC_TOL:
        kind = "hyperbolic"
    elif abs(dw.multiplier - 1) <= PARABOLIC_TOL:
        decreasing = bool(np.all(np.diff(t) <= 1e-12 * t[:-1]))
        if t[-1] < STEP_FLOOR and decreasing:
            kind = "doubly_parabolic"
        elif t.min() > STEP_FLOOR:
            kind = "simply_parabolic"
            tail["floor"] = float(t.min())
        else:
            kind = "undetermined"
    else:
        kind = "undetermined"
    return CowenClassification(kind, dw.p, dw.multiplier, tail)


@dataclass
class RecurrenceCheck:
    satisfied: bool
    K: float
    max_residual: float
    n: np.ndarray
    fitted_residuals: np.ndarray
    scale: float
    r_exponent: float

    def to_dict(self, keep: int = 64):
        idx = np.unique(np.linspace(0, self.n.size - 1, min(keep, self.n.size)).astype(int))
        return {"satisfied": self.satisfied, "K": self.K, "max_residual": self.max_residual,
                "scale": self.scale, "r_exponent": self.r_exponent,
                "n": self.n[idx].tolist(), "fitted_residuals": self.fitted_residuals[idx].tolist()}


def recurrence_criterion_check(g: MapDescriptor, z0: complex = 0j, n_steps: int = 10**4,
                               r_exponent: float = 2.0, scale: float = 1.0, n_min: int = 100,
                               tol: float = 1e-3) -> RecurrenceCheck:
    """Test s_n <= scale/n + K/n^r + tol on n_min <= n <= n_steps.

    K is the least-squares fit of s_n - scale/n against n^-r over that
    range; the check is one-sided in the fitted residuals.
    """
    dw = denjoy_wolff(g)
    if dw.interior:
        raise NotApplicable("recurrence criterion applies to non-elliptic maps only")
    s = hyperbolic_steps(g, z0, n_steps + 1, scale=1.0)
    if s.size < n_steps + 1:
        n_steps = s.size - 1
    if n_steps < n_min + 2:
        raise NotApplicable("orbit reaches the circle before the fitting range")
    n = np.arange(n_min, n_steps + 1, dtype=float)
    e = s[n_min : n_steps + 1] - scale / n
    basis = n**-r_exponent
    K = float(np.dot(e, basis) / np.dot(basis, basis))
    resid = e - K * basis
    worst = float(resid.max())
    return RecurrenceCheck(worst < tol, K, worst, n, resid, scale, r_exponent)


# ---------------------------------------------------------------------------
# radial limits


@dataclass
class RadialLimitResult:
    value: complex | None
    samples: np.ndarray
    tail_gap: float
    extrapolant_spread: float
    status: str
    interior: bool = False
    note: str = ""

    @property
    def has_limit(self) -> bool:
        return self.value is not None

    def to_dict(self):
        v = self.value
        return {"value": None if v is None else ("inf" if is_infinite(v) else complex_pair(v)),
                "status": self.status, "tail_gap": self.tail_gap,
                "extrapolant_spread": self.extrapolant_spread, "interior": self.interior,
                "note": self.note, "samples": [complex_pair(x) for x in self.samples]}


def _aitken(s: np.ndarray) -> np.ndarray:
    a, b, c = s[:-2], s[1:-1], s[2:]
    den = (c - b) - (b - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = c - (c - b) ** 2 / den
    small = np.abs(den) <= 1e-14 * np.maximum(1.0, np.abs(c))
    return np.where(small | ~np.isfinite(acc), c, acc)


def _diagnose(s: np.ndarray, tol: float):
    gap = float(np.max(np.abs(np.diff(s[-4:]))))
    acc = _aitken(s)[-3:]
    spread = float(max(abs(acc[i] - acc[j]) for i in range(3) for j in range(3)))
    return gap, spread, complex(acc[-1])


def radial_limit(g: MapDescriptor, xi, kmax: int = 48, tol: float = 1e-8,
                 cross_check: bool = True) -> RadialLimitResult:
    """Radial limit of g at xi along t_k = 1 - 2^-k.

    A value is reported only when the last gaps and last three Aitken
    extrapolants are below ``tol``.  With ``cross_check`` a second schedule
    1 - 1.5 * 2^-k must agree; the two schedules interleave, so a sequence
    that only looks convergent on the first one (for example because it
    samples exactly at zeros) is exposed.
    """
    xi = complex(xi)
    if abs(abs(xi) - 1) > 1e-12:
        raise ValueError("xi must lie on the unit circle")
    k = np.arange(1, kmax + 1)
    t = 1.0 - 2.0 ** (-k.astype(float))
    try:
        s = np.array([g(tk * xi) for tk in t], dtype=complex)
    except EssentialSingularity as exc:
        return RadialLimitResult(None, np.zeros(0, complex), math.inf, math.inf, "singular",
                                 note=f"schedule hits the singularity {exc.point}")
    gap, spread, value = _diagnose(s, tol)
    ok = gap < tol and spread < tol
    note = ""
    if ok and cross_check:
        t2 = 1.0 - 1.5 * 2.0 ** (-k[1:].astype(float))
        s2 = np.array([g(tk * xi) for tk in t2], dtype=complex)
        gap2, spread2, value2 = _diagnose(s2, tol)
        if not (gap2 < tol and spread2 < tol and abs(value2 - value) < 10 * tol):
            ok = False
            note = "offset schedule disagrees"
    if not ok:
        log.info("radial limit at %s not certified (gap %.2e, spread %.2e) %s", xi, gap, spread, note)
        return RadialLimitResult(None, s, gap, spread, "no_limit", note=note)
    interior = bool(g.inner and abs(value) < 1 - 1e-6)
    if interior:
        note = "certified radial value lies inside the disk"
        log.warning("radial limit of inner map at %s is interior: %s", xi, value)
    return RadialLimitResult(value, s, gap, spread, "limit", interior, note)


# ---------------------------------------------------------------------------
# boundary circle maps


def _require_circle_analytic(g: MapDescriptor) -> None:
    if not (g.inner and g.analytic_on_circle):
        raise NotApplicable(f"{g.kind} does not induce an analytic circle map")


def boundary_circle_map(g: MapDescriptor, theta, lift: bool = False):
    """θ' = arg g(e^{iθ}) in [0, 2π); with ``lift`` a continuous branch over an array."""
    _require_circle_analytic(g)
    if np.ndim(theta) == 0:
        return cmath.phase(g._f(cmath.exp(1j * float(theta)))) % TWO_PI
    th = np.asarray(theta, dtype=float)
    out = np.angle(g._f(np.exp(1j * th)))
    if lift:
        return np.unwrap(out)
    return np.mod(out, TWO_PI)


def lifting_degree(g: MapDescriptor, n: int = 4096) -> int:
    """Winding number of θ -> g(e^{iθ}) over a uniform partition."""
    th = np.linspace(0.0, TWO_PI, n + 1)
    lifted = boundary_circle_map(g, th, lift=True)
    return int(round((lifted[-1] - lifted[0]) / TWO_PI))


@dataclass
class ArcStatistics:
    arc: tuple
    visits: int
    expected: float
    sigma: float
    zscore: float
    mean_return_time: float

    def to_dict(self):
        return {"arc": list(self.arc), "visits": self.visits, "expected": self.expected,
                "sigma": self.sigma, "zscore": self.zscore, "mean_return_time": self.mean_return_time}


@dataclass
class ErgodicReport:
    n_iter: int
    theta0: float
    discrepancy: float
    arcs: list
    max_gap: float
    orbit: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"orbit_length": self.n_iter, "theta0": self.theta0,
                "discrepancy": self.discrepancy, "max_gap": self.max_gap,
                "arcs": [a.to_dict() for a in self.arcs]}


def ks_discrepancy(u: np.ndarray) -> float:
    """Sup-norm distance between the empirical CDF of u in [0,1) and the uniform one."""
    u = np.sort(np.asarray(u, dtype=float))
    n = u.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def circle_orbit(g: MapDescriptor, theta0: float, n_iter: int) -> np.ndarray:
    """Sequential orbit of the boundary map, n_iter angles after theta0."""
    _require_circle_analytic(g)
    f = g._f
    out = np.empty(n_iter)
    th = float(theta0)
    exp, phase = cmath.exp, cmath.phase
    for n in range(n_iter):
        th = phase(f(exp(1j * th))) % TWO_PI
        out[n] = th
    return out


def ergodicity_experiment(g: MapDescriptor, theta0: float = 0.3, n_iter: int = 10**6,
                          test_arcs=((0.0, 0.1),), seed: int | None = None) -> ErgodicReport:
    """Equidistribution, arc returns and gaps along one boundary orbit.

    With ``seed`` the start angle is theta0 plus a uniform offset in
    [0, 1e-3) drawn from that seed.
    """
    _require_circle_analytic(g)
    if abs(g(0j)) > 1e-12:
        raise NotApplicable("ergodicity experiment needs g(0) = 0")
    th0 = float(theta0)
    if seed is not None:
        th0 += 1e-3 * float(np.random.default_rng(seed).random())
    orb = circle_orbit(g, th0, n_iter)
    disc = ks_discrepancy(orb / TWO_PI)
    arcs = []
    for a, b in test_arcs:
        length = (b - a) % TWO_PI or TWO_PI
        inside = np.mod(orb - a, TWO_PI) < length
        hits = np.nonzero(inside)[0]
        p = length / TWO_PI
        exp_n = n_iter * p
        sigma = math.sqrt(n_iter * p * (1 - p))
        mrt = float(np.mean(np.diff(hits))) if hits.size > 1 else math.inf
        arcs.append(ArcStatistics((float(a), float(b)), int(hits.size), exp_n, sigma,
                                  (hits.size - exp_n) / sigma if sigma else 0.0, mrt))
    srt = np.sort(orb)
    gaps = np.diff(np.concatenate([srt, [srt[0] + TWO_PI]]))
    return ErgodicReport(n_iter, th0, disc, arcs, float(gaps.max()), orb)


@dataclass
class InvarianceReport:
    statistic: float
    critical: float
    bins: int
    samples: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical

    def to_dict(self):
        return {"statistic": self.statistic, "critical": self.critical, "bins": self.bins,
                "samples": self.samples, "passed": self.passed}


def invariance_chi2(g: MapDescriptor, n_samples: int = 10**6, bins: int = 64, seed: int = 0,
                    level: float = 0.99) -> InvarianceReport:
    """χ² test that arc length is invariant under the boundary map."""
    th = np.random.default_rng(seed).random(n_samples) * TWO_PI
    img = boundary_circle_map(g, th)
    counts, _ = np.histogram(img, bins=bins, range=(0.0, TWO_PI))
    expected = n_samples / bins
    chi = float(np.sum((counts - expected) ** 2) / expected)
    return InvarianceReport(chi, float(stats.chi2.ppf(level, bins - 1)), bins, n_samples)


# ---------------------------------------------------------------------------
# singularities on the circle


@dataclass
class SingularityVerdict:
    point: complex
    status: str
    coverage_bound: float
    omitted_radius: float
    samples: int

    def to_dict(self):
        return {"point": complex_pair(self.point), "status": self.status,
                "coverage_bound": self.coverage_bound, "omitted_radius": self.omitted_radius,
                "samples": self.samples}


@dataclass
class SingularityScan:
    certified: list
    verdicts: list
    spot_checks: list
    eps: float

    def to_dict(self):
        return {"certified": [complex_pair(p) for p in self.certified], "eps": self.eps,
                "verdicts": [v.to_dict() for v in self.verdicts],
                "spot_checks": [v.to_dict() for v in self.spot_checks]}


def sample_crosscut(N: CrosscutNeighbourhood, n: int, rng: np.random.Generator,
                    finest: float = 1e-13) -> np.ndarray:
    """Points of a crosscut neighbourhood at all scales down to ``finest``.

    Three families: log-uniform in distance from the side marker, points
    hugging the circle, and a thin layer much closer to the circle than to
    the marker (where an inner function takes values near the circle).
    """
    xi = complex(N.side)
    scale = float(np.max(np.abs(N.polyline() - xi)))
    ls = math.log(scale)
    got: list = []
    total = 0
    while total < n:
        m = n // 3 + 1
        rho = np.exp(rng.uniform(math.log(finest), ls, m))
        phi = rng.uniform(-math.pi / 2, math.pi / 2, m)
        z1 = xi * (1 - rho * np.exp(1j * phi))
        psi = rng.uniform(-scale, scale, m) * np.exp(rng.uniform(math.log(1e-12), 0.0, m))
        eta = np.exp(rng.uniform(math.log(finest * 0.1), ls, m))
        z2 = xi * np.exp(1j * psi) * (1 - eta)
        psi3 = rng.choice([-1.0, 1.0], m) * np.exp(rng.uniform(math.log(finest), ls, m))
        eta3 = np.abs(psi3) * np.exp(rng.uniform(math.log(1e-8), math.log(1e-2), m))
        z3 = xi * np.exp(1j * psi3) * (1 - eta3)
        z = np.stack([z1, z2, z3], axis=1).ravel()
        z = z[N.contains(z) & (np.abs(z - xi) > finest * 0.5)]
        got.append(z)
        total += z.size
    return np.concatenate(got)[:n]


def crosscut_density_test(g: MapDescriptor, xi: complex, radius: float = 1e-2, eps: float = 0.05,
                          n_samples: int = 10**5, rng: np.random.Generator | None = None
                          ) -> SingularityVerdict:
    """Is g(N) eps-dense in the closed disk for the crosscut neighbourhood N at xi?

    The coverage bound is the largest distance from a grid point (spacing
    eps/10, covering the closed disk) to the image sample plus half the grid
    diagonal, so ``coverage_bound <= eps`` certifies density.  The omitted
    radius is the same maximum over grid points inside the disk: an empty
    disk of that radius exists in the sampled image.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    N = CrosscutNeighbourhood.around(xi, radius)
    z = sample_crosscut(N, n_samples, rng)
    w = np.asarray(g(z))
    w = w[np.isfinite(w)]
    h = eps / 10.0
    xs = np.arange(-1.0 - h, 1.0 + 2 * h, h)
    X, Y = np.meshgrid(xs, xs)
    P = (X + 1j * Y).ravel()
    P = P[np.abs(P) <= 1.0 + h / math.sqrt(2)]
    tree = cKDTree(np.column_stack([w.real, w.imag]))
    d, _ = tree.query(np.column_stack([P.real, P.imag]))
    bound = float(d.max() + h / math.sqrt(2))
    omitted = float(d[np.abs(P) <= 1.0].max())
    if bound <= eps:
        status = "certified"
    elif omitted > eps:
        status = "rejected"
    else:
        status = "unverified"
    return SingularityVerdict(complex(xi), status, bound, omitted, int(z.size))


def singularity_scan(g: MapDescriptor, candidate_resolution: float = 1e-2, eps: float = 0.05,
                     n_samples: int = 10**5, seed: int = 0, spot_checks=None) -> SingularityScan:
    """Certify circle singularities by crosscut-image density.

    Candidates are the accumulation points of the zeros and the declared
    singular set.  ``spot_checks`` (default: the antipodes of the
    candidates) are tested the same way and expected to be rejected.
    """
    _require_self_map(g)
    cands = []
    if isinstance(g, InfiniteBlaschke):
        cands.append(g.accumulation_point)
    for s in g.singularities:
        if abs(abs(s) - 1) < 1e-12 and not any(abs(s - c) < 1e-12 for c in cands):
            cands.append(s)
    if spot_checks is None:
        spot_checks = [-c for c in cands]
    ss = np.random.SeedSequence(seed)
    streams = [np.random.default_rng(x) for x in ss.spawn(len(cands) + len(spot_checks))]
    verdicts = [crosscut_density_test(g, c, candidate_resolution, eps, n_samples, streams[i])
                for i, c in enumerate(cands)]
    spots = [crosscut_density_test(g, complex(c), candidate_resolution, eps, n_samples,
                                   streams[len(cands) + i]) for i, c in enumerate(spot_checks)]
    certified = [v.point for v in verdicts if v.status == "certified"]
    return SingularityScan(certified, verdicts, spots, eps)
