"""Repelling periodic points on the boundary of an attracting basin.

For a boundary point x, follow its orbit until it returns close to x with
enough accumulated expansion; the inverse branch of f^N along that orbit
then maps a small disk around x into itself, and its attracting fixed
point is a repelling periodic point of f.
"""
from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchObstruction, ConvergenceError, NotApplicable, NumericalFailure
from .inverse_branches import BranchChain, backward_chain
from .maps import (MapDescriptor, PolynomialMap, complex_pair, critical_points,
                   postsingular_approx)
from .roots import aberth

RESIDUAL_TOL = 1e-9
REPELLING_TOL = 1e-6


class NoReturn(NumericalFailure):
    """The orbit did not come back near its start with enough expansion."""


class ConformalityViolation(NumericalFailure):
    """The orbit passes too close to a critical point."""


# ---------------------------------------------------------------------------
# boundary seeds


def _component_centre(f: MapDescriptor) -> complex:
    if f.component is None or f.component.kind != "attracting":
        raise NotApplicable("boundary seeds need an attracting component")
    return complex(f.component.point)


def ray_boundary_point(f: MapDescriptor, theta: float, t_max: float | None = None,
                       tol: float = 1e-12) -> complex:
    """Boundary point on the ray from the attracting point at angle theta, by bisection."""
    c = _component_centre(f)
    u = cmath.exp(1j * theta)
    lo = 0.0
    hi = t_max if t_max is not None else 2.0 * f.escape_radius
    if f.membership(np.array([c + hi * u]))[0] == 1:
        raise NumericalFailure("ray does not leave the component")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f.membership(np.array([c + mid * u]))[0] == 1:
            lo = mid
        else:
            hi = mid
    return c + 0.5 * (lo + hi) * u


def repelling_fixed_points(f: MapDescriptor) -> list:
    """Fixed points with |f'| > 1, from the polynomial f(z) - z."""
    if not isinstance(f, PolynomialMap):
        raise NotApplicable("repelling fixed points are computed for polynomial kinds")
    pts = oracle_periodic_points(f, 1)
    return [q["point"] for q in pts if abs(q["multiplier"]) > 1 + REPELLING_TOL]


def boundary_seed(f: MapDescriptor, method: str = "repelling_preimage", depth: int = 4,
                  choices=None, seed: int = 0, theta: float = 0.0) -> complex:
    """A point of the component boundary.

    ``repelling_preimage``: a depth-fold preimage of a repelling fixed
    point (branches given by ``choices`` or drawn from ``seed``).
    ``harmonic_sample``: the hit of one walk from the attracting point.
    ``ray``: bisection of membership along the ray at angle ``theta``.
    """
    if method == "repelling_preimage":
        beta = repelling_fixed_points(f)
        if not beta:
            raise NumericalFailure("no repelling fixed point")
        beta = min(beta, key=lambda b: (round(abs(b), 12), cmath.phase(b)))
        rng = None if choices is not None else np.random.default_rng(seed)
        return backward_chain(f, beta, depth, choices=choices, rng=rng).base
    if method == "harmonic_sample":
        from .boundary_measure import DomainOracle, harmonic_sample

        S = harmonic_sample(DomainOracle("fatou_component", _component_centre(f), f), 1, seed)
        if len(S) == 0:
            raise NumericalFailure("walk timed out")
        return complex(S.hits[0])
    if method == "ray":
        return ray_boundary_point(f, theta)
    raise ValueError(f"unknown seeding method {method!r}")


def straddle_width(f: MapDescriptor, x: complex, width: float = 1e-6) -> bool:
    """True when membership differs at x -/+ width along the ray from the attracting point."""
    c = _component_centre(f)
    u = (x - c) / abs(x - c)
    m = f.membership(np.array([x - width * u, x + width * u]))
    return bool(m[0] == 1 and m[1] != 1)


# ---------------------------------------------------------------------------
# contracting returns


@dataclass
class ContractingReturn:
    chain: BranchChain
    N: int
    contraction: float
    return_distance: float
    r: float

    def to_dict(self):
        return {"N": self.N, "contraction": self.contraction,
                "return_distance": self.return_distance, "r": self.r,
                "chain": self.chain.to_dict()}


def find_contracting_return(f: MapDescriptor, x: complex, r: float, maxN: int,
                            return_factor: float = 1.0 / 3.0, contraction_target: float = 1.0 / 3.0,
                            critical=None) -> ContractingReturn:
    """First N <= maxN with |f^N(x) - x| < r/3 and prod 1/|f'(x_j)| < 1/3."""
    x = complex(x)
    crit = critical_points(f) if critical is None else list(critical)
    orbit = [x]
    prod = 1.0
    z = x
    for N in range(1, maxN + 1):
        if crit:
            dc = min(abs(z - c) for c in crit)
            if dc < r:
                raise ConformalityViolation(
                    f"orbit point {z} is within {dc:.3g} of a critical point (r = {r:.3g})")
        d = abs(f._df(z))
        prod /= d
        z = complex(f._f(z))
        if not np.isfinite(z):
            raise NoReturn("orbit escaped")
        orbit.append(z)
        back = abs(z - x)
        if back < return_factor * r and prod < contraction_target:
            return ContractingReturn(BranchChain(f, tuple(orbit)), N, prod, back, r)
    raise NoReturn(f"no contracting return within {maxN} steps")


# ---------------------------------------------------------------------------
# certificates


@dataclass
class PeriodicPointCertificate:
    point: complex
    period: int
    multiplier: complex
    residual: float
    lipschitz: float
    step_lipschitz: list
    inclusion_margin: float
    disk_centre: complex
    disk_radius: float
    anchor_orbit: list
    landing_orbit: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return (self.residual < RESIDUAL_TOL and abs(self.multiplier) > 1 + REPELLING_TOL
                and self.lipschitz < 1 and self.inclusion_margin > 0)

    def to_dict(self):
        return {
            "point": complex_pair(self.point),
            "period": self.period,
            "multiplier": complex_pair(self.multiplier),
            "residual": self.residual,
            "lipschitz": self.lipschitz,
            "step_lipschitz": self.step_lipschitz,
            "inclusion_margin": self.inclusion_margin,
            "disk_centre": complex_pair(self.disk_centre),
            "disk_radius": self.disk_radius,
            "anchor_orbit": [complex_pair(z) for z in self.anchor_orbit],
            "landing_orbit": [complex_pair(z) for z in self.landing_orbit],
        }


def _iterate_with_derivative(f: MapDescriptor, z: complex, N: int):
    d = 1.0 + 0j
    for _ in range(N):
        d *= f._df(z)
        z = f._f(z)
    return complex(z), complex(d)


def _max_ratio(a: np.ndarray, b: np.ndarray) -> float:
    # max |a_i - a_j| / |b_i - b_j| over pairs
    da = np.abs(a[:, None] - a[None, :])
    db = np.abs(b[:, None] - b[None, :])
    mask = db > 0
    return float(np.max(da[mask] / db[mask]))


def pullback_fixed_point(chain: BranchChain, z0: complex | None = None, tol: float = 1e-13,
                         radius: float | None = None, samples: int = 16, max_iter: int = 200,
                         landing_start: complex | None = None) -> PeriodicPointCertificate:
    """Attracting fixed point of the pullback F_N near the base of ``chain``.

    The disk D(x_0, radius) is checked to be mapped strictly inside itself
    on ``samples`` boundary points before the Banach iteration; the result
    is polished by Newton on f^N(z) - z.
    """
    f, N = chain.g, chain.depth
    if N < 1:
        raise ValueError("chain needs depth at least one")
    c = chain.base
    if radius is None:
        radius = 0.5 * max(abs(chain.top - c), 1e-3)
    ring = c + radius * np.exp(2j * math.pi * np.arange(samples) / samples)
    pts = np.concatenate([[c], ring])
    try:
        levels = [chain.pull_levels(z) for z in pts]
    except BranchObstruction as exc:
        raise NumericalFailure(f"pullback of the working disk is obstructed: {exc}") from exc
    img = np.array([lv[0] for lv in levels])
    margin = float(radius - np.max(np.abs(img[1:] - c)))
    if margin <= 0:
        raise NumericalFailure("pullback does not map the working disk into itself")
    lipschitz = _max_ratio(img, pts)
    step = []
    for j in range(N):
        a = np.array([lv[j] for lv in levels])
        b = np.array([lv[j + 1] for lv in levels])
        step.append(_max_ratio(a, b))
    z = c if z0 is None else complex(z0)
    for _ in range(max_iter):
        w = chain.pull(z)
        if abs(w - c) >= radius:
            raise NumericalFailure("Banach iteration left the validated disk")
        if abs(w - z) < tol:
            z = w
            break
        z = w
    # Newton polish on f^N(z) - z
    for _ in range(20):
        v, d = _iterate_with_derivative(f, z, N)
        if d == 1:
            break
        dz = (v - z) / (d - 1.0)
        z = z - dz
        if abs(dz) < 1e-16 * max(1.0, abs(z)):
            break
    v, mult = _iterate_with_derivative(f, z, N)
    residual = abs(v - z)
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"fixed-point residual {residual:.2e}")
    landing = []
    if landing_start is not None:
        y = complex(landing_start)
        for _ in range(12):
            landing.append(y)
            try:
                y = chain.pull(y)
            except BranchObstruction:
                break
        landing.append(y)
    return PeriodicPointCertificate(complex(z), N, mult, float(residual), lipschitz, step,
                                    margin, c, float(radius), list(chain.orbit), landing)


# ---------------------------------------------------------------------------
# density experiment


@dataclass
class DensityReport:
    success_fraction: float
    period_histogram: dict
    certificates: list
    failures: list
    seeds: list
    delta: float

    def to_dict(self):
        return {"success_fraction": self.success_fraction,
                "period_histogram": {str(k): v for k, v in sorted(self.period_histogram.items())},
                "delta": self.delta,
                "seeds": [complex_pair(x) for x in self.seeds],
                "certificates": [None if c is None else c.to_dict() for c in self.certificates],
                "failures": self.failures}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("seed_index,seed_re,seed_im,ok,period,p_re,p_im,mult_abs,residual\n")
        for i, (x, cert) in enumerate(zip(self.seeds, self.certificates)):
            if cert is None:
                buf.write(f"{i},{x.real!r},{x.imag!r},0,,,,,\n")
            else:
                p = cert.point
                buf.write(f"{i},{x.real!r},{x.imag!r},1,{cert.period},{p.real!r},{p.imag!r},"
                          f"{abs(cert.multiplier)!r},{cert.residual!r}\n")
        return buf.getvalue()


def _obstacle_cloud(f: MapDescriptor) -> np.ndarray:
    pts = list(postsingular_approx(f, depth=200).points)
    pts += list(critical_points(f))
    return np.array(pts, dtype=complex)


def certify_near(f: MapDescriptor, x: complex, delta: float, maxN: int, rng: np.random.Generator,
                 attempts: int = 48, r_max: float = 0.5, cloud=None, crit=None):
    """Try to certify a repelling periodic point within delta of the boundary point x.

    Each attempt moves to a nearby boundary point x' (ray bisection at a
    perturbed angle), picks r from the distance to the obstacle cloud and
    runs the return search and the pullback.  Returns (certificate, log).
    """
    c = _component_centre(f)
    cloud = _obstacle_cloud(f) if cloud is None else cloud
    crit = critical_points(f) if crit is None else crit
    theta = cmath.phase(x - c)
    spread = min(delta / 4.0, 0.05) / max(abs(x - c), 1e-12)
    log = []
    for a in range(attempts):
        th = theta + (rng.uniform(-spread, spread) if a else 0.0)
        try:
            xp = ray_boundary_point(f, th)
        except NumericalFailure as exc:
            log.append(str(exc))
            continue
        dist = float(np.min(np.abs(cloud - xp))) if cloud.size else math.inf
        r = min(r_max, 0.5 * dist)
        try:
            ret = find_contracting_return(f, xp, r, maxN, critical=crit)
            ring_r = 0.5 * r
            inner = c + (xp - c) * (1 - 1e-3)
            cert = pullback_fixed_point(ret.chain, radius=ring_r, landing_start=inner)
        except (NoReturn, ConformalityViolation, NumericalFailure) as exc:
            log.append(f"{type(exc).__name__}: {exc}")
            continue
        if not cert.valid:
            log.append("certificate failed its invariants")
            continue
        if abs(cert.point - x) >= delta:
            log.append("certified point too far from the seed")
            continue
        return cert, log
    return None, log


def density_experiment(f: MapDescriptor, n_seeds: int = 64, delta: float = 0.1, maxN: int = 12,
                       seed: int = 0, attempts: int = 48, r_max: float = 0.5) -> DensityReport:
    """Seeds at uniform ray angles around the attracting point; one certificate per seed."""
    cloud = _obstacle_cloud(f)
    crit = critical_points(f)
    children = np.random.SeedSequence(seed).spawn(n_seeds)
    certs, fails, seeds, hist = [], [], [], {}
    for i in range(n_seeds):
        x = ray_boundary_point(f, 2 * math.pi * i / n_seeds)
        seeds.append(x)
        cert, log = certify_near(f, x, delta, maxN, np.random.default_rng(children[i]),
                                 attempts, r_max, cloud, crit)
        certs.append(cert)
        if cert is None:
            fails.append({"seed_index": i, "reasons": log[-3:]})
        else:
            hist[cert.period] = hist.get(cert.period, 0) + 1
    ok = sum(1 for x in certs if x is not None)
    return DensityReport(ok / n_seeds, hist, certs, fails, seeds, float(delta))


# ---------------------------------------------------------------------------
# oracle


def _iterate_ratio(f: PolynomialMap, N: int):
    deg = f.degree

    def ratio(z):
        u = z.copy()
        d = np.ones_like(z)
        big = np.zeros(z.shape, dtype=bool)
        out = np.empty_like(z)
        for j in range(N):
            live = ~big
            with np.errstate(over="ignore", invalid="ignore"):
                d[live] *= f._df(u[live])
                u[live] = f._f(u[live])
            # far away f^N(z) / (f^N)'(z) shrinks by deg per further step
            newly = live & ~(np.abs(u) < 1e100)
            if newly.any():
                out[newly] = u[newly] / d[newly] * float(deg) ** (-(N - 1 - j))
                big |= newly
        live = ~big
        with np.errstate(divide="ignore", invalid="ignore"):
            out[live] = (u[live] - z[live]) / (d[live] - 1.0)
        return out

    return ratio


def _preimage_tree(f: PolynomialMap, beta: complex, N: int) -> np.ndarray:
    pts = np.array([beta], dtype=complex)
    c = np.asarray(f.coeffs, dtype=complex)
    for _ in range(N):
        if f.degree == 2:
            a2, a1, a0 = c[2], c[1], c[0]
            disc = np.sqrt(a1 * a1 - 4 * a2 * (a0 - pts))
            pts = np.concatenate([(-a1 + disc) / (2 * a2), (-a1 - disc) / (2 * a2)])
        else:
            from .inverse_branches import preimages

            pts = np.concatenate([preimages(f, w, region_radius=math.inf).points for w in pts])
    return pts


def oracle_periodic_points(f: PolynomialMap, N: int, tol: float = 1e-14) -> list:
    """All solutions of f^N(z) = z, by simultaneous iteration, with multipliers."""
    if not isinstance(f, PolynomialMap):
        raise NotApplicable("oracle needs a polynomial kind")
    deg = f.degree
    if deg**N > 2**14:
        raise ValueError(f"degree {deg}**{N} exceeds the cap 2**14")
    if N == 1:
        start = np.exp(2j * math.pi * (np.arange(deg) + 0.3) / deg) * (f.escape_radius / 2)
    else:
        # the fixed points' preimage tree lies on the Julia set, close to the periodic points
        fixed = [q["point"] for q in oracle_periodic_points(f, 1)]
        beta = max(fixed, key=lambda b: abs(f._df(b)))
        start = _preimage_tree(f, beta, N) + 1e-3j
        dup = np.abs(start[:, None] - start[None, :]) + np.eye(start.size) < 1e-9
        if dup.any():
            rng = np.random.default_rng(N)
            start = start + 1e-4 * (rng.standard_normal(start.size) + 1j * rng.standard_normal(start.size))
    roots = aberth(_iterate_ratio(f, N), start, tol=tol)
    out = []
    for z in roots:
        v, m = _iterate_with_derivative(f, complex(z), N)
        out.append({"point": complex(z), "multiplier": m, "residual": abs(v - z)})
    return out
