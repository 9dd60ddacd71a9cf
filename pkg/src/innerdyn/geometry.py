"""Möbius maps, hyperbolic metrics, Stolz angles and distortion estimates.

Points of the Riemann sphere are plain Python/numpy complex numbers.  Any
value with an infinite component stands for the point at infinity; the
canonical representative is :data:`INF`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError

OVERFLOW = 1e300
INF = complex(math.inf, math.inf)
BOUNDARY_BAND = 1e-9
CIRCLE_TOL = 1e-12


def is_infinite(z) -> bool:
    """True when ``z`` represents the point at infinity."""
    z = complex(z)
    return not (abs(z.real) < OVERFLOW and abs(z.imag) < OVERFLOW)


def guard(z) -> complex:
    """Collapse overflowing or infinite values onto :data:`INF`."""
    z = complex(z)
    if math.isnan(z.real) or math.isnan(z.imag):
        return z
    return INF if is_infinite(z) else z


def _guard_array(z: np.ndarray) -> np.ndarray:
    big = ~((np.abs(z.real) < OVERFLOW) & (np.abs(z.imag) < OVERFLOW))
    big &= ~(np.isnan(z.real) | np.isnan(z.imag))
    if big.any():
        z = z.copy()
        z[big] = INF
    return z


# ---------------------------------------------------------------------------
# Möbius transformations


@dataclass(frozen=True)
class MoebiusTransform:
    """z -> (a z + b)/(c z + d), stored with ad - bc = 1.

    The sign ambiguity of the normalization is fixed by making the first
    coefficient that is not negligible lie in the right half-plane.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        coeffs = [complex(x) for x in (self.a, self.b, self.c, self.d)]
        scale = max(abs(x) for x in coeffs)
        if not math.isfinite(scale) or scale == 0.0:
            raise ValueError("Möbius coefficients must be finite and not all zero")
        a, b, c, d = (x / scale for x in coeffs)
        det = a * d - b * c
        if abs(det) < 1e-14:
            raise ValueError(f"degenerate Möbius transform (ad - bc = {det:.3e})")
        s = cmath.sqrt(det)
        a, b, c, d = (x / s for x in (a, b, c, d))
        for x in (a, b, c, d):
            if abs(x) > 1e-13:
                if x.real < -1e-15 or (abs(x.real) <= 1e-15 and x.imag < 0):
                    a, b, c, d = -a, -b, -c, -d
                break
        for name, val in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, val)

    @classmethod
    def identity(cls) -> "MoebiusTransform":
        return cls(1, 0, 0, 1)

    def __call__(self, z):
        if np.ndim(z) == 0:
            return self._apply_scalar(z)
        z = np.asarray(z, dtype=complex)
        inf_in = ~((np.abs(z.real) < OVERFLOW) & (np.abs(z.imag) < OVERFLOW))
        zz = np.where(inf_in, 0.0, z)
        num = self.a * zz + self.b
        den = self.c * zz + self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        out = np.where(den == 0, INF, out)
        at_inf = self.a / self.c if self.c != 0 else INF
        out = np.where(inf_in, at_inf, out)
        return _guard_array(out)

    def _apply_scalar(self, z) -> complex:
        if is_infinite(z):
            return guard(self.a / self.c) if self.c != 0 else INF
        z = complex(z)
        den = self.c * z + self.d
        if den == 0:
            return INF
        return guard((self.a * z + self.b) / den)

    def compose(self, other: "MoebiusTransform") -> "MoebiusTransform":
        """``self ∘ other``."""
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MoebiusTransform(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    __matmul__ = compose

    def inverse(self) -> "MoebiusTransform":
        return MoebiusTransform(self.d, -self.b, -self.c, self.a)

    def derivative(self, z):
        # with ad - bc = 1 the derivative is 1/(cz+d)^2
        return 1.0 / (self.c * z + self.d) ** 2

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def is_close(self, other: "MoebiusTransform", tol: float = 1e-12) -> bool:
        m, n = self.matrix(), other.matrix()
        return bool(min(np.abs(m - n).max(), np.abs(m + n).max()) < tol)


def moebius_apply(M: MoebiusTransform, z):
    return M(z)


def moebius_compose(M1: MoebiusTransform, M2: MoebiusTransform) -> MoebiusTransform:
    return M1.compose(M2)


def moebius_inverse(M: MoebiusTransform) -> MoebiusTransform:
    return M.inverse()


def disk_automorphism(p) -> MoebiusTransform:
    """The involution z -> (p - z)/(1 - conj(p) z) swapping p and 0."""
    p = complex(p)
    if not abs(p) < 1:
        raise ValueError(f"disk_automorphism needs |p| < 1, got |p| = {abs(p)}")
    return MoebiusTransform(-1, p, -p.conjugate(), 1)


def disk_to_halfplane(p) -> MoebiusTransform:
    """z -> i (p + z)/(p - z): disk onto the upper half-plane, p to infinity."""
    p = complex(p)
    if abs(abs(p) - 1.0) > CIRCLE_TOL:
        raise ValueError(f"disk_to_halfplane needs |p| = 1, got |p| = {abs(p)}")
    return MoebiusTransform(1j, 1j * p, -1, p)


def cayley(p=1.0) -> MoebiusTransform:
    """Alias for :func:`disk_to_halfplane` with the usual base point 1."""
    return disk_to_halfplane(p)


# ---------------------------------------------------------------------------
# hyperbolic metrics


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def hyperbolic_distance_disk(z, w):
    """Distance for the metric 2|dz|/(1 - |z|^2)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    az, aw = np.abs(z), np.abs(w)
    if np.any(az >= 1) or np.any(aw >= 1):
        raise ValueError("hyperbolic_distance_disk needs points in the open unit disk")
    gap = np.sqrt((1 - az) * (1 + az) * (1 - aw) * (1 + aw))
    return _scalar_or_array(2.0 * np.arcsinh(np.abs(z - w) / gap))


def hyperbolic_distance_halfplane(w1, w2):
    """Distance for the metric |dw|/Im w."""
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    if np.any(w1.imag <= 0) or np.any(w2.imag <= 0):
        raise ValueError("hyperbolic_distance_halfplane needs Im w > 0")
    s = np.abs(w1 - w2) / (2.0 * np.sqrt(w1.imag * w2.imag))
    return _scalar_or_array(2.0 * np.arcsinh(s))


# ---------------------------------------------------------------------------
# distortion of univalent maps


def distortion_constant(r: float) -> float:
    """C(r) = sum_{n>=2} n r^(n-1) = 1/(1-r)^2 - 1."""
    r = float(r)
    if not 0.0 <= r < 1.0:
        raise ValueError(f"distortion_constant needs 0 <= r < 1, got {r}")
    # r(2 - r)/(1 - r)^2 avoids cancellation for small r
    return r * (2.0 - r) / (1.0 - r) ** 2


def distortion_constant_series(r: float, tol: float = 1e-16, max_terms: int = 10**7) -> float:
    """Partial sums of the defining series, used as an independent check."""
    r = float(r)
    if not 0.0 <= r < 1.0:
        raise ValueError(f"distortion_constant_series needs 0 <= r < 1, got {r}")
    total, term_pow, n = 0.0, r, 2
    while n < max_terms:
        term = n * term_pow
        total += term
        # stop once terms are small and decreasing ((n+1) r < n)
        if term < tol * max(total, 1e-300) and (n + 1) * r < n:
            break
        term_pow *= r
        n += 1
    return total


@dataclass
class DistortionReport:
    max_violation: float
    bound: float
    max_ratio: float
    derivative: complex
    samples: int


def _cauchy_derivative(phi, z0: complex, radius: float, nodes: int = 256) -> complex:
    w = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = np.asarray(phi(z0 + radius * w), dtype=complex)
    return complex(np.mean(vals / w) / radius)


def distortion_bound_check(
    phi: Callable,
    z0: complex,
    r0: float,
    r: float,
    sample_count: int = 4000,
    dphi: Callable | None = None,
    seed: int = 0,
) -> DistortionReport:
    """Sample |phi(z) - L(z)| / (|phi'(z0)||z - z0|) - C(r/r0) on D(z0, r).

    ``phi`` must accept numpy arrays.  Without ``dphi`` the derivative at
    ``z0`` comes from a Cauchy integral on the circle of radius r0/2.
    """
    if not 0 < r < r0:
        raise ValueError("need 0 < r < r0")
    z0 = complex(z0)
    d0 = complex(dphi(z0)) if dphi is not None else _cauchy_derivative(phi, z0, 0.5 * r0)
    if abs(d0) < 1e-14:
        raise ValueError("derivative at the centre is below 1e-14")
    rng = np.random.default_rng(seed)
    rad = r * np.sqrt(rng.random(sample_count))
    z = z0 + rad * np.exp(2j * np.pi * rng.random(sample_count))
    z = z[np.abs(z - z0) > 1e-300]
    f0 = complex(phi(np.array([z0]))[0])
    lin = f0 + d0 * (z - z0)
    ratio = np.abs(np.asarray(phi(z)) - lin) / (abs(d0) * np.abs(z - z0))
    bound = distortion_constant(r / r0)
    worst = float(ratio.max()) if ratio.size else 0.0
    return DistortionReport(worst - bound, bound, worst, d0, int(z.size))


def coefficient_estimate(
    phi: Callable,
    n: int,
    radius: float = 0.5,
    nodes: int = 4096,
    tol: float = 1e-10,
    check_radius: float | None = 0.6,
    max_doublings: int = 8,
) -> complex:
    """Taylor coefficient a_n of phi at 0 by the trapezoidal rule on |z| = radius.

    The node count doubles until successive estimates differ by < tol.  A
    second radius (``check_radius``) guards against aliasing; disagreement
    beyond 1e-6 raises :class:`ConvergenceError`.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    nodes = max(int(nodes), 4096, 2 * n + 2)

    def at(rad: float, m: int) -> complex:
        w = rad * np.exp(2j * np.pi * np.arange(m) / m)
        spec = np.fft.fft(np.asarray(phi(w), dtype=complex)) / m
        return complex(spec[n] / rad**n)

    prev = at(radius, nodes)
    for _ in range(max_doublings):
        nodes *= 2
        cur = at(radius, nodes)
        if abs(cur - prev) < tol:
            break
        prev = cur
    else:
        raise ConvergenceError(f"coefficient a_{n} did not settle after {max_doublings} doublings")
    if check_radius is not None and check_radius != radius and check_radius < 1:
        other = at(check_radius, nodes)
        if abs(other - cur) > 1e-6 * max(1.0, abs(cur)):
            raise ConvergenceError(
                f"coefficient a_{n} disagrees between radii {radius} and {check_radius}"
            )
    return cur


def koebe(z):
    """z / (1 - z)^2, extremal for the coefficient bound (a_n = n)."""
    z = np.asarray(z, dtype=complex)
    return z / (1.0 - z) ** 2


def random_univalent_polynomial(degree: int, rng: np.random.Generator) -> np.ndarray:
    """Coefficients [0, 1, a_2, ..., a_degree] with sum k|a_k| = 0.95.

    Then |p'(z) - 1| < 1 on the disk, so Re p' > 0 and p is univalent.
    """
    if degree < 2:
        raise ValueError("degree must be at least 2")
    k = np.arange(2, degree + 1)
    w = rng.random(k.size) ** 3 + 1e-3
    mags = 0.95 * w / np.sum(w) / k
    a = mags * np.exp(2j * np.pi * rng.random(k.size))
    return np.concatenate([[0.0, 1.0], a])


def polynomial_function(coeffs):
    """Vectorised evaluation of sum c_k z^k (coefficients in increasing order)."""
    c = np.asarray(coeffs, dtype=complex)[::-1]

    def phi(z):
        return np.polyval(c, np.asarray(z, dtype=complex))

    return phi


# ---------------------------------------------------------------------------
# Stolz angles and radial segments


def _check_vertex(xi: complex, p: complex, rho: float) -> None:
    if abs(abs(xi) - 1.0) > CIRCLE_TOL:
        raise ValueError(f"vertex must lie on the unit circle (|xi| = {abs(xi)})")
    if abs(p) > 1.0 + CIRCLE_TOL:
        raise ValueError("reference point must lie in the closed disk")
    if abs(xi - p) < CIRCLE_TOL:
        raise ValueError("reference point must differ from the vertex")
    if not rho > 0:
        raise ValueError("length must be positive")


@dataclass(frozen=True)
class RadialSegmentSpec:
    xi: complex
    p: complex
    rho: float

    def __post_init__(self):
        _check_vertex(complex(self.xi), complex(self.p), self.rho)


@dataclass(frozen=True)
class StolzAngleSpec:
    xi: complex
    p: complex
    alpha: float
    rho: float

    def __post_init__(self):
        _check_vertex(complex(self.xi), complex(self.p), self.rho)
        if not 0 < self.alpha < math.pi / 2:
            raise ValueError("opening must lie in (0, pi/2)")


def _on_circle(p: complex) -> bool:
    return abs(abs(p) - 1.0) <= CIRCLE_TOL


def reference_chart(p) -> MoebiusTransform:
    """Chart sending p to 0 (p inside) or to infinity (p on the circle)."""
    p = complex(p)
    return disk_to_halfplane(p / abs(p)) if _on_circle(p) else disk_automorphism(p)


def generalized_angle(z, xi, p):
    """Return (angle, depth) of z relative to the vertex xi and reference p.

    For p inside the disk the chart moves p to 0 and depth is 1 - |w|; for p
    on the circle the chart is the half-plane one and depth is Im w.  The
    classical Stolz conditions read angle < alpha and depth < rho.
    """
    M = reference_chart(p)
    z = np.asarray(z, dtype=complex)
    w = M(z)
    eta = M(complex(xi))
    if _on_circle(complex(p)):
        x = eta.real
        angle = np.arctan2(np.abs(w.real - x), w.imag)
        depth = w.imag
    else:
        angle = np.abs(np.angle((eta - w) / eta))
        depth = 1.0 - np.abs(w)
    if angle.ndim == 0:
        return float(angle), float(depth)
    return angle, depth


def in_stolz_angle(z, spec: StolzAngleSpec):
    """Membership in the generalized Stolz angle; vectorized over z."""
    z_arr = np.asarray(z, dtype=complex)
    inside = np.abs(z_arr) < 1.0 - BOUNDARY_BAND
    safe = np.where(inside, z_arr, 0.0)
    angle, depth = generalized_angle(safe, spec.xi, spec.p)
    ok = inside & (np.asarray(angle) < spec.alpha) & (np.asarray(depth) < spec.rho)
    if _on_circle(complex(spec.p)):
        ok &= np.asarray(depth) > 0
    return bool(ok) if ok.ndim == 0 else ok


def radial_segment_points(spec: RadialSegmentSpec, count: int) -> np.ndarray:
    """``count`` points of the generalized radial segment, ordered toward xi."""
    if count < 1:
        raise ValueError("count must be positive")
    M = reference_chart(spec.p)
    Minv = M.inverse()
    k = np.arange(1, count + 1)
    eta = M(complex(spec.xi))
    if _on_circle(complex(spec.p)):
        s = spec.rho * (1.0 - k / (count + 1.0))
        w = eta.real + 1j * s
    else:
        t0 = max(1.0 - spec.rho, 0.0)
        t = t0 + (1.0 - t0) * k / (count + 1.0)
        w = t * eta
    return Minv(w)


# ---------------------------------------------------------------------------
# crosscut neighbourhoods


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b - a).real * (c - a).imag - (b - a).imag * (c - a).real

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class CrosscutNeighbourhood:
    """Disk region cut off by a polyline from ``a`` to ``b``.

    ``vertices`` are the interior polyline vertices; ``side`` is a circle
    point on the arc that, together with the polyline, bounds the region.
    """

    vertices: np.ndarray
    a: complex
    b: complex
    side: complex

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        object.__setattr__(self, "vertices", v)
        if v.size + 1 < 32:
            raise ValueError("crosscut polyline needs at least 32 segments")
        if np.any(np.abs(v) >= 1.0 - CIRCLE_TOL):
            raise ValueError("crosscut vertices must lie in the open disk")
        for e in (self.a, self.b, self.side):
            if abs(abs(e) - 1.0) > 1e-9:
                raise ValueError("endpoints and side marker must lie on the circle")
        if abs(self.a - self.b) < 1e-12:
            raise ValueError("crosscut endpoints coincide")
        pts = self.polyline()
        m = len(pts) - 1
        for i in range(m):
            for j in range(i + 2, m):
                if _segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1]):
                    raise ValueError("crosscut polyline self-intersects")

    def polyline(self) -> np.ndarray:
        return np.concatenate([[self.a], self.vertices, [self.b]])

    @classmethod
    def around(cls, xi, radius: float, segments: int = 64) -> "CrosscutNeighbourhood":
        """The region D ∩ D(xi, radius) cut off by a circular crosscut."""
        xi = complex(xi) / abs(xi)
        if not 0 < radius < 2:
            raise ValueError("radius must lie in (0, 2)")
        phi_max = math.acos(radius / 2.0)
        phis = np.linspace(-phi_max, phi_max, segments + 1)
        arc = xi * (1.0 - radius * np.exp(1j * phis))
        return cls(arc[1:-1], complex(arc[0]), complex(arc[-1]), xi)

    def boundary_loop(self, arc_points: int = 512) -> np.ndarray:
        ta, tb, ts = (cmath.phase(x) for x in (self.a, self.b, self.side))
        # arc from b back to a passing through the side marker
        span = (ta - tb) % (2 * math.pi)
        if (ts - tb) % (2 * math.pi) > span:
            span -= 2 * math.pi
        t = tb + span * np.linspace(0, 1, arc_points)[1:-1]
        return np.concatenate([self.polyline(), np.exp(1j * t)])

    def _test_loop(self) -> np.ndarray:
        # same region intersected with the disk, closed through radius 2
        ta, tb, ts = (cmath.phase(x) for x in (self.a, self.b, self.side))
        span = (ta - tb) % (2 * math.pi)
        if (ts - tb) % (2 * math.pi) > span:
            span -= 2 * math.pi
        t = tb + span * np.linspace(0, 1, 17)
        return np.concatenate([self.polyline(), 2.0 * np.exp(1j * t)])

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        if z.size > 4096:
            flat = z.ravel()
            parts = [self.contains(flat[s : s + 4096]) for s in range(0, flat.size, 4096)]
            return np.concatenate(parts).reshape(z.shape)
        loop = self._test_loop()
        x, y = z.real[..., None], z.imag[..., None]
        x1, y1 = loop.real, loop.imag
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            crosses = ((y1 > y) != (y2 > y)) & (x < (x2 - x1) * (y - y1) / (y2 - y1) + x1)
        inside = (np.count_nonzero(crosses, axis=-1) % 2 == 1) & (np.abs(z) < 1.0)
        return bool(inside) if inside.ndim == 0 else inside
