"""Catalog of holomorphic maps: evaluation, derivatives, singular values.

Every map accepts Python scalars or numpy arrays.  The classes below are
the whole catalog; configs refer to them by their ``kind`` tag.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq
from scipy.special import zeta

from .errors import EssentialSingularity, RootSolverError
from .geometry import INF, MoebiusTransform, disk_to_halfplane, is_infinite
from .roots import newton_polish, polynomial_roots

SINGULAR_TOL = 1e-15
TAIL_TOL = 1e-12


def as_complex(x) -> complex:
    """Parse a config value: number, [re, im] pair, or complex."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex value must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def complex_pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass(frozen=True)
class ComponentInfo:
    """Declared invariant Fatou component.

    kind is "attracting" (``point`` is a point of an attracting cycle of
    length ``period``), "parabolic" (``point`` parabolic, ``direction`` the
    petal direction) or "baker" (``direction`` the absorbing direction at
    infinity).
    """

    kind: str
    point: complex | None = None
    period: int = 1
    direction: complex | None = None

    def __post_init__(self):
        if self.kind not in ("attracting", "parabolic", "baker"):
            raise ValueError(f"unknown component kind {self.kind!r}")
        if self.kind != "baker" and self.point is None:
            raise ValueError("attracting/parabolic components need a point")
        if self.period < 1:
            raise ValueError("period must be positive")

    def to_config(self) -> dict:
        out: dict = {"kind": self.kind, "period": self.period}
        if self.point is not None:
            out["point"] = complex_pair(self.point)
        if self.direction is not None:
            out["direction"] = complex_pair(self.direction)
        return out

    @classmethod
    def from_config(cls, d: dict) -> "ComponentInfo":
        extra = set(d) - {"kind", "point", "period", "direction"}
        if extra:
            raise ValueError(f"unknown component keys: {sorted(extra)}")
        return cls(
            d["kind"],
            as_complex(d["point"]) if d.get("point") is not None else None,
            int(d.get("period", 1)),
            as_complex(d["direction"]) if d.get("direction") is not None else None,
        )


class MapDescriptor:
    """Base class of the catalog."""

    kind = "abstract"
    #: True for self-maps of the unit disk
    disk_self_map = False
    #: True when the circle is mapped to itself (inner functions)
    inner = False
    #: True when the map extends analytically across the whole circle
    analytic_on_circle = False

    def __init__(
        self,
        singularities: Sequence[complex] = (),
        essential_at_infinity: bool = False,
        component: ComponentInfo | None = None,
        region_radius: float = 4.0,
    ):
        self.singularities = tuple(complex(s) for s in singularities)
        self.essential_at_infinity = bool(essential_at_infinity)
        self.component = component
        self.region_radius = float(region_radius)

    # -- evaluation -------------------------------------------------------

    def _check(self, z) -> None:
        if not self.singularities:
            return
        if np.ndim(z) == 0:
            for s in self.singularities:
                if abs(complex(z) - s) < SINGULAR_TOL:
                    raise EssentialSingularity(s)
            return
        zz = np.asarray(z)
        for s in self.singularities:
            if np.any(np.abs(zz - s) < SINGULAR_TOL):
                raise EssentialSingularity(s)

    def __call__(self, z):
        if np.ndim(z) == 0:
            if is_infinite(z):
                return self._at_infinity()
            self._check(z)
            return complex(self._f(complex(z)))
        z = np.asarray(z, dtype=complex)
        self._check(z)
        return self._f(z)

    evaluate = __call__

    def derivative(self, z):
        if np.ndim(z) == 0:
            if is_infinite(z):
                raise ValueError("derivative at infinity is not defined in this chart")
            self._check(z)
            return complex(self._df(complex(z)))
        z = np.asarray(z, dtype=complex)
        self._check(z)
        return self._df(z)

    def _at_infinity(self) -> complex:
        if self.essential_at_infinity:
            raise EssentialSingularity(INF)
        return INF

    def _f(self, z):
        raise NotImplementedError

    def _df(self, z):
        raise NotImplementedError

    # -- structure --------------------------------------------------------

    def critical_numerator(self) -> np.ndarray | None:
        """Ascending coefficients of a polynomial whose roots are the finite critical points."""
        return None

    def rational_degree(self) -> int | None:
        return None

    def preimage_polynomial(self, w: complex) -> np.ndarray | None:
        """Ascending coefficients of a polynomial whose roots solve f(z) = w."""
        return None

    def declared_asymptotic_values(self) -> tuple:
        return ()

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Points where the map is comfortably analytic (used by self-tests)."""
        r = 0.9 * np.sqrt(rng.random(n))
        return r * np.exp(2j * np.pi * rng.random(n))

    def self_test(self, n: int = 100, seed: int = 12345, rel: float = 1e-6) -> float:
        """Compare the derivative with central differences; return worst error."""
        rng = np.random.default_rng(seed)
        z = self.sample_points(n, rng)
        worst = 0.0
        for zi in z:
            h = 1e-5 * max(1.0, abs(zi))
            fd = (self._f(zi + h) - self._f(zi - h)) / (2 * h)
            d = self._df(zi)
            if not (np.isfinite(fd) and np.isfinite(d)) or abs(d) > 1e8:
                continue
            err = abs(fd - d) / max(abs(d), 1e-3)
            worst = max(worst, err)
        if worst > rel:
            raise ValueError(f"{self.kind}: derivative self-test failed (rel err {worst:.2e})")
        return worst

    def to_config(self) -> dict:
        d = {"kind": self.kind, **self._params()}
        if self.component is not None:
            d["component"] = self.component.to_config()
        return d

    def _params(self) -> dict:
        return {}

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v!r}" for k, v in self._params().items())
        return f"{type(self).__name__}({params})"

    # -- component membership --------------------------------------------

    escape_radius: float = math.inf

    def membership(self, z, max_iter: int = 1000, tol: float = 1e-6) -> np.ndarray:
        """1 inside the declared component, 0 outside, -1 unresolved."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        if self.disk_self_map:
            return np.where(np.abs(z) < 1.0, 1, 0)
        comp = self.component
        if comp is None:
            raise ValueError(f"{self.kind} map has no declared component")
        out = np.full(z.shape, -1, dtype=int)
        live = np.ones(z.shape, dtype=bool)
        if comp.kind == "attracting":
            cyc = [complex(comp.point)]
            for _ in range(comp.period - 1):
                cyc.append(complex(self._f(cyc[-1])))
            others = cyc[1:]
        with np.errstate(all="ignore"):
            for n in range(1, max_iter + 1):
                idx = np.nonzero(live)[0]
                if idx.size == 0:
                    break
                w = self._f(z[idx])
                z[idx] = w
                esc = ~np.isfinite(w) | (np.abs(w) > self.escape_radius)
                if comp.kind == "baker":
                    inn = np.real(w * np.conj(comp.direction or 1.0)) > 50.0
                    esc &= ~inn
                elif n % comp.period == 0:
                    near = np.abs(w - comp.point) < (tol if comp.kind == "attracting" else 1e-2)
                    inn = near
                    for o in others if comp.kind == "attracting" else ():
                        esc |= np.abs(w - o) < tol
                else:
                    inn = np.zeros(idx.size, dtype=bool)
                out[idx[inn]] = 1
                out[idx[esc & ~inn]] = 0
                live[idx[inn | esc]] = False
        return out


# ---------------------------------------------------------------------------
# polynomial-type maps


def _escape_radius(coeffs: np.ndarray) -> float:
    c = np.asarray(coeffs, dtype=complex)
    lead = abs(c[-1])
    return float(2.0 + 2.0 * np.sum(np.abs(c[:-1])) / lead)


class PolynomialMap(MapDescriptor):
    """A polynomial with ascending coefficients."""

    kind = "polynomial"

    def __init__(self, coeffs, component: ComponentInfo | None | str = "auto", region_radius=4.0):
        c = np.array([as_complex(x) for x in coeffs], dtype=complex)
        while c.size > 1 and c[-1] == 0:
            c = c[:-1]
        if c.size < 2:
            raise ValueError("polynomial must be non-constant")
        self.coeffs = c
        self._dcoeffs = npoly.polyder(c)
        self.escape_radius = _escape_radius(c)
        super().__init__(component=None, region_radius=region_radius)
        if isinstance(component, str):
            if component != "auto":
                raise ValueError("component must be ComponentInfo, None or 'auto'")
            component = find_attracting_component(self) if self.degree >= 2 else None
        self.component = component
        self.self_test()

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def _f(self, z):
        return npoly.polyval(z, self.coeffs)

    def _df(self, z):
        return npoly.polyval(z, self._dcoeffs)

    def critical_numerator(self):
        return self._dcoeffs

    def rational_degree(self):
        return self.degree

    def preimage_polynomial(self, w):
        c = self.coeffs.copy()
        c[0] -= w
        return c

    def sample_points(self, n, rng):
        r = 2.0 * np.sqrt(rng.random(n))
        return r * np.exp(2j * np.pi * rng.random(n))

    def _params(self):
        return {"coeffs": [complex_pair(x) for x in self.coeffs]}


class PowerMap(PolynomialMap):
    """z -> z^d, also an inner function."""

    kind = "power"
    disk_self_map = True
    inner = True
    analytic_on_circle = True

    def __init__(self, d: int = 2):
        d = int(d)
        if d < 1:
            raise ValueError("power must be at least 1")
        self.d = d
        coeffs = [0] * d + [1]
        super().__init__(coeffs, component=ComponentInfo("attracting", 0j) if d >= 2 else None)
        self.zeros = (0j,) * d
        self.rotation = 1 + 0j

    def _f(self, z):
        return z**self.d

    def _df(self, z):
        return self.d * z ** (self.d - 1)

    def sample_points(self, n, rng):
        return MapDescriptor.sample_points(self, n, rng)

    def blaschke(self) -> "FiniteBlaschke":
        return FiniteBlaschke([0] * self.d)

    def _params(self):
        return {"d": self.d}


def quadratic(c) -> PolynomialMap:
    """z^2 + c with the attracting component detected from the critical orbit."""
    return PolynomialMap([as_complex(c), 0, 1])


class RationalMap(MapDescriptor):
    """P/Q with ascending coefficient lists."""

    kind = "rational"

    def __init__(self, numerator, denominator, component: ComponentInfo | None = None, region_radius=4.0):
        self.num = np.array([as_complex(x) for x in numerator], dtype=complex)
        self.den = np.array([as_complex(x) for x in denominator], dtype=complex)
        if not np.any(self.den != 0):
            raise ValueError("denominator vanishes identically")
        self._dnum = npoly.polyder(self.num) if self.num.size > 1 else np.zeros(1, complex)
        self._dden = npoly.polyder(self.den) if self.den.size > 1 else np.zeros(1, complex)
        super().__init__(component=component, region_radius=region_radius)
        self.self_test()

    def _f(self, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return npoly.polyval(z, self.num) / npoly.polyval(z, self.den)

    def _df(self, z):
        p, q = npoly.polyval(z, self.num), npoly.polyval(z, self.den)
        dp, dq = npoly.polyval(z, self._dnum), npoly.polyval(z, self._dden)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (dp * q - p * dq) / (q * q)

    def _at_infinity(self):
        dn = np.nonzero(self.num)[0].max() if np.any(self.num) else -1
        dd = np.nonzero(self.den)[0].max()
        if dn > dd:
            return INF
        if dn < dd:
            return 0j
        return complex(self.num[dn] / self.den[dd])

    def critical_numerator(self):
        return npoly.polysub(npoly.polymul(self._dnum, self.den), npoly.polymul(self.num, self._dden))

    def rational_degree(self):
        return int(max(np.nonzero(self.num)[0].max(initial=0), np.nonzero(self.den)[0].max()))

    def preimage_polynomial(self, w):
        return npoly.polysub(self.num, w * self.den)

    def sample_points(self, n, rng):
        pts = MapDescriptor.sample_points(self, 4 * n, rng) * 2.0
        q = np.abs(npoly.polyval(pts, self.den))
        return pts[q > 1e-2][:n]

    def _params(self):
        return {
            "numerator": [complex_pair(x) for x in self.num],
            "denominator": [complex_pair(x) for x in self.den],
        }


class NewtonMap(RationalMap):
    """Newton's method z - p(z)/p'(z) for a polynomial p."""

    kind = "newton_of_polynomial"

    def __init__(self, coeffs, root_index: int = 0):
        p = np.array([as_complex(x) for x in coeffs], dtype=complex)
        if p.size < 3:
            raise ValueError("Newton maps need a polynomial of degree >= 2")
        dp = npoly.polyder(p)
        num = npoly.polysub(npoly.polymul([0, 1], dp), p)
        self.polynomial = p
        self.root_index = int(root_index)
        roots = np.sort_complex(polynomial_roots(p))
        comp = ComponentInfo("attracting", complex(roots[self.root_index]))
        super().__init__(num, dp, component=comp)

    def _params(self):
        return {"coeffs": [complex_pair(x) for x in self.polynomial], "root_index": self.root_index}


# ---------------------------------------------------------------------------
# inner functions


def _blaschke_factor_poly(a: complex) -> tuple[np.ndarray, np.ndarray]:
    if a == 0:
        return np.array([0, 1], complex), np.array([1], complex)
    u = abs(a) / a
    return np.array([u * a, -u], complex), np.array([1, -a.conjugate()], complex)


class FiniteBlaschke(MapDescriptor):
    """rotation * prod (|a|/a)(a - z)/(1 - conj(a) z), with z for a = 0."""

    kind = "finite_blaschke"
    disk_self_map = True
    inner = True
    analytic_on_circle = True

    def __init__(self, zeros, rotation=1.0):
        zs = tuple(as_complex(a) for a in zeros)
        if not zs:
            raise ValueError("finite Blaschke product needs at least one zero")
        if any(abs(a) >= 1 for a in zs):
            raise ValueError("Blaschke zeros must lie in the open disk")
        rot = as_complex(rotation)
        if abs(abs(rot) - 1) > 1e-12:
            raise ValueError("rotation factor must be unimodular")
        self.zeros = zs
        self.rotation = rot
        self._units = tuple(1.0 if a == 0 else abs(a) / a for a in zs)
        P, Q = np.array([rot], complex), np.array([1], complex)
        for a in zs:
            p, q = _blaschke_factor_poly(a)
            P, Q = npoly.polymul(P, p), npoly.polymul(Q, q)
        self.num, self.den = P, Q
        super().__init__()
        self.self_test()

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def _f(self, z):
        out = self.rotation
        for a, u in zip(self.zeros, self._units):
            if a == 0:
                out = out * z
            else:
                out = out * (u * (a - z) / (1 - a.conjugate() * z))
        return out

    def _df(self, z):
        val = self.rotation
        der = 0 * z
        for a, u in zip(self.zeros, self._units):
            if a == 0:
                b, db = z, 1.0
            else:
                den = 1 - a.conjugate() * z
                b = u * (a - z) / den
                db = u * (abs(a) ** 2 - 1) / (den * den)
            der = der * b + val * db
            val = val * b
        return der

    def _at_infinity(self):
        g0 = complex(self._f(0j))
        return INF if g0 == 0 else 1.0 / g0.conjugate()

    def critical_numerator(self):
        dP, dQ = npoly.polyder(self.num), npoly.polyder(self.den)
        if self.den.size == 1:
            return dP * self.den[0]
        return npoly.polysub(npoly.polymul(dP, self.den), npoly.polymul(self.num, dQ))

    def rational_degree(self):
        return self.degree

    def preimage_polynomial(self, w):
        return npoly.polysub(self.num, w * self.den)

    def _params(self):
        return {"zeros": [complex_pair(a) for a in self.zeros], "rotation": complex_pair(self.rotation)}


class GeometricZeroRule:
    """Zeros a_k = direction * (1 - c q^k) for k >= start."""

    def __init__(self, c: float = 1.0, q: float = 0.5, direction=1.0, start: int = 1):
        self.c, self.q, self.start = float(c), float(q), int(start)
        self.direction = as_complex(direction)
        if not 0 < self.q < 1:
            raise ValueError("geometric ratio q must lie in (0, 1)")
        if not (self.c > 0 and self.c * self.q**self.start <= 1):
            raise ValueError("need 0 < c q^start <= 1 so zeros lie in the disk")
        if abs(abs(self.direction) - 1) > 1e-12:
            raise ValueError("accumulation direction must be unimodular")

    def zero(self, k: int) -> complex:
        return self.direction * (1.0 - self.c * self.q**k)

    def gap_sum(self) -> float:
        return self.c * self.q**self.start / (1.0 - self.q)

    def tail_sum(self, K: int) -> float:
        """sum over k > K of (1 - |a_k|)."""
        return self.c * self.q ** (max(K, self.start - 1) + 1) / (1.0 - self.q)

    def to_config(self):
        return {"rule": "geometric", "c": self.c, "q": self.q,
                "direction": complex_pair(self.direction), "start": self.start}


class PowerZeroRule:
    """Zeros a_k = direction * (1 - c / k^s) for k >= start."""

    def __init__(self, c: float = 1.0, s: float = 1.0, direction=1.0, start: int = 1):
        self.c, self.s, self.start = float(c), float(s), int(start)
        self.direction = as_complex(direction)
        if not (self.c > 0 and self.s > 0 and self.c / self.start**self.s <= 1):
            raise ValueError("need c > 0, s > 0 and c/start^s <= 1")

    def zero(self, k: int) -> complex:
        return self.direction * (1.0 - self.c / k**self.s)

    def gap_sum(self) -> float:
        if self.s <= 1:
            return math.inf
        return float(self.c * zeta(self.s, self.start))

    def to_config(self):
        return {"rule": "power", "c": self.c, "s": self.s,
                "direction": complex_pair(self.direction), "start": self.start}


@dataclass
class BlaschkeCheck:
    sum: float
    converges: bool


def blaschke_condition_check(rule) -> BlaschkeCheck:
    """sum (1 - |a_k|) for a geometric/power rule or an explicit finite list."""
    if isinstance(rule, (GeometricZeroRule, PowerZeroRule)):
        s = rule.gap_sum()
        return BlaschkeCheck(s, math.isfinite(s))
    zs = [as_complex(a) for a in rule]
    if any(abs(a) >= 1 for a in zs):
        raise ValueError("zeros must lie in the open disk")
    return BlaschkeCheck(float(sum(1 - abs(a) for a in zs)), True)


def zero_rule_from_config(d: dict):
    d = dict(d)
    kind = d.pop("rule", "geometric")
    cls = {"geometric": GeometricZeroRule, "power": PowerZeroRule}.get(kind)
    if cls is None:
        raise ValueError(f"unknown zero rule {kind!r}")
    allowed = {"c", "q", "direction", "start"} if cls is GeometricZeroRule else {"c", "s", "direction", "start"}
    extra = set(d) - allowed
    if extra:
        raise ValueError(f"unknown zero-rule keys: {sorted(extra)}")
    return cls(**d)


class InfiniteBlaschke(MapDescriptor):
    """Blaschke product over a geometric zero rule accumulating at one circle point."""

    kind = "infinite_blaschke"
    disk_self_map = True
    inner = True
    max_terms = 4000

    def __init__(self, rule: GeometricZeroRule | None = None, rotation=1.0):
        rule = rule if rule is not None else GeometricZeroRule()
        check = blaschke_condition_check(rule)
        if not check.converges:
            raise ValueError("zero rule violates the Blaschke condition")
        if not isinstance(rule, GeometricZeroRule):
            raise ValueError("evaluation needs the geometric rule (only its tail is bounded)")
        rot = as_complex(rotation)
        if abs(abs(rot) - 1) > 1e-12:
            raise ValueError("rotation factor must be unimodular")
        self.rule = rule
        self.rotation = rot
        super().__init__(singularities=(rule.direction,))
        self.self_test()

    @property
    def accumulation_point(self) -> complex:
        return self.rule.direction

    def zeros_upto(self, K: int) -> np.ndarray:
        return np.array([self.rule.zero(k) for k in range(self.rule.start, K + 1)])

    def _terms_needed(self, u) -> int:
        r = self.rule
        tmin = 1.0 - r.c * r.q**r.start
        ua = np.atleast_1d(u)
        d = np.where(ua.real >= 1.0, np.abs(ua.imag), np.abs(ua - 1.0))
        d = float(d.min())
        if d == 0:
            return -1
        amp = float(np.max(np.abs(1 + ua)))
        # value tail: amp/(tmin d) * c q^(K+1)/(1-q); derivative tail has 2/(tmin^2 d^2)
        need = max(amp / (tmin * d), 2.0 / (tmin * tmin * d * d)) * r.c / ((1 - r.q) * TAIL_TOL * 0.1)
        K = math.ceil(math.log(need) / math.log(1.0 / r.q))
        if K > self.max_terms:
            raise ValueError("truncation tail not bounded within the term budget")
        return max(K, r.start)

    def _rotated(self, z):
        return z * np.conj(self.rule.direction)

    def _products(self, z, want_derivative: bool):
        u = self._rotated(z)
        K = self._terms_needed(u)
        if K < 0:
            raise EssentialSingularity(self.rule.direction)
        val = self.rotation + 0 * u
        der = 0 * u
        r = self.rule
        for k in range(r.start, K + 1):
            t = 1.0 - r.c * r.q**k
            den = 1.0 - t * u
            b = (t - u) / den
            if want_derivative:
                db = (t * t - 1.0) / (den * den) * np.conj(self.rule.direction)
                der = der * b + val * db
            val = val * b
        return val, der

    def _ray_mask(self, z) -> np.ndarray:
        u = np.atleast_1d(self._rotated(z))
        return (u.real > 1.0) & (u.imag == 0)

    def _split(self, z, direct, reflected):
        mask = self._ray_mask(z)
        if not mask.any():
            return direct(z)
        za = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(za.shape, dtype=complex)
        if (~mask).any():
            out[~mask] = direct(za[~mask])
        out[mask] = reflected(za[mask])
        return out if np.ndim(z) else complex(out[0])

    def _reflected_value(self, z):
        gw = self._products(1.0 / np.conj(z), False)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(gw == 0, INF, 1.0 / np.conj(gw))

    def _reflected_derivative(self, z):
        # g(z) = 1/conj(g(w)), w = 1/conj(z)  =>  g'(z) = conj(g'(w)) / (conj(g(w))^2 z^2)
        gw, dgw = self._products(1.0 / np.conj(z), True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.conj(dgw) / (np.conj(gw) ** 2 * z * z)

    def _f(self, z):
        return self._split(z, lambda x: self._products(x, False)[0], self._reflected_value)

    def _df(self, z):
        return self._split(z, lambda x: self._products(x, True)[1], self._reflected_derivative)

    def _at_infinity(self):
        return 1.0 / np.conj(complex(self._f(0j)))

    def critical_points_upto(self, K: int = 12) -> list[complex]:
        """Critical points in the first K gaps between consecutive zeros.

        With real zeros in the rotated coordinate the product is real on the
        segment and has one critical point per gap (Rolle); each is found by
        bracketing.  Their reflections 1/conj(c) are appended.
        """
        d = self.rule.direction
        h = lambda u: (self._df(d * u) * d / self.rotation).real  # noqa: E731
        t = [1.0 - self.rule.c * self.rule.q**k for k in range(self.rule.start, self.rule.start + K + 1)]
        inside = []
        for lo, hi in zip(t[:-1], t[1:]):
            a, b = lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo)
            if h(a) * h(b) < 0:
                inside.append(d * brentq(h, a, b, xtol=1e-15 * (hi - lo), rtol=1e-15))
        return inside + [1.0 / np.conj(c) for c in inside]

    def truncated(self, K: int) -> FiniteBlaschke:
        """Finite Blaschke product of the first K zeros (same rotation)."""
        # each factor (|a|/a)(a - z)/(1 - conj(a) z) matches the product's factor
        return FiniteBlaschke(self.zeros_upto(self.rule.start + K - 1), self.rotation)

    def _params(self):
        return {"rule": self.rule.to_config(), "rotation": complex_pair(self.rotation)}


class HalfplaneMoebiusModel(MapDescriptor):
    """The disk map C^{-1} ∘ T ∘ C, C(z) = i(p+z)/(p-z), T a self-map of H."""

    kind = "halfplane_moebius_model"
    disk_self_map = True

    def __init__(self, a=1.0, b=1.0, c=0.0, d=1.0, p=1.0):
        self.T = MoebiusTransform(as_complex(a), as_complex(b), as_complex(c), as_complex(d))
        self.raw = tuple(as_complex(x) for x in (a, b, c, d))
        self.p = as_complex(p)
        C = disk_to_halfplane(self.p)
        self.C = C
        self.M = C.inverse() @ self.T @ C
        rng = np.random.default_rng(7)
        w = rng.normal(size=200) * 10 + 1j * np.abs(rng.normal(size=200)) * 10 + 1e-3j
        if np.any(np.imag(self.T(w)) <= 0):
            raise ValueError("T must map the upper half-plane into itself")
        coeffs = np.array([self.T.a, self.T.b, self.T.c, self.T.d])
        k = np.argmax(np.abs(coeffs))
        self.inner = bool(np.all(np.abs(np.imag(coeffs / coeffs[k])) < 1e-12))
        self.analytic_on_circle = self.inner
        super().__init__()
        self.self_test()

    @classmethod
    def affine(cls, lam: float = 1.0, shift=0.0, p=1.0) -> "HalfplaneMoebiusModel":
        """Cayley conjugate of w -> lam w + shift."""
        return cls(lam, shift, 0.0, 1.0, p)

    def _f(self, z):
        return self.M(z)

    def _df(self, z):
        return self.M.derivative(z)

    def fixed_points(self) -> list[complex]:
        """Fixed points in the closed disk, solved in the half-plane chart."""
        a, b, c, d = self.T.a, self.T.b, self.T.c, self.T.d
        scale = max(abs(a), abs(b), abs(c), abs(d))
        ws: list = []
        if abs(c) <= 1e-14 * scale:
            ws.append(INF)
            if abs(a - d) > 1e-14 * scale:
                ws.append(b / (d - a))
        else:
            disc = (d - a) ** 2 + 4 * b * c
            if abs(disc) <= 1e-12 * scale * scale:
                ws.append((a - d) / (2 * c))
            else:
                r = cmath.sqrt(disc)
                ws += [(a - d + r) / (2 * c), (a - d - r) / (2 * c)]
        Ci = self.C.inverse()
        out = []
        for w in ws:
            if is_infinite(w) or w.imag > -1e-12:
                z = self.p if is_infinite(w) else complex(Ci(w))
                out.append(z / abs(z) if abs(abs(z) - 1) < 1e-9 else z)
        return out

    def _at_infinity(self):
        return self.M(INF)

    def critical_numerator(self):
        return np.array([1.0 + 0j])

    def rational_degree(self):
        return 1

    def preimage_polynomial(self, w):
        # a z + b = w (c z + d)
        M = self.M
        return np.array([M.b - w * M.d, M.a - w * M.c])

    def _params(self):
        a, b, c, d = self.raw
        return {"a": complex_pair(a), "b": complex_pair(b), "c": complex_pair(c),
                "d": complex_pair(d), "p": complex_pair(self.p)}


class BakerExp(MapDescriptor):
    """z + shift + coef e^{-z}; essential singularity at infinity."""

    kind = "baker_exp"

    def __init__(self, shift=0.0, coef=1.0):
        self.shift = as_complex(shift)
        self.coef = as_complex(coef)
        if self.coef == 0:
            raise ValueError("coef must be non-zero")
        super().__init__(essential_at_infinity=True,
                         component=ComponentInfo("baker", direction=1.0 + 0j))
        self.self_test()

    def _f(self, z):
        return z + self.shift + self.coef * np.exp(-z)

    def _df(self, z):
        return 1.0 - self.coef * np.exp(-z)

    def critical_set(self, region_radius: float) -> list[complex]:
        base = cmath.log(self.coef)
        kmax = int(region_radius / (2 * math.pi)) + 2
        pts = [base + 2j * math.pi * k for k in range(-kmax, kmax + 1)]
        return [z for z in pts if abs(z) <= region_radius]

    def declared_asymptotic_values(self):
        # only the point at infinity, reached along Re z -> +inf
        return (INF,)

    def sample_points(self, n, rng):
        return rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)

    def _params(self):
        return {"shift": complex_pair(self.shift), "coef": complex_pair(self.coef)}


class CompositeMap(MapDescriptor):
    """outer ∘ inner_map, for self-maps of the disk."""

    kind = "composite"

    def __init__(self, outer: MapDescriptor, inner_map: MapDescriptor):
        self.outer, self.inner_map = outer, inner_map
        self.disk_self_map = outer.disk_self_map and inner_map.disk_self_map
        self.inner = outer.inner and inner_map.inner
        self.analytic_on_circle = outer.analytic_on_circle and inner_map.analytic_on_circle
        super().__init__(singularities=inner_map.singularities)
        deg_o, deg_i = outer.rational_degree(), inner_map.rational_degree()
        self._degree = deg_o * deg_i if deg_o and deg_i else None

    def _f(self, z):
        return self.outer._f(self.inner_map._f(z))

    def _df(self, z):
        w = self.inner_map._f(z)
        return self.outer._df(w) * self.inner_map._df(z)

    def _at_infinity(self):
        return self.outer(self.inner_map(INF))

    def rational_degree(self):
        return self._degree

    def _params(self):
        return {"outer": self.outer.to_config(), "inner": self.inner_map.to_config()}


def iterate_map(g: MapDescriptor, k: int) -> MapDescriptor:
    """g composed with itself k times."""
    if k < 1:
        raise ValueError("k must be positive")
    out = g
    for _ in range(k - 1):
        out = CompositeMap(g, out)
    return out


# ---------------------------------------------------------------------------
# orbits


@dataclass
class OrbitRecord:
    points: list
    status: str
    limit: complex | None = None
    period: int | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "length": len(self.points),
            "limit": complex_pair(self.limit) if self.limit is not None else None,
            "period": self.period,
            "points": [complex_pair(z) for z in self.points],
        }


def _quantize(z: complex, grid: float = 1e-10) -> tuple[int, int]:
    return (round(z.real / grid), round(z.imag / grid))


def orbit(f: MapDescriptor, z0, n_max: int = 1000, escape_radius: float = 1e6,
          convergence_tol: float = 1e-12) -> OrbitRecord:
    """Iterate f from z0 until convergence, a cycle, escape, a singularity or the budget."""
    z = complex(z0)
    f._check(z)
    pts = [z]
    for _ in range(n_max):
        try:
            w = f(z)
        except EssentialSingularity:
            return OrbitRecord(pts, "hit-singularity")
        if is_infinite(w) or not (abs(w) <= escape_radius):
            return OrbitRecord(pts, "escaped")
        pts.append(w)
        if abs(w - z) < convergence_tol * max(1.0, abs(w)):
            return OrbitRecord(pts, "converged", limit=w)
        m = len(pts) - 1
        if m % 2 == 0 and _quantize(pts[m // 2]) == _quantize(w):
            # Floyd hit: the period divides m/2; find the minimal one
            q = _quantize(w)
            for k in range(1, m // 2 + 1):
                if _quantize(pts[m - k]) == q:
                    return OrbitRecord(pts, "cycle-detected", limit=w, period=k)
        z = w
    return OrbitRecord(pts, "budget")


def find_attracting_component(f: MapDescriptor, n_max: int = 20000) -> ComponentInfo | None:
    """Attracting cycle reached by a critical orbit, as component metadata."""
    try:
        crit = critical_points(f, region_radius=math.inf)
    except (RootSolverError, ValueError):
        return None
    for c in crit:
        rec = orbit(f, c, n_max=n_max, escape_radius=f.escape_radius, convergence_tol=1e-15)
        if rec.status not in ("converged", "cycle-detected"):
            continue
        cyc = list(rec.points[-(rec.period or 1):])
        cyc = [newton_cycle_point(f, w, len(cyc)) for w in cyc]
        mult = 1.0 + 0j
        for w in cyc:
            mult *= f._df(w)
        if abs(mult) >= 1:
            continue
        point = min(cyc, key=lambda w: abs(w - c))
        return ComponentInfo("attracting", point, period=len(cyc))
    return None


def newton_cycle_point(f: MapDescriptor, z: complex, q: int, iters: int = 60) -> complex:
    """Polish a point of a q-cycle by Newton on f^q(z) - z."""
    z = complex(z)
    for _ in range(iters):
        w, d = z, 1.0 + 0j
        for _ in range(q):
            d *= f._df(w)
            w = complex(f._f(w))
        den = d - 1
        if den == 0:
            break
        step = (w - z) / den
        z -= step
        if abs(step) < 1e-16 * max(1, abs(z)):
            break
    # superattracting cycles make the correction tiny quickly; snap exact zeros
    if abs(z) < 1e-15:
        z = 0j
    return z


# ---------------------------------------------------------------------------
# critical and singular values


def critical_points(f: MapDescriptor, region_radius: float | None = None) -> list[complex]:
    """Finite critical points inside |z| <= region_radius, with multiplicity."""
    R = f.region_radius if region_radius is None else region_radius
    if isinstance(f, BakerExp):
        return f.critical_set(R if math.isfinite(R) else 4.0)
    if isinstance(f, InfiniteBlaschke):
        return [c for c in f.critical_points_upto() if abs(c) <= R]
    num = f.critical_numerator()
    if num is None:
        raise ValueError(f"{f.kind} has no derivative numerator")
    num = np.asarray(num, dtype=complex)
    scale = np.abs(num).max()
    if scale == 0:
        return []
    num = np.where(np.abs(num) < 1e-15 * scale, 0, num)
    roots = polynomial_roots(num)
    out = []
    for r in roots:
        rr, _ = newton_polish(lambda z: complex(f._df(z)), lambda z: _d2(f, z), r)
        if abs(f._df(rr)) > abs(f._df(r)):
            rr = r
        if abs(rr) <= R:
            out.append(complex(rr))
    return out


def _d2(f: MapDescriptor, z: complex) -> complex:
    h = 1e-6 * max(1.0, abs(z))
    return (f._df(z + h) - f._df(z - h)) / (2 * h)


@dataclass
class SingularValueReport:
    critical_points: list
    critical_values: list
    asymptotic_values: list
    singular_values: list
    relevant: list
    notes: str = ""
    witness_residuals: list = field(default_factory=list)

    def to_dict(self):
        enc = lambda xs: [None if is_infinite(x) else complex_pair(x) for x in xs]  # noqa: E731
        return {
            "critical_points": enc(self.critical_points),
            "critical_values": enc(self.critical_values),
            "asymptotic_values": enc(self.asymptotic_values),
            "singular_values": enc(self.singular_values),
            "relevant": enc(self.relevant),
            "witness_residuals": self.witness_residuals,
            "notes": self.notes,
        }


def singular_values(f: MapDescriptor, region_radius: float | None = None) -> SingularValueReport:
    """CV from the critical points, AV from the catalog declaration."""
    crit = critical_points(f, region_radius)
    cvs = [complex(f(c)) for c in crit]
    resid = [float(abs(f.derivative(c))) for c in crit]
    deg = f.rational_degree()
    if deg is not None and deg >= 2:
        finite_all = critical_points(f, math.inf)
        missing = 2 * deg - 2 - len(finite_all)
        if missing > 0:
            crit = crit + [INF] * missing
            cvs = cvs + [f(INF)] * missing
            resid = resid + [0.0] * missing
    avs = list(f.declared_asymptotic_values())
    svs = []
    for v in cvs + avs:
        if is_infinite(v):
            if not any(is_infinite(s) for s in svs):
                svs.append(INF)
        elif not any((not is_infinite(s)) and abs(s - v) < 1e-10 for s in svs):
            svs.append(v)
    finite = [v for v in svs if not is_infinite(v)]
    if f.disk_self_map:
        relevant = [v for v in finite if abs(v) < 1]
    elif f.component is not None and finite:
        mem = f.membership(np.array(finite))
        relevant = [v for v, m in zip(finite, mem) if m == 1]
    else:
        relevant = []
    note = "closure of the listed values; accumulation points are not enumerated"
    return SingularValueReport(crit, cvs, avs, svs, relevant, note, resid)


@dataclass
class PostsingularApprox:
    depth: int
    points: np.ndarray
    orders: list
    sources: list
    escaped: list
    contains_infinity: bool

    def distance_to(self, z: complex) -> float:
        if self.points.size == 0:
            return math.inf
        return float(np.min(np.abs(self.points - z)))

    def circle_distance(self) -> float:
        if self.points.size == 0:
            return math.inf
        return float(np.min(np.abs(np.abs(self.points) - 1.0)))

    def to_dict(self):
        return {
            "depth": self.depth,
            "points": [complex_pair(z) for z in self.points],
            "orders": self.orders,
            "sources": self.sources,
            "escaped": self.escaped,
            "contains_infinity": self.contains_infinity,
        }


def postsingular_approx(f: MapDescriptor, depth: int, region_radius: float | None = None,
                        escape_radius: float = 1e8, relevant_only: bool = False) -> PostsingularApprox:
    """Forward orbits of the singular values up to ``depth`` steps."""
    rep = singular_values(f, region_radius)
    seeds = rep.relevant if relevant_only else rep.singular_values
    pts, orders, sources, escaped = [], [], [], []
    seen: set = set()
    has_inf = any(is_infinite(v) for v in seeds)
    for si, v in enumerate(seeds):
        if is_infinite(v):
            continue
        z = complex(v)
        for n in range(depth + 1):
            key = (round(z.real / 1e-8), round(z.imag / 1e-8))
            if key not in seen:
                seen.add(key)
                pts.append(z)
                orders.append(n)
                sources.append(si)
            if n == depth:
                break
            try:
                z = complex(f(z))
            except EssentialSingularity:
                escaped.append(si)
                break
            if is_infinite(z) or abs(z) > escape_radius:
                escaped.append(si)
                has_inf = True
                break
    return PostsingularApprox(depth, np.array(pts, dtype=complex), orders, sources, escaped, has_inf)


# ---------------------------------------------------------------------------
# config registry

_KINDS = {
    "power": (PowerMap, {"d"}),
    "polynomial": (PolynomialMap, {"coeffs"}),
    "rational": (RationalMap, {"numerator", "denominator"}),
    "finite_blaschke": (FiniteBlaschke, {"zeros", "rotation"}),
    "infinite_blaschke": (InfiniteBlaschke, {"rule", "rotation"}),
    "halfplane_moebius_model": (HalfplaneMoebiusModel, {"a", "b", "c", "d", "p"}),
    "baker_exp": (BakerExp, {"shift", "coef"}),
    "newton_of_polynomial": (NewtonMap, {"coeffs", "root_index"}),
}


def map_from_config(cfg: dict) -> MapDescriptor:
    """Build a catalog map from ``{"kind": ..., **params}``."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("map config must be an object with a 'kind' key")
    kind = cfg["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown map kind {kind!r}")
    cls, allowed = _KINDS[kind]
    params = {k: v for k, v in cfg.items() if k not in ("kind", "component")}
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"unknown parameters for {kind}: {sorted(extra)}")
    if kind == "infinite_blaschke" and "rule" in params:
        params["rule"] = zero_rule_from_config(params["rule"])
    comp = cfg.get("component")
    if kind in ("polynomial", "rational"):
        if comp is not None:
            params["component"] = ComponentInfo.from_config(comp)
        return cls(**params)
    f = cls(**params)
    if comp is not None:
        f.component = ComponentInfo.from_config(comp)
    return f
