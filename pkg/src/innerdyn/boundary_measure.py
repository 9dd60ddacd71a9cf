"""Harmonic measure: exact Poisson values on model domains and hitting samples.

Exact domains (disk, upper half-plane) use walk-on-spheres with the exact
boundary distance.  Attracting basins use walk-on-spheres with a Koebe
lower bound for the boundary distance while that bound is larger than the
step ``h``, and a fixed-step walk with membership-flip absorption below it.
"""
from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import disk_automorphism
from .maps import MapDescriptor, postsingular_approx

TWO_PI = 2.0 * math.pi
CHUNK = 4096


# ---------------------------------------------------------------------------
# exact values


def poisson_arc_measure(z0, arc) -> float:
    """Harmonic measure of the arc from theta1 counterclockwise to theta2, seen from z0."""
    z0 = complex(z0)
    if abs(z0) >= 1:
        raise ValueError("base point must lie in the open disk")
    t1, t2 = float(arc[0]), float(arc[1])
    if t2 <= t1:
        raise ValueError("degenerate arc (need theta2 > theta1)")
    if t2 - t1 >= TWO_PI:
        return 1.0
    M = disk_automorphism(z0)
    a1 = cmath.phase(M(cmath.exp(1j * t1)))
    a2 = cmath.phase(M(cmath.exp(1j * t2)))
    d = (a2 - a1) % TWO_PI
    return d / TWO_PI


def poisson_interval_measure(w0, interval) -> float:
    """Harmonic measure of [a, b] on the real line seen from w0 in the upper half-plane."""
    w0 = complex(w0)
    if w0.imag <= 0:
        raise ValueError("base point must lie in the upper half-plane")
    a, b = float(interval[0]), float(interval[1])
    if b <= a:
        raise ValueError("degenerate interval")
    x, y = w0.real, w0.imag
    return (math.atan((b - x) / y) - math.atan((a - x) / y)) / math.pi


# ---------------------------------------------------------------------------
# domains


@dataclass
class DomainOracle:
    """exact_disk, exact_halfplane, or fatou_component (needs a map with component metadata)."""

    kind: str
    z0: complex = 0j
    f: MapDescriptor | None = None
    membership_iter: int = 1000
    membership_tol: float = 1e-6

    def __post_init__(self):
        self.z0 = complex(self.z0)
        if self.kind not in ("exact_disk", "exact_halfplane", "fatou_component"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "fatou_component":
            if self.f is None or self.f.component is None:
                raise ValueError("fatou_component needs a map with declared component")
        if not self.membership(self.z0):
            raise ValueError("base point is not in the domain")

    def membership(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "exact_disk":
            out = np.abs(z) < 1.0
        elif self.kind == "exact_halfplane":
            out = z.imag > 0
        else:
            out = self.f.membership(z, self.membership_iter, self.membership_tol) == 1
        return bool(out) if out.ndim == 0 else out

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "exact_disk":
            return 1.0 - np.abs(z)
        if self.kind == "exact_halfplane":
            return z.imag
        raise ValueError("no exact distance for a Fatou component")


@dataclass
class HarmonicSampleSet:
    hits: np.ndarray
    steps: np.ndarray
    walk_index: np.ndarray
    timeouts: int
    params: dict
    seed: int

    def __len__(self):
        return int(self.hits.size)

    def angles(self) -> np.ndarray:
        return np.mod(np.angle(self.hits), TWO_PI)

    def arc_fraction(self, arc) -> float:
        t1, t2 = arc
        length = t2 - t1
        if length >= TWO_PI:
            return 1.0
        return float(np.mean(np.mod(self.angles() - t1, TWO_PI) < length))

    def interval_fraction(self, interval) -> float:
        a, b = interval
        x = self.hits.real
        return float(np.mean((x >= a) & (x <= b)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("walk_index,hit_re,hit_im,steps\n")
        for i, z, s in zip(self.walk_index, self.hits, self.steps):
            buf.write(f"{int(i)},{z.real!r},{z.imag!r},{int(s)}\n")
        return buf.getvalue()

    def to_svg(self, size: int = 480, timestamp: str | None = None, extent: float = 1.2) -> str:
        """Scatter plot of the hits; ``timestamp`` adds a comment line."""
        half = size / 2.0
        scale = half / extent
        out = ['<?xml version="1.0" encoding="UTF-8"?>']
        if timestamp is not None:
            out.append(f"<!-- generated {timestamp} -->")
        out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
                   f'viewBox="0 0 {size} {size}">')
        out.append(f'<rect width="{size}" height="{size}" fill="white"/>')
        if self.params.get("kind") != "exact_halfplane":
            out.append(f'<circle cx="{half}" cy="{half}" r="{scale:.3f}" fill="none" '
                       'stroke="#bbb" stroke-width="1"/>')
        for z in self.hits:
            x, y = half + scale * z.real, half - scale * z.imag
            if 0 <= x <= size and 0 <= y <= size:
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="0.8" fill="#1f4e8c"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def summary(self) -> dict:
        return {"samples": len(self), "timeouts": self.timeouts, "seed": self.seed,
                "params": self.params,
                "mean_steps": float(self.steps.mean()) if self.steps.size else 0.0}


# ---------------------------------------------------------------------------
# walks on exact domains


def _phases(rngs, idx: np.ndarray) -> np.ndarray:
    """Uniform directions for the active walks ``idx`` (sorted), drawn chunk by chunk."""
    chunk = idx // CHUNK
    counts = np.bincount(chunk, minlength=len(rngs))
    parts = [rngs[c].uniform(0.0, TWO_PI, k) for c, k in enumerate(counts) if k]
    return np.exp(1j * np.concatenate(parts))


def _wos_exact(domain: DomainOracle, n: int, rngs, band: float, max_steps: int):
    z = np.full(n, domain.z0, dtype=complex)
    steps = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        d = domain.distance(z[idx])
        done = d <= band
        active[idx[done]] = False
        idx, d = idx[~done], d[~done]
        if idx.size == 0:
            break
        z[idx] += d * _phases(rngs, idx)
        steps[idx] += 1
    if domain.kind == "exact_disk":
        hits = z / np.abs(z)
    else:
        hits = z.real + 0j
    return hits, steps, ~active


# ---------------------------------------------------------------------------
# walks on attracting basins


@dataclass
class _Trap:
    centre: complex
    radius: float
    period: int
    cloud: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    orders: np.ndarray = field(default_factory=lambda: np.zeros(0, int))


def find_trap(f: MapDescriptor, samples: int = 256, margin: float = 0.95) -> _Trap | None:
    """A disk D(c, R) around the attracting cycle point with f^q(D) inside D(c, margin R)."""
    comp = f.component
    if comp is None or comp.kind != "attracting":
        return None
    c, q = complex(comp.point), int(comp.period)
    circle = np.exp(1j * TWO_PI * np.arange(samples) / samples)
    R = 2.0
    while R > 1e-6:
        w = c + R * circle
        ok = True
        for _ in range(q):
            w = f._f(w)
            if not np.all(np.isfinite(w)):
                ok = False
                break
        if ok and np.max(np.abs(w - c)) < margin * R:
            break
        R *= 0.8
    else:
        return None
    cloud = postsingular_approx(f, depth=300)
    pts = np.asarray(cloud.points, dtype=complex)
    orders = np.asarray(cloud.orders, dtype=int)
    fin = np.isfinite(pts)
    order = np.argsort(orders[fin], kind="stable")
    return _Trap(c, R, q, pts[fin][order], orders[fin][order])


def _nearest_distance(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if pts.size <= 64:
        return np.min(np.abs(z[:, None] - pts[None, :]), axis=1)
    d, _ = cKDTree(np.column_stack([pts.real, pts.imag])).query(np.column_stack([z.real, z.imag]))
    return d


def koebe_radius(f: MapDescriptor, trap: _Trap, z: np.ndarray, max_iter: int = 200,
                 extra: int = 6) -> np.ndarray:
    """Lower bound for the distance from z to the basin boundary (0 if unresolved).

    With f^n(z) inside the trap and s the radius of a disk around f^n(z)
    inside the trap and free of the critical values of f^n (the cloud
    points of order below n), the branch of f^-n on that disk is univalent,
    so by the Koebe quarter theorem the boundary is at least
    s / (4 |(f^n)'(z)|) away.  The bound is maximized over the entrance
    time and ``extra`` further iterates.
    """
    z = np.asarray(z, dtype=complex)
    w = z.copy()
    der = np.ones(z.shape, dtype=complex)
    out = np.zeros(z.shape)
    entered = np.full(z.shape, -1)
    live = np.ones(z.shape, dtype=bool)
    # number of cloud points that are critical values of f^n, indexed by n
    n_cv = np.searchsorted(trap.orders, np.arange(max_iter + extra + 1), side="left")
    for n in range(max_iter + extra + 1):
        idx = np.nonzero(live)[0]
        if idx.size == 0:
            break
        gap = trap.radius - np.abs(w[idx] - trap.centre)
        inside = gap > 0
        j = idx[inside]
        if j.size:
            s = gap[inside]
            if n > 0:
                cv = trap.cloud[: n_cv[n]]
                if cv.size:
                    s = np.minimum(s, _nearest_distance(w[j], cv))
                with np.errstate(divide="ignore", invalid="ignore"):
                    bound = np.nan_to_num(s / (4.0 * np.abs(der[j])), nan=0.0)
            else:
                bound = s
            out[j] = np.maximum(out[j], bound)
            first = entered[j] < 0
            entered[j[first]] = n
            live[j[n - entered[j] >= extra]] = False
        if n >= max_iter:
            live[entered < 0] = False
        idx = np.nonzero(live)[0]
        with np.errstate(over="ignore", invalid="ignore"):
            der[idx] *= f._df(w[idx])
            w[idx] = f._f(w[idx])
        bad = ~np.isfinite(w[idx]) | (np.abs(w[idx]) > 1e150)
        live[idx[bad]] = False
    return out


def _walk_basin(domain: DomainOracle, trap: _Trap | None, n: int, rngs, h: float,
                max_steps: int):
    f = domain.f
    z = np.full(n, domain.z0, dtype=complex)
    steps = np.zeros(n, dtype=np.int64)
    hits = np.full(n, np.nan + 0j)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        r = koebe_radius(f, trap, z[idx]) if trap is not None else np.zeros(idx.size)
        big = r > h
        phase = _phases(rngs, idx)
        # walk-on-spheres jumps stay inside the basin
        jb = idx[big]
        z[jb] += r[big] * phase[big]
        small = idx[~big]
        if small.size:
            new = z[small] + h * phase[~big]
            mem = f.membership(new, domain.membership_iter, domain.membership_tol)
            flip = mem != 1
            absorbed = small[flip]
            hits[absorbed] = 0.5 * (z[absorbed] + new[flip])
            active[absorbed] = False
            keep = small[~flip]
            z[keep] = new[~flip]
        steps[idx] += 1
    return hits, steps, ~active


def harmonic_sample(domain: DomainOracle, n_walks: int, rng_seed: int = 0, h: float = 1e-3,
                    band: float = 1e-6, max_steps: int = 10**6) -> HarmonicSampleSet:
    """Boundary hitting points of ``n_walks`` Brownian paths from the base point.

    Walk k draws its directions from child stream k // 4096 of ``rng_seed``,
    so the output, ordered by walk index, is reproducible.
    """
    n_chunks = max(-(-n_walks // CHUNK), 1)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(rng_seed).spawn(n_chunks)]
    trap = find_trap(domain.f) if domain.kind == "fatou_component" else None
    if domain.kind == "fatou_component":
        hits, steps, ok = _walk_basin(domain, trap, n_walks, rngs, h, max_steps)
    else:
        hits, steps, ok = _wos_exact(domain, n_walks, rngs, band, max_steps)
    params = {"kind": domain.kind, "z0": [domain.z0.real, domain.z0.imag], "h": h, "band": band,
              "max_steps": max_steps,
              "trap": None if trap is None else [trap.centre.real, trap.centre.imag, trap.radius]}
    return HarmonicSampleSet(hits[ok], steps[ok], np.nonzero(ok)[0], int((~ok).sum()), params,
                             int(rng_seed))


def support_density_check(samples: HarmonicSampleSet | np.ndarray, probes, r: float) -> float:
    """Fraction of probe points with a sample within distance r."""
    pts = samples.hits if isinstance(samples, HarmonicSampleSet) else np.asarray(samples, complex)
    probes = np.asarray(probes, dtype=complex)
    if pts.size == 0:
        raise ValueError("empty sample set")
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    d, _ = tree.query(np.column_stack([probes.real, probes.imag]))
    return float(np.mean(d <= r))
