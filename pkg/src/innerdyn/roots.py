"""Simultaneous polynomial root finding (Aberth-Ehrlich iteration)."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import RootSolverError

MAX_SWEEPS = 500


def horner_ratio(coeffs: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Newton ratio p/p' for a polynomial with ascending coefficients."""
    c = np.asarray(coeffs, dtype=complex)

    def ratio(z):
        p = np.full(z.shape, c[-1], dtype=complex)
        dp = np.zeros(z.shape, dtype=complex)
        for ck in c[-2::-1]:
            dp = dp * z + p
            p = p * z + ck
        with np.errstate(divide="ignore", invalid="ignore"):
            r = p / dp
        # p' = 0 away from a root: nudge instead of dividing by zero
        r = np.where(dp == 0, np.where(p == 0, 0.0, 1e-3 * (1 + np.abs(z))), r)
        return r

    return ratio


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    nz = np.nonzero(np.abs(c) > 0)[0]
    if nz.size == 0:
        raise ValueError("zero polynomial has no well-defined roots")
    return c[: nz[-1] + 1]


def root_radius_bound(coeffs) -> float:
    """Fujiwara's bound on the moduli of the roots."""
    c = _trim(coeffs)
    n = len(c) - 1
    lead = c[-1]
    terms = [abs(c[n - k] / lead) ** (1.0 / k) for k in range(1, n + 1)]
    terms[-1] = (abs(c[0] / lead) / 2.0) ** (1.0 / n)
    return 2.0 * max(terms) if terms else 0.0


def _pair_sums(z: np.ndarray, rows: np.ndarray, block: int = 512) -> np.ndarray:
    out = np.empty(rows.size, dtype=complex)
    for s in range(0, rows.size, block):
        blk = rows[s : s + block]
        diff = z[blk][:, None] - z[None, :]
        diff[np.arange(blk.size), blk] = np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
        inv[~np.isfinite(inv)] = 0.0
        out[s : s + block] = inv.sum(axis=1)
    return out


def aberth(
    ratio: Callable[[np.ndarray], np.ndarray],
    initial: np.ndarray,
    tol: float = 1e-14,
    max_sweeps: int = MAX_SWEEPS,
) -> np.ndarray:
    """Aberth-Ehrlich iteration from the given starting points.

    Parameters
    ----------
    ratio : callable
        Maps an array of points to p(z)/p'(z).
    initial : ndarray
        One starting point per root; they must be pairwise distinct.
    tol : float
        Relative size of the final correction considered converged.

    Returns
    -------
    ndarray
        Approximate roots in the order of ``initial``.
    """
    z = np.array(initial, dtype=complex)
    active = np.ones(z.size, dtype=bool)
    for _ in range(max_sweeps):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            return z
        w = ratio(z[rows])
        s = _pair_sums(z, rows)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = w / (1.0 - w * s)
        bad = ~np.isfinite(corr)
        corr[bad] = w[bad] if np.all(np.isfinite(w[bad])) else 0.0
        z[rows] -= corr
        done = np.abs(corr) <= tol * np.maximum(1.0, np.abs(z[rows]))
        active[rows[done]] = False
    if active.any():
        raise RootSolverError(
            f"{int(active.sum())} of {z.size} roots unconverged after {max_sweeps} sweeps"
        )
    return z


def circle_start(n: int, radius: float, offset: float = 0.4) -> np.ndarray:
    k = np.arange(n)
    return radius * np.exp(1j * (2 * np.pi * k / n + offset))


def polynomial_roots(coeffs, tol: float = 1e-14, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """All roots of the polynomial with ascending coefficients ``coeffs``."""
    c = _trim(coeffs)
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    # roots at the origin are split off exactly
    k0 = int(np.nonzero(np.abs(c) > 0)[0][0])
    zeros = np.zeros(k0, dtype=complex)
    c = c[k0:]
    m = len(c) - 1
    if m == 0:
        return zeros
    if m == 1:
        return np.concatenate([zeros, [-c[0] / c[1]]])
    radius = max(root_radius_bound(c), 1e-8)
    z = aberth(horner_ratio(c), circle_start(m, 0.9 * radius), tol=tol, max_sweeps=max_sweeps)
    return np.concatenate([zeros, z])


def newton_polish(
    f: Callable[[complex], complex],
    df: Callable[[complex], complex],
    z: complex,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[complex, float]:
    """Newton on a scalar analytic function; returns (root, |f(root)|)."""
    z = complex(z)
    best, best_res = z, abs(f(z))
    for _ in range(max_iter):
        fz = f(z)
        res = abs(fz)
        if res < best_res:
            best, best_res = z, res
        if res < tol:
            break
        d = df(z)
        if d == 0:
            break
        step = fz / d
        z = z - step
        if abs(step) < 1e-17 * max(1.0, abs(z)):
            break
    res = abs(f(z))
    if res < best_res:
        best, best_res = z, res
    return best, best_res
