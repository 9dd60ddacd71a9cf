import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from innerdyn.errors import RootSolverError
from innerdyn.roots import aberth, circle_start, horner_ratio, newton_polish, polynomial_roots, root_radius_bound


def _match(a, b):
    # greedy nearest matching of two root lists
    b = list(b)
    worst = 0.0
    for z in a:
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(k)))
    return worst


def test_roots_of_unity():
    r = polynomial_roots([-1] + [0] * 6 + [1])
    assert _match(r, np.exp(2j * np.pi * np.arange(7) / 7)) < 1e-13


def test_zero_roots_split_off():
    r = polynomial_roots([0, 0, -4, 0, 1])
    assert sorted(np.round(r.real, 12)) == [-2, 0, 0, 2]


def test_linear_and_constant():
    assert polynomial_roots([3.0]).size == 0
    assert polynomial_roots([1, 2])[0] == -0.5
    with pytest.raises(ValueError):
        polynomial_roots([0, 0])


def test_against_numpy(rng):
    c = rng.standard_normal(13) + 1j * rng.standard_normal(13)
    ref = np.roots(c[::-1])
    assert _match(polynomial_roots(c), ref) < 1e-9


def test_unconverged_reported():
    with pytest.raises(RootSolverError):
        aberth(horner_ratio([1, 0, 1]), circle_start(2, 1.0), max_sweeps=1)


def test_newton_polish():
    z, res = newton_polish(lambda z: z * z - 2, lambda z: 2 * z, 1.5)
    assert abs(z - 2**0.5) < 1e-15 and res < 1e-15


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=8))
def test_roots_recovered_property(pts):
    roots = np.array([complex(a, b) for a, b in pts])
    gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(roots.size) * 10
    if gaps.min() < 0.05:
        return
    c = np.poly(roots)[::-1]
    assert root_radius_bound(c) >= np.abs(roots).max() - 1e-12
    assert _match(polynomial_roots(c), roots) < 1e-8
