import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import disk_points
from innerdyn.errors import EssentialSingularity
from innerdyn.geometry import is_infinite
from innerdyn.maps import (BakerExp, ComponentInfo, FiniteBlaschke, GeometricZeroRule,
                           HalfplaneMoebiusModel, InfiniteBlaschke, NewtonMap, PolynomialMap,
                           PowerMap, PowerZeroRule, RationalMap, blaschke_condition_check,
                           critical_points, map_from_config, orbit, postsingular_approx, quadratic,
                           singular_values)

INNER = [
    FiniteBlaschke([0.0, -0.5]),
    FiniteBlaschke([0.3 + 0.2j, -0.4j, 0.6]),
    FiniteBlaschke([-1 / 3]),
    PowerMap(3),
    InfiniteBlaschke(),
    HalfplaneMoebiusModel.affine(2.0, 0.0),
    HalfplaneMoebiusModel.affine(1.0, 1.0),
]


def test_evaluation_values():
    assert PowerMap(2)(1 + 1j) == 2j
    assert abs(BakerExp()(0) - 1) < 1e-15
    assert abs(FiniteBlaschke([0, 0])(0.5j) + 0.25) < 1e-15


def test_newton_map_formula():
    N = NewtonMap([-1, 0, 1])  # z^2 - 1
    z = 0.3 + 0.7j
    assert abs(N(z) - (z - (z * z - 1) / (2 * z))) < 1e-14


def test_infinite_blaschke_against_long_product(rng):
    B = InfiniteBlaschke()
    z = disk_points(rng, 20, 0.9)
    zeros = np.array([1 - 2.0**-k for k in range(1, 200)])
    direct = np.prod((zeros[None, :] - z[:, None]) / (1 - zeros[None, :] * z[:, None]), axis=1)
    assert np.max(np.abs(B(z) - direct)) < 1e-12


def test_derivative_complex_step(rng):
    # polynomial derivative against the complex-step formula on the real line
    f = PolynomialMap([0.2, -1, 0.5, 2])
    x = rng.uniform(-1, 1, 50)
    h = 1e-30
    cs = np.array([(np.polyval([2, 0.5, -1, 0.2], xi + 1j * h)).imag / h for xi in x])
    assert np.max(np.abs(f.derivative(x).real - cs) / np.maximum(np.abs(cs), 1)) < 1e-10


@pytest.mark.parametrize("g", INNER[:5], ids=lambda g: type(g).__name__)
def test_schwarz_reflection_symmetry(g, rng):
    z = disk_points(rng, 200, 0.9)
    z = z[np.abs(z - 1) > 0.05]
    lhs = np.array([g(1 / np.conj(zi)) for zi in z])
    rhs = 1 / np.conj(np.array([g(zi) for zi in z]))
    assert np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))) < 1e-10


@pytest.mark.parametrize("g", INNER, ids=lambda g: type(g).__name__)
def test_inner_maps_stay_in_disk(g, rng):
    z = disk_points(rng, 10**4, 0.999)
    assert np.all(np.abs(g(z)) < 1)


def test_finite_blaschke_preimage_count(rng):
    g = FiniteBlaschke([0.3 + 0.2j, -0.4j, 0.6])
    from innerdyn.inverse_branches import preimages
    for w in disk_points(rng, 20, 0.9):
        pre = preimages(g, w)
        assert len([z for z in pre.points if abs(z) < 1]) == 3


def test_construction_checks():
    with pytest.raises(ValueError):
        FiniteBlaschke([1.2])
    with pytest.raises(ValueError):
        InfiniteBlaschke(PowerZeroRule(s=1.0))
    with pytest.raises(ValueError):
        HalfplaneMoebiusModel(1, 0, 0, -1)  # w -> -w leaves the half-plane


def test_essential_singularity_signalled():
    with pytest.raises(EssentialSingularity):
        InfiniteBlaschke()(1.0)


def test_blaschke_condition():
    geo = blaschke_condition_check(GeometricZeroRule())
    assert geo.converges and abs(geo.sum - 1.0) < 1e-15
    assert blaschke_condition_check([0.5, 0.25j]).converges
    assert not blaschke_condition_check(PowerZeroRule(s=1.0)).converges


def test_orbits():
    r = orbit(PowerMap(2), 0.5)
    assert r.status == "converged" and abs(r.limit) < 1e-12
    r = orbit(FiniteBlaschke([-1 / 3]), 0, 10**4)
    assert r.status == "converged" and abs(r.limit - 1) < 1e-10
    r = orbit(quadratic(-1), 0, 100)
    assert r.status == "cycle-detected" and r.period == 2
    assert orbit(PowerMap(2), 1.5).status == "escaped"
    with pytest.raises(EssentialSingularity):
        orbit(InfiniteBlaschke(), 1.0)


def test_baker_orbit_drifts_right():
    # Re increases by e^{-Re z} per step, so it creeps like log n
    r = orbit(BakerExp(), 1, n_max=10**4, escape_radius=8.0)
    re = np.array([p.real for p in r.points])
    assert r.status == "escaped"
    assert np.all(np.diff(re) > 0)


def test_critical_points():
    assert critical_points(PowerMap(2)) == [0]
    assert critical_points(quadratic(0.37 - 0.1j)) == [0]
    g = FiniteBlaschke([0.0, -0.5])
    cps = critical_points(g, math.inf)
    # derivative numerator of z(z + 1/2)/(1 + z/2) is z^2/2 + 2z + 1/2
    oracle = np.roots([0.5, 2, 0.5])
    assert np.allclose(sorted(c.real for c in cps), sorted(oracle.real), atol=1e-12)
    assert all(abs(g.derivative(c)) < 1e-10 for c in cps)


def test_singular_values_power():
    rep = singular_values(PowerMap(2))
    finite = [v for v in rep.critical_values if not is_infinite(v)]
    assert finite == [0] and any(is_infinite(v) for v in rep.critical_values)
    assert rep.asymptotic_values == []


def test_blaschke_critical_count_and_symmetry():
    g = FiniteBlaschke([0.3 + 0.2j, -0.4j, 0.6])
    cps = critical_points(g, math.inf)
    assert len(cps) == 2 * 3 - 2
    inside = [c for c in cps if abs(c) < 1]
    for c in inside:
        assert min(abs(1 / np.conj(c) - d) for d in cps) < 1e-9
        v = g(c)
        assert min(abs(1 / np.conj(v) - g(d)) for d in cps) < 1e-8


def test_baker_singular_values():
    rep = singular_values(BakerExp(), 10)
    for z, v, res in zip(rep.critical_points, rep.critical_values, rep.witness_residuals):
        assert abs(np.exp(-z) - 1) < 1e-12 and res < 1e-10
        assert abs(v - (z + 1)) < 1e-12
    assert any(is_infinite(v) for v in rep.asymptotic_values)
    assert all(s in rep.singular_values or is_infinite(s) for s in rep.critical_values)


def test_postsingular_clouds():
    assert postsingular_approx(PowerMap(2), 20).points.tolist() == [0]
    P = postsingular_approx(quadratic(-1), 20)
    assert sorted(z.real for z in P.points) == [-1, 0]
    P = postsingular_approx(FiniteBlaschke([0.0, -0.5]), 200, relevant_only=True)
    assert P.circle_distance() > 0.9
    for z, n, s in zip(P.points, P.orders, P.sources):
        v = singular_values(FiniteBlaschke([0.0, -0.5])).relevant[s]
        w = v
        for _ in range(n):
            w = FiniteBlaschke([0.0, -0.5])(w)
        assert abs(w - z) < 1e-8


def test_config_round_trip():
    for f in [PowerMap(3), quadratic(0.2), FiniteBlaschke([0.2, 0.1j], 1j), InfiniteBlaschke(),
              HalfplaneMoebiusModel.affine(1.0, 1j), BakerExp(), NewtonMap([-1, 0, 0, 1]),
              RationalMap([1, 3], [3, 1])]:
        g = map_from_config(f.to_config())
        assert type(g) is type(f) and g.to_config() == f.to_config()
        assert abs(g(0.3 + 0.1j) - f(0.3 + 0.1j)) < 1e-15


def test_config_rejects_unknown():
    with pytest.raises(ValueError):
        map_from_config({"kind": "power", "d": 2, "colour": "red"})
    with pytest.raises(ValueError):
        map_from_config({"kind": "spline"})
    with pytest.raises(ValueError):
        ComponentInfo("repelling", 0)


def test_membership_quadratic():
    f = quadratic(0.2)
    m = f.membership(np.array([0.0, 3.0]))
    assert m.tolist() == [1, 0]


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_schwarz_lemma_property(x, y):
    z = complex(x, y)
    if abs(z) >= 0.999:
        return
    for g in (FiniteBlaschke([0.0, -0.5]), PowerMap(3), FiniteBlaschke([0, 0.4 + 0.4j])):
        assert abs(g(z)) <= abs(z) + 1e-15
