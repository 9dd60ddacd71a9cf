import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innerdyn.errors import BranchObstruction, CriticalValueError, NotApplicable
from innerdyn.geometry import distortion_constant, hyperbolic_distance_disk
from innerdyn.inverse_branches import (BranchChain, analytic_rho1, backward_chain, bisect_rho1,
                                       branch_expansion_pairs, obstruction_distance, preimages,
                                       rho0_fraction, schwarz_reflection_value,
                                       stolz_containment_check, well_definedness_radius)
from innerdyn.maps import BakerExp, FiniteBlaschke, InfiniteBlaschke, PowerMap


def _root_oracle(base, xi, z, n):
    # branch of z -> z^(1/2^n) through base over xi, valid near xi
    return base * cmath.exp(cmath.log(z / xi) / 2**n)


def test_preimages_of_square():
    pre = preimages(PowerMap(2), 0.25j)
    oracle = [cmath.sqrt(0.25j), -cmath.sqrt(0.25j)]
    assert len(pre.points) == 2 and not pre.critical
    for o in oracle:
        assert np.min(np.abs(pre.points - o)) < 1e-14


def test_preimages_flag_critical_value():
    pre = preimages(PowerMap(2), 0.0)
    assert pre.critical
    with pytest.raises(CriticalValueError):
        preimages(PowerMap(2), 0.0, strict=True)


def test_preimages_moebius_inverse():
    g = FiniteBlaschke([-1 / 3])  # (3z+1)/(z+3)
    w = 0.2 - 0.4j
    pre = preimages(g, w)
    assert abs(pre.points[0] - (3 * w - 1) / (3 - w)) < 1e-14


def test_preimages_need_polynomial_equation():
    with pytest.raises(NotApplicable):
        preimages(InfiniteBlaschke(), 0.1)


def test_chain_rejects_broken_orbit():
    with pytest.raises(ValueError):
        BranchChain(PowerMap(2), (0.5, 0.3))


@settings(max_examples=30)
@given(st.floats(0, 2 * math.pi), st.integers(1, 8), st.floats(0.05, 0.6), st.floats(0, 2 * math.pi))
def test_square_branch_matches_root_oracle(theta, n, r, phi):
    g = PowerMap(2)
    xi = cmath.exp(1j * theta)
    chain = backward_chain(g, xi, n)
    z = xi * (1 - r * 0.9) if phi < 0.1 else xi + 0.9 * r * cmath.exp(1j * phi)
    if abs(z) >= 1:
        z = z / abs(z) * 0.99
    out = chain.pull(z)
    assert abs(out ** (2**n) - z) < 1e-10
    assert abs(out - _root_oracle(chain.base, xi, z, n)) < 1e-10


def test_chain_levels_compose():
    g = FiniteBlaschke([0.0, -0.5])
    chain = backward_chain(g, 1j, 6, rng=np.random.default_rng(3))
    levels = chain.pull_levels(0.8j)
    for a, b in zip(levels[:-1], levels[1:]):
        assert abs(g(a) - b) < 1e-11
    assert abs(levels[-1] - 0.8j) < 1e-15


def test_backward_chain_on_circle():
    g = FiniteBlaschke([0.0, -0.5])
    chain = backward_chain(g, cmath.exp(0.4j), 10, choices=[1] * 10)
    assert all(abs(abs(x) - 1) < 1e-12 for x in chain.orbit)


def test_branches_expand_hyperbolic_distance(rng):
    g = FiniteBlaschke([0.3 + 0.2j, -0.4j, 0.6])
    chain = backward_chain(g, cmath.exp(1.1j), 5, rng=rng)
    pts = cmath.exp(1.1j) * (1 - np.linspace(0.05, 0.5, 20))
    # g contracts the metric, so its inverse branches cannot shrink it
    assert np.all(branch_expansion_pairs(chain, pts) >= -1e-9)


def test_branch_hits_critical_point():
    # inverse of z^2 cannot be continued to 0 along a path that reaches it
    chain = backward_chain(PowerMap(2), 1.0, 1)
    with pytest.raises(BranchObstruction):
        chain.pull(0.0)


def test_rho0_square_is_one(z2):
    for t in np.linspace(0, 2 * math.pi, 9):
        est = well_definedness_radius(z2, cmath.exp(1j * t), 10)
        assert abs(est.rho0 - 1) < 1e-9 and est.validated


def test_rho0_includes_singular_set(inf_blaschke):
    dist, near = obstruction_distance(inf_blaschke, cmath.exp(0.2j), 2)
    assert dist <= abs(cmath.exp(0.2j) - 1) + 1e-12


def test_rho0_rejects_interior_point(z2):
    with pytest.raises(ValueError):
        well_definedness_radius(z2, 0.5, 3)


def test_rho0_fraction(z2, blaschke_half):
    assert rho0_fraction(z2, 5, 0.5, grid=16) == 1.0
    assert 0 < rho0_fraction(blaschke_half, 5, 0.05, grid=16) <= 1.0


def test_analytic_rho1():
    a = math.pi / 4
    r = analytic_rho1(1.0, a)
    c = distortion_constant(r)
    assert abs(c / (1 - c) - math.tan(a)) < 1e-9
    assert abs(analytic_rho1(0.5, a) - 0.5 * r) < 1e-15


def test_square_keeps_radial_segments(z2):
    for t in (0.3, math.pi / 2, 2.5):
        c = stolz_containment_check(z2, cmath.exp(1j * t), 0, math.pi / 4, 0.5, 10)
        assert c.contained and c.obstructions == 0 and c.max_angle_observed < 1e-9


@pytest.mark.parametrize("xi", [1, 1j, cmath.exp(2.2j)])
def test_blaschke_containment_at_bisected_radius(blaschke_half, xi):
    est = well_definedness_radius(blaschke_half, xi, 10)
    r1 = bisect_rho1(blaschke_half, xi, 0, math.pi / 4, 10, est.rho0, iters=12)
    assert r1 > 0
    c = stolz_containment_check(blaschke_half, xi, 0, math.pi / 4, r1, 10)
    assert c.contained and c.obstructions == 0


def test_reflection_identity(blaschke_half):
    z = 1.3 + 0.4j
    assert abs(schwarz_reflection_value(blaschke_half, z) - blaschke_half(z)) < 1e-12
    with pytest.raises(ValueError):
        schwarz_reflection_value(blaschke_half, 0.5)


def test_chain_step_map_is_depth_one(blaschke_half):
    chain = backward_chain(blaschke_half, 1j, 4)
    step = chain.step_map(2)
    assert step.depth == 1 and step.top == chain.orbit[3]


def test_no_preimage_equation_for_baker():
    with pytest.raises(NotApplicable):
        backward_chain(BakerExp(), 1.0, 1)


def test_track_expands_hyperbolic_distance(blaschke_half, rng):
    chain = backward_chain(blaschke_half, cmath.exp(0.9j), 3, rng=rng)
    a, b = 0.7 * cmath.exp(0.9j), 0.6 * cmath.exp(1.0j)
    ga, gb = chain.track([a, b])
    assert hyperbolic_distance_disk(ga, gb) >= hyperbolic_distance_disk(a, b) - 1e-9
    assert abs(blaschke_half(blaschke_half(blaschke_half(ga))) - a) < 1e-10
