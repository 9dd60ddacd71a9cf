"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import cmath
import json
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from innerdyn.cli import main
from innerdyn.config import canonical_json
from innerdyn.geometry import (coefficient_estimate, distortion_constant, koebe,
                               polynomial_function, random_univalent_polynomial)
from innerdyn.inner_dynamics import (cowen_classify, denjoy_wolff, ergodicity_experiment,
                                     invariance_chi2, recurrence_criterion_check, singularity_scan)
from innerdyn.inverse_branches import bisect_rho1, stolz_containment_check, well_definedness_radius
from innerdyn.maps import (FiniteBlaschke, HalfplaneMoebiusModel, InfiniteBlaschke, PowerMap,
                           quadratic)
from innerdyn.periodic_finder import density_experiment, oracle_periodic_points


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.checks = []
        self.t0 = time.perf_counter()

    def check(self, ok, what):
        self.checks.append((bool(ok), what))

    def elapsed(self):
        return time.perf_counter() - self.t0

    def finish(self):
        dt = self.elapsed()
        ok = all(c for c, _ in self.checks)
        failed = [w for c, w in self.checks if not c]
        detail = "; ".join(failed) if failed else "; ".join(w for _, w in self.checks)
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'} [{dt:.2f}s] {self.title}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line


def _unit_roots_error(z, N):
    m = 2**N - 1
    k = round(cmath.phase(z) / (2 * math.pi) * m) % m
    return abs(z - cmath.exp(2j * math.pi * k / m))


def test_criterion_1_distortion_and_coefficients():
    c = Criterion(1, "distortion constant and coefficient bound")
    C = distortion_constant(0.5)
    c.check(abs(C - 3) <= 1e-12, f"C(0.5)={C!r}")
    rng = np.random.default_rng(1)
    funcs = {"identity": lambda z: np.asarray(z, dtype=complex), "koebe": koebe}
    for i in range(10):
        funcs[f"poly{i}"] = polynomial_function(random_univalent_polynomial(20, rng))
    worst = max(abs(coefficient_estimate(phi, n)) - n for phi in funcs.values() for n in range(1, 21))
    c.check(worst <= 1e-6, f"max(|a_n|-n)={worst:.2e} over 12 functions")
    c.check(c.elapsed() < 1.0, f"time {c.elapsed():.2f}s < 1s")
    c.finish()


def test_criterion_2_classification():
    c = Criterion(2, "Cowen classification and boundary multiplier")
    cases = [(PowerMap(2), "elliptic"), (HalfplaneMoebiusModel.affine(2.0, 0.0), "hyperbolic"),
             (HalfplaneMoebiusModel.affine(1.0, 1.0), "simply_parabolic"),
             (HalfplaneMoebiusModel.affine(1.0, 1j), "doubly_parabolic")]
    worst_t = 0.0
    for g, want in cases:
        t = time.perf_counter()
        got = cowen_classify(g).type
        worst_t = max(worst_t, time.perf_counter() - t)
        c.check(got == want, f"{want}->{got}")
    t = time.perf_counter()
    dw = denjoy_wolff(FiniteBlaschke([-1 / 3]))
    worst_t = max(worst_t, time.perf_counter() - t)
    c.check(abs(dw.p - 1) <= 1e-8, f"|p-1|={abs(dw.p - 1):.1e}")
    c.check(abs(dw.multiplier - 0.5) <= 1e-8, f"|mult-0.5|={abs(dw.multiplier - 0.5):.1e}")
    c.check(worst_t < 1.0, f"slowest {worst_t:.2f}s < 1s")
    c.finish()


def test_criterion_3_recurrence():
    c = Criterion(3, "recurrence criterion")
    r = recurrence_criterion_check(HalfplaneMoebiusModel.affine(1.0, 1j), r_exponent=2,
                                   n_min=100, n_steps=10**4)
    c.check(r.satisfied and r.max_residual < 1e-3, f"w+i residual {r.max_residual:.1e}")
    r1 = recurrence_criterion_check(HalfplaneMoebiusModel.affine(1.0, 1.0), r_exponent=2,
                                    n_min=100, n_steps=10**4)
    c.check(not r1.satisfied, f"w+1 satisfied={r1.satisfied}")
    c.finish()


def _ergodic_report():
    g = PowerMap(2)
    e = ergodicity_experiment(g, 0.3, 10**6)
    chi = invariance_chi2(g, 10**6, 64)
    return e, chi


def test_criterion_4_ergodicity():
    c = Criterion(4, "doubling map equidistribution")
    e, chi = _ergodic_report()
    c.check(e.discrepancy < 0.01, f"D={e.discrepancy:.4f}")
    c.check(chi.passed, f"chi2={chi.statistic:.1f} < {chi.critical:.1f}")
    c.check(c.elapsed() < 5.0, f"time {c.elapsed():.2f}s < 5s")
    c.finish()


def test_criterion_5_singularity():
    c = Criterion(5, "singular set of the infinite Blaschke product")
    s = singularity_scan(InfiniteBlaschke(), eps=0.05, n_samples=10**5, spot_checks=[-1])
    cert = [complex(z) for z in s.certified]
    c.check(len(cert) == 1 and abs(cert[0] - 1) < 1e-2, f"certified {cert}")
    spot = {complex(v.point): v.status for v in s.spot_checks}
    c.check(spot.get(-1 + 0j) == "rejected", f"-1 {spot.get(-1 + 0j)}")
    c.check(c.elapsed() < 10.0, f"time {c.elapsed():.2f}s < 10s")
    c.finish()


def test_criterion_6_branches_and_stolz():
    c = Criterion(6, "well-definedness radius and Stolz containment")
    z2 = PowerMap(2)
    rho0 = well_definedness_radius(z2, 1, 10).rho0
    c.check(abs(rho0 - 1) <= 1e-9, f"z^2 rho0={rho0!r}")
    s = stolz_containment_check(z2, 1, 0, math.pi / 4, 0.5, 10)
    c.check(s.contained and s.max_angle_observed < 1e-9, f"z^2 max angle {s.max_angle_observed:.1e}")
    g = FiniteBlaschke([0.0, -0.5])
    r0 = well_definedness_radius(g, 1, 10).rho0
    r1 = bisect_rho1(g, 1, 0, math.pi / 4, 10, r0)
    h = stolz_containment_check(g, 1, 0, math.pi / 4, r1, 10)
    c.check(r1 > 0 and h.contained and h.obstructions == 0,
            f"Blaschke rho1={r1:.4f} contained={h.contained} obstructions={h.obstructions}")
    c.finish()


def _harmonic_argv(out):
    return ["harmonic-sample", "--seed", "7", "--out", str(out), "--set", "n_walks=100000",
            "--set", "z0=[0.5,0]", "--set", "arcs=[[-1.5707963267948966,1.5707963267948966]]"]


def test_criterion_7_harmonic_measure(tmp_path):
    c = Criterion(7, "harmonic measure")
    from innerdyn.boundary_measure import DomainOracle, harmonic_sample, poisson_arc_measure

    s = harmonic_sample(DomainOracle("exact_disk"), 10**5, rng_seed=7)
    dev = max(abs(s.arc_fraction((k * math.pi / 4, (k + 1) * math.pi / 4)) - 0.125) for k in range(8))
    c.check(dev <= 0.01, f"disk 8 arcs max dev {dev:.4f}")
    s = harmonic_sample(DomainOracle("exact_disk", 0.5), 10**5, rng_seed=7)
    arc = (-math.pi / 2, math.pi / 2)
    emp, exact = s.arc_fraction(arc), poisson_arc_measure(0.5, arc)
    c.check(abs(emp - exact) <= 0.02, f"from 0.5: {emp:.4f} vs {exact:.4f}")
    s = harmonic_sample(DomainOracle("exact_halfplane", 1j), 10**5, rng_seed=7)
    hp = s.interval_fraction((-1.0, 1.0))
    c.check(abs(hp - 0.5) <= 0.02, f"half-plane [-1,1] from i {hp:.4f}")
    c.check(c.elapsed() < 30.0, f"time {c.elapsed():.2f}s < 30s")
    c.finish()


def _density_reports():
    return (density_experiment(PowerMap(2), n_seeds=64, delta=0.1, maxN=12, seed=0),
            density_experiment(quadratic(0.2), n_seeds=32, delta=0.1, maxN=12, seed=0))


def test_criterion_8_periodic_points():
    c = Criterion(8, "repelling periodic points near the boundary")
    sq, qd = _density_reports()
    c.check(sq.success_fraction == 1.0, f"z^2 success {sq.success_fraction}")
    certs = [x for x in sq.certificates if x is not None]
    roots = max((_unit_roots_error(x.point, x.period) for x in certs), default=math.inf)
    mult = max((abs(abs(x.multiplier) - 2**x.period) / 2**x.period for x in certs), default=math.inf)
    c.check(roots <= 1e-9, f"roots of unity err {roots:.1e}")
    c.check(mult <= 1e-9, f"|mult|/2^N rel err {mult:.1e}")
    q = [x for x in qd.certificates if x is not None]
    c.check(len(q) > 0, f"z^2+0.2 certified {len(q)}/32")
    oracles = {}
    worst_res, worst_orc, ok_mult, ok_incl = 0.0, 0.0, True, True
    for x in q:
        if x.period not in oracles:
            oracles[x.period] = np.array([o["point"] for o in
                                          oracle_periodic_points(quadratic(0.2), x.period)])
        worst_res = max(worst_res, x.residual)
        worst_orc = max(worst_orc, float(np.min(np.abs(oracles[x.period] - x.point))))
        ok_mult &= abs(x.multiplier) > 1
        ok_incl &= x.inclusion_margin > 0
    c.check(worst_res < 1e-9, f"residual {worst_res:.1e}")
    c.check(ok_mult and ok_incl, f"repelling={ok_mult} strict inclusion={ok_incl}")
    c.check(worst_orc <= 1e-8, f"oracle distance {worst_orc:.1e}")
    c.check(c.elapsed() < 60.0, f"time {c.elapsed():.2f}s < 60s")
    c.finish()


def test_criterion_9_reproducibility(tmp_path):
    c = Criterion(9, "byte-identical re-runs")
    e1, x1 = _ergodic_report()
    e2, x2 = _ergodic_report()
    same4 = canonical_json([e1.to_dict(), x1.to_dict()]) == canonical_json([e2.to_dict(), x2.to_dict()])
    c.check(same4, "ergodicity report identical")
    texts = []
    for run in ("a", "b"):
        out = tmp_path / f"h{run}"
        assert main(_harmonic_argv(out)) == 0
        texts.append(((out / "report.json").read_bytes(), (out / "hits.csv").read_bytes()))
    c.check(texts[0] == texts[1], "harmonic-sample report and hits identical")
    texts = []
    for run in ("a", "b"):
        out = tmp_path / f"d{run}"
        argv = ["density-experiment", "--map", json.dumps({"kind": "power", "d": 2}),
                "--seed", "0", "--out", str(out)]
        assert main(argv) == 0
        texts.append(((out / "report.json").read_bytes(), (out / "density.csv").read_bytes()))
    c.check(texts[0] == texts[1], "density-experiment report and csv identical")
    c.finish()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
