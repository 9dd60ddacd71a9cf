"""Batch driver: one subcommand per experiment, JSON/CSV/SVG outputs and a run manifest.

Exit status is 0 on success, 2 on a configuration error and 3 on a
numerical failure.  Reports depend only on the config and the seed; the
manifest carries the wall time and versions.
"""
from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .boundary_measure import DomainOracle, harmonic_sample, poisson_arc_measure, poisson_interval_measure
from .config import SUBCOMMAND_PARAMS, ConfigError, RunConfig, atomic_write, canonical_json
from .errors import NumericalFailure
from .geometry import (coefficient_estimate, distortion_bound_check, distortion_constant,
                       distortion_constant_series, koebe, polynomial_function,
                       random_univalent_polynomial)
from .inner_dynamics import cowen_classify, denjoy_wolff, radial_limit, singularity_scan
from .inverse_branches import bisect_rho1, stolz_containment_check, well_definedness_radius
from .maps import orbit
from .periodic_finder import boundary_seed, certify_near, density_experiment, oracle_periodic_points

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
TEST_MODE_ENV = "INNERDYN_TEST_MODE"
DEFAULT_OUT = "innerdyn-out"


def _pt(v, name: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{name} must be a number or an [re, im] pair")


def _pts(v, name: str):
    if v is None:
        return None
    if not isinstance(v, list):
        raise ConfigError(f"{name} must be a list of points")
    return [_pt(t, name) for t in v]


def _pos_int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{name} must be a positive integer")
    return v


def _pos(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise ConfigError(f"{name} must be a positive number")
    return float(v)


def _test_mode() -> bool:
    return os.environ.get(TEST_MODE_ENV, "") not in ("", "0")


# ---------------------------------------------------------------------------
# subcommands: each validates its parameters, then computes lazily


def cmd_classify_inner(f, P, cfg):
    z0, n = _pt(P["z0"], "z0"), _pos_int(P["n_steps"], "n_steps")
    return lambda: (cowen_classify(f, z0, n).to_dict(), {})


def cmd_dw_point(f, P, cfg):
    z0, budget = _pt(P["z0"], "z0"), _pos_int(P["budget"], "budget")
    return lambda: (denjoy_wolff(f, budget, z0).to_dict(), {})


def cmd_orbit(f, P, cfg):
    z0, n = _pt(P["z0"], "z0"), _pos_int(P["n_max"], "n_max")
    esc = _pos(P["escape_radius"], "escape_radius")

    def run():
        rec = orbit(f, z0, n, esc)
        rows = ["n,re,im"] + [f"{k},{z.real!r},{z.imag!r}" for k, z in enumerate(rec.points)]
        return rec.to_dict(), {"orbit.csv": "\n".join(rows) + "\n"}
    return run


def cmd_radial_limit(f, P, cfg):
    xi, kmax, tol = _pt(P["xi"], "xi"), _pos_int(P["kmax"], "kmax"), _pos(P["tol"], "tol")
    return lambda: (radial_limit(f, xi, kmax, tol).to_dict(), {})


def cmd_singularity_scan(f, P, cfg):
    res, eps = _pos(P["candidate_resolution"], "candidate_resolution"), _pos(P["eps"], "eps")
    n, spots = _pos_int(P["n_samples"], "n_samples"), _pts(P["spot_checks"], "spot_checks")
    return lambda: (singularity_scan(f, res, eps, n, cfg.seed, spots).to_dict(), {})


def _coefficient_excess(phi, n_max: int) -> float:
    return max(abs(coefficient_estimate(phi, n)) - n for n in range(1, n_max + 1))


def cmd_distortion_check(f, P, cfg):
    r = P["r"]
    if isinstance(r, bool) or not isinstance(r, (int, float)) or not 0 <= r < 1:
        raise ConfigError("r must lie in [0, 1)")
    n_max = _pos_int(P["n_max"], "n_max")
    names = P["univalent"]
    if not isinstance(names, list) or set(names) - {"identity", "koebe"}:
        raise ConfigError("univalent must be a list drawn from 'identity', 'koebe'")
    n_poly = P["random_polynomials"]
    if isinstance(n_poly, bool) or not isinstance(n_poly, int) or n_poly < 0:
        raise ConfigError("random_polynomials must be a non-negative integer")

    def run():
        funcs = {}
        if "identity" in names:
            funcs["identity"] = lambda z: np.asarray(z, dtype=complex)
        if "koebe" in names:
            funcs["koebe"] = koebe
        rng = np.random.default_rng(cfg.seed)
        for i in range(n_poly):
            funcs[f"polynomial_{i}"] = polynomial_function(random_univalent_polynomial(n_max, rng))
        coeff = {k: {"max_excess": _coefficient_excess(phi, n_max)} for k, phi in funcs.items()}
        for v in coeff.values():
            v["bound_holds"] = v["max_excess"] <= 1e-6
        rep = {"r": float(r), "C": distortion_constant(r), "C_series": distortion_constant_series(r),
               "n_max": n_max, "coefficients": coeff}
        if r > 0 and "koebe" in funcs:
            d = distortion_bound_check(koebe, 0j, 1.0, r, seed=cfg.seed,
                                       dphi=lambda z: (1 + z) / (1 - z) ** 3)
            rep["koebe_distortion"] = {"max_ratio": d.max_ratio, "bound": d.bound,
                                       "max_violation": d.max_violation, "samples": d.samples}
        return rep, {}
    return run


def cmd_stolz_check(f, P, cfg):
    xi, p = _pt(P["xi"], "xi"), _pt(P["p"], "p")
    alpha, rho = _pos(P["alpha"], "alpha"), _pos(P["rho"], "rho")
    depth, samples = _pos_int(P["depth"], "depth"), _pos_int(P["samples"], "samples")
    choices = P["choices"]
    if choices is not None and not (isinstance(choices, list) and all(isinstance(c, int) for c in choices)):
        raise ConfigError("choices must be a list of integers")

    def run():
        rep = stolz_containment_check(f, xi, p, alpha, rho, depth, samples, choices).to_dict()
        if P["bisect"]:
            rep["rho1_bisected"] = bisect_rho1(f, xi, p, alpha, depth, rho, samples, choices=choices)
        return rep, {}
    return run


def cmd_rho0(f, P, cfg):
    xi, N = _pt(P["xi"], "xi"), _pos_int(P["N"], "N")
    cap, nv = _pos(P["cap"], "cap"), _pos_int(P["n_validate"], "n_validate")
    return lambda: (well_definedness_radius(f, xi, N, cap, nv, cfg.seed, bool(P["validate"])).to_dict(), {})


def cmd_harmonic_sample(f, P, cfg):
    kind, z0 = P["domain"], _pt(P["z0"], "z0")
    n, h = _pos_int(P["n_walks"], "n_walks"), _pos(P["h"], "h")
    band, max_steps = _pos(P["band"], "band"), _pos_int(P["max_steps"], "max_steps")
    arcs, intervals = P["arcs"], P["intervals"]
    for name, spans in (("arcs", arcs), ("intervals", intervals)):
        if not isinstance(spans, list) or not all(isinstance(s, list) and len(s) == 2 for s in spans):
            raise ConfigError(f"{name} must be a list of [lo, hi] pairs")
    try:
        dom = DomainOracle(kind, z0, f, **cfg.tolerances)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    def run():
        S = harmonic_sample(dom, n, rng_seed=cfg.seed, h=h, band=band, max_steps=max_steps)
        rep = S.summary()
        rep["arcs"] = [{"arc": a, "fraction": S.arc_fraction(a),
                        "exact": poisson_arc_measure(z0, a) if kind == "exact_disk" else None}
                       for a in arcs]
        rep["intervals"] = [{"interval": b, "fraction": S.interval_fraction(b),
                             "exact": poisson_interval_measure(z0, b) if kind == "exact_halfplane" else None}
                            for b in intervals]
        stamp = None if _test_mode() else datetime.datetime.now(datetime.timezone.utc).isoformat()
        return rep, {"hits.csv": S.to_csv(), "hits.svg": S.to_svg(timestamp=stamp)}
    return run


def cmd_find_periodic(f, P, cfg):
    x = None if P["x"] is None else _pt(P["x"], "x")
    method = P["seed_method"]
    if method not in ("ray", "repelling_preimage", "harmonic_sample"):
        raise ConfigError(f"unknown seed_method {method!r}")
    delta, maxN = _pos(P["delta"], "delta"), _pos_int(P["maxN"], "maxN")
    attempts, r_max = _pos_int(P["attempts"], "attempts"), _pos(P["r_max"], "r_max")
    depth = _pos_int(P["depth"], "depth")

    def run():
        seed_pt = x if x is not None else boundary_seed(f, method, depth, seed=cfg.seed,
                                                        theta=float(P["theta"]))
        cert, attempts_log = certify_near(f, seed_pt, delta, maxN, np.random.default_rng(cfg.seed),
                                          attempts, r_max)
        if cert is None:
            raise NumericalFailure(f"no certificate near {seed_pt} after {attempts} attempts")
        return {"seed_point": seed_pt, "certificate": cert.to_dict(), "valid": cert.valid}, {}
    return run


def cmd_density_experiment(f, P, cfg):
    n, delta = _pos_int(P["n_seeds"], "n_seeds"), _pos(P["delta"], "delta")
    maxN, attempts = _pos_int(P["maxN"], "maxN"), _pos_int(P["attempts"], "attempts")
    r_max = _pos(P["r_max"], "r_max")

    def run():
        R = density_experiment(f, n, delta, maxN, cfg.seed, attempts, r_max)
        rep = R.to_dict()
        rep["config_hash"] = cfg.hash()
        return rep, {"density.csv": R.to_csv()}
    return run


def cmd_oracle_periodic(f, P, cfg):
    N, tol = _pos_int(P["N"], "N"), _pos(P["tol"], "tol")

    def run():
        pts = oracle_periodic_points(f, N, tol)
        pts.sort(key=lambda q: (round(np.angle(q["point"]), 9), round(abs(q["point"]), 9)))
        rows = ["re,im,mult_re,mult_im,residual"]
        rows += [f"{q['point'].real!r},{q['point'].imag!r},{complex(q['multiplier']).real!r},"
                 f"{complex(q['multiplier']).imag!r},{q['residual']!r}" for q in pts]
        return {"N": N, "count": len(pts), "points": pts}, {"oracle.csv": "\n".join(rows) + "\n"}
    return run


COMMANDS = {
    "classify-inner": cmd_classify_inner,
    "dw-point": cmd_dw_point,
    "orbit": cmd_orbit,
    "radial-limit": cmd_radial_limit,
    "singularity-scan": cmd_singularity_scan,
    "distortion-check": cmd_distortion_check,
    "stolz-check": cmd_stolz_check,
    "rho0": cmd_rho0,
    "harmonic-sample": cmd_harmonic_sample,
    "find-periodic": cmd_find_periodic,
    "density-experiment": cmd_density_experiment,
    "oracle-periodic": cmd_oracle_periodic,
}
assert set(COMMANDS) == set(SUBCOMMAND_PARAMS)


# ---------------------------------------------------------------------------
# driver


def _versions() -> dict:
    try:
        dist = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        dist = __version__
    return {"innerdyn": dist, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def prepare(cfg: RunConfig):
    """Validate the config fully and return the deferred computation."""
    f = cfg.build_map()
    try:
        return COMMANDS[cfg.subcommand](f, cfg.resolved_params(), cfg)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def run(cfg: RunConfig, dry_run: bool = False, threads: int = 1, stream=None) -> int:
    """Execute one configured run and write its artifacts; returns the exit status."""
    stream = sys.stdout if stream is None else stream
    t0 = time.perf_counter()
    out = Path(cfg.out or DEFAULT_OUT)
    manifest = {"subcommand": cfg.subcommand, "config": cfg.to_dict(), "config_hash": cfg.hash(),
                "seed": cfg.seed, "threads": threads, "versions": _versions(), "dry_run": dry_run}
    files: dict[str, str] = {}
    try:
        job = prepare(cfg)
        if dry_run:
            stream.write(canonical_json({"valid": True, "config": cfg.to_dict(),
                                         "resolved_params": cfg.resolved_params()}))
            return EXIT_OK
        report, extra = job()
        files["report.json"] = canonical_json(report)
        files.update(extra)
        code, error = EXIT_OK, None
    except ConfigError as exc:
        code, error = EXIT_CONFIG, f"config error: {exc}"
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        code, error = EXIT_NUMERIC, f"numerical failure: {type(exc).__name__}: {exc}"
    except ValueError as exc:
        # precondition violations raised by the library (wrong map kind and so on)
        code, error = EXIT_CONFIG, f"config error: {exc}"
    if dry_run and code == EXIT_CONFIG:
        print(error, file=sys.stderr)
        return code
    for name, text in files.items():
        atomic_write(out / name, text)
    manifest.update({"exit_code": code, "error": error,
                     "files": {k: _sha(v) for k, v in sorted(files.items())},
                     "wall_time_s": time.perf_counter() - t0})
    atomic_write(out / "manifest.json", canonical_json(manifest))
    if error:
        print(error, file=sys.stderr)
    else:
        stream.write(files["report.json"])
    return code


def _parse_set(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    return params


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="innerdyn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run {name}")
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--seed", type=int, help="rng seed (unsigned 64-bit)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (recorded; runs are single process)")
        sp.add_argument("--dry-run", action="store_true", help="validate the config and stop")
        sp.add_argument("--map", help='map as JSON, e.g. \'{"kind": "power", "d": 2}\'')
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one subcommand parameter (value parsed as JSON)")
    return ap


def config_from_args(args) -> RunConfig:
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    if d.get("subcommand", args.subcommand) != args.subcommand:
        raise ConfigError(f"config is for {d['subcommand']!r}, not {args.subcommand!r}")
    d["subcommand"] = args.subcommand
    if args.map:
        try:
            d["map"] = json.loads(args.map)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--map is not valid JSON: {exc}") from exc
    if args.set:
        base = d.get("params", {})
        if not isinstance(base, dict):
            raise ConfigError("params must be an object")
        d["params"] = {**base, **_parse_set(args.set)}
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["out"] = args.out
    return RunConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, dry_run=args.dry_run, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
