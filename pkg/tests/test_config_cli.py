import io
import json
import os
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from innerdyn.cli import COMMANDS, main, run
from innerdyn.config import (SUBCOMMAND_PARAMS, ConfigError, RunConfig, atomic_write,
                             canonical_json, to_jsonable)

Z2 = {"kind": "power", "d": 2}
QUAD = {"kind": "polynomial", "coeffs": [[0.2, 0.0], [0.0, 0.0], [1.0, 0.0]],
        "component": {"kind": "attracting", "period": 1, "point": [0.27639320225002106, 0.0]}}
HALF = {"kind": "finite_blaschke", "zeros": [[0.0, 0.0], [-0.5, 0.0]], "rotation": [1.0, 0.0]}


def _read(d, name):
    return (d / name).read_text()


def test_every_subcommand_has_defaults():
    assert set(COMMANDS) == set(SUBCOMMAND_PARAMS)
    assert len(COMMANDS) == 12


def test_round_trip():
    cfg = RunConfig("stolz-check", HALF, {"alpha": 0.5}, seed=7, out="x")
    back = RunConfig.from_json(cfg.to_json())
    assert back == cfg and back.hash() == cfg.hash()


def test_hash_ignores_output_dir():
    a = RunConfig("orbit", Z2, {"z0": [0.5, 0]}, seed=1, out="a")
    b = RunConfig("orbit", Z2, {"z0": [0.5, 0]}, seed=1, out="b")
    c = RunConfig("orbit", Z2, {"z0": [0.5, 0]}, seed=2, out="a")
    assert a.hash() == b.hash() != c.hash()


@pytest.mark.parametrize("bad", [
    {"subcommand": "orbit", "map": Z2, "colour": 1},
    {"subcommand": "orbit", "map": Z2, "params": {"warp": 2}},
    {"subcommand": "orbit"},
    {"subcommand": "nope", "map": Z2},
    {"subcommand": "orbit", "map": Z2, "seed": -1},
    {"subcommand": "orbit", "map": Z2, "seed": 2**64},
])
def test_config_rejections(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_mapless_subcommands():
    RunConfig.from_dict({"subcommand": "distortion-check"})
    RunConfig.from_dict({"subcommand": "harmonic-sample", "params": {"domain": "exact_disk"}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"subcommand": "harmonic-sample", "params": {"domain": "fatou_component"}})


@given(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e300))
def test_jsonable_complex(z):
    assert to_jsonable(z) == [z.real, z.imag]


def test_jsonable_non_finite():
    assert to_jsonable([float("nan"), float("inf")]) == ["nan", "inf"]
    assert canonical_json({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'


def test_atomic_write(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    atomic_write(p, "one")
    atomic_write(p, "two")
    assert p.read_text() == "two"
    assert sorted(x.name for x in p.parent.iterdir()) == ["f.txt"]


def test_classify_run_writes_manifest(tmp_path):
    out = tmp_path / "r"
    code = main(["classify-inner", "--map", json.dumps(Z2), "--out", str(out)])
    assert code == 0
    rep = json.loads(_read(out, "report.json"))
    man = json.loads(_read(out, "manifest.json"))
    assert rep["type"] == "elliptic"
    assert man["exit_code"] == 0 and man["config_hash"] == RunConfig.from_dict(man["config"]).hash()
    assert set(man["versions"]) == {"innerdyn", "python", "numpy", "scipy"}
    import hashlib
    assert man["files"]["report.json"] == hashlib.sha256(_read(out, "report.json").encode()).hexdigest()


def test_config_file_and_overrides(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"subcommand": "orbit", "map": Z2, "params": {"z0": [0.5, 0]}}))
    out = tmp_path / "o"
    assert main(["orbit", "--config", str(cfgp), "--set", "n_max=50", "--out", str(out)]) == 0
    man = json.loads(_read(out, "manifest.json"))
    assert man["config"]["params"] == {"z0": [0.5, 0], "n_max": 50}
    assert _read(out, "orbit.csv").splitlines()[0].startswith("n,")
    assert main(["radial-limit", "--config", str(cfgp), "--out", str(out)]) == 2


def test_exit_code_config_errors(tmp_path):
    out = str(tmp_path / "e")
    assert main(["orbit", "--map", '{"kind": "warp"}', "--out", out]) == 2
    assert main(["orbit", "--map", json.dumps(Z2), "--set", "bogus=1", "--out", out]) == 2
    assert main(["orbit", "--map", "{not json", "--out", out]) == 2
    assert main(["orbit", "--map", json.dumps(Z2), "--threads", "0", "--out", out]) == 2
    # precondition violation: no attracting component
    assert main(["find-periodic", "--map", json.dumps(HALF), "--out", out]) == 2
    man = json.loads(_read(tmp_path / "e", "manifest.json"))
    assert man["exit_code"] == 2 and man["error"].startswith("config error")


def test_exit_code_numerical_failure(tmp_path):
    out = tmp_path / "n"
    code = main(["find-periodic", "--map", json.dumps(QUAD), "--set", "maxN=1",
                 "--set", "attempts=1", "--out", str(out)])
    assert code == 3
    man = json.loads(_read(out, "manifest.json"))
    assert man["exit_code"] == 3 and not (out / "report.json").exists()


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["density-experiment", "--map", json.dumps(Z2), "--dry-run", "--out", str(out)]) == 0
    assert not out.exists()
    printed = json.loads(capsys.readouterr().out)
    assert printed["valid"] and printed["resolved_params"]["n_seeds"] == 64


@pytest.mark.parametrize("argv,files", [
    (["harmonic-sample", "--set", "n_walks=2000", "--set", "z0=[0.5,0]",
      "--set", "arcs=[[-1.5707963267948966,1.5707963267948966]]"], ["hits.csv", "hits.svg"]),
    (["density-experiment", "--map", json.dumps(QUAD), "--set", "n_seeds=4"], ["density.csv"]),
    (["oracle-periodic", "--map", json.dumps(QUAD), "--set", "N=3"], ["oracle.csv"]),
])
def test_reports_byte_identical(tmp_path, argv, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--seed", "9", "--out", str(a)]) == 0
    assert main(argv + ["--seed", "9", "--out", str(b)]) == 0
    for name in ["report.json", *files]:
        assert _read(a, name) == _read(b, name)


def test_all_subcommands_smoke(tmp_path):
    z2 = json.dumps(Z2)
    runs = {
        "classify-inner": ["--map", json.dumps(HALF)],
        "dw-point": ["--map", json.dumps(HALF)],
        "orbit": ["--map", z2, "--set", "z0=[0.5,0.1]"],
        "radial-limit": ["--map", z2, "--set", "xi=[0,1]"],
        "singularity-scan": ["--map", json.dumps(HALF), "--set", "n_samples=2000"],
        "distortion-check": ["--set", "random_polynomials=2"],
        "stolz-check": ["--map", json.dumps(HALF), "--set", "depth=3"],
        "rho0": ["--map", z2],
        "harmonic-sample": ["--set", "n_walks=100"],
        "find-periodic": ["--map", json.dumps(QUAD)],
        "density-experiment": ["--map", z2, "--set", "n_seeds=2"],
        "oracle-periodic": ["--map", z2, "--set", "N=2"],
    }
    assert set(runs) == set(COMMANDS)
    for name, extra in runs.items():
        out = tmp_path / name
        assert main([name, *extra, "--out", str(out)]) == 0, name
        assert json.loads(_read(out, "manifest.json"))["exit_code"] == 0


def test_run_stream(tmp_path):
    buf = io.StringIO()
    cfg = RunConfig("distortion-check", None, {"random_polynomials": 1}, out=str(tmp_path / "s"))
    assert run(cfg, stream=buf) == 0
    assert abs(json.loads(buf.getvalue())["C"] - 3.0) < 1e-12


def test_module_entry_point(tmp_path):
    env = dict(os.environ, INNERDYN_TEST_MODE="1")
    r = subprocess.run([sys.executable, "-m", "innerdyn", "rho0", "--map", json.dumps(Z2),
                        "--out", str(tmp_path / "m")], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and abs(json.loads(r.stdout)["rho0"] - 1) < 1e-9
