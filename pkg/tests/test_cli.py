"""Tests for config parsing, the experiment drivers, and the CLI contract.

The reproducibility contract: identical config + seed produce byte-identical
results.csv, independent of --threads.  Exit codes: 0 success, 1 config or
runtime error, 2 completed-but-tainted run.
"""

import json
import math

import numpy as np
import pytest

from oscillab.cli import (
    ConfigError,
    EXPERIMENTS,
    main,
    parse_config,
    run,
)

FAST_IDENTITY = "experiment = identity_k1\nK = 5\nseed = 42\n"


def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_parse_key_value_and_json_agree():
    kv = parse_config("experiment = bilinear\nseed = 7\nN_list = [4, 8]\nT = 3.5\n")
    js = parse_config(json.dumps(
        {"experiment": "bilinear", "seed": 7, "N_list": [4, 8], "T": 3.5}
    ))
    # identical settings; only the raw_text echo differs between formats
    for field in ("experiment", "seed", "d", "K", "s", "N_list", "M_list", "dt", "T", "trials"):
        assert getattr(kv, field) == getattr(js, field)
    assert kv.N_list == [4, 8]
    assert kv.T == 3.5


def test_parse_config_ignores_comments_and_blanks():
    cfg = parse_config("# a comment\n\nexperiment = identity_k1\nseed = 1\n")
    assert cfg.experiment == "identity_k1"
    assert cfg.seed == 1


def test_unknown_key_is_named_in_error():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = identity_k1\nseed = 1\nwavelength = 3\n")
    assert err.value.key == "wavelength"
    assert "wavelength" in str(err.value)


def test_missing_required_keys():
    with pytest.raises(ConfigError) as err:
        parse_config("seed = 1\n")
    assert err.value.key == "experiment"
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = identity_k1\n")
    assert err.value.key == "seed"


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = warp_drive\nseed = 1\n")
    assert err.value.key == "experiment"


@pytest.mark.parametrize(
    "line,key",
    [
        ("d = 4", "d"),
        ("K = 0", "K"),
        ("s = 0.0", "s"),
        ("dt = -0.1", "dt"),
        ("T = 0", "T"),
        ("trials = 0", "trials"),
        ("seed = -3", "seed"),
        ("K = true", "K"),
        ("N_list = [4, 0]", "N_list"),
        ("N_list = 4", "N_list"),
    ],
)
def test_range_and_type_validation(line, key):
    if key == "seed":
        text = "experiment = identity_k1\n" + line + "\n"
    else:
        text = "experiment = identity_k1\nseed = 1\n" + line + "\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key.startswith(key)


def test_config_is_frozen():
    cfg = parse_config(FAST_IDENTITY)
    with pytest.raises(Exception):
        cfg.K = 10


def test_registry_covers_every_preset_experiment():
    assert list(EXPERIMENTS) == [
        "identity_k1",
        "orthogonality",
        "bilinear",
        "bilinear_derivative",
        "bernstein",
        "energy_increment",
        "norm_growth",
        "conservation",
    ]


# ---------------------------------------------------------------------------
# the run/validate/list-experiments commands
# ---------------------------------------------------------------------------

def test_list_experiments_output(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert name in out


def test_validate_valid_and_invalid(tmp_path, capsys):
    good = _write(tmp_path, FAST_IDENTITY)
    assert main(["validate", good]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["resolved_config"]["experiment"] == "identity_k1"
    assert payload["defaults_applied"]["d"] == 1

    bad = _write(tmp_path, "experiment = identity_k1\nK = -2\nseed = 1\n", "bad.cfg")
    assert main(["validate", bad]) == 1
    assert "config error [K]" in capsys.readouterr().err


def test_missing_config_file_is_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_run_writes_results_and_manifest(tmp_path):
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    out = tmp_path / "out"
    assert main(["run", cfg_path, "--output-dir", str(out)]) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "mu_sq_1,mu_sq_2,mu_sq_3,mu_sq_4,L0,rhs,residual,resonant"
    assert len(rows) == 6**4 + 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest) == {
        "config_echo",
        "csv_columns",
        "defaults_applied",
        "derived",
        "experiment",
        "resolved_config",
        "seed_override",
        "summary",
        "taint",
        "version",
        "wall_time_s",
    }
    assert manifest["config_echo"] == FAST_IDENTITY
    assert manifest["taint"] == {"tainted": False, "flags": []}
    assert manifest["summary"]["max_residual"] < 1e-8


def test_rerun_is_byte_identical(tmp_path):
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    main(["run", cfg_path, "--output-dir", str(tmp_path / "a")])
    main(["run", cfg_path, "--output-dir", str(tmp_path / "b")])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (
        tmp_path / "b" / "results.csv"
    ).read_bytes()


def test_threads_do_not_change_bytes(tmp_path):
    # a threaded experiment with per-cell RNG: bilinear at reduced size
    text = "experiment = bilinear\nN_list = [4, 8]\nM_list = [2]\ntrials = 3\nseed = 9\n"
    cfg_path = _write(tmp_path, text)
    main(["run", cfg_path, "--output-dir", str(tmp_path / "t1"), "--threads", "1"])
    main(["run", cfg_path, "--output-dir", str(tmp_path / "t4"), "--threads", "4"])
    assert (tmp_path / "t1" / "results.csv").read_bytes() == (
        tmp_path / "t4" / "results.csv"
    ).read_bytes()


def test_seed_override_recorded(tmp_path):
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    out = tmp_path / "o"
    assert main(["run", cfg_path, "--output-dir", str(out), "--seed", "77"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed_override"] is True
    assert manifest["resolved_config"]["seed"] == 77


def test_tainted_run_exits_two(tmp_path):
    # conservation datum needs degree headroom: K close to the datum support
    # makes the cubic term spill past the truncation every step
    text = "experiment = conservation\nd = 1\nK = 12\ndt = 0.01\nT = 2.0\nseed = 42\n"
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "t"
    assert main(["run", cfg_path, "--output-dir", str(out)]) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["taint"]["tainted"] is True
    assert "solver_spillage" in manifest["taint"]["flags"]


def test_csv_floats_round_trip(tmp_path):
    from oscillab.lab import identity_residual_scan_1d

    cfg_path = _write(tmp_path, FAST_IDENTITY)
    out = tmp_path / "rt"
    main(["run", cfg_path, "--output-dir", str(out)])
    scan = identity_residual_scan_1d(5)
    rows = (out / "results.csv").read_text().splitlines()[1:]
    first = rows[0].split(",")
    a, b, c, d = (int(v) for v in first[:4])
    idx = ((a - 1) // 2, (b - 1) // 2, (c - 1) // 2, (d - 1) // 2)
    assert float(first[4]) == scan["L0"][idx]


def test_conservation_csv_columns(tmp_path):
    text = "experiment = conservation\nd = 1\nK = 24\ndt = 0.02\nT = 1.0\nseed = 3\n"
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "c"
    assert main(["run", cfg_path, "--output-dir", str(out)]) == 0
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header == "t,mass,energy,modified_energy,hs_norm_s"


def test_run_api_returns_exit_code(tmp_path):
    cfg = parse_config(FAST_IDENTITY)
    code = run(cfg, output_dir=str(tmp_path / "api"), threads=1)
    assert code == 0
    assert (tmp_path / "api" / "results.csv").exists()


def test_output_dir_default_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    assert main(["run", cfg_path]) == 0
    assert (tmp_path / "runs" / "identity_k1" / "results.csv").exists()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("OSCILLAB_THREADS", "2")
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    out = tmp_path / "env"
    assert main(["run", cfg_path, "--output-dir", str(out)]) == 0
    assert (out / "results.csv").exists()


def test_negative_seed_override_rejected(tmp_path, capsys):
    cfg_path = _write(tmp_path, FAST_IDENTITY)
    assert main(["run", cfg_path, "--seed", "-1"]) == 1
    assert "seed" in capsys.readouterr().err
