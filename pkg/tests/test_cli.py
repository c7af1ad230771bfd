"""Command-line interface: config resolution, exit codes, outputs."""

import json
import os

import numpy as np
import pytest

from spinprep.cli import (
    main, resolve_config, ConfigError, _apply_override,
    EXIT_OK, EXIT_CONFIG,
)


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_resolve_config_defaults_and_validation():
    cfg = resolve_config({"experiment": "gap", "lattice": {"n": 5}})
    assert cfg["lattice"]["n"] == 5
    assert cfg["lattice"]["d"] == 2            # default filled in
    assert cfg["solver"]["tol"] == 1e-8
    with pytest.raises(ConfigError):
        resolve_config({"experiment": "gap", "bogus": 1})
    with pytest.raises(ConfigError):
        resolve_config({"experiment": "gap", "lattice": {"m": 4}})
    with pytest.raises(ConfigError):
        resolve_config({"lattice": {"n": 4}})              # no experiment
    with pytest.raises(ConfigError):
        resolve_config({"experiment": "levitate"})
    with pytest.raises(ConfigError):
        resolve_config({"experiment": "theorem2"})         # randomized, no seed


def test_apply_override_dotted_json():
    cfg = {"experiment": "gap"}
    _apply_override(cfg, "lattice.n", "6")
    _apply_override(cfg, "solver.tol", "1e-9")
    _apply_override(cfg, "dissipator.bloch", "[0.1, 0.0, 0.2]")
    _apply_override(cfg, "hamiltonian.kind", "xxz")
    assert cfg["lattice"]["n"] == 6
    assert cfg["solver"]["tol"] == 1e-9
    assert cfg["dissipator"]["bloch"] == [0.1, 0.0, 0.2]
    assert cfg["hamiltonian"]["kind"] == "xxz"


def test_run_steady_end_to_end(tmp_path):
    cfg_path = _write_cfg(tmp_path, {
        "experiment": "steady", "lattice": {"n": 3},
        "dissipator": {"kind": "target-state", "bloch": [0.1, 0.2, 0.3]}})
    rc = main(["run", "--config", cfg_path, "--out", str(tmp_path)])
    assert rc == EXIT_OK
    body = (tmp_path / "steady.csv").read_text()
    assert body.startswith("# schema=steady-v1")
    meta = json.loads((tmp_path / "steady.meta.json").read_text())
    assert meta["config"]["lattice"]["n"] == 3
    assert meta["results"]["residual_max"] < 1e-10
    assert "wall_time_s" in meta and "version" in meta


def test_rerun_is_byte_identical(tmp_path):
    cfg_path = _write_cfg(tmp_path, {
        "experiment": "reach2q",
        "solver": {"k": 2.0, "delta": 0.5, "beta_points": 4}})
    assert main(["run", "--config", cfg_path, "--out", str(tmp_path)]) == EXIT_OK
    first = (tmp_path / "reach2q.csv").read_bytes()
    assert main(["run", "--config", cfg_path, "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "reach2q.csv").read_bytes() == first


def test_exit_code_config_errors(tmp_path):
    # unreadable config
    assert main(["run", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    # unknown key
    bad = _write_cfg(tmp_path, {"experiment": "gap", "junk": 1}, "bad.json")
    assert main(["run", "--config", bad, "--out", str(tmp_path)]) == EXIT_CONFIG
    # malformed --set
    ok = _write_cfg(tmp_path, {"experiment": "gap", "lattice": {"n": 3}}, "ok.json")
    assert main(["run", "--config", ok, "--out", str(tmp_path),
                 "--set", "latticen3"]) == EXIT_CONFIG
    # desk-scale cap
    big = _write_cfg(tmp_path, {"experiment": "gap", "lattice": {"n": 14}}, "big.json")
    assert main(["run", "--config", big, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = _write_cfg(tmp_path, {
        "experiment": "theorem2", "lattice": {"n": 2},
        "solver": {"trials": 3}})
    rc = main(["run", "--config", cfg_path, "--out", str(tmp_path), "--seed", "11"])
    assert rc == EXIT_OK
    meta = json.loads((tmp_path / "theorem2.meta.json").read_text())
    assert meta["config"]["seed"] == 11
    assert meta["results"]["max_offdiag"] < 1e-10


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SPINPREP_OUT", str(tmp_path))
    cfg_path = _write_cfg(tmp_path, {
        "experiment": "span", "lattice": {"n": 2}})
    assert main(["run", "--config", cfg_path]) == EXIT_OK
    assert (tmp_path / "span.csv").exists()


def test_reproduce_full_scale_refuses(tmp_path):
    assert main(["reproduce", "fig2a", "--scale", "full",
                 "--out", str(tmp_path)]) == EXIT_CONFIG


def test_reproduce_fig4_small(tmp_path):
    rc = main(["reproduce", "fig4", "--out", str(tmp_path),
               "--set", "deltas=[1.0]", "--set", "ks=[1.0]",
               "--set", "beta_points=4"])
    assert rc == EXIT_OK
    body = (tmp_path / "fig4.csv").read_text().splitlines()
    assert body[0] == "# schema=reachability-v1"
    assert len(body) == 2 + 4
    meta = json.loads((tmp_path / "fig4.meta.json").read_text())
    assert meta["scale"] == "desk"


def test_evolve_with_set_overrides(tmp_path):
    cfg_path = _write_cfg(tmp_path, {
        "experiment": "evolve", "lattice": {"n": 2},
        "solver": {"times": [0.5, 1.5], "observables": [2]}})
    rc = main(["run", "--config", cfg_path, "--out", str(tmp_path),
               "--set", "lattice.n=3", "--set", "solver.observables=[3]"])
    assert rc == EXIT_OK
    meta = json.loads((tmp_path / "evolve.meta.json").read_text())
    assert meta["config"]["lattice"]["n"] == 3
    lines = (tmp_path / "evolve.csv").read_text().splitlines()
    assert len(lines) == 2 + 2
