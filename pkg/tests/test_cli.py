import json

import pytest

from lateral_inhibition.cli import (
    EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_NOT_EQUITABLE,
    EXIT_OK,
    SCHEMA_VERSION,
    main,
)
from lateral_inhibition.config import ConfigError, parse_config


def _run(tmp_path, command, doc, *extra, name="cfg.json", out="out"):
    cfg = tmp_path / name
    cfg.write_text(json.dumps(doc))
    return main([command, str(cfg), "--out-dir", str(tmp_path / out), *extra])


BASE = {"graph": {"type": "two_compartment", "length_um": 500}}
SKEW = {"graph": {"type": "custom", "vertices": [["A1", "A"], ["A2", "A"], ["B1", "B"]],
                  "channels": [{"u": "A1", "v": "B1", "length_um": 500},
                               {"u": "A2", "v": "B1", "length_um": 900}],
                  "width_um": 500}}


def test_analyze(tmp_path):
    assert _run(tmp_path, "analyze", BASE) == EXIT_OK
    doc = json.loads((tmp_path / "out" / "analyze.json").read_text())
    assert doc["schema_version"] == SCHEMA_VERSION
    assert len(doc["points"]) == 3


def test_analyze_not_equitable(tmp_path, capsys):
    assert _run(tmp_path, "analyze", SKEW) == EXIT_NOT_EQUITABLE
    assert "not equitable" in capsys.readouterr().err
    doc = json.loads((tmp_path / "out" / "analyze.json").read_text())
    assert doc["error"] == "not_equitable"


def test_simulate_reproducible_and_seeded(tmp_path):
    args = ({**BASE, "simulate": {"t_end_h": 400}},)
    assert _run(tmp_path, "simulate", *args, "--seed", "1", out="a") == EXIT_OK
    assert _run(tmp_path, "simulate", *args, "--seed", "1", out="b") == EXIT_OK
    assert _run(tmp_path, "simulate", *args, "--seed", "0", out="c") == EXIT_OK
    for f in ("trajectory.csv", "simulate.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    a = json.loads((tmp_path / "a" / "simulate.json").read_text())
    c = json.loads((tmp_path / "c" / "simulate.json").read_text())
    assert a["winner"] != c["winner"]
    assert a["contrast_M"] == pytest.approx(c["contrast_M"], rel=1e-6)


def test_simulate_too_short_not_converged(tmp_path):
    assert _run(tmp_path, "simulate", {**BASE, "simulate": {"t_end_h": 5}}) == EXIT_NOT_CONVERGED
    assert json.loads((tmp_path / "out" / "simulate.json").read_text())["steady"] is False


def test_sweep(tmp_path):
    doc = {**BASE, "sweep": {"n_p_Ri": 4, "n_l12": 3, "extra_p_Ri_M": [5e-7], "extra_l12_um": [500]}}
    assert _run(tmp_path, "sweep", doc, "--threads", "2") == EXIT_OK
    out = json.loads((tmp_path / "out" / "sweep.json").read_text())
    assert len(out["matrix"]) == 4 and len(out["matrix"][0]) == 5
    assert (tmp_path / "out" / "sweep_matrix.csv").exists()


def test_validate(tmp_path):
    doc = {**BASE, "seed": 2, "validate": {"random_states": 10, "pde_cells": 50}}
    assert _run(tmp_path, "validate", doc) == EXIT_OK
    out = json.loads((tmp_path / "out" / "validate.json").read_text())
    assert out["passed"] and {c["name"] for c in out["checks"]} == {
        "quotient_eigenvalue", "stability_concordance", "transceiver_contraction", "ode_pde_comparison"}


def test_validate_skips_quotient_checks_when_not_equitable(tmp_path):
    doc = {**SKEW, "validate": {"random_states": 5}}
    assert _run(tmp_path, "validate", doc) == EXIT_OK
    checks = {c["name"]: c for c in json.loads((tmp_path / "out" / "validate.json").read_text())["checks"]}
    assert checks["quotient_eigenvalue"]["status"] == "skipped"
    assert checks["ode_pde_comparison"]["status"] == "skipped"


@pytest.mark.parametrize("doc", [
    {"graph": {"type": "two_compartment", "length_um": 500, "colour": "red"}},
    {"bogus": 1},
    {"graph": {"type": "two_compartment", "length_um": -5}},
    {"params": {"k_on": 0}},
    {"simulate": {"method": "RK45"}},
])
def test_bad_config_exit_code(tmp_path, doc, capsys):
    assert _run(tmp_path, "analyze", doc) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    assert main(["analyze", str(tmp_path / "x.json")]) == EXIT_CONFIG
    assert main(["analyze", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_config_units_converted():
    cfg = parse_config({"graph": {"type": "two_compartment", "length_um": 250},
                        "simulate": {"t_end_h": 2, "atol_M": 1e-15}})
    assert cfg.graph.channels[0].length == pytest.approx(250e-6)
    assert cfg.simulate.t_end == 7200.0 and cfg.simulate.controls.atol == 1e-15
    with pytest.raises(ConfigError):
        parse_config({"seed": -1})
