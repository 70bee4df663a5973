"""Experiment configuration: one JSON document, schema-checked before use.

Units at this boundary: lengths in micrometres, times in hours,
concentrations in molar, rates in 1/s. Everything is converted to SI on
load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .graph import CompartmentGraph, Channel, parallelogram, two_compartment
from .params import ParameterSet
from .simulate import HOUR, IntegratorControls
from .sweep import DEFAULT_L12, DEFAULT_N, DEFAULT_P_RI, axis

UM = 1e-6


class ConfigError(ValueError):
    pass


_pos = {"type": "number", "exclusiveMinimum": 0}
_params = {
    "type": "object",
    "properties": {name: _pos for name in ParameterSet.names()},
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "graph": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "length_um"],
                    "properties": {
                        "type": {"const": "two_compartment"},
                        "length_um": _pos,
                        "width_um": _pos,
                        "width_factor": _pos,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "l13_um", "l14_um", "width_um"],
                    "properties": {
                        "type": {"const": "parallelogram"},
                        "l13_um": _pos, "l14_um": _pos, "l23_um": _pos, "l24_um": _pos,
                        "width_um": _pos,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "vertices", "channels"],
                    "properties": {
                        "type": {"const": "custom"},
                        "vertices": {
                            "type": "array", "minItems": 2,
                            "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                      "items": {"type": "string"}},
                        },
                        "channels": {
                            "type": "array", "minItems": 1,
                            "items": {
                                "type": "object", "additionalProperties": False,
                                "required": ["u", "v", "length_um"],
                                "properties": {"u": {"type": "string"}, "v": {"type": "string"},
                                               "length_um": _pos, "width_um": _pos},
                            },
                        },
                        "width_um": _pos,
                        "width_factor": _pos,
                    },
                },
            ]
        },
        "params": _params,
        "params_B": _params,
        "seed": {"type": "integer", "minimum": 0},
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end_h": _pos,
                "sample_h": _pos,
                "rtol": _pos,
                "atol_M": _pos,
                "method": {"enum": ["BDF", "LSODA", "Radau"]},
                "seed_amplitude_M": _pos,
                "observables": {"type": "array", "items": {"enum": ["R_A", "R_B", "p_I_A", "p_I_B"]}},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_Ri_min_M": _pos, "p_Ri_max_M": _pos,
                "n_p_Ri": {"type": "integer", "minimum": 2},
                "l12_min_um": _pos, "l12_max_um": _pos,
                "n_l12": {"type": "integer", "minimum": 2},
                "l12_spacing": {"enum": ["linear", "log"]},
                "extra_p_Ri_M": {"type": "array", "items": _pos},
                "extra_l12_um": {"type": "array", "items": _pos},
                "width_factor": _pos,
            },
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "random_states": {"type": "integer", "minimum": 0},
                "compare_pde": {"type": "boolean"},
                "pde_cells": {"type": "integer", "minimum": 50},
                "t_end_h": _pos,
            },
        },
    },
}


@dataclass(frozen=True)
class SimulateSettings:
    t_end: float = 400 * HOUR
    controls: IntegratorControls = IntegratorControls()
    seed_amplitude: float = 1e-12
    observables: tuple[str, ...] = ("R_A", "R_B")


@dataclass(frozen=True)
class SweepSettings:
    p_axis: tuple[float, ...]
    l_axis: tuple[float, ...]
    width_factor: float = 1.0


@dataclass(frozen=True)
class ValidateSettings:
    random_states: int = 100
    compare_pde: bool = True
    pde_cells: int = 100
    t_end: float = 400 * HOUR


@dataclass(frozen=True)
class ExperimentConfig:
    graph: CompartmentGraph
    params: ParameterSet
    params_B: ParameterSet | None = None
    seed: int | None = None
    simulate: SimulateSettings = SimulateSettings()
    sweep: SweepSettings | None = None
    validate: ValidateSettings = ValidateSettings()
    raw: dict = field(default_factory=dict, compare=False)


def _graph(spec: dict) -> CompartmentGraph:
    kind = spec["type"]
    if kind == "two_compartment":
        return two_compartment(spec["length_um"] * UM, width_factor=spec.get("width_factor", 1.0),
                               width=spec["width_um"] * UM if "width_um" in spec else None)
    if kind == "parallelogram":
        opt = {k: spec[k + "_um"] * UM for k in ("l23", "l24") if k + "_um" in spec}
        return parallelogram(spec["l13_um"] * UM, spec["l14_um"] * UM, spec["width_um"] * UM,
                             l_23=opt.get("l23"), l_24=opt.get("l24"))
    chans = [Channel(c["u"], c["v"], c["length_um"] * UM,
                     c["width_um"] * UM if "width_um" in c else None) for c in spec["channels"]]
    return CompartmentGraph.build(
        [tuple(v) for v in spec["vertices"]], chans,
        width=spec["width_um"] * UM if "width_um" in spec else None,
        width_factor=spec.get("width_factor", 1.0),
    )


def _sweep(spec: dict, graph_spec: dict) -> SweepSettings:
    p_lo = spec.get("p_Ri_min_M", DEFAULT_P_RI[0])
    p_hi = spec.get("p_Ri_max_M", DEFAULT_P_RI[1])
    l_lo = spec.get("l12_min_um", DEFAULT_L12[0] / UM) * UM
    l_hi = spec.get("l12_max_um", DEFAULT_L12[1] / UM) * UM
    p_axis = axis(p_lo, p_hi, spec.get("n_p_Ri", DEFAULT_N), "log", spec.get("extra_p_Ri_M", ()))
    l_axis = axis(l_lo, l_hi, spec.get("n_l12", DEFAULT_N), spec.get("l12_spacing", "linear"),
                  [v * UM for v in spec.get("extra_l12_um", ())])
    wf = spec.get("width_factor", graph_spec.get("width_factor", 1.0))
    return SweepSettings(tuple(p_axis), tuple(l_axis), wf)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a decoded JSON document and convert it to SI."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        graph_spec = doc.get("graph", {"type": "two_compartment", "length_um": 500.0})
        graph = _graph(graph_spec)
        params = ParameterSet().replace(**doc.get("params", {}))
        params_B = ParameterSet().replace(**doc["params_B"]) if "params_B" in doc else None
        s = doc.get("simulate", {})
        controls = IntegratorControls(
            rtol=s.get("rtol", 1e-8), atol=s.get("atol_M", 1e-14), method=s.get("method", "BDF"),
            sample_dt=s.get("sample_h", 0.25) * HOUR,
        )
        sim = SimulateSettings(s.get("t_end_h", 400.0) * HOUR, controls,
                               s.get("seed_amplitude_M", 1e-12),
                               tuple(s.get("observables", ("R_A", "R_B"))))
        sweep = _sweep(doc.get("sweep", {}), graph_spec)
        v = doc.get("validate", {})
        val = ValidateSettings(v.get("random_states", 100), v.get("compare_pde", True),
                               v.get("pde_cells", 100), v.get("t_end_h", 400.0) * HOUR)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(graph, params, params_B, doc.get("seed"), sim, sweep, val, doc)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(doc)
