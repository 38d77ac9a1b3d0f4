"""JSON config ingestion, scenario import/export and hashing.

A run is described by a single JSON document with sections ``scenario``,
``channel``, ``solver`` and ``run``.  The scenario either embeds an explicit
K x N ``gains`` matrix or carries a ``channel`` section from which gains are
generated for a given seed.  Export and re-import of a scenario round-trips
exactly (floats are serialized with shortest round-trip formatting), which
the scenario hash relies on.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import jsonschema
import numpy as np

from .baselines import SchemeId
from .bandwidth import AgpParams
from .channel import ChannelConfig, generate_raw_gains, reduce_association
from .model import CavProfile, DomainError, LearningCurve, Modality, Scenario
from .power import DualParams
from .solver import SolverParams


class ConfigError(ValueError):
    """Configuration document is malformed or violates the schema."""


_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "required": ["num_slots", "total_bandwidth_hz", "total_power_watts", "cavs"],
            "additionalProperties": False,
            "properties": {
                "num_slots": {"type": "integer", "minimum": 1},
                "slot_duration_s": _POSITIVE,
                "total_bandwidth_hz": _POSITIVE,
                "total_power_watts": _POSITIVE,
                "noise_density_w_per_hz": _POSITIVE,
                "noise_density_dbm_per_hz": {"type": "number"},
                "cavs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["modality", "sample_size_bits",
                                     "power_cap_watts", "curve"],
                        "additionalProperties": False,
                        "properties": {
                            "modality": {"enum": ["point_cloud", "image"]},
                            "sample_size_bits": _POSITIVE,
                            "power_cap_watts": _POSITIVE,
                            "curve": {
                                "type": "object",
                                "required": ["amplitude", "exponent"],
                                "additionalProperties": False,
                                "properties": {
                                    "amplitude": _POSITIVE,
                                    "exponent": _POSITIVE,
                                },
                            },
                        },
                    },
                },
                "gains": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 1,
                              "items": _POSITIVE},
                },
            },
        },
        "channel": {
            "type": "object",
            "required": ["num_bs", "distance_range_m", "pathloss_ref_db",
                         "pathloss_exponent"],
            "additionalProperties": False,
            "properties": {
                "num_bs": {"type": "integer", "minimum": 1},
                "distance_range_m": {
                    "type": "array", "minItems": 2, "maxItems": 2,
                    "items": _POSITIVE,
                },
                "pathloss_ref_db": {"type": "number"},
                "pathloss_exponent": {"type": "number", "minimum": 0},
                "fading": {"enum": ["none", "rayleigh"]},
                "seed": {"type": "integer", "minimum": 0},
                "hold_distance_slots": {"type": "integer", "minimum": 1},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "agp": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "step_size": _POSITIVE,
                        "max_iters": {"type": "integer", "minimum": 1},
                        "rel_tol": _POSITIVE,
                        "restart": {"type": "boolean"},
                        "min_bandwidth_floor": _POSITIVE,
                    },
                },
                "dual": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "xi": _POSITIVE,
                        "max_iters": {"type": "integer", "minimum": 1},
                        "tol_power": _POSITIVE,
                        "t_tol": _POSITIVE,
                        "bracket_refine": {"type": "boolean"},
                        "diminishing": {"type": "boolean"},
                        "t_search": {"enum": ["golden", "derivative_bisection"]},
                    },
                },
                "ao_max_iters": {"type": "integer", "minimum": 1},
                "ao_rel_tol": _POSITIVE,
                "faithful_paper_mode": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scheme": {"type": "string"},
                "seeds": {"type": "array", "minItems": 1,
                          "items": {"type": "integer", "minimum": 0}},
                "out_dir": {"type": "string"},
            },
        },
    },
}

# Slot duration is not part of the published setup; this coherence-time
# scale default only rescales sample counts.
DEFAULT_SLOT_DURATION_S = 0.1


def load_config(path: str) -> dict:
    """Parse and schema-validate a config file; raises ConfigError."""
    try:
        with open(path) as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    validate_config(document, source=path)
    return document


def validate_config(document: dict, source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{source}: at {where}: {err.message}")
    scenario = document["scenario"]
    has_w = "noise_density_w_per_hz" in scenario
    has_dbm = "noise_density_dbm_per_hz" in scenario
    if has_w == has_dbm:
        raise ConfigError(
            f"{source}: at scenario: specify exactly one of "
            "noise_density_w_per_hz or noise_density_dbm_per_hz")
    if "gains" not in scenario and "channel" not in document:
        raise ConfigError(
            f"{source}: scenario has no inline gains and no channel section")


def noise_density_from_scenario_section(section: dict) -> float:
    if "noise_density_w_per_hz" in section:
        return float(section["noise_density_w_per_hz"])
    dbm = float(section["noise_density_dbm_per_hz"])
    return 10.0 ** (dbm / 10.0) / 1000.0


def channel_config_from_document(document: dict, seed: int | None = None) -> ChannelConfig:
    section = document["channel"]
    return ChannelConfig(
        num_bs=section["num_bs"],
        distance_range_m=tuple(section["distance_range_m"]),
        pathloss_ref_db=float(section["pathloss_ref_db"]),
        pathloss_exponent=float(section["pathloss_exponent"]),
        fading=section.get("fading", "none"),
        seed=int(section.get("seed", 0) if seed is None else seed),
        hold_distance_slots=int(section.get("hold_distance_slots", 1)),
    )


def scenario_from_config(document: dict, seed: int | None = None) -> Scenario:
    """Build the Scenario, generating gains from the channel section unless
    the scenario embeds them.  ``seed`` overrides the channel seed."""
    section = document["scenario"]
    cavs = [
        CavProfile(
            modality=Modality(c["modality"]),
            sample_size_bits=float(c["sample_size_bits"]),
            power_cap_watts=float(c["power_cap_watts"]),
            curve=LearningCurve(
                amplitude=float(c["curve"]["amplitude"]),
                exponent=float(c["curve"]["exponent"]),
            ),
        )
        for c in section["cavs"]
    ]
    if "gains" in section:
        gains = np.asarray(section["gains"], dtype=float)
    else:
        cfg = channel_config_from_document(document, seed=seed)
        raw = generate_raw_gains(cfg, len(cavs), int(section["num_slots"]))
        _, gains = reduce_association(raw)
    return Scenario(
        cavs=cavs,
        num_slots=int(section["num_slots"]),
        slot_duration_s=float(section.get("slot_duration_s", DEFAULT_SLOT_DURATION_S)),
        total_bandwidth_hz=float(section["total_bandwidth_hz"]),
        total_power_watts=float(section["total_power_watts"]),
        noise_density_w_per_hz=noise_density_from_scenario_section(section),
        reduced_gains=gains,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    """Exportable scenario section with gains materialized."""
    return {
        "num_slots": scenario.num_slots,
        "slot_duration_s": scenario.slot_duration_s,
        "total_bandwidth_hz": scenario.total_bandwidth_hz,
        "total_power_watts": scenario.total_power_watts,
        "noise_density_w_per_hz": scenario.noise_density_w_per_hz,
        "cavs": [
            {
                "modality": c.modality.value,
                "sample_size_bits": c.sample_size_bits,
                "power_cap_watts": c.power_cap_watts,
                "curve": {"amplitude": c.curve.amplitude,
                          "exponent": c.curve.exponent},
            }
            for c in scenario.cavs
        ],
        "gains": [[float(g) for g in row] for row in scenario.reduced_gains],
    }


def scenario_hash(scenario: Scenario) -> str:
    payload = json.dumps(scenario_to_dict(scenario), sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def solver_params_from_config(document: dict,
                              faithful: bool = False) -> SolverParams:
    section = dict(document.get("solver", {}))
    agp = AgpParams(**section.get("agp", {}))
    dual = DualParams(**section.get("dual", {}))
    try:
        return SolverParams(
            agp=agp,
            dual=dual,
            ao_max_iters=int(section.get("ao_max_iters", 50)),
            ao_rel_tol=float(section.get("ao_rel_tol", 1e-6)),
            faithful_paper_mode=bool(
                section.get("faithful_paper_mode", False) or faithful),
        )
    except DomainError as exc:
        raise ConfigError(f"solver section: {exc}") from exc


def scheme_from_name(name: str) -> SchemeId:
    try:
        return SchemeId(name)
    except ValueError:
        valid = ", ".join(s.value for s in SchemeId)
        raise ConfigError(f"unknown scheme {name!r}; valid schemes: {valid}") from None
