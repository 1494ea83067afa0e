"""Scenario file schema, parsing and serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import jsonschema

from .channel import EF, NoiseModel, PROTOCOLS, Scenario
from .errors import ConfigError

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["snr_db"],
    "properties": {
        "name": {"type": "string"},
        "M": {"type": "integer", "minimum": 1},
        "M_R": {"type": "integer", "minimum": 1},
        "M_D": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "L": {"type": "integer", "minimum": 1},
        "m": {"type": "number", "minimum": 0.5},
        "d_sr": {"type": "number", "exclusiveMinimum": 0},
        "d_sd": {"type": "number", "exclusiveMinimum": 0},
        "d_rd": {"type": "number", "exclusiveMinimum": 0},
        "noise_a": {"type": "number", "exclusiveMinimum": 0},
        "protocol": {"enum": list(PROTOCOLS)},
        "snr_db": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "published_sqrt2": {"type": "boolean"},
        "params": {"type": "string"},
        "out": {"type": "string"},
    },
}

_DEFAULTS = {"M": 32, "M_R": 1, "M_D": 1, "n": 1, "L": 1, "m": 1.0,
             "d_sr": 1.0, "d_sd": 1.0, "d_rd": 1.0, "noise_a": 2.0, "protocol": EF}


@dataclass(frozen=True)
class RunControls:
    trials: Optional[int] = None
    seed: Optional[int] = None
    tolerance: float = 1e-12
    threads: int = 1
    published_sqrt2: bool = False
    params: Optional[str] = None
    out: Optional[str] = None


def _path(err: jsonschema.ValidationError) -> str:
    out = "$"
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def validate_document(doc) -> None:
    validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid scenario file:\n  " + "\n  ".join(lines))


def scenario_from_dict(doc: dict) -> tuple[Scenario, RunControls]:
    validate_document(doc)
    v = {**_DEFAULTS, **doc}
    sc = Scenario(
        spreading_half_M=v["M"], relay_antennas=v["M_R"], dest_antennas=v["M_D"],
        users_n=v["n"], paths_L=v["L"], fading_m=float(v["m"]),
        d_sr=float(v["d_sr"]), d_sd=float(v["d_sd"]), d_rd=float(v["d_rd"]),
        noise=NoiseModel(float(v["noise_a"])), protocol=v["protocol"],
        snr_grid_db=tuple(v["snr_db"]), name=v.get("name", ""),
    )
    run = RunControls(
        trials=v.get("trials"), seed=v.get("seed"), tolerance=float(v.get("tolerance", 1e-12)),
        threads=int(v.get("threads", 1)), published_sqrt2=bool(v.get("published_sqrt2", False)),
        params=v.get("params"), out=v.get("out"),
    )
    return sc, run


def scenario_to_dict(sc: Scenario, run: Optional[RunControls] = None) -> dict:
    doc = {
        "name": sc.name, "M": sc.spreading_half_M, "M_R": sc.relay_antennas,
        "M_D": sc.dest_antennas, "n": sc.users_n, "L": sc.paths_L, "m": sc.fading_m,
        "d_sr": sc.d_sr, "d_sd": sc.d_sd, "d_rd": sc.d_rd, "noise_a": sc.noise.shape_a,
        "protocol": sc.protocol, "snr_db": list(sc.snr_grid_db),
    }
    if run is not None:
        for key in ("trials", "seed", "params", "out"):
            val = getattr(run, key)
            if val is not None:
                doc[key] = val
        doc["tolerance"] = run.tolerance
        doc["threads"] = run.threads
        doc["published_sqrt2"] = run.published_sqrt2
    return doc


def load_scenario(path) -> tuple[Scenario, RunControls]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)
