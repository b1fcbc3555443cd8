"""JSON experiment configuration: schema, defaults and initial shapes."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import ContactLaw, DynamicsConfig
from .errors import ConfigError, ContactLawError
from .shape import ShapeFunction, to_samples

_NUM = {"type": "number"}
_MODES = {
    "type": "object",
    "propertyNames": {"pattern": "^[0-9]+$"},
    "additionalProperties": _NUM,
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": 1},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "V0": {"type": "number", "exclusiveMinimum": 0},
                "contact_law": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "type": {"enum": ["power", "spline"]},
                        "p": {"type": "number", "exclusiveMinimum": 0},
                        "s": {"type": "array", "items": _NUM, "minItems": 4},
                        "F": {"type": "array", "items": _NUM, "minItems": 4},
                    },
                },
                "metric_mode": {"enum": ["geometric", "paper"]},
            },
        },
        "discretization": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 16, "multipleOf": 2},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "cfl_c": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "minimum": 0},
                "snapshot_stride": {"type": "integer", "minimum": 1},
                "dealias": {"type": "boolean"},
            },
        },
        "initial_shape": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "coefficients": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "mean": _NUM,
                        "cos": _MODES,
                        "sin": _MODES,
                        "translate": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                    },
                },
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["max_mode", "amplitude", "seed"],
                    "properties": {
                        "max_mode": {"type": "integer", "minimum": 0},
                        "amplitude": {"type": "number", "minimum": 0},
                        "seed": {"type": "integer", "minimum": 0},
                    },
                },
            },
            "not": {"required": ["coefficients", "random"]},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "string", "minLength": 1}
                for k in ("trajectory_csv", "summary_json", "spectrum_json", "solve_csv", "decompose_json")
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_mode": {"type": "integer", "minimum": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "richardson": {"type": "boolean"},
            },
        },
    },
}

DEFAULT_OUTPUTS = {
    "trajectory_csv": "trajectory.csv",
    "summary_json": "summary.json",
    "spectrum_json": "spectrum.json",
    "solve_csv": "solve.csv",
    "decompose_json": "decompose.json",
}


@dataclass(frozen=True)
class ExperimentConfig:
    dynamics: DynamicsConfig
    initial: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    spectrum: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def r_e(self) -> float:
        return self.dynamics.r_e

    def initial_shape(self) -> ShapeFunction:
        return build_initial_shape(self.initial, self.dynamics.r_e, self.dynamics.n)


def _law(spec: dict) -> ContactLaw:
    kind = spec.get("type", "power")
    if kind == "power":
        return ContactLaw.power(spec.get("p", 3.0))
    if "s" not in spec or "F" not in spec or len(spec["s"]) != len(spec["F"]):
        raise ConfigError("spline contact law needs equal-length 's' and 'F' tables")
    return ContactLaw.tabulated(spec["s"], spec["F"])


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON document and build an :class:`ExperimentConfig`."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    model = data.get("model", {})
    disc = data.get("discretization", {})
    try:
        law = _law(model.get("contact_law", {}))
        dyn = DynamicsConfig(
            V0=float(model.get("V0", math.pi / 4)),
            law=law,
            metric=model.get("metric_mode", "geometric"),
            n=int(disc.get("N", 256)),
            dt=disc.get("dt"),
            cfl=float(disc.get("cfl_c", 1.0)),
            T=float(disc.get("T", 1.0)),
            dealias=bool(disc.get("dealias", True)),
            snapshot_stride=int(disc.get("snapshot_stride", 1)),
        )
    except (ContactLawError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    outputs = {**DEFAULT_OUTPUTS, **data.get("outputs", {})}
    return ExperimentConfig(dyn, data.get("initial_shape", {}), outputs, data.get("spectrum", {}), data)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def random_shape(r_e: float, n: int, max_mode: int, amplitude: float, seed: int) -> ShapeFunction:
    """Random low-mode shape with sup norm exactly ``amplitude`` (reproducible from ``seed``)."""
    if max_mode > n // 2 - 1:
        raise ConfigError(f"random max_mode must be below N/2 = {n // 2}")
    rng = np.random.default_rng(seed)
    a = np.zeros(n // 2 + 1)
    b = np.zeros(n // 2 + 1)
    a[: max_mode + 1] = rng.uniform(-1.0, 1.0, max_mode + 1)
    b[1 : max_mode + 1] = rng.uniform(-1.0, 1.0, max_mode)
    x = to_samples(a, b, n)
    peak = float(np.max(np.abs(x)))
    if peak == 0.0 or amplitude == 0.0:
        return ShapeFunction.zero(r_e, n)
    return ShapeFunction(r_e, x * (amplitude / peak))


def build_initial_shape(spec: dict, r_e: float, n: int) -> ShapeFunction:
    from .coords import recompose

    if not spec:
        return ShapeFunction.zero(r_e, n)
    if "random" in spec:
        r = spec["random"]
        return random_shape(r_e, n, r["max_mode"], r["amplitude"], r["seed"])
    c = spec.get("coefficients", {})
    cos = {int(k): float(v) for k, v in c.get("cos", {}).items()}
    sin = {int(k): float(v) for k, v in c.get("sin", {}).items()}
    if any(k > n // 2 for k in cos) or any(k >= n // 2 or k == 0 for k in sin):
        raise ConfigError("Fourier mode out of range for this N (sin modes 1..N/2-1, cos modes 0..N/2)")
    shape = ShapeFunction.from_modes(r_e, n, mean=float(c.get("mean", 0.0)), cos=cos, sin=sin)
    if "translate" in c:
        shape = recompose(c["translate"], shape)
    return shape
