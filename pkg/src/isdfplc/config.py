"""Sweep configuration documents and the figure presets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from .model import NoiseModel, PowerSplit, SystemConfig

ENGINES = ("analytic", "montecarlo", "quadrature")
ENGINE_ALIASES = {"a": "analytic", "m": "montecarlo", "q": "quadrature"}
BER_MODES = ("paper_literal", "coherent", "both")
SWEEP_VARIABLES = {
    "p_t_db": "p_t_db",
    "r_th": "r_th",
    "d_f": "d_f",
    "d_sd": "d_sd_km",
    "p_l": "p_l_db_per_km",
}
DEFAULT_PT_GRID = tuple(float(x) for x in range(20, 81))
FIG4_DF = (0.25, 0.5, 0.75)

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "p_t_db": _number,
        "power_split": {"enum": [s.value for s in PowerSplit]},
        "d_sd_km": _positive,
        "d_sd": _positive,
        "d_f": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "p_l": {"type": "number", "minimum": 0},
        "r_th": _positive,
        "sigma_h_db": {
            "oneOf": [
                {"type": "number", "minimum": 0},
                {"type": "array", "items": {"type": "number", "minimum": 0},
                 "minItems": 3, "maxItems": 3},
            ]
        },
        "p": {"type": "number", "minimum": 0, "maximum": 1},
        "eta": {"type": "number", "minimum": 0},
        "sigma_w2": {"oneOf": [_positive, {"type": "null"}]},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variable"],
            "properties": {
                "variable": {"enum": list(SWEEP_VARIABLES)},
                "grid": {"type": "array", "items": _number, "minItems": 1},
                "start": _number,
                "stop": _number,
                "step": _positive,
            },
        },
        "engines": {
            "type": "array",
            "items": {"enum": list(ENGINES) + list(ENGINE_ALIASES)},
            "minItems": 1,
        },
        "ber_mode": {"enum": list(BER_MODES)},
        "n_trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": ["string", "null"]},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in errors))


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    sweep_variable: str = "p_t_db"
    grid: tuple[float, ...] = DEFAULT_PT_GRID
    engines: tuple[str, ...] = ("analytic", "montecarlo")
    ber_mode: str = "both"
    n_trials: int = 1_000_000
    seed: int = 0
    output_path: str | None = None
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        engines = tuple(ENGINE_ALIASES.get(e, e) for e in self.engines)
        object.__setattr__(self, "engines", tuple(e for e in ENGINES if e in engines))
        errors = []
        if self.sweep_variable not in SWEEP_VARIABLES:
            errors.append(("$.sweep.variable", f"unknown sweep variable {self.sweep_variable!r}"))
        if not self.grid:
            errors.append(("$.sweep.grid", "grid must not be empty"))
        elif any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            errors.append(("$.sweep.grid", "grid must be strictly increasing"))
        if not self.engines:
            errors.append(("$.engines", "select at least one engine"))
        if self.ber_mode not in BER_MODES:
            errors.append(("$.ber_mode", f"unknown ber_mode {self.ber_mode!r}"))
        if self.n_trials < 1:
            errors.append(("$.n_trials", "n_trials must be at least 1"))
        if errors:
            raise ConfigError(errors)

    def config_at(self, value: float) -> SystemConfig:
        return replace(self.base, **{SWEEP_VARIABLES[self.sweep_variable]: value})

    def to_dict(self) -> dict:
        """Normalized document; :func:`spec_from_dict` maps it back to an equal spec."""
        b = self.base
        return {
            "name": self.name,
            "p_t_db": b.p_t_db,
            "power_split": b.power_split.value,
            "d_sd_km": b.d_sd_km,
            "d_f": b.d_f,
            "p_l": b.p_l_db_per_km,
            "r_th": b.r_th,
            "sigma_h_db": list(b.sigma_h_db) if isinstance(b.sigma_h_db, tuple) else b.sigma_h_db,
            "p": b.noise.p,
            "eta": b.noise.eta,
            "sigma_w2": b.noise.sigma_w2,
            "sweep": {"variable": self.sweep_variable, "grid": list(self.grid)},
            "engines": list(self.engines),
            "ber_mode": self.ber_mode,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "output": self.output_path,
        }

    def config_hash(self) -> str:
        doc = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(doc.encode()).hexdigest()


def _expand_grid(sweep: dict) -> tuple[float, ...]:
    if "grid" in sweep:
        return tuple(sweep["grid"])
    if "start" in sweep or "stop" in sweep:
        if not ("start" in sweep and "stop" in sweep):
            raise ConfigError([("$.sweep", "start and stop must be given together")])
        start, stop, step = sweep["start"], sweep["stop"], sweep.get("step", 1.0)
        n = int(round((stop - start) / step))
        if n < 0 or abs(start + n * step - stop) > 1e-9 * max(1.0, abs(stop)):
            raise ConfigError([("$.sweep", "stop must be reachable from start in whole steps")])
        return tuple(round(start + k * step, 12) for k in range(n + 1))
    if sweep["variable"] == "p_t_db":
        return DEFAULT_PT_GRID
    raise ConfigError([("$.sweep.grid", "grid required unless sweeping p_t_db")])


def spec_from_dict(doc: dict) -> SweepSpec:
    """Validate a config document and fill defaults."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError([(e.json_path, e.message) for e in errors])

    p = doc.get("p", 0.1)
    eta = doc.get("eta", 10.0)
    sigma_w2 = doc.get("sigma_w2")
    noise = NoiseModel.unit_power(p, eta) if sigma_w2 is None else NoiseModel(p, eta, sigma_w2)
    spread = doc.get("sigma_h_db", 3.0)
    try:
        base = SystemConfig(
            p_t_db=doc.get("p_t_db", 50.0),
            d_sd_km=doc.get("d_sd_km", doc.get("d_sd", 0.4)),
            d_f=doc.get("d_f", 0.5),
            p_l_db_per_km=doc.get("p_l", 60.0),
            r_th=doc.get("r_th", 1.0),
            power_split=doc.get("power_split", PowerSplit.FULL.value),
            noise=noise,
            sigma_h_db=tuple(spread) if isinstance(spread, list) else spread,
        )
    except ValueError as exc:
        raise ConfigError([("$", str(exc))]) from exc

    sweep = doc.get("sweep", {"variable": "p_t_db"})
    return SweepSpec(
        base=base,
        sweep_variable=sweep["variable"],
        grid=_expand_grid(sweep),
        engines=tuple(doc.get("engines", ("analytic", "montecarlo"))),
        ber_mode=doc.get("ber_mode", "both"),
        n_trials=doc.get("n_trials", 1_000_000),
        seed=doc.get("seed", 0),
        output_path=doc.get("output"),
        name=doc.get("name", "sweep"),
    )


def load_document(path) -> dict:
    """Read a config file as a JSON object, without validating its keys."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"invalid JSON: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([("$", "config must be a JSON object")])
    return doc


def parse_config(path) -> SweepSpec:
    return spec_from_dict(load_document(path))


def _curve_name(prefix: str, **values) -> str:
    parts = [f"{k}{v:g}" for k, v in values.items()]
    return "_".join([prefix, *parts])


def preset(name: str, overrides: dict | None = None) -> list[SweepSpec]:
    """Curves for one figure, each a P_T sweep.

    All presets share sigma_h = 3 dB, p = 0.1 and eta = 10.  ``overrides``
    is a config document whose keys replace the preset defaults (engines,
    trials, seed, and so on); the figure's own curve parameters win.
    """
    if name == "fig2":
        curves = [dict(r_th=r, d_sd_km=d, p_l=60.0) for r in (1.0, 3.0) for d in (0.4, 0.8)]
        label = lambda c: _curve_name("fig2", rth=c["r_th"], dsd=c["d_sd_km"])  # noqa: E731
    elif name == "fig3":
        curves = [dict(r_th=r, d_sd_km=0.4, p_l=pl) for r in (1.0, 3.0) for pl in (60.0, 80.0)]
        label = lambda c: _curve_name("fig3", rth=c["r_th"], pl=c["p_l"])  # noqa: E731
    elif name == "fig4":
        curves = [dict(r_th=r, d_sd_km=0.4, p_l=60.0, d_f=df) for r in (1.0, 3.0) for df in FIG4_DF]
        label = lambda c: _curve_name("fig4", rth=c["r_th"], df=c["d_f"])  # noqa: E731
    else:
        raise ValueError(f"unknown preset {name!r}; choose fig2, fig3 or fig4")

    base_doc = {k: v for k, v in (overrides or {}).items() if k not in ("name", "sweep")}
    base_doc.setdefault("sigma_h_db", 3.0)
    base_doc.setdefault("p", 0.1)
    base_doc.setdefault("eta", 10.0)
    sweep = (overrides or {}).get("sweep", {"variable": "p_t_db"})
    specs = []
    for curve in curves:
        doc = {**base_doc, **curve, "name": label(curve), "sweep": sweep}
        specs.append(spec_from_dict(doc))
    return specs


PRESETS = ("fig2", "fig3", "fig4")
