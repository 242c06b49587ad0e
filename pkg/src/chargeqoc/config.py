"""Scenario configuration: TOML files validated against a versioned schema.

Unknown keys are errors. Every numeric default is echoed into the run
record, so a record's config section fully determines the run.
"""

from __future__ import annotations

import enum
import sys
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1
U64_MAX = 2 ** 64 - 1


class Scenario(str, enum.Enum):
    JJ_LEAKAGE = "JJLeakage"
    CC_LEAKAGE = "CCLeakage"
    JJ_NOISE = "JJNoise"
    CC_NOISE = "CCNoise"
    JJ_FILTER = "JJFilter"
    CC_FILTER = "CCFilter"
    OPTIMIZE_ONLY = "OptimizeOnly"
    EVALUATE_ONLY = "EvaluateOnly"


#: sweep axis expected by each scenario (None: no sweep)
SWEEP_AXES = {
    Scenario.JJ_LEAKAGE: "EJ_over_EC",
    Scenario.CC_LEAKAGE: "EJ_over_Ecc",
    Scenario.JJ_NOISE: "A",
    Scenario.CC_NOISE: "A",
    Scenario.JJ_FILTER: "harmonic",
    Scenario.CC_FILTER: "harmonic",
    Scenario.OPTIMIZE_ONLY: None,
    Scenario.EVALUATE_ONLY: None,
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BasisConfig(_Strict):
    n_min: int = -1
    n_max: int = 2

    @model_validator(mode="after")
    def _window(self):
        if not (self.n_min <= 0 and self.n_max >= 1):
            raise ValueError("charge window must contain 0 and 1")
        return self


class SystemConfig(_Strict):
    coupling: Literal["josephson", "capacitive"]
    E_C1: float = Field(gt=0)
    E_C2: float = Field(gt=0)
    #: common idle Josephson energy of both boxes (and of the coupler)
    E_J: float = Field(ge=0)
    E_cc: float = Field(ge=0)
    n_g1: float = Field(ge=0, le=1)
    n_g2: float = Field(ge=0, le=1)
    #: JJ sweeps keep E_cc / E_JJ at this value
    residual_ratio: float | None = Field(default=None, ge=0)


class GateConfig(_Strict):
    target: Literal["G_JJ_plus", "G_JJ_minus", "G_cc"]
    #: relabel + and - on qubit 2 (the exchange scheme's natural basis)
    flip_second: bool = False
    tau_rule: Literal["jj", "cc", "fixed"]
    tau_factor: float | None = Field(default=None, gt=0)
    tau: float | None = Field(default=None, gt=0)
    error: Literal["trace", "real"] = "trace"

    @model_validator(mode="after")
    def _duration(self):
        if self.tau_rule == "fixed" and self.tau is None:
            raise ValueError("tau_rule = 'fixed' needs tau")
        if self.tau_rule != "fixed" and self.tau_factor is None:
            raise ValueError(f"tau_rule = {self.tau_rule!r} needs tau_factor")
        return self


class GridConfig(_Strict):
    n_steps: int = Field(default=1000, ge=2)


class KrotovSection(_Strict):
    lambda0: float = Field(gt=0)
    max_iters: int = Field(ge=0)
    target_error: float = Field(gt=0, lt=1)
    stall_tolerance: float = Field(default=1e-10, ge=0)
    stall_window: int = Field(default=50, ge=1)
    functional: Literal["trace_global_phase", "per_state"] = "trace_global_phase"


class InitialConfig(_Strict):
    kind: Literal["scheme", "modulated", "file"] = "scheme"
    amplitude: float = 0.0
    harmonic: int = Field(default=2, ge=1)
    path: str | None = None

    @model_validator(mode="after")
    def _path(self):
        if self.kind == "file" and not self.path:
            raise ValueError("initial.kind = 'file' needs path")
        return self


class PsdConfig(_Strict):
    A: float = Field(ge=0)
    gamma_min: float = Field(gt=0)
    gamma_max: float = Field(gt=0)
    dt: float = Field(gt=0)
    n_steps: int = Field(ge=16)
    trajectories: int = Field(ge=1)

    @model_validator(mode="after")
    def _rates(self):
        if not self.gamma_min < self.gamma_max:
            raise ValueError("gamma_min must be smaller than gamma_max")
        return self


class NoiseSection(_Strict):
    #: rate window; omitted bounds default to 0.1/tau and 10/tau
    gamma_min: float | None = Field(default=None, gt=0)
    gamma_max: float | None = Field(default=None, gt=0)
    n_fluctuators: int = Field(default=1000, ge=1)
    realizations: int = Field(default=100, ge=1)
    psd: PsdConfig | None = None

    @model_validator(mode="after")
    def _rates(self):
        if (self.gamma_min is not None and self.gamma_max is not None
                and not self.gamma_min < self.gamma_max):
            raise ValueError("gamma_min must be smaller than gamma_max")
        return self


class SweepConfig(_Strict):
    axis: Literal["EJ_over_EC", "EJ_over_Ecc", "A", "harmonic"]
    values: list[float] = Field(min_length=1)
    #: optional per-point Krotov weight (same length as values)
    lambda0: list[float] | None = None
    #: points highlighted in the output (e.g. the measured sample)
    marked: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _lengths(self):
        if self.lambda0 is not None:
            if len(self.lambda0) != len(self.values):
                raise ValueError("sweep.lambda0 must have one entry per sweep value")
            if any(v <= 0 for v in self.lambda0):
                raise ValueError("sweep.lambda0 entries must be positive")
        return self


class EvaluateConfig(_Strict):
    source: Literal["scheme", "pulses", "propagator"] = "scheme"
    path: str | None = None

    @model_validator(mode="after")
    def _path(self):
        if self.source != "scheme" and not self.path:
            raise ValueError(f"evaluate.source = {self.source!r} needs path")
        return self


class ScenarioConfig(_Strict):
    schema_version: Literal[1]
    scenario: Scenario
    seed: int = Field(ge=0, le=U64_MAX)
    description: str = ""
    basis: BasisConfig = BasisConfig()
    system: SystemConfig
    gate: GateConfig
    grid: GridConfig = GridConfig()
    krotov: KrotovSection | None = None
    initial: InitialConfig = InitialConfig()
    noise: NoiseSection | None = None
    sweep: SweepConfig | None = None
    evaluate: EvaluateConfig | None = None

    @model_validator(mode="after")
    def _consistency(self):
        axis = SWEEP_AXES[self.scenario]
        if axis is None and self.sweep is not None:
            raise ValueError(f"scenario {self.scenario.value} takes no sweep")
        if axis is not None:
            if self.sweep is None:
                raise ValueError(f"scenario {self.scenario.value} needs a sweep")
            if self.sweep.axis != axis:
                raise ValueError(f"sweep.axis must be {axis!r} for {self.scenario.value}")
        if self.scenario is not Scenario.EVALUATE_ONLY and self.krotov is None:
            raise ValueError(f"scenario {self.scenario.value} needs a krotov section")
        if self.scenario in (Scenario.JJ_NOISE, Scenario.CC_NOISE) and self.noise is None:
            raise ValueError(f"scenario {self.scenario.value} needs a noise section")
        jj_gate = self.gate.target.startswith("G_JJ")
        if jj_gate != (self.system.coupling == "josephson"):
            raise ValueError("gate.target does not match system.coupling")
        if self.scenario is Scenario.JJ_LEAKAGE and self.system.residual_ratio is None:
            raise ValueError("JJLeakage needs system.residual_ratio")
        if self.scenario.value.startswith("JJ") and self.system.coupling != "josephson":
            raise ValueError(f"{self.scenario.value} needs josephson coupling")
        if self.scenario.value.startswith("CC") and self.system.coupling != "capacitive":
            raise ValueError(f"{self.scenario.value} needs capacitive coupling")
        return self


class ConfigError(ValueError):
    """A config file that cannot be parsed or violates the schema."""

    def __init__(self, message: str, problems: list[dict] | None = None):
        super().__init__(message)
        self.problems = problems or []


def _problems(exc: ValidationError) -> list[dict]:
    out = []
    for err in exc.errors():
        field = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append({"field": field, "message": err["msg"]})
    return out


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        problems = _problems(exc)
        summary = "; ".join(f"{p['field']}: {p['message']}" for p in problems)
        raise ConfigError(f"invalid config: {summary}", problems) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", [{"field": "<parse>", "message": str(exc)}]) from None
    return parse_config(data)


def validate_config(path) -> dict:
    """Schema and invariant report for a config file; never runs physics."""
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        return {"valid": False, "path": str(path), "problems": exc.problems}
    return {"valid": True, "path": str(path), "scenario": cfg.scenario.value, "problems": []}


def dump_config(cfg: ScenarioConfig) -> dict:
    return cfg.model_dump(mode="json")
