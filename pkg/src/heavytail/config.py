"""Typed configuration: pydantic models, flat dotted-key files and flag overrides."""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Type, TypeVar

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from heavytail.lab.errors import ConfigError
from heavytail.lab.garch_tail import DEFAULT_ALPHA_MAX, DEFAULT_NODES, DEFAULT_TOL
from heavytail.lab.limits import DEFAULT_X_GRID
from heavytail.lab.processes import (DEFAULT_GARCH_BURN_IN, ExpGaussianLinearVol, GarchSpec, IidProcess,
                                     MDependentVol, ProcessSpec, VolSpec)
from heavytail.lab.tail import DEFAULT_CALIBRATION_DRAWS, TailLaw

THREADS_ENV = "HEAVYTAIL_THREADS"

ModelT = TypeVar("ModelT", bound=BaseModel)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TailLawConfig(StrictModel):
    alpha: Optional[float] = None
    q: float = 0.5
    scale: float = 1.0

    def to_law(self) -> TailLaw:
        if self.alpha is None:
            raise ValueError("tail.alpha is required for iid and sv processes")
        return TailLaw(self.alpha, self.q, self.scale)


class VolConfig(StrictModel):
    kind: Literal["exp_gaussian_linear", "m_dependent"] = "exp_gaussian_linear"
    psi: List[float] = Field(default_factory=lambda: [1.0])
    xi_std: float = 1.0
    m: int = 1
    mu: float = 0.0
    tau: float = 0.5

    def to_spec(self) -> VolSpec:
        if self.kind == "m_dependent":
            return MDependentVol(self.m, self.mu, self.tau)
        return ExpGaussianLinearVol(tuple(self.psi), self.xi_std)


class GarchConfig(StrictModel):
    a0: float = 1.0
    a1: Optional[float] = None
    b1: Optional[float] = None
    a: List[float] = Field(default_factory=list)
    b: List[float] = Field(default_factory=list)

    def to_spec(self) -> GarchSpec:
        a = self.a or ([self.a1] if self.a1 is not None else [])
        b = self.b or ([self.b1] if self.b1 is not None else [])
        return GarchSpec(self.a0, tuple(a), tuple(b))


class ProcessConfig(StrictModel):
    kind: Literal["iid", "sv", "garch"] = "iid"
    tail: TailLawConfig = Field(default_factory=TailLawConfig)
    vol: VolConfig = Field(default_factory=VolConfig)
    garch: GarchConfig = Field(default_factory=GarchConfig)
    burn_in: Optional[int] = None

    @model_validator(mode="after")
    def _check_spec(self) -> "ProcessConfig":
        self.to_spec()
        return self

    def to_spec(self) -> ProcessSpec:
        if self.kind == "iid":
            return ProcessSpec(IidProcess(self.tail.to_law()), self.burn_in or 0)
        if self.kind == "sv":
            return ProcessSpec.sv(self.tail.to_law(), self.vol.to_spec(), self.burn_in or 0)
        burn_in = DEFAULT_GARCH_BURN_IN if self.burn_in is None else self.burn_in
        return ProcessSpec.garch(self.garch.to_spec(), burn_in)


class GrowthConfig(StrictModel):
    kind: Literal["beta", "kappa", "explicit"] = "explicit"
    beta: Optional[float] = Field(default=None, gt=0)
    kappa: Optional[float] = Field(default=None, gt=0)
    p: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_value(self) -> "GrowthConfig":
        if getattr(self, "p" if self.kind == "explicit" else self.kind) is None:
            raise ValueError(f"growth.{'p' if self.kind == 'explicit' else self.kind} is required for growth.kind={self.kind}")
        return self

    @property
    def value(self) -> float:
        return float(getattr(self, "p" if self.kind == "explicit" else self.kind))


class ToleranceConfig(StrictModel):
    ks: float = Field(default=0.08, gt=0, le=1)
    ratio_low: float = 0.8
    ratio_high: float = 1.2
    diag_gap: Optional[float] = None


class ExperimentConfig(StrictModel):
    process: ProcessConfig
    alpha: Optional[float] = Field(default=None, gt=0, lt=2)
    n: int = Field(default=100, ge=1)
    growth: GrowthConfig = Field(default_factory=lambda: GrowthConfig(kind="explicit", p=100))
    k: int = Field(default=2, ge=1)
    reps: int = Field(default=1000, ge=2)
    seed: int = Field(default=0, ge=0, lt=2**64)
    x_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_X_GRID))
    b_reps: int = Field(default=20000, ge=2)
    calibration_draws: int = Field(default=DEFAULT_CALIBRATION_DRAWS, ge=100)
    own_marginal: bool = False
    threads: int = Field(default=1, ge=1)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)


class SimulateConfig(StrictModel):
    process: ProcessConfig
    n: int = Field(default=100, ge=1)
    p: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    margin_samples: int = Field(default=10**6, ge=2)


class GarchAlphaConfig(StrictModel):
    a1: float = Field(gt=0)
    b1: float = Field(default=0.0, ge=0)
    nodes: int = Field(default=DEFAULT_NODES, ge=32)
    tol: float = Field(default=DEFAULT_TOL, gt=0)
    alpha_max: float = Field(default=DEFAULT_ALPHA_MAX, gt=1)


class HillConfig(StrictModel):
    input: Optional[str] = None
    column: str = "value"
    process: Optional[ProcessConfig] = None
    n: int = Field(default=10**5, ge=2)
    seed: int = Field(default=0, ge=0, lt=2**64)
    k: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_source(self) -> "HillConfig":
        if self.input is None and self.process is None:
            raise ValueError("hill needs an input file or a process to simulate")
        return self


def _set_dotted(target: Dict[str, Any], dotted: str, value: Any) -> None:
    node = target
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"config key '{dotted}' conflicts with a scalar at '{part}'")
    node[parts[-1]] = value


def load_flat_config(path: Optional[Path]) -> Dict[str, Any]:
    """Read a flat ``key = value`` document with dotted keys into a nested dict."""
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    logging.debug(f"[config] Loaded {path}")
    return data


def build_config(model: Type[ModelT], path: Optional[Path] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> ModelT:
    """File values first, then dotted-key overrides (flags); validated by ``model``."""
    data = load_flat_config(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(data, key, value)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}", {"errors": e.errors(include_url=False, include_context=False)}) from e


def flatten(config: BaseModel) -> Dict[str, Any]:
    """Dotted-key echo of a resolved config, the inverse of build_config."""
    flat: Dict[str, Any] = {}

    def walk(prefix: str, node: Any) -> None:
        if isinstance(node, dict):
            for key in sorted(node):
                walk(f"{prefix}.{key}" if prefix else key, node[key])
        else:
            flat[prefix] = node

    walk("", config.model_dump(mode="json"))
    return flat


def resolve_threads(flag: Optional[int] = None) -> int:
    """Worker threads: --threads capped by HEAVYTAIL_THREADS (a .env file is honoured).

    Either one alone decides; with neither the run is single-threaded.
    """
    load_dotenv(find_dotenv(usecwd=True))
    raw = os.getenv(THREADS_ENV)
    cap = None
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if flag is None:
        return cap or 1
    threads = max(1, int(flag))
    return threads if cap is None else min(threads, cap)
