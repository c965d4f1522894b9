from __future__ import annotations

import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from .errors import ConfigError
from .gmm.registry import algorithm_names, make_algorithm


class Settings(BaseModel):
    """Process-level knobs read from the environment (and an optional .env)."""

    out_dir: str = "./results"
    threads: int = 1
    log_level: str = "INFO"


def load_settings(env_file: str | None = None) -> Settings:
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()

    s = Settings(
        out_dir=os.getenv("COPULA_VB_OUT_DIR", "./results"),
        threads=int(os.getenv("COPULA_VB_THREADS", "1") or 1),
        log_level=(os.getenv("COPULA_VB_LOG_LEVEL") or "INFO").upper(),
    )
    Path(s.out_dir).expanduser().mkdir(parents=True, exist_ok=True)
    return s


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeedConfig(_Section):
    count: PositiveInt = 200
    base: int = 0


class StoppingConfig(_Section):
    epsilon: PositiveFloat = 0.01
    max_iters: PositiveInt = 500


class BivariateConfig(_Section):
    sigma1: PositiveFloat = 2.0
    sigma2: PositiveFloat = 1.0
    rho: float = Field(0.8, gt=-1.0, lt=1.0)
    sigma_init: PositiveFloat = 1.0
    rho_step: float = Field(0.05, gt=0.0, lt=1.0)


def _default_radii() -> list[float]:
    return [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]


def _check_algorithms(names: list[str]) -> list[str]:
    if not names:
        raise ValueError("at least one algorithm is required")
    for n in names:
        make_algorithm(n)
    return names


class GmmConfig(_Section):
    K: int = Field(4, ge=2)
    N: PositiveInt = 100
    radii: list[float] = Field(default_factory=_default_radii)
    algorithms: list[str] = Field(default_factory=algorithm_names)
    prior_scale: PositiveFloat | None = None
    cvb_anchor_subsample: PositiveInt | None = None

    @field_validator("radii")
    @classmethod
    def _radii(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("radius list must be nonempty")
        if any(r < 0 for r in v):
            raise ValueError("radii must be nonnegative")
        return v

    @field_validator("algorithms")
    @classmethod
    def _algorithms(cls, v: list[str]) -> list[str]:
        return _check_algorithms(v)


class OracleConfig(_Section):
    K: int = Field(2, ge=2)
    sizes: list[PositiveInt] = Field(default_factory=lambda: [4, 6, 8])
    radius_min: float = Field(1.0, ge=0.0)
    radius_max: float = Field(4.0, ge=0.0)
    prior_scale: PositiveFloat = 10.0
    algorithms: list[str] = Field(default_factory=algorithm_names)

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("sizes must be nonempty")
        return v

    @model_validator(mode="after")
    def _radius_range(self) -> OracleConfig:
        if self.radius_min > self.radius_max:
            raise ValueError("radius_min must not exceed radius_max")
        return self

    @field_validator("algorithms")
    @classmethod
    def _algorithms(cls, v: list[str]) -> list[str]:
        return _check_algorithms(v)


class OutputConfig(_Section):
    out_dir: str | None = None
    traces: bool = False


class ExperimentConfig(_Section):
    experiment: Literal["bivariate", "gmm", "oracle-check"]
    threads: PositiveInt | None = None
    seeds: SeedConfig = Field(default_factory=SeedConfig)
    stopping: StoppingConfig = Field(default_factory=StoppingConfig)
    bivariate: BivariateConfig = Field(default_factory=BivariateConfig)
    gmm: GmmConfig = Field(default_factory=GmmConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict, *, experiment: str | None = None) -> ExperimentConfig:
    if experiment:
        data = {**data, "experiment": experiment}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e


def load_config(path: str | Path, *, experiment: str | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        raw = tomllib.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {p}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{p}: {e}") from e
    return parse_config(raw, experiment=experiment)
