"""
Experiment configuration: the schema of the JSON/YAML files read by the CLI
"""
import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

from .core.functions import reward_from_dict

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """An experiment configuration failed validation"""


class SetSpec(BaseModel):
    """Decision set: box needs u, simplex needs b and dim, ball needs R and dim"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["box", "simplex", "ball"]
    dim: Optional[int] = Field(default=None, ge=1)
    u: Optional[List[float]] = None
    b: Optional[float] = Field(default=None, gt=0)
    R: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "SetSpec":
        if self.kind == "box" and not self.u:
            raise ValueError("a box set needs its upper corner u")
        if self.kind == "simplex" and (self.b is None or self.dim is None):
            raise ValueError("a simplex set needs b and dim")
        if self.kind == "ball" and (self.R is None or self.dim is None):
            raise ValueError("a ball set needs R and dim")
        if self.u is not None and self.dim is not None and len(self.u) != self.dim:
            raise ValueError(f"u has {len(self.u)} entries but dim is {self.dim}")
        return self

    @property
    def dimension(self) -> int:
        return self.dim if self.dim is not None else len(self.u)


class AdversarySpec(BaseModel):
    """How the per-round rewards are generated"""
    model_config = ConfigDict(extra="forbid")

    family: Literal["quadratic", "coverage", "linear", "zero"] = "quadratic"
    mode: Literal["iid", "fixed"] = "iid"
    sigma: float = Field(default=0.1, ge=0)
    seed: int = 0
    h_scale: float = Field(default=1.0, ge=0)
    H_scale: float = Field(default=1.0, ge=0)
    rows: int = Field(default=4, ge=1)
    max_exponent: int = Field(default=3, ge=1)
    instance: Optional[Dict[str, Any]] = None

    @field_validator("instance")
    @classmethod
    def _check_instance(cls, instance: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
        if instance is not None:
            try:
                reward_from_dict({"sigma": 0.0, **instance})
            except (KeyError, TypeError) as e:
                raise ValueError(f"reward instance is missing or has a malformed field: {e}")
        return instance


class ParamSpec(BaseModel):
    """
    theorem: schedules derived from T, R and G; scaled: the same schedules with
    eta and eps multiplied by eta_scale and eps_scale; manual: eta, eps and K given
    """
    model_config = ConfigDict(extra="forbid")

    mode: Literal["theorem", "scaled", "manual"] = "theorem"
    eta_scale: float = Field(default=1.0, gt=0)
    eps_scale: float = Field(default=1.0, gt=0)
    eta: Optional[float] = Field(default=None, gt=0)
    eps: Optional[float] = Field(default=None, gt=0)
    K: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_manual(self) -> "ParamSpec":
        if self.mode == "manual" and self.eta is None:
            raise ValueError("manual parameters need eta")
        return self


class NetworkSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    topology: Literal["complete", "cycle", "star", "grid", "path"] = "cycle"
    nodes: int = Field(default=4, ge=1)
    weights: Literal["metropolis", "laplacian"] = "metropolis"


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: Optional[str] = None
    csv: bool = True
    summary: str = "summary.json"


class VerifySpec(BaseModel):
    """Property suites run by the verify command and their sample sizes"""
    model_config = ConfigDict(extra="forbid")

    suites: List[Literal["oracle", "unbiasedness", "boosting", "weights", "gradients"]] = Field(
        default_factory=lambda: ["oracle", "unbiasedness", "boosting", "weights", "gradients"]
    )
    oracle_calls: int = Field(default=1000, ge=1)
    fejer_points: int = Field(default=100, ge=1)
    mc_draws: int = Field(default=100_000, ge=100)
    mc_points: int = Field(default=20, ge=1)
    mc_tolerance: float = Field(default=3.0, gt=0)
    pairs: int = Field(default=1000, ge=1)
    instances: int = Field(default=10, ge=1)
    quadrature_nodes: int = Field(default=1000, ge=16)


class ExperimentConfig(BaseModel):
    """One experiment: a learner, a set, an adversary and the horizons to run"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    algorithm: Literal["pobga", "dpobga", "oga", "obga"] = "pobga"
    decision_set: SetSpec = Field(alias="set")
    adversary: AdversarySpec = Field(default_factory=AdversarySpec)
    params: ParamSpec = Field(default_factory=ParamSpec)
    horizons: List[int] = Field(min_length=1)
    network: Optional[NetworkSpec] = None
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    grid: int = Field(default=129, ge=32)
    checkpoints: int = Field(default=16, ge=1)
    output: OutputSpec = Field(default_factory=OutputSpec)
    verify: VerifySpec = Field(default_factory=VerifySpec)

    @field_validator("horizons")
    @classmethod
    def _check_horizons(cls, horizons: List[int], info: ValidationInfo) -> List[int]:
        params = info.data.get("params")
        algorithm = info.data.get("algorithm")
        for T in horizons:
            if T < 1:
                raise ValueError(f"horizons must be positive, got T={T}")
            if params is None:
                continue
            if params.mode in ("theorem", "scaled") and algorithm in ("pobga", "dpobga") and math.isqrt(T) ** 2 != T:
                raise ValueError(f"T must be a perfect square in {params.mode} mode, got T={T}")
            if params.mode == "manual" and params.K is not None and T % params.K != 0:
                raise ValueError(f"K={params.K} must divide T={T}")
        return horizons

    @model_validator(mode="after")
    def _check_experiment(self) -> "ExperimentConfig":
        if self.algorithm == "dpobga" and self.network is None:
            raise ValueError("the dpobga algorithm needs a network section")
        if self.algorithm in ("pobga", "dpobga") and self.params.mode == "manual":
            if self.params.eps is None or self.params.K is None:
                raise ValueError("manual parameters for pobga/dpobga need eta, eps and K")
        return self

    def to_json(self) -> str:
        """Serialize with the same keys the files use."""
        return json.dumps(self.model_dump(by_alias=True, mode="json"), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return parse_config(json.loads(text), text)


def _locate(raw_text: Optional[str], loc: tuple) -> str:
    """Line of the innermost named key of a validation error, if it can be found."""
    if not raw_text:
        return ""
    keys = [part for part in loc if isinstance(part, str)]
    for key in reversed(keys):
        pattern = re.compile(rf'^\s*"?{re.escape(key)}"?\s*:', re.MULTILINE)
        match = pattern.search(raw_text)
        if match:
            return f" (line {raw_text.count(chr(10), 0, match.start()) + 1})"
    return ""


def parse_config(data: Any, raw_text: Optional[str] = None) -> ExperimentConfig:
    """
    Validate a decoded configuration document.

    Args:
        data: Decoded JSON or YAML document
        raw_text: Source text, used to attach line numbers to errors

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: On any schema or consistency failure
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        messages = []
        for error in e.errors():
            path = ".".join(str(part) for part in error["loc"]) or "<root>"
            message = error["msg"].removeprefix("Value error, ")
            messages.append(f"{path}: {message}{_locate(raw_text, error['loc'])}")
        raise ConfigError("; ".join(messages)) from None


def load_config(file_path: Path) -> ExperimentConfig:
    """
    Read and validate a configuration file (.json, .yaml or .yml).

    Args:
        file_path: Path to the file

    Returns:
        ExperimentConfig
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigError(f"configuration file not found: {file_path}")
    text = file_path.read_text(encoding="utf-8")
    try:
        if file_path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file_path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{file_path}: invalid YAML: {e}") from None
    config = parse_config(data, text)
    logger.debug(f"Loaded configuration from {file_path}: algorithm={config.algorithm}, horizons={config.horizons}")
    return config


def dump_config(config: ExperimentConfig) -> Dict[str, Any]:
    """Plain-data form of a configuration, as stored in run summaries."""
    return config.model_dump(by_alias=True, mode="json")
