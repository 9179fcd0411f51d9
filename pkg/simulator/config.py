"""
SIGIL Simulator - Configuration
Pydantic models for the economy and collusion experiments. Amounts are
milli-TC like everywhere else; probabilities are plain floats.
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from economics.params import EconomicParams, tc

from .policies import AuditorPolicy

T = TypeVar("T", bound=BaseModel)

DEFAULT_RATIOS = (0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40)
DEFAULT_FRACTIONS = (0.2, 0.3, 0.4)
DEFAULT_GAMMAS = (0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
DEFAULT_ACCURACIES = (0.55, 0.6, 0.7, 0.8, 0.9, 1.0)


def simulation_params(**overrides) -> EconomicParams:
    """Economic parameters of the simulated market: no minimum stake, no protocol fee."""
    values = {"s_min": 0, "phi_proto_ppm": 0}
    values.update(overrides)
    return EconomicParams(**values)


def economy_params(**overrides) -> EconomicParams:
    """simulation_params with the economy run's 3x slash coefficient."""
    values = {"gamma_ppm": 3_000_000}
    values.update(overrides)
    return simulation_params(**values)


class CohortSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    policy: str
    count: int = Field(gt=0)
    initial_stake: int = Field(tc(100), ge=0)
    initial_reputation: Optional[int] = Field(None, ge=0)

    @field_validator("policy")
    @classmethod
    def _known_policy(cls, value: str) -> str:
        AuditorPolicy.parse(value)
        return value

    @property
    def auditor_policy(self) -> AuditorPolicy:
        return AuditorPolicy.parse(self.policy)


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    rounds: int = Field(600, ge=0)
    sampled_per_round: int = Field(5, gt=0)
    population: List[CohortSpec]
    params: EconomicParams = Field(default_factory=economy_params)
    malicious_skill_rate: float = Field(0.5, ge=0.0, le=1.0)
    token_count: int = Field(2000, ge=0)
    reward_reputation: Literal["fixed_rmax", "dynamic"] = "fixed_rmax"
    stake_follows: Literal["ground_truth", "consensus"] = "ground_truth"
    stealthy_defects_on_benign: bool = False
    check_conservation: bool = True

    @model_validator(mode="after")
    def _committee_fits(self) -> "SimConfig":
        if self.sampled_per_round > self.population_size:
            raise ValueError(
                f"sampled_per_round {self.sampled_per_round} exceeds population {self.population_size}"
            )
        return self

    @property
    def population_size(self) -> int:
        return sum(c.count for c in self.population)


class CollusionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    rounds: int = Field(100, ge=0)
    auditors: int = Field(20, gt=0)
    committee_size: int = Field(5, gt=0)
    malicious_fraction: float = Field(0.3, ge=0.0, le=1.0)
    dynamic_reputation: bool = True
    honest_accuracy: float = Field(1.0, ge=0.0, le=1.0)
    malicious_skill_rate: float = Field(0.5, ge=0.0, le=1.0)
    params: EconomicParams = Field(default_factory=simulation_params)

    @model_validator(mode="after")
    def _committee_fits(self) -> "CollusionConfig":
        if self.committee_size > self.auditors:
            raise ValueError("committee_size exceeds the number of auditors")
        return self

    @property
    def malicious_count(self) -> int:
        return int(round(self.malicious_fraction * self.auditors))


class GammaSweepConfig(BaseModel):
    """Slash-coefficient sweep: mean payoff per (γ, accuracy) cell."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    gammas: List[float] = Field(default_factory=lambda: list(DEFAULT_GAMMAS), min_length=1)
    accuracies: List[float] = Field(default_factory=lambda: list(DEFAULT_ACCURACIES), min_length=1)
    rounds: int = Field(600, ge=0)
    seeds: int = Field(100, gt=0)
    params: EconomicParams = Field(default_factory=simulation_params)
    token_count: int = Field(2000, ge=0)
    initial_balance: int = Field(tc(200), ge=0)

    @field_validator("accuracies")
    @classmethod
    def _probabilities(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= a <= 1.0 for a in value):
            raise ValueError("accuracies must lie in [0, 1]")
        return value


class R0SweepConfig(BaseModel):
    """Static-reputation false-negative sweep over (r0/r_max, malicious fraction)."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    ratios: List[float] = Field(default_factory=lambda: list(DEFAULT_RATIOS), min_length=1)
    fractions: List[float] = Field(default_factory=lambda: list(DEFAULT_FRACTIONS), min_length=1)
    trials: int = Field(20_000, gt=0)
    committee_size: int = Field(5, gt=0)
    theta_ppm: int = Field(600_000, gt=0, le=1_000_000)
    r_max: int = Field(1000, gt=0)


def default_population() -> List[CohortSpec]:
    """20 auditors: 10 honest, 5 at 80%, 3 at 30%, 2 stealthy at 50%."""
    return [
        CohortSpec(name="honest", policy="honest", count=10),
        CohortSpec(name="p_correct_0.8", policy="p_correct:0.8", count=5),
        CohortSpec(name="p_correct_0.3", policy="p_correct:0.3", count=3),
        CohortSpec(name="stealthy_0.5", policy="stealthy:0.5", count=2),
    ]


def default_economy_config(seed: int = 0, **overrides) -> SimConfig:
    values = {"seed": seed, "population": default_population()}
    values.update(overrides)
    return SimConfig(**values)


def load_config(path: Path, model: Type[T]) -> T:
    return model.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
