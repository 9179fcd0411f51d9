"""
SIGIL Economics - Parameters
Every economic knob in one validated model. Amounts are integer milli-TC
(1 TC = 1000), fractions are integers in parts per million.
"""

from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

MILLI = 1000
PPM = 1_000_000
DAY = 86_400


def tc(amount: float) -> int:
    """Whole or fractional TC to milli-TC."""
    return int(round(amount * MILLI))


def to_tc(milli: int) -> float:
    return milli / MILLI


class EconomicParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # reward anchor: R_base = beta0 + beta1 * L / kappa_tc
    kappa_tc: int = Field(5000, gt=0, description="LLM tokens per TC")
    beta0: int = Field(200, ge=0, description="base reward, milli-TC")
    beta1_ppm: int = Field(900_000, ge=0)
    committee_size: int = Field(5, ge=1, description="N, claims required per audit")
    theta_ppm: int = Field(600_000, gt=0, le=PPM, description="approval threshold")
    phi_proto_ppm: int = Field(0, ge=0, le=PPM, description="protocol fee fraction")
    gamma_ppm: int = Field(2_000_000, description="slash coefficient")
    sigma_ppm: int = Field(250_000, ge=0, description="slippage rate per interval")
    delta_t: int = Field(DAY, gt=0, description="slippage interval, seconds")

    # reputation
    delta_plus: int = Field(15, ge=0)
    delta_minus: int = Field(30, ge=0)
    alpha_ppm: int = Field(995_000, description="per-step decay factor")
    r0: int = Field(100, ge=0)
    r_max: int = Field(1000, gt=0)

    # stake, bonds, deposits (milli-TC)
    s_min: int = Field(10_000, ge=0)
    commitment_deposit: int = Field(1_000, ge=0)
    confidentiality_bond: int = Field(5_000, gt=0)
    delivery_bond: int = Field(50_000, gt=0)
    reaudit_fee: int = Field(5_000, ge=0)

    # windows (seconds)
    monitoring_window: int = Field(30 * DAY, gt=0)
    tau_deliver: int = Field(DAY, gt=0)
    verdict_window: int = Field(7 * DAY, gt=0)
    claim_window: int = Field(14 * DAY, gt=0, description="open task without N claims expires")

    treasury_initial: int = Field(1_000_000, ge=0, description="T0, milli-TC")
    slash_split_ppm: Tuple[int, int, int] = Field(
        (300_000, 400_000, 300_000),
        description="(whistleblower, dissenters, treasury)",
    )

    @model_validator(mode="after")
    def _check_invariants(self):
        if self.gamma_ppm < PPM:
            raise ValueError("gamma must be >= 1")
        if self.delta_minus <= self.delta_plus:
            raise ValueError("delta_minus must exceed delta_plus")
        if not 0 < self.alpha_ppm < PPM:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if sum(self.slash_split_ppm) != PPM or min(self.slash_split_ppm) < 0:
            raise ValueError("slash split must be non-negative and sum to 1")
        if self.r0 > self.r_max:
            raise ValueError("r0 cannot exceed r_max")
        return self

    @property
    def gamma(self) -> float:
        return self.gamma_ppm / PPM

    @property
    def theta(self) -> float:
        return self.theta_ppm / PPM

