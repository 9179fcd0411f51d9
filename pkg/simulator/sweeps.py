"""
SIGIL Simulator - Parameter Sweeps

    FN sweep:  committees of independent seats, malicious with probability f,
               malicious seats carry r0 = round(ratio * r_max) and vote safe,
               honest seats carry r_max and vote unsafe; FN iff approved.
    γ sweep:   one auditor audited every round against the ground truth,
               reward R_base * r_i / r_max with dynamic r_i, slash γ * R_base.

Both sweeps use common random numbers: one draw matrix per seed, reused for
every grid cell, so neighbouring cells differ only by the swept parameter.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from economics.params import MILLI, PPM, EconomicParams, tc
from economics.reputation import REPUTATION_SCALE, decay_reputation, lower_reputation, raise_reputation, to_points, to_scaled
from economics.rewards import r_base, reward_amount, slash_amount

from .config import DEFAULT_ACCURACIES, DEFAULT_FRACTIONS, DEFAULT_GAMMAS, DEFAULT_RATIOS, simulation_params

logger = logging.getLogger(__name__)


@dataclass
class SweepResult:
    metric: str
    x_name: str
    y_name: str
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray
    trials: int
    seed: int

    def cell(self, x: float, y: float) -> float:
        i = int(np.argmin(np.abs(self.x_values - x)))
        j = int(np.argmin(np.abs(self.y_values - y)))
        return float(self.values[i, j])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, x in enumerate(self.x_values):
            for j, y in enumerate(self.y_values):
                rows.append({
                    self.x_name: float(x),
                    self.y_name: float(y),
                    "metric": self.metric,
                    "value": float(self.values[i, j]),
                    "trials": self.trials,
                    "seed": self.seed,
                })
        return pd.DataFrame(rows)

    def summary(self) -> Dict:
        return {
            "kind": f"sweep:{self.metric}",
            "x": {"name": self.x_name, "values": [float(v) for v in self.x_values]},
            "y": {"name": self.y_name, "values": [float(v) for v in self.y_values]},
            "values": self.values.tolist(),
            "trials": self.trials,
            "seed": self.seed,
        }


# ============================================
# FALSE NEGATIVES
# ============================================

def fn_rate_from_draws(
    draws: np.ndarray,
    ratio: float,
    fraction: float,
    theta_ppm: int = 600_000,
    r_max: int = 1000,
) -> float:
    """FN fraction for a (trials, seats) matrix of uniforms."""
    r0 = int(round(ratio * r_max))
    malicious_seats = (draws < fraction).sum(axis=1).astype(np.int64)
    honest_seats = draws.shape[1] - malicious_seats
    safe = malicious_seats * r0
    total = safe + honest_seats * r_max
    fn = (total > 0) & (safe * PPM >= theta_ppm * total)
    return float(fn.mean()) if len(fn) else 0.0


def monte_carlo_fn(
    ratio: float,
    malicious_fraction: float,
    trials: int = 20_000,
    committee_size: int = 5,
    theta_ppm: int = 600_000,
    r_max: int = 1000,
    seed: int = 0,
) -> float:
    draws = np.random.default_rng(seed).random((trials, committee_size))
    return fn_rate_from_draws(draws, ratio, malicious_fraction, theta_ppm, r_max)


def sweep_r0(
    ratios: Sequence[float] = DEFAULT_RATIOS,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    trials: int = 20_000,
    committee_size: int = 5,
    theta_ppm: int = 600_000,
    r_max: int = 1000,
    seed: int = 0,
) -> SweepResult:
    draws = np.random.default_rng(seed).random((trials, committee_size))
    values = np.array([
        [fn_rate_from_draws(draws, ratio, fraction, theta_ppm, r_max) for fraction in fractions]
        for ratio in ratios
    ])
    logger.info(f"[Sim] FN sweep over {len(ratios)}x{len(fractions)} cells, {trials} trials each")
    return SweepResult("fn_rate", "r0_ratio", "malicious_fraction",
                       np.asarray(ratios, dtype=float), np.asarray(fractions, dtype=float),
                       values, trials, seed)


# ============================================
# SLASHING COEFFICIENT
# ============================================

def gamma_payoffs(
    draws: np.ndarray,
    gamma: float,
    accuracy: float,
    params: EconomicParams,
    token_count: int = 2000,
    initial_balance: int = tc(200),
) -> np.ndarray:
    """Final payoff in milli-TC per seed for a (seeds, rounds) matrix of uniforms."""
    seeds, rounds = draws.shape
    base = r_base(token_count, params)
    slash = slash_amount(base, int(round(gamma * PPM)))
    balance = np.full(seeds, initial_balance, dtype=np.int64)
    reps = np.full(seeds, to_scaled(params.r0), dtype=np.int64)
    active = balance > 0
    for t in range(rounds):
        correct = draws[:, t] < accuracy
        reward = reward_amount(base, to_points(reps), params)
        balance = np.where(active & correct, balance + reward, balance)
        balance = np.where(active & ~correct, np.maximum(0, balance - slash), balance)
        reps = np.where(
            active,
            np.where(correct, raise_reputation(reps, params, REPUTATION_SCALE),
                     lower_reputation(reps, params, REPUTATION_SCALE)),
            reps,
        )
        reps = decay_reputation(reps, params)
        active = active & (balance > 0)
    return balance - initial_balance


def sweep_gamma(
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    accuracies: Sequence[float] = DEFAULT_ACCURACIES,
    rounds: int = 600,
    seeds: int = 100,
    params: Optional[EconomicParams] = None,
    token_count: int = 2000,
    initial_balance: int = tc(200),
    seed: int = 0,
) -> SweepResult:
    """Mean final payoff (TC) per (γ, accuracy) cell."""
    params = params or simulation_params()
    draws = np.random.default_rng(seed).random((seeds, rounds))
    values = np.array([
        [gamma_payoffs(draws, g, acc, params, token_count, initial_balance).mean() / MILLI for acc in accuracies]
        for g in gammas
    ])
    logger.info(f"[Sim] Gamma sweep over {len(gammas)}x{len(accuracies)} cells, {seeds} seeds")
    return SweepResult("final_payoff_tc", "gamma", "accuracy",
                       np.asarray(gammas, dtype=float), np.asarray(accuracies, dtype=float),
                       values, seeds, seed)
