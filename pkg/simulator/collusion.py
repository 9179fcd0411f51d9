"""
SIGIL Simulator - Collusion Voting
Coordinated malicious auditors always vote against the ground truth;
honest auditors vote correctly with probability honest_accuracy. With
dynamic reputation the committee weights follow the ground truth
(+delta_plus / -delta_minus) and decay every round.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from audit.models import Vote
from audit.tally import tally
from economics.reputation import REPUTATION_SCALE, decay_reputation, lower_reputation, raise_reputation, to_points, to_scaled

from .config import CollusionConfig

logger = logging.getLogger(__name__)


@dataclass
class CollusionResult:
    config: CollusionConfig
    is_malicious: np.ndarray
    malicious_skill: np.ndarray
    approved: np.ndarray
    accuracy: np.ndarray
    honest_reputation: np.ndarray
    malicious_reputation: np.ndarray

    def mean_accuracy(self) -> float:
        return float(self.accuracy.mean()) if len(self.accuracy) else 1.0

    def window_accuracy(self, first: Optional[int] = None, last: Optional[int] = None) -> float:
        window = self.accuracy[:first] if first is not None else self.accuracy[-last:]
        return float(window.mean()) if len(window) else 1.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "round": np.arange(1, len(self.accuracy) + 1),
            "malicious_skill": self.malicious_skill,
            "approved": self.approved,
            "accurate": self.accuracy.astype(int),
            "mean_honest_reputation": self.honest_reputation,
            "mean_malicious_reputation": self.malicious_reputation,
        })

    def summary(self) -> Dict:
        return {
            "kind": "collusion",
            "config": self.config.model_dump(mode="json"),
            "mean_accuracy": self.mean_accuracy(),
            "first_20_accuracy": self.window_accuracy(first=20),
            "last_20_accuracy": self.window_accuracy(last=20),
        }


def _mean(values: np.ndarray) -> float:
    return float(values.mean()) if len(values) else float("nan")


def run_collusion(config: CollusionConfig) -> CollusionResult:
    params = config.params
    rng = np.random.default_rng(config.seed)
    n, k = config.auditors, config.committee_size

    is_malicious = np.zeros(n, dtype=bool)
    is_malicious[rng.permutation(n)[:config.malicious_count]] = True
    reps = np.full(n, to_scaled(params.r0), dtype=np.int64)

    malicious_skill = np.zeros(config.rounds, dtype=bool)
    approved = np.zeros(config.rounds, dtype=bool)
    honest_rep = np.zeros(config.rounds)
    malicious_rep = np.zeros(config.rounds)

    for t in range(config.rounds):
        chosen = np.sort(rng.choice(n, size=k, replace=False))
        malicious = bool(rng.random() < config.malicious_skill_rate)
        draws = rng.random(k)
        correct = ~is_malicious[chosen] & (draws < config.honest_accuracy)
        truth, wrong = (Vote.UNSAFE, Vote.SAFE) if malicious else (Vote.SAFE, Vote.UNSAFE)
        votes = [truth if c else wrong for c in correct]

        result = tally(votes, to_points(reps[chosen]).tolist(), params.theta_ppm)
        malicious_skill[t] = malicious
        approved[t] = result.approved

        if config.dynamic_reputation:
            current = reps[chosen]
            reps[chosen] = np.where(
                correct,
                raise_reputation(current, params, REPUTATION_SCALE),
                lower_reputation(current, params, REPUTATION_SCALE),
            )
            reps = decay_reputation(reps, params)
        honest_rep[t] = _mean(to_points(reps[~is_malicious]))
        malicious_rep[t] = _mean(to_points(reps[is_malicious]))

    accuracy = (approved != malicious_skill).astype(float)
    logger.debug(f"[Sim] Collusion m={config.malicious_fraction} seed {config.seed}: "
                 f"accuracy {accuracy.mean() if len(accuracy) else 1.0:.3f}")
    return CollusionResult(config, is_malicious, malicious_skill, approved, accuracy, honest_rep, malicious_rep)


@dataclass
class CollusionBatch:
    seeds: List[int]
    accuracy: np.ndarray

    def window_means(self, window: int = 20) -> Dict[str, float]:
        return {
            "first": float(self.accuracy[:, :window].mean()),
            "last": float(self.accuracy[:, -window:].mean()),
        }

    def per_round(self) -> np.ndarray:
        return self.accuracy.mean(axis=0)


def run_collusion_batch(config: CollusionConfig, seeds: Sequence[int]) -> CollusionBatch:
    rows = [run_collusion(config.model_copy(update={"seed": int(s)})).accuracy for s in seeds]
    logger.info(f"[Sim] Collusion batch m={config.malicious_fraction} over {len(rows)} seeds")
    return CollusionBatch(list(seeds), np.vstack(rows) if rows else np.zeros((0, config.rounds)))
