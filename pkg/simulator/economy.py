"""
SIGIL Simulator - Token Economy
Seeded multi-round market: each round committee seats are drawn from the
whole registry, the live members vote on one benign or malicious skill, and
the audit is tallied and settled through the real audit and economics code.
A deactivated auditor's seat stays empty, so every auditor is sampled at
k / N for the whole run. Stake and reputation move with the ground truth
(stake optionally with the committee consensus); reputation decays every
round.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from audit.models import AuditOutcome, Vote
from audit.tally import tally
from canon_crypto import ContentHash
from economics.ledger import TREASURY, TokenLedger, stake_account
from economics.params import MILLI
from economics.reputation import REPUTATION_SCALE, decay_reputation, lower_reputation, raise_reputation, to_points, to_scaled
from economics.rewards import Participant, publication_fee, r_base, settle_audit

from .config import SimConfig
from .policies import AuditorPolicy

logger = logging.getLogger(__name__)

DEVELOPER = "developer"


@dataclass
class EconomyResult:
    config: SimConfig
    auditors: List[str]
    cohorts: List[str]
    cohort_of: np.ndarray
    balances: np.ndarray
    reputations: np.ndarray
    malicious: np.ndarray
    approved: np.ndarray
    treasury: List[int] = field(default_factory=list)

    def cohort_mask(self, cohort: str) -> np.ndarray:
        return self.cohort_of == self.cohorts.index(cohort)

    def cohort_trajectories(self) -> pd.DataFrame:
        """One row per (round, cohort): mean balance (milli-TC) and reputation."""
        frames = []
        rounds = np.arange(self.balances.shape[0])
        for index, cohort in enumerate(self.cohorts):
            mask = self.cohort_of == index
            frames.append(pd.DataFrame({
                "round": rounds,
                "cohort": cohort,
                "mean_balance_milli_tc": self.balances[:, mask].mean(axis=1),
                "mean_reputation": self.reputations[:, mask].mean(axis=1),
            }))
        return pd.concat(frames, ignore_index=True).sort_values(["round", "cohort"], kind="stable").reset_index(drop=True)

    def finals(self) -> pd.DataFrame:
        rows = []
        for index, cohort in enumerate(self.cohorts):
            mask = self.cohort_of == index
            rows.append({
                "cohort": cohort,
                "mean_final_balance_tc": float(self.balances[-1, mask].mean()) / MILLI,
                "mean_final_reputation": float(self.reputations[-1, mask].mean()),
                "depleted_fraction": float((self.balances[-1, mask] <= 0).mean()),
            })
        return pd.DataFrame(rows)

    def final_balance_tc(self, cohort: str) -> float:
        return float(self.balances[-1, self.cohort_mask(cohort)].mean()) / MILLI

    def final_reputation(self, cohort: str) -> float:
        return float(self.reputations[-1, self.cohort_mask(cohort)].mean())

    def summary(self) -> Dict:
        return {
            "kind": "economy",
            "config": self.config.model_dump(mode="json"),
            "finals": self.finals().to_dict(orient="records"),
            "approval_rate": float(self.approved.mean()) if len(self.approved) else None,
            "accuracy": float((self.approved != self.malicious).mean()) if len(self.approved) else None,
        }


def run_economy(config: SimConfig) -> EconomyResult:
    params = config.params
    rng = np.random.default_rng(config.seed)

    auditors, policies, cohort_of, stakes, reps0 = [], [], [], [], []
    for index, cohort in enumerate(config.population):
        policy = cohort.auditor_policy
        if policy.kind.value == "stealthy" and config.stealthy_defects_on_benign:
            policy = AuditorPolicy.stealthy(policy.p, defect_on_benign=True)
        for j in range(cohort.count):
            auditors.append(f"{cohort.name}-{j}")
            policies.append(policy)
            cohort_of.append(index)
            stakes.append(cohort.initial_stake)
            reps0.append(params.r0 if cohort.initial_reputation is None else cohort.initial_reputation)
    n = len(auditors)

    ledger = TokenLedger(journal=False)
    for auditor_id, stake in zip(auditors, stakes):
        if stake:
            ledger.mint(stake_account(auditor_id), stake, memo="initial stake")
    fee = publication_fee(config.token_count, params)
    base = r_base(config.token_count, params)
    if config.rounds and fee.total:
        ledger.mint(DEVELOPER, fee.total * config.rounds, memo="developer budget")

    reps = to_scaled(np.array(reps0, dtype=np.int64))
    balances = np.zeros((config.rounds + 1, n), dtype=np.int64)
    reputations = np.zeros((config.rounds + 1, n), dtype=np.int64)
    balances[0] = stakes
    reputations[0] = to_points(reps)
    malicious_rounds = np.zeros(config.rounds, dtype=bool)
    approved_rounds = np.zeros(config.rounds, dtype=bool)
    treasury = [ledger.treasury]

    for t in range(config.rounds):
        current = balances[t]
        malicious = bool(rng.random() < config.malicious_skill_rate)
        malicious_rounds[t] = malicious
        seats = np.sort(rng.choice(n, size=config.sampled_per_round, replace=False))
        u = rng.random(config.sampled_per_round)
        live = (current[seats] > 0) & (current[seats] >= params.s_min)
        chosen, draws = seats[live], u[live]
        k = len(chosen)
        if k:
            truth = Vote.UNSAFE if malicious else Vote.SAFE
            votes = [policies[i].vote(malicious, draws[j]) for j, i in enumerate(chosen)]

            weights = to_points(reps[chosen])
            result = tally(votes, [int(w) for w in weights], params.theta_ppm)
            approved_rounds[t] = result.approved
            outcome = AuditOutcome(
                skill_id=ContentHash.null(),
                safe_weight=result.safe_weight,
                total_weight=result.total_weight,
                approved=result.approved,
                threshold_ppm=params.theta_ppm,
                no_quorum=result.no_quorum,
            )
            participants = [
                Participant(
                    auditors[i], votes[j],
                    params.r_max if config.reward_reputation == "fixed_rmax" else int(weights[j]),
                    int(current[i]),
                )
                for j, i in enumerate(chosen)
            ]
            pool_id = f"pool:{t}"
            ledger.transfer(DEVELOPER, TREASURY, fee.treasury_cut, memo="protocol fee")
            if fee.audit_pool:
                ledger.open_escrow(pool_id, DEVELOPER, fee.audit_pool, "audit_pool")
            settle_audit(ledger, outcome, participants, fee.audit_pool, pool_id, DEVELOPER,
                         config.token_count, params, reward_base=base,
                         reference=truth if config.stake_follows == "ground_truth" else None)

            for j, i in enumerate(chosen):
                if votes[j] == truth:
                    reps[i] = raise_reputation(int(reps[i]), params, REPUTATION_SCALE)
                else:
                    reps[i] = lower_reputation(int(reps[i]), params, REPUTATION_SCALE)

        reps = decay_reputation(reps, params)
        if config.check_conservation:
            ledger.assert_conserved()
        balances[t + 1] = [ledger.balance(stake_account(a)) for a in auditors]
        reputations[t + 1] = to_points(reps)
        treasury.append(ledger.treasury)

    logger.debug(f"[Sim] Economy seed {config.seed}: {config.rounds} rounds, {n} auditors")
    return EconomyResult(
        config=config,
        auditors=auditors,
        cohorts=[c.name for c in config.population],
        cohort_of=np.array(cohort_of),
        balances=balances,
        reputations=reputations,
        malicious=malicious_rounds,
        approved=approved_rounds,
        treasury=treasury,
    )


@dataclass
class EconomyBatch:
    seeds: List[int]
    finals: pd.DataFrame

    def mean_final(self, cohort: str, column: str = "mean_final_balance_tc") -> float:
        return float(self.finals.loc[self.finals["cohort"] == cohort, column].mean())

    def depletion_rate(self, cohort: str) -> float:
        rows = self.finals[self.finals["cohort"] == cohort]
        return float((rows["mean_final_balance_tc"] <= 0).mean())

    def summary(self) -> pd.DataFrame:
        return (
            self.finals.groupby("cohort", sort=False)[["mean_final_balance_tc", "mean_final_reputation"]]
            .mean()
            .reset_index()
        )


def run_economy_batch(config: SimConfig, seeds: Sequence[int]) -> EconomyBatch:
    frames = []
    for seed in seeds:
        finals = run_economy(config.model_copy(update={"seed": int(seed)})).finals()
        finals.insert(0, "seed", int(seed))
        frames.append(finals)
    logger.info(f"[Sim] Economy batch over {len(frames)} seeds")
    return EconomyBatch(list(seeds), pd.concat(frames, ignore_index=True))
