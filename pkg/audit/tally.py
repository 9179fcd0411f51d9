"""
SIGIL Audit - Reputation-Weighted Tally

    SafeScore = sum(r_i, i voted safe) / sum(r_i, i did not abstain)

All comparisons are integer cross-multiplications against a threshold in
parts per million, so theta = 0.6 approves a score of exactly 0.6.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .errors import NoQuorum
from .models import Verdict, Vote

PPM = 1_000_000


@dataclass(frozen=True)
class TallyResult:
    safe_weight: int
    total_weight: int
    approved: bool
    no_quorum: bool

    @property
    def safe_score(self) -> Fraction:
        return Fraction(self.safe_weight, self.total_weight) if self.total_weight else Fraction(0)


def _weights(verdicts, reputations):
    votes = [v.vote if isinstance(v, Verdict) else Vote(v) for v in verdicts]
    if isinstance(reputations, Mapping):
        weights = [int(reputations.get(v.auditor, 0)) for v in verdicts]
    else:
        weights = [int(r) for r in reputations]
        if len(weights) != len(votes):
            raise ValueError("votes and reputations differ in length")
    return votes, weights


def weigh(verdicts, reputations) -> tuple:
    """(safe weight, non-abstaining weight)."""
    votes, weights = _weights(verdicts, reputations)
    safe = sum(w for v, w in zip(votes, weights) if v == Vote.SAFE)
    total = sum(w for v, w in zip(votes, weights) if v != Vote.ABSTAIN)
    return safe, total


def safe_score(
    verdicts: Sequence[Union[Verdict, Vote]],
    reputations: Union[Sequence[int], Mapping[str, int]],
) -> Fraction:
    safe, total = weigh(verdicts, reputations)
    if total == 0:
        raise NoQuorum("No non-abstaining weight to tally")
    return Fraction(safe, total)


def tally(
    verdicts: Sequence[Union[Verdict, Vote]],
    reputations: Union[Sequence[int], Mapping[str, int]],
    theta_ppm: int,
) -> TallyResult:
    safe, total = weigh(verdicts, reputations)
    if total == 0:
        return TallyResult(safe, total, approved=False, no_quorum=True)
    approved = safe * PPM >= theta_ppm * total
    return TallyResult(safe, total, approved=approved, no_quorum=False)
