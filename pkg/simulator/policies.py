"""
SIGIL Simulator - Auditor Policies

    honest          always votes the ground truth (p_correct(1.0))
    p_correct(p)    votes the ground truth with probability p
    stealthy(d)     on malicious skills votes safe with probability d;
                    on benign skills votes correctly (unless defect_on_benign)
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from audit.models import Vote


class PolicyKind(str, Enum):
    HONEST = "honest"
    P_CORRECT = "p_correct"
    STEALTHY = "stealthy"


@dataclass(frozen=True)
class AuditorPolicy:
    kind: PolicyKind
    p: float = 1.0
    defect_on_benign: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Policy probability out of range: {self.p}")

    @classmethod
    def honest(cls) -> "AuditorPolicy":
        return cls(PolicyKind.HONEST, 1.0)

    @classmethod
    def p_correct(cls, p: float) -> "AuditorPolicy":
        return cls(PolicyKind.P_CORRECT, p)

    @classmethod
    def stealthy(cls, d: float, defect_on_benign: bool = False) -> "AuditorPolicy":
        return cls(PolicyKind.STEALTHY, d, defect_on_benign)

    @classmethod
    def parse(cls, value: str) -> "AuditorPolicy":
        """'honest', 'p_correct:0.8' or 'stealthy:0.5'."""
        kind, _, arg = str(value).strip().lower().partition(":")
        kind = PolicyKind(kind)
        if kind == PolicyKind.HONEST:
            return cls.honest()
        if not arg:
            raise ValueError(f"{kind.value} needs a probability, e.g. {kind.value}:0.5")
        return cls(kind, float(arg))

    @property
    def label(self) -> str:
        if self.kind == PolicyKind.HONEST:
            return "honest"
        return f"{self.kind.value}({self.p:g})"

    def vote(self, malicious: bool, u: float) -> Vote:
        """Vote for one audit given the ground truth and a uniform draw u in [0, 1)."""
        truth = Vote.UNSAFE if malicious else Vote.SAFE
        wrong = Vote.SAFE if malicious else Vote.UNSAFE
        if self.kind == PolicyKind.STEALTHY:
            if malicious or self.defect_on_benign:
                return wrong if u < self.p else truth
            return truth
        return truth if u < self.p else wrong

    def votes(self, malicious: bool, u: np.ndarray) -> np.ndarray:
        """Vectorized vote; True means the vote matches the ground truth."""
        if self.kind == PolicyKind.STEALTHY:
            if malicious or self.defect_on_benign:
                return u >= self.p
            return np.ones_like(u, dtype=bool)
        return u < self.p
