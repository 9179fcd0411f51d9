"""
SIGIL Simulator - One-Round Audit Game

Developer d in {B (benign), M (malicious)}, auditor a in {C (truthful),
D (bribed)}. Payoffs (U_d, U_a):

            C                      D
    B   (U_legit - C_pub, R)   (U_legit - C_pub, R)
    M   (-C_pub, R)            (-C_pub - Bribe, Bribe - S)
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, FrozenSet, List, Tuple

from .errors import InvalidGame


class DevStrategy(str, Enum):
    B = "B"
    M = "M"


class AuditStrategy(str, Enum):
    C = "C"
    D = "D"


Profile = Tuple[DevStrategy, AuditStrategy]


@dataclass(frozen=True)
class GameMatrix:
    R: float
    S: float
    C_pub: float
    U_legit: float
    Bribe: float
    r_base: float
    checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if not self.checked:
            return
        if not self.S > self.Bribe > 0:
            raise InvalidGame(f"Need S > Bribe > 0, got S={self.S}, Bribe={self.Bribe}")
        if not self.S > self.r_base >= self.R:
            raise InvalidGame(f"Need S > R_base >= R, got S={self.S}, R_base={self.r_base}, R={self.R}")

    @classmethod
    def unchecked(cls, **values) -> "GameMatrix":
        return cls(**values, checked=False)

    def payoff(self, d: DevStrategy, a: AuditStrategy) -> Tuple[float, float]:
        if d == DevStrategy.B:
            return (self.U_legit - self.C_pub, self.R)
        if a == AuditStrategy.C:
            return (-self.C_pub, self.R)
        return (-self.C_pub - self.Bribe, self.Bribe - self.S)

    def table(self) -> Dict[str, Tuple[float, float]]:
        return {f"({d.value},{a.value})": self.payoff(d, a) for d, a in product(DevStrategy, AuditStrategy)}


def _weakly_dominated(game: GameMatrix, player: int, s, others, own) -> bool:
    """True if some other remaining strategy of `player` weakly dominates s."""
    def u(mine, theirs):
        profile = (mine, theirs) if player == 0 else (theirs, mine)
        return game.payoff(*profile)[player]

    for t in own:
        if t == s:
            continue
        diffs = [u(t, o) - u(s, o) for o in others]
        if all(x >= 0 for x in diffs) and any(x > 0 for x in diffs):
            return True
    return False


def _best_response_profiles(game: GameMatrix, devs, auds) -> FrozenSet[Profile]:
    found = set()
    for d, a in product(devs, auds):
        ud, ua = game.payoff(d, a)
        if all(game.payoff(d2, a)[0] <= ud for d2 in devs) and all(game.payoff(d, a2)[1] <= ua for a2 in auds):
            found.add((d, a))
    return frozenset(found)


def pure_equilibria(game: GameMatrix) -> FrozenSet[Profile]:
    """Every profile where both strategies are best responses."""
    return _best_response_profiles(game, list(DevStrategy), list(AuditStrategy))


def nash_equilibria(game: GameMatrix) -> FrozenSet[Profile]:
    """Pure equilibria after iterated removal of weakly dominated strategies."""
    devs, auds = list(DevStrategy), list(AuditStrategy)
    changed = True
    while changed:
        changed = False
        for player in (1, 0):
            own, others = (devs, auds) if player == 0 else (auds, devs)
            if len(own) == 1:
                continue
            for s in list(own):
                if _weakly_dominated(game, player, s, others, own):
                    own.remove(s)
                    changed = True
                    break
    return _best_response_profiles(game, devs, auds)


@dataclass(frozen=True)
class DeviationLosses:
    developer: float
    auditor: float

    @property
    def minimum(self) -> float:
        return min(self.developer, self.auditor)

    def to_dict(self) -> Dict[str, float]:
        return {"developer": self.developer, "auditor": self.auditor, "minimum": self.minimum}


def deviation_losses(game: GameMatrix) -> DeviationLosses:
    """Loss from unilateral deviation: B->M costs U_legit, C->D on M costs R + S - Bribe."""
    return DeviationLosses(
        developer=game.payoff(DevStrategy.B, AuditStrategy.C)[0] - game.payoff(DevStrategy.M, AuditStrategy.C)[0],
        auditor=game.payoff(DevStrategy.M, AuditStrategy.C)[1] - game.payoff(DevStrategy.M, AuditStrategy.D)[1],
    )


def format_profiles(profiles) -> List[str]:
    return sorted(f"({d.value},{a.value})" for d, a in profiles)


def random_valid_game(rng: random.Random) -> GameMatrix:
    """Draw parameters with S > R_base >= R >= 0, S > Bribe > 0, U_legit > 0."""
    r_base = rng.uniform(0.1, 10.0)
    R = rng.uniform(0.0, r_base)
    S = rng.uniform(r_base * 1.01, r_base * 8.0)
    Bribe = rng.uniform(S * 0.001, S * 0.999)
    return GameMatrix(
        R=R, S=S, C_pub=rng.uniform(0.0, 20.0), U_legit=rng.uniform(0.01, 100.0),
        Bribe=Bribe, r_base=r_base,
    )
