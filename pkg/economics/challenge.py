"""
SIGIL Economics - Re-audit Challenges
A challenger escrows the re-audit fee against an approved skill. If the
re-audit confirms the verdict the fee goes to the Treasury; if it reverses
it, the fee is refunded and the retrospective split pays the challenger.
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict

from registry.models import SkillRecord, SkillStatus

from .errors import InsufficientFee, WrongSkillState
from .ledger import TREASURY, TokenLedger
from .params import EconomicParams


class ChallengeStatus(str, Enum):
    OPEN = "open"
    CONFIRMED = "confirmed"
    REVERSED = "reversed"


@dataclass
class Challenge:
    skill_id: str
    submitter: str
    fee: int
    opened_at: int
    round: int
    status: ChallengeStatus = ChallengeStatus.OPEN

    @property
    def escrow_id(self) -> str:
        return f"challenge:{self.skill_id}:{self.round}"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["status"] = self.status.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Challenge":
        data = dict(data)
        data["status"] = ChallengeStatus(data.get("status", "open"))
        return cls(**data)


def re_audit_challenge(
    ledger: TokenLedger,
    record: SkillRecord,
    submitter: str,
    fee: int,
    now: int,
    round: int,
    params: EconomicParams,
) -> Challenge:
    if record.status != SkillStatus.APPROVED:
        raise WrongSkillState(f"{record.qualified_name} is not approved; nothing to challenge")
    if fee < params.reaudit_fee:
        raise InsufficientFee(f"Re-audit fee is {params.reaudit_fee}, offered {fee}")
    challenge = Challenge(record.skill_id.hex(), submitter, fee, now, round)
    if fee:
        ledger.open_escrow(challenge.escrow_id, submitter, fee, "reaudit_fee", parties=[submitter])
    return challenge


def settle_challenge(ledger: TokenLedger, challenge: Challenge, reversed_verdict: bool) -> Challenge:
    if challenge.status != ChallengeStatus.OPEN:
        raise WrongSkillState(f"Challenge already {challenge.status.value}")
    target = challenge.submitter if reversed_verdict else TREASURY
    if challenge.fee:
        ledger.release_escrow(challenge.escrow_id, target, memo="reaudit fee")
    challenge.status = ChallengeStatus.REVERSED if reversed_verdict else ChallengeStatus.CONFIRMED
    return challenge
