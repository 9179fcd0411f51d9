"""
SIGIL Audit - Data Models
Votes, signed verdicts and audit outcomes.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple

from canon_crypto import (
    ContentHash,
    KeyPair,
    VerdictSignature,
    canonical_encode,
    canonical_json,
    content_hash,
    sign_verdict,
    verify_verdict,
)
from canon_crypto.errors import MalformedSignature

from .errors import AuditError

CONFIDENCE_SCALE = 1_000_000


class Vote(IntEnum):
    SAFE = 0
    UNSAFE = 1
    ABSTAIN = 2

    @classmethod
    def parse(cls, value: str) -> "Vote":
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise ValueError(f"Unknown vote: {value!r} (expected safe, unsafe or abstain)")


@dataclass(frozen=True)
class Verdict:
    skill_id: ContentHash
    auditor: str
    vote: Vote
    risk_findings: Tuple[str, ...] = ()
    confidence: float = 1.0
    signature: Optional[VerdictSignature] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise AuditError(f"Confidence out of range: {self.confidence}")
        object.__setattr__(self, "vote", Vote(self.vote))
        object.__setattr__(self, "risk_findings", tuple(self.risk_findings))

    @property
    def confidence_micros(self) -> int:
        return int(round(self.confidence * CONFIDENCE_SCALE))

    def signing_bytes(self) -> bytes:
        """skill_id | auditor | vote byte | findings list | confidence (1e-6 fixed point)."""
        return canonical_encode([
            self.skill_id.digest,
            self.auditor,
            self.vote,
            list(self.risk_findings),
            self.confidence_micros,
        ])

    @classmethod
    def create(
        cls,
        skill_id: ContentHash,
        auditor: str,
        vote: Vote,
        keypair: KeyPair,
        risk_findings: Sequence[str] = (),
        confidence: float = 1.0,
    ) -> "Verdict":
        unsigned = cls(skill_id, auditor, Vote(vote), tuple(risk_findings), confidence)
        return cls(
            skill_id, auditor, unsigned.vote, unsigned.risk_findings, confidence,
            signature=sign_verdict(unsigned.signing_bytes(), keypair),
        )

    def verify(self, verify_key: bytes) -> bool:
        if self.signature is None:
            return False
        try:
            return verify_verdict(self.signing_bytes(), self.signature, verify_key)
        except MalformedSignature:
            return False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "auditor": self.auditor,
            "vote": self.vote.name.lower(),
            "risk_findings": list(self.risk_findings),
            "confidence": self.confidence,
            "signature": self.signature.to_dict() if self.signature else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Verdict":
        sig = data.get("signature")
        return cls(
            skill_id=ContentHash.from_hex(data["skill_id"]),
            auditor=data["auditor"],
            vote=Vote.parse(data["vote"]),
            risk_findings=tuple(data.get("risk_findings", ())),
            confidence=float(data.get("confidence", 1.0)),
            signature=VerdictSignature.from_dict(sig) if sig else None,
        )


@dataclass(frozen=True)
class AuditOutcome:
    """Result of one tally. approved <=> safe_weight/total_weight >= threshold
    and total_weight > 0."""

    skill_id: ContentHash
    safe_weight: int
    total_weight: int
    approved: bool
    threshold_ppm: int
    verdicts: Tuple[Verdict, ...] = ()
    no_quorum: bool = False
    round: int = 0
    reputations: Dict[str, int] = field(default_factory=dict)

    @property
    def safe_score(self) -> Fraction:
        if self.total_weight == 0:
            return Fraction(0)
        return Fraction(self.safe_weight, self.total_weight)

    @property
    def consensus(self) -> Vote:
        return Vote.SAFE if self.approved else Vote.UNSAFE

    def voters(self, vote: Vote):
        return [v.auditor for v in self.verdicts if v.vote == vote]

    def digest(self) -> ContentHash:
        return content_hash(canonical_json(self.to_dict()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "safe_weight": self.safe_weight,
            "total_weight": self.total_weight,
            "approved": self.approved,
            "threshold_ppm": self.threshold_ppm,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "no_quorum": self.no_quorum,
            "round": self.round,
            "reputations": dict(self.reputations),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuditOutcome":
        return cls(
            skill_id=ContentHash.from_hex(data["skill_id"]),
            safe_weight=int(data["safe_weight"]),
            total_weight=int(data["total_weight"]),
            approved=bool(data["approved"]),
            threshold_ppm=int(data["threshold_ppm"]),
            verdicts=tuple(Verdict.from_dict(v) for v in data.get("verdicts", ())),
            no_quorum=bool(data.get("no_quorum", False)),
            round=int(data.get("round", 0)),
            reputations={k: int(v) for k, v in data.get("reputations", {}).items()},
        )
