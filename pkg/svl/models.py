"""
SIGIL SVL - Models
Load requests, permission envelopes, verified skills and typed refusals.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Tuple, Union

from canon_crypto import ContentHash, KeyPair, SigilError
from registry.models import PermissionManifest, PublicationType

SCHEMA = "sigil-load/1"


class RefusalKind(str, Enum):
    NOT_FOUND = "not-found"
    NOT_APPROVED = "not-approved"
    ACCESS_DENIED = "access-denied"
    DECRYPTION_FAILURE = "decryption-failure"
    INTEGRITY_MISMATCH = "integrity-mismatch"
    PERMISSION_EXCEEDED = "permission-exceeded"


class LoadRefused(SigilError):
    """A load aborted at `step` (8-11) on `skill`; nothing was released."""

    code = "load-refused"

    def __init__(
        self,
        kind: RefusalKind,
        step: int,
        skill: str,
        message: str = "",
        excess_tools: FrozenSet[str] = frozenset(),
        excess_scopes: FrozenSet[str] = frozenset(),
    ):
        self.kind = RefusalKind(kind)
        self.code = self.kind.value
        self.step = step
        self.skill = skill
        self.excess_tools = frozenset(excess_tools)
        self.excess_scopes = frozenset(excess_scopes)
        super().__init__(message or f"{self.kind.value} at step {step} for {skill}")

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "refused": self.kind.value,
            "step": self.step,
            "skill": self.skill,
            "message": str(self),
        }
        if self.kind == RefusalKind.PERMISSION_EXCEEDED:
            data["excess_tools"] = sorted(self.excess_tools)
            data["excess_scopes"] = sorted(self.excess_scopes)
        return data


@dataclass(frozen=True)
class UserScope:
    """(T_user, D_user): what the requesting user authorizes."""

    tools: FrozenSet[str] = frozenset()
    scopes: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "tools", frozenset(self.tools))
        object.__setattr__(self, "scopes", frozenset(self.scopes))

    def widen(self, tools=(), scopes=()) -> "UserScope":
        return UserScope(self.tools | frozenset(tools), self.scopes | frozenset(scopes))

    def to_dict(self) -> Dict[str, list]:
        return {"tools": sorted(self.tools), "scopes": sorted(self.scopes)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UserScope":
        unknown = set(data) - {"tools", "scopes"}
        if unknown:
            raise ValueError(f"Unknown scope keys: {sorted(unknown)}")
        return cls(frozenset(data.get("tools", ())), frozenset(data.get("scopes", ())))


@dataclass(frozen=True)
class LoadTarget:
    ref: Union[str, ContentHash]
    local_path: Optional[str] = None
    local_content: Optional[bytes] = None

    @property
    def has_local(self) -> bool:
        return self.local_content is not None or self.local_path is not None

    @property
    def label(self) -> str:
        return self.ref.hex() if isinstance(self.ref, ContentHash) else str(self.ref)


@dataclass(frozen=True)
class LoadRequest:
    targets: Tuple[LoadTarget, ...]
    requester: Optional[KeyPair] = None
    user_scope: UserScope = field(default_factory=UserScope)
    requester_id: str = ""

    def __post_init__(self):
        targets = tuple(
            t if isinstance(t, LoadTarget) else LoadTarget(t) for t in self.targets
        )
        if not targets:
            raise ValueError("A load request needs at least one target")
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class PermissionCheck:
    """Outcome of a subset test; excess sets are what the user must authorize."""

    excess_tools: FrozenSet[str] = frozenset()
    excess_scopes: FrozenSet[str] = frozenset()

    @property
    def ok(self) -> bool:
        return not self.excess_tools and not self.excess_scopes

    @property
    def escalation_required(self) -> bool:
        return not self.ok

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class PermissionEnvelope:
    granted_tools: FrozenSet[str] = frozenset()
    granted_scopes: FrozenSet[str] = frozenset()
    granted_bounds: FrozenSet[str] = frozenset()
    escalation_tools: FrozenSet[str] = frozenset()
    escalation_scopes: FrozenSet[str] = frozenset()

    def to_dict(self) -> Dict[str, list]:
        return {
            "granted_tools": sorted(self.granted_tools),
            "granted_scopes": sorted(self.granted_scopes),
            "granted_bounds": sorted(self.granted_bounds),
            "escalation_tools": sorted(self.escalation_tools),
            "escalation_scopes": sorted(self.escalation_scopes),
        }


@dataclass(frozen=True)
class Provenance:
    commit_index: int
    promotion_index: Optional[int]
    outcome_digest: Optional[str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "commit_index": self.commit_index,
            "promotion_index": self.promotion_index,
            "outcome_digest": self.outcome_digest,
        }


@dataclass(frozen=True)
class VerifiedSkill:
    skill_id: ContentHash
    name: str
    developer: str
    publication_type: PublicationType
    content: bytes
    manifest: PermissionManifest
    envelope: PermissionEnvelope
    provenance: Provenance

    def to_dict(self) -> Dict[str, Any]:
        try:
            content, encoding = self.content.decode("utf-8"), "utf-8"
        except UnicodeDecodeError:
            content, encoding = self.content.hex(), "hex"
        return {
            "skill_id": self.skill_id.hex(),
            "name": self.name,
            "developer": self.developer,
            "publication_type": self.publication_type.label,
            "content": content,
            "content_encoding": encoding,
            "manifest": self.manifest.to_dict(),
            "provenance": self.provenance.to_dict(),
        }


@dataclass(frozen=True)
class LoadResult:
    skills: Tuple[VerifiedSkill, ...]
    envelope: PermissionEnvelope

    def __iter__(self):
        return iter(self.skills)

    def __len__(self) -> int:
        return len(self.skills)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA,
            "skills": [s.to_dict() for s in self.skills],
            "envelope": self.envelope.to_dict(),
        }
