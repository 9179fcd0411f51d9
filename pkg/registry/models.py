"""
SIGIL Registry - Data Models
Publication types, permission manifests, skill records and key deliveries.
"""

import re
from dataclasses import asdict, dataclass, replace
from enum import Enum, IntEnum
from typing import Any, Dict, FrozenSet, Iterable, Optional

from audit.models import AuditOutcome
from canon_crypto import ContentHash, WrappedKey

from .errors import InvalidName, MalformedManifest

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]{0,127}$")
_HEX_ID_RE = re.compile(r"^[0-9a-fA-F]{64}$")


class PublicationType(IntEnum):
    TRANSPARENT = 0
    LICENSED = 1
    SEALED = 2
    COMMITTED = 3

    @classmethod
    def parse(cls, value) -> "PublicationType":
        if isinstance(value, PublicationType):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(
                f"Unknown publication type: {value!r} "
                "(expected transparent, licensed, sealed or committed)"
            )

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def confidential(self) -> bool:
        """Content is not public on the log; auditors must post a bond."""
        return self != PublicationType.TRANSPARENT


class SkillStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"


def looks_like_id(value: str) -> bool:
    return bool(_HEX_ID_RE.match(value))


def validate_name(value: str, what: str = "name") -> str:
    if not isinstance(value, str) or not _NAME_RE.match(value) or looks_like_id(value):
        raise InvalidName(f"Invalid {what}: {value!r}")
    return value


def _identifier_set(values: Iterable[Any], what: str) -> FrozenSet[str]:
    if isinstance(values, (str, bytes)):
        raise MalformedManifest(f"{what} must be a list of strings")
    out = set()
    for item in values:
        if not isinstance(item, str) or not item.strip():
            raise MalformedManifest(f"{what} entries must be nonempty strings, got {item!r}")
        out.add(item)
    return frozenset(out)


@dataclass(frozen=True)
class PermissionManifest:
    """M = (declared tools, data scopes, behavior bounds)."""

    declared_tools: FrozenSet[str] = frozenset()
    data_scope: FrozenSet[str] = frozenset()
    behavior_bounds: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "declared_tools", _identifier_set(self.declared_tools, "declared_tools"))
        object.__setattr__(self, "data_scope", _identifier_set(self.data_scope, "data_scope"))
        object.__setattr__(self, "behavior_bounds", _identifier_set(self.behavior_bounds, "behavior_bounds"))

    def to_dict(self) -> Dict[str, list]:
        return {
            "tools": sorted(self.declared_tools),
            "scopes": sorted(self.data_scope),
            "bounds": sorted(self.behavior_bounds),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PermissionManifest":
        if not isinstance(data, dict):
            raise MalformedManifest("Manifest must be an object")
        unknown = set(data) - {"tools", "scopes", "bounds"}
        if unknown:
            raise MalformedManifest(f"Unknown manifest keys: {sorted(unknown)}")
        return cls(
            declared_tools=data.get("tools", ()),
            data_scope=data.get("scopes", ()),
            behavior_bounds=data.get("bounds", ()),
        )


@dataclass(frozen=True)
class SkillRecord:
    skill_id: ContentHash
    name: str
    developer: str
    publication_type: PublicationType
    payload: Optional[bytes]
    content_hash: ContentHash
    manifest: PermissionManifest
    prev_version: Optional[ContentHash]
    timestamp: int
    status: SkillStatus = SkillStatus.PENDING
    audit_report: Optional[AuditOutcome] = None
    developer_key: bytes = b""
    token_count: int = 0
    price: int = 0
    commit_index: int = -1
    promotion_index: Optional[int] = None

    @property
    def qualified_name(self) -> str:
        return f"{self.developer}/{self.name}"

    def id_payload(self) -> bytes:
        """The bytes hashed into skill_id: payload, or the hash for Committed."""
        if self.publication_type == PublicationType.COMMITTED:
            return self.content_hash.digest
        return self.payload or b""

    def with_status(self, status: SkillStatus, **changes) -> "SkillRecord":
        return replace(self, status=status, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "name": self.name,
            "developer": self.developer,
            "publication_type": self.publication_type.label,
            "payload": self.payload.hex() if self.payload is not None else None,
            "content_hash": self.content_hash.hex(),
            "manifest": self.manifest.to_dict(),
            "prev_version": self.prev_version.hex() if self.prev_version else None,
            "timestamp": self.timestamp,
            "developer_key": self.developer_key.hex(),
            "token_count": self.token_count,
            "price": self.price,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SkillRecord":
        payload = data.get("payload")
        prev = data.get("prev_version")
        return cls(
            skill_id=ContentHash.from_hex(data["skill_id"]),
            name=data["name"],
            developer=data["developer"],
            publication_type=PublicationType.parse(data["publication_type"]),
            payload=bytes.fromhex(payload) if payload is not None else None,
            content_hash=ContentHash.from_hex(data["content_hash"]),
            manifest=PermissionManifest.from_dict(data["manifest"]),
            prev_version=ContentHash.from_hex(prev) if prev else None,
            timestamp=int(data["timestamp"]),
            developer_key=bytes.fromhex(data.get("developer_key", "")),
            token_count=int(data.get("token_count", 0)),
            price=int(data.get("price", 0)),
        )


@dataclass(frozen=True)
class DeliveryRecord:
    skill_id: ContentHash
    recipient: bytes
    wrapped: WrappedKey
    log_index: int

    @property
    def context(self):
        return self.wrapped.context

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "recipient": self.recipient.hex(),
            "context": self.context.name.lower(),
            "log_index": self.log_index,
        }


@dataclass(frozen=True)
class SkillAuditEvent:
    """Emitted when a skill enters the Pre-Registry and needs auditors."""

    skill_id: ContentHash
    name: str
    developer: str
    publication_type: PublicationType
    timestamp: int
    log_index: int

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["skill_id"] = self.skill_id.hex()
        data["publication_type"] = self.publication_type.label
        return data
