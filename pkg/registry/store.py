"""
SIGIL Registry - Skill Store
Pre-Registry (pending) and Skill Registry (approved) views over the log,
version chains and on-log key deliveries.
"""

import logging
import math
import threading
from collections import defaultdict
from typing import Callable, Dict, List, Optional, Set, Union

from audit.models import AuditOutcome
from canon_crypto import ContentHash, KeyContext, WrappedKey, content_hash, derive_skill_id

from .errors import (
    AmbiguousName,
    BrokenVersionChain,
    DuplicateSkill,
    MalformedPayload,
    NotApproved,
    NotPending,
    OutcomeNotApproved,
    PrevVersionForeign,
    PrevVersionNotFound,
    SkillNotFound,
    TimestampRegression,
    WrongPublicationType,
)
from .log import EventKind, LogEntry, RegistryLog, VerifyResult
from .models import (
    DeliveryRecord,
    PermissionManifest,
    PublicationType,
    SkillAuditEvent,
    SkillRecord,
    SkillStatus,
    looks_like_id,
    validate_name,
)

logger = logging.getLogger(__name__)

SkillRef = Union[str, ContentHash]


def estimate_tokens(content: bytes) -> int:
    """L_j estimate: one token per four bytes, rounded up."""
    return math.ceil(len(content) / 4)


class SkillRegistry:
    def __init__(self, log: Optional[RegistryLog] = None):
        self.log = log if log is not None else RegistryLog()
        self._records: Dict[ContentHash, SkillRecord] = {}
        self._deliveries: Dict[ContentHash, List[DeliveryRecord]] = defaultdict(list)
        self._promotion_order: List[ContentHash] = []
        self._revoked: Set[ContentHash] = set()
        self._last_timestamp: Dict[str, int] = {}
        self._callbacks: List[Callable[[SkillAuditEvent], None]] = []
        self._lock = threading.RLock()

    # ============================================
    # REPLAY
    # ============================================

    @classmethod
    def from_log(cls, log: RegistryLog) -> "SkillRegistry":
        """Rebuild registry state by replaying every entry of the log."""
        registry = cls(log)
        for entry in log:
            registry._replay(entry)
        logger.debug(f"[Registry] Replayed {len(log)} entries, {len(registry._records)} skills")
        return registry

    def _replay(self, entry: LogEntry):
        event = entry.event
        if entry.kind == EventKind.COMMIT:
            record = SkillRecord.from_dict(event["record"])
            self._store_commit(record.with_status(SkillStatus.PENDING, commit_index=entry.index))
        elif entry.kind == EventKind.PROMOTION:
            self._store_promotion(
                ContentHash.from_hex(event["skill_id"]),
                AuditOutcome.from_dict(event["outcome"]),
                entry.index,
            )
        elif entry.kind == EventKind.REJECTION:
            outcome = event.get("outcome")
            self._store_rejection(
                ContentHash.from_hex(event["skill_id"]),
                AuditOutcome.from_dict(outcome) if outcome else None,
            )
        elif entry.kind == EventKind.REVOCATION:
            self._revoked.add(ContentHash.from_hex(event["skill_id"]))
        elif entry.kind == EventKind.DELIVERY:
            skill_id = ContentHash.from_hex(event["skill_id"])
            self._deliveries[skill_id].append(DeliveryRecord(
                skill_id=skill_id,
                recipient=bytes.fromhex(event["recipient"]),
                wrapped=WrappedKey.from_hex(event["wrapped"]),
                log_index=entry.index,
            ))

    # ============================================
    # EVENTS
    # ============================================

    def add_callback(self, callback: Callable[[SkillAuditEvent], None]):
        """Register a listener for SkillAudit events."""
        self._callbacks.append(callback)

    def record_event(self, kind: EventKind, body: dict) -> LogEntry:
        """Append a non-registry protocol event (claims, settlements, ...)."""
        with self._lock:
            return self.log.append(kind, body)

    # ============================================
    # COMMIT / PROMOTE / REJECT
    # ============================================

    def commit_skill(
        self,
        developer: str,
        name: str,
        publication_type: PublicationType,
        payload_or_hash: Union[bytes, ContentHash],
        manifest: Union[PermissionManifest, dict],
        prev_version: Optional[ContentHash],
        timestamp: int,
        *,
        developer_key: bytes = b"",
        content_hash_value: Optional[ContentHash] = None,
        token_count: Optional[int] = None,
        price: int = 0,
    ) -> ContentHash:
        """Append a pending record to the log and emit a SkillAudit event."""
        validate_name(developer, "developer id")
        validate_name(name, "skill name")
        publication_type = PublicationType.parse(publication_type)
        if not isinstance(manifest, PermissionManifest):
            manifest = PermissionManifest.from_dict(manifest)
        if prev_version is not None and prev_version.is_null:
            prev_version = None
        if price < 0:
            raise MalformedPayload("Price cannot be negative")

        payload, digest = self._payload_for(publication_type, payload_or_hash, content_hash_value)

        with self._lock:
            if prev_version is not None:
                prev = self._records.get(prev_version)
                if prev is None:
                    raise PrevVersionNotFound(f"Previous version {prev_version.short()} not found")
                if prev.developer != developer or prev.name != name:
                    raise PrevVersionForeign(
                        f"Previous version {prev_version.short()} belongs to {prev.qualified_name}"
                    )
            last = self._last_timestamp.get(developer)
            if last is not None and timestamp < last:
                raise TimestampRegression(f"Timestamp {timestamp} precedes {last} for {developer}")

            id_payload = digest.digest if publication_type == PublicationType.COMMITTED else payload
            skill_id = derive_skill_id(id_payload, developer, prev_version, timestamp)
            if skill_id in self._records:
                raise DuplicateSkill(f"Skill {skill_id.short()} already committed")

            if token_count is None:
                token_count = estimate_tokens(payload or b"")
            record = SkillRecord(
                skill_id=skill_id,
                name=name,
                developer=developer,
                publication_type=publication_type,
                payload=payload,
                content_hash=digest,
                manifest=manifest,
                prev_version=prev_version,
                timestamp=int(timestamp),
                developer_key=bytes(developer_key),
                token_count=int(token_count),
                price=int(price),
            )
            entry = self.log.append(EventKind.COMMIT, {"record": record.to_dict()})
            record = record.with_status(SkillStatus.PENDING, commit_index=entry.index)
            self._store_commit(record)

        logger.info(
            f"[Registry] Committed {record.qualified_name} {skill_id.short()} "
            f"({publication_type.label}) at entry {entry.index}"
        )
        event = SkillAuditEvent(skill_id, name, developer, publication_type, record.timestamp, entry.index)
        for callback in list(self._callbacks):
            callback(event)
        return skill_id

    @staticmethod
    def _payload_for(publication_type, payload_or_hash, declared_hash):
        if publication_type == PublicationType.COMMITTED:
            raw = payload_or_hash.digest if isinstance(payload_or_hash, ContentHash) else payload_or_hash
            if not isinstance(raw, (bytes, bytearray)) or len(raw) != 32:
                raise MalformedPayload("Committed skills register exactly a 32-byte hash")
            digest = ContentHash(bytes(raw))
            if declared_hash is not None and declared_hash != digest:
                raise MalformedPayload("Declared content hash differs from committed hash")
            return None, digest

        if not isinstance(payload_or_hash, (bytes, bytearray)):
            raise MalformedPayload("Payload must be bytes")
        payload = bytes(payload_or_hash)
        if publication_type == PublicationType.TRANSPARENT:
            digest = content_hash(payload)
            if declared_hash is not None and declared_hash != digest:
                raise MalformedPayload("Declared content hash does not match plaintext")
            return payload, digest

        if declared_hash is None:
            raise MalformedPayload("Encrypted skills must declare the plaintext content hash")
        return payload, declared_hash

    def _store_commit(self, record: SkillRecord):
        self._records[record.skill_id] = record
        last = self._last_timestamp.get(record.developer, record.timestamp)
        self._last_timestamp[record.developer] = max(last, record.timestamp)

    def promote(self, skill_id: ContentHash, outcome: AuditOutcome) -> SkillRecord:
        """Move a pending skill into the Skill Registry."""
        with self._lock:
            record = self._require(skill_id)
            if record.status != SkillStatus.PENDING:
                raise NotPending(f"Skill {skill_id.short()} is {record.status.value}, not pending")
            if not outcome.approved:
                raise OutcomeNotApproved(f"Outcome for {skill_id.short()} is not an approval")
            if outcome.skill_id != skill_id:
                raise OutcomeNotApproved("Outcome refers to a different skill")
            if any(v.signature is None for v in outcome.verdicts):
                raise OutcomeNotApproved("Outcome carries unsigned verdicts")
            entry = self.log.append(EventKind.PROMOTION, {
                "skill_id": skill_id.hex(),
                "outcome": outcome.to_dict(),
            })
            promoted = self._store_promotion(skill_id, outcome, entry.index)
        logger.info(f"[Registry] Promoted {promoted.qualified_name} {skill_id.short()}")
        return promoted

    def _store_promotion(self, skill_id: ContentHash, outcome: AuditOutcome, index: int) -> SkillRecord:
        record = self._records[skill_id].with_status(
            SkillStatus.APPROVED, audit_report=outcome, promotion_index=index
        )
        self._records[skill_id] = record
        self._promotion_order.append(skill_id)
        return record

    def reject(self, skill_id: ContentHash, outcome: Optional[AuditOutcome] = None) -> SkillRecord:
        """Mark a pending skill rejected. It stays in the log, never loadable."""
        with self._lock:
            record = self._require(skill_id)
            if record.status != SkillStatus.PENDING:
                raise NotPending(f"Skill {skill_id.short()} is {record.status.value}, not pending")
            self.log.append(EventKind.REJECTION, {
                "skill_id": skill_id.hex(),
                "outcome": outcome.to_dict() if outcome else None,
            })
            rejected = self._store_rejection(skill_id, outcome)
        logger.info(f"[Registry] Rejected {rejected.qualified_name} {skill_id.short()}")
        return rejected

    def _store_rejection(self, skill_id: ContentHash, outcome: Optional[AuditOutcome]) -> SkillRecord:
        record = self._records[skill_id].with_status(SkillStatus.REJECTED, audit_report=outcome)
        self._records[skill_id] = record
        return record

    def revoke(self, skill_id: ContentHash, reason: str = "") -> None:
        """Withdraw an approved skill after a reversed re-audit."""
        with self._lock:
            record = self._require(skill_id)
            if record.status != SkillStatus.APPROVED:
                raise NotApproved(f"Skill {skill_id.short()} is not approved")
            if skill_id in self._revoked:
                return
            self.log.append(EventKind.REVOCATION, {"skill_id": skill_id.hex(), "reason": reason})
            self._revoked.add(skill_id)
        logger.warning(f"[Registry] Revoked {record.qualified_name} {skill_id.short()}: {reason}")

    def is_revoked(self, skill_id: ContentHash) -> bool:
        return skill_id in self._revoked

    # ============================================
    # LOOKUP
    # ============================================

    def _require(self, skill_id: ContentHash) -> SkillRecord:
        record = self._records.get(skill_id)
        if record is None:
            raise SkillNotFound(f"Unknown skill id {skill_id.short()}")
        return record

    def get_skill(self, ref: SkillRef, developer: Optional[str] = None) -> SkillRecord:
        """Resolve an id (any status) or a name (newest approved version).

        Names are `developer/name`, or a bare name scoped by `developer`.
        A bare name approved under several developers is ambiguous.
        """
        if isinstance(ref, ContentHash):
            return self._require(ref)
        ref = ref.strip()
        if looks_like_id(ref):
            return self._require(ContentHash.from_hex(ref))
        if "/" in ref:
            developer, _, name = ref.partition("/")
        else:
            name = ref

        candidates = [
            self._records[sid] for sid in reversed(self._promotion_order)
            if sid not in self._revoked
            and self._records[sid].name == name
            and (developer is None or self._records[sid].developer == developer)
        ]
        if not candidates:
            raise SkillNotFound(f"No approved skill named {ref!r}")
        owners = {c.developer for c in candidates}
        if len(owners) > 1:
            raise AmbiguousName(f"{name!r} is published by {sorted(owners)}; use developer/name")
        return candidates[0]

    def version_history(self, skill_id: ContentHash) -> List[SkillRecord]:
        """Oldest-first chain of versions ending at skill_id."""
        chain = [self._require(skill_id)]
        seen = {skill_id}
        while chain[-1].prev_version is not None:
            prev_id = chain[-1].prev_version
            record = self._records.get(prev_id)
            if record is None or prev_id in seen:
                raise BrokenVersionChain(f"Version chain of {skill_id.short()} broken at {prev_id.short()}")
            seen.add(prev_id)
            chain.append(record)
        chain.reverse()
        return chain

    def records(self) -> List[SkillRecord]:
        return list(self._records.values())

    def with_status(self, status: SkillStatus) -> List[SkillRecord]:
        return [r for r in self._records.values() if r.status == status]

    # ============================================
    # KEY DELIVERY
    # ============================================

    def post_key_delivery(self, skill_id: ContentHash, recipient: bytes, wrapped: WrappedKey) -> DeliveryRecord:
        with self._lock:
            record = self._require(skill_id)
            ptype = record.publication_type
            if ptype in (PublicationType.TRANSPARENT, PublicationType.COMMITTED):
                raise WrongPublicationType(f"{ptype.label} skills have no on-log key delivery")
            context = wrapped.context
            if context == KeyContext.AUDIT:
                if record.status == SkillStatus.REJECTED:
                    raise NotPending("Audit deliveries need a pending or approved skill")
            elif context == KeyContext.LICENSE:
                if ptype != PublicationType.LICENSED:
                    raise WrongPublicationType("License deliveries apply to Licensed skills only")
                if record.status != SkillStatus.APPROVED:
                    raise NotApproved(f"Skill {skill_id.short()} is not approved")
            elif context == KeyContext.SEALED:
                if ptype != PublicationType.SEALED:
                    raise WrongPublicationType("Sealed deliveries apply to Sealed skills only")
                if bytes(recipient) != record.developer_key:
                    raise WrongPublicationType("Sealed deliveries go to the developer only")
            else:
                raise WrongPublicationType(f"Unexpected delivery context {context.name}")

            entry = self.log.append(EventKind.DELIVERY, {
                "skill_id": skill_id.hex(),
                "recipient": bytes(recipient).hex(),
                "wrapped": wrapped.hex(),
                "context": context.name.lower(),
            })
            delivery = DeliveryRecord(skill_id, bytes(recipient), wrapped, entry.index)
            self._deliveries[skill_id].append(delivery)
        logger.info(f"[Registry] {context.name.lower()} key delivered for {skill_id.short()}")
        return delivery

    def deliveries_for(
        self,
        skill_id: ContentHash,
        recipient: bytes,
        context: Optional[KeyContext] = None,
    ) -> List[DeliveryRecord]:
        return [
            d for d in self._deliveries.get(skill_id, ())
            if d.recipient == bytes(recipient) and (context is None or d.context == context)
        ]

    def verify_log(self, **kwargs) -> VerifyResult:
        return self.log.verify(**kwargs)
