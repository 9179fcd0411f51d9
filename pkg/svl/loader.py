"""
SIGIL SVL - Skill Verification Loader
The only path from a load request to skill content in an agent context.

    Step 8   resolve, approval, access check
    Step 9   retrieve plaintext (per publication type)
    Step 10  integrity: H(plaintext) == content_hash
    Step 11  permission check / envelope
    Step 12  release

Any refusal aborts the whole request; nothing is released partially.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

from canon_crypto import (
    AuthenticationFailed,
    CryptoError,
    KeyContext,
    KeyPair,
    content_hash,
    decrypt_content,
    derive_delivery_key,
    ecdh_shared_secret,
    license_binding,
    sealed_binding,
    unwrap_content_key,
)
from registry.errors import AmbiguousName, SkillNotFound
from registry.models import PublicationType, SkillRecord, SkillStatus
from registry.store import SkillRegistry

from .models import (
    LoadRefused,
    LoadRequest,
    LoadResult,
    LoadTarget,
    PermissionEnvelope,
    Provenance,
    RefusalKind,
    VerifiedSkill,
)
from .permissions import permission_check_single, permission_envelope

logger = logging.getLogger(__name__)

STEP_ACCESS = 8
STEP_RETRIEVE = 9
STEP_VERIFY = 10
STEP_PERMISSION = 11


def _refuse(kind: RefusalKind, step: int, record_or_label, message: str, **excess) -> LoadRefused:
    label = record_or_label.skill_id.hex() if isinstance(record_or_label, SkillRecord) else str(record_or_label)
    logger.warning(f"[SVL] Refused {label[:12]} at step {step}: {kind.value} ({message})")
    return LoadRefused(kind, step, label, message, **excess)


def _requester_key(requester: Optional[KeyPair]) -> Optional[bytes]:
    return requester.public_key if requester is not None else None


# ============================================
# STEP 8
# ============================================

def resolve(registry: SkillRegistry, target: LoadTarget) -> SkillRecord:
    try:
        record = registry.get_skill(target.ref)
    except (SkillNotFound, AmbiguousName) as e:
        raise _refuse(RefusalKind.NOT_FOUND, STEP_ACCESS, target.label, str(e))
    if record.status != SkillStatus.APPROVED:
        raise _refuse(RefusalKind.NOT_APPROVED, STEP_ACCESS, record, f"status is {record.status.value}")
    if registry.is_revoked(record.skill_id):
        raise _refuse(RefusalKind.NOT_APPROVED, STEP_ACCESS, record, "approval was revoked")
    return record


def access_check(
    registry: SkillRegistry,
    record: SkillRecord,
    requester: Optional[KeyPair],
    has_local: bool = False,
) -> bool:
    """Type-specific gate. Sealed access is proven by decryption in step 9."""
    ptype = record.publication_type
    if ptype == PublicationType.COMMITTED:
        if not has_local:
            raise _refuse(RefusalKind.ACCESS_DENIED, STEP_ACCESS, record, "Committed skills load from a local file")
        return True
    if has_local:
        raise _refuse(RefusalKind.ACCESS_DENIED, STEP_ACCESS, record,
                      f"{ptype.label} skills are not loaded from local files")
    if ptype == PublicationType.LICENSED:
        pk = _requester_key(requester)
        if pk is None or not registry.deliveries_for(record.skill_id, pk, KeyContext.LICENSE):
            raise _refuse(RefusalKind.ACCESS_DENIED, STEP_ACCESS, record, "no license delivery for this requester")
    return True


# ============================================
# STEPS 9-10
# ============================================

def _decrypt(record: SkillRecord, delivery_key: bytes, wrapped) -> bytes:
    try:
        content_key = unwrap_content_key(wrapped, delivery_key, record.skill_id)
        return decrypt_content(record.payload or b"", content_key, record.content_hash.digest)
    except (AuthenticationFailed, CryptoError) as e:
        raise _refuse(RefusalKind.DECRYPTION_FAILURE, STEP_RETRIEVE, record, str(e))


def read_local(target: LoadTarget, record: SkillRecord) -> Optional[bytes]:
    """In-memory content wins; otherwise the file at local_path, read once."""
    if target.local_content is not None or target.local_path is None:
        return target.local_content
    try:
        return Path(target.local_path).read_bytes()
    except OSError as e:
        raise _refuse(RefusalKind.ACCESS_DENIED, STEP_RETRIEVE, record,
                      f"cannot read {target.local_path}: {e.strerror or e}")


def retrieve_plaintext(
    registry: SkillRegistry,
    record: SkillRecord,
    requester: Optional[KeyPair],
    local_content: Optional[bytes] = None,
) -> bytes:
    ptype = record.publication_type
    if ptype == PublicationType.TRANSPARENT:
        return record.payload or b""
    if ptype == PublicationType.COMMITTED:
        return bytes(local_content or b"")
    if requester is None:
        raise _refuse(RefusalKind.DECRYPTION_FAILURE, STEP_RETRIEVE, record, "no requester key")

    pk_d = record.developer_key
    if ptype == PublicationType.LICENSED:
        deliveries = registry.deliveries_for(record.skill_id, requester.public_key, KeyContext.LICENSE)
        binding = license_binding(record.skill_id, requester.public_key, pk_d)
        context = KeyContext.LICENSE
    else:
        deliveries = registry.deliveries_for(record.skill_id, pk_d, KeyContext.SEALED)
        binding = sealed_binding(record.skill_id)
        context = KeyContext.SEALED
    if not deliveries:
        raise _refuse(RefusalKind.DECRYPTION_FAILURE, STEP_RETRIEVE, record, "no wrapped key on the log")
    try:
        shared = ecdh_shared_secret(requester.secret_key, pk_d)
    except CryptoError as e:
        raise _refuse(RefusalKind.DECRYPTION_FAILURE, STEP_RETRIEVE, record, str(e))
    delivery_key = derive_delivery_key(shared, context, binding)
    return _decrypt(record, delivery_key, deliveries[-1].wrapped)


def verify_local(local_content: bytes, record: SkillRecord) -> bool:
    if content_hash(local_content) != record.content_hash:
        raise _refuse(RefusalKind.INTEGRITY_MISMATCH, STEP_VERIFY, record, "content hash mismatch")
    return True


# ============================================
# LOADER
# ============================================

class SkillVerificationLoader:
    """Read-only against the registry; safe to share between callers."""

    def __init__(self, registry: SkillRegistry):
        self.registry = registry

    def load(self, request: LoadRequest) -> LoadResult:
        staged: List[Tuple[SkillRecord, bytes]] = []
        for target in request.targets:
            record = resolve(self.registry, target)
            access_check(self.registry, record, request.requester, target.has_local)
            plaintext = retrieve_plaintext(self.registry, record, request.requester, read_local(target, record))
            verify_local(plaintext, record)
            staged.append((record, plaintext))

        manifests = [record.manifest for record, _ in staged]
        if len(manifests) == 1:
            check = permission_check_single(manifests[0], request.user_scope)
            envelope, _ = permission_envelope(manifests, request.user_scope)
        else:
            envelope, check = permission_envelope(manifests, request.user_scope)
        if not check.ok:
            culprit = self._culprit(staged, check)
            raise _refuse(
                RefusalKind.PERMISSION_EXCEEDED, STEP_PERMISSION, culprit,
                "permissions exceed the user scope",
                excess_tools=check.excess_tools, excess_scopes=check.excess_scopes,
            )

        skills = tuple(self._release(record, plaintext, envelope) for record, plaintext in staged)
        logger.info(f"[SVL] Released {len(skills)} skill(s) to {request.requester_id or 'requester'}")
        return LoadResult(skills=skills, envelope=envelope)

    @staticmethod
    def _culprit(staged, check) -> SkillRecord:
        for record, _ in staged:
            if (record.manifest.declared_tools & check.excess_tools
                    or record.manifest.data_scope & check.excess_scopes):
                return record
        return staged[0][0]

    @staticmethod
    def _release(record: SkillRecord, plaintext: bytes, envelope: PermissionEnvelope) -> VerifiedSkill:
        outcome = record.audit_report
        return VerifiedSkill(
            skill_id=record.skill_id,
            name=record.name,
            developer=record.developer,
            publication_type=record.publication_type,
            content=plaintext,
            manifest=record.manifest,
            envelope=envelope,
            provenance=Provenance(
                commit_index=record.commit_index,
                promotion_index=record.promotion_index,
                outcome_digest=outcome.digest().hex() if outcome is not None else None,
            ),
        )


def load(registry: SkillRegistry, request: LoadRequest) -> LoadResult:
    return SkillVerificationLoader(registry).load(request)
