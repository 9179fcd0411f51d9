"""
SIGIL Registry Package
"""

from .errors import LogCorrupt, RegistryError, SkillNotFound
from .log import EventKind, LogEntry, RegistryLog, VerifyResult, scan_log_bytes
from .models import (
    DeliveryRecord,
    PermissionManifest,
    PublicationType,
    SkillAuditEvent,
    SkillRecord,
    SkillStatus,
)
from .store import SkillRegistry, estimate_tokens

__all__ = [
    'LogCorrupt',
    'RegistryError',
    'SkillNotFound',
    'EventKind',
    'LogEntry',
    'RegistryLog',
    'VerifyResult',
    'scan_log_bytes',
    'DeliveryRecord',
    'PermissionManifest',
    'PublicationType',
    'SkillAuditEvent',
    'SkillRecord',
    'SkillStatus',
    'SkillRegistry',
    'estimate_tokens',
]
