"""
SIGIL SVL Package
"""

from .loader import SkillVerificationLoader, access_check, load, retrieve_plaintext, verify_local
from .models import (
    LoadRefused,
    LoadRequest,
    LoadResult,
    LoadTarget,
    PermissionCheck,
    PermissionEnvelope,
    RefusalKind,
    UserScope,
    VerifiedSkill,
)
from .permissions import permission_check_single, permission_envelope

__all__ = [
    'SkillVerificationLoader',
    'access_check',
    'load',
    'retrieve_plaintext',
    'verify_local',
    'LoadRefused',
    'LoadRequest',
    'LoadResult',
    'LoadTarget',
    'PermissionCheck',
    'PermissionEnvelope',
    'RefusalKind',
    'UserScope',
    'VerifiedSkill',
    'permission_check_single',
    'permission_envelope',
]
