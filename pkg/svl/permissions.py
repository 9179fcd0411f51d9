"""
SIGIL SVL - Permission Algebra

    single skill:  T_j ⊆ T_user and D_j ⊆ D_user
    multi skill:   T∩ = ∩T_i, D∩ = ∩D_i, B∩ = ∪B_i (every bound holds)
                   TΔ = ∪T_i - T∩, DΔ = ∪D_i - D∩ (default-deny)
                   pass iff T∩ ⊆ T_user and D∩ ⊆ D_user
"""

from functools import reduce
from typing import FrozenSet, Iterable, Sequence, Tuple

from registry.models import PermissionManifest

from .models import PermissionCheck, PermissionEnvelope, UserScope


def permission_check_single(manifest: PermissionManifest, user_scope: UserScope) -> PermissionCheck:
    return PermissionCheck(
        excess_tools=manifest.declared_tools - user_scope.tools,
        excess_scopes=manifest.data_scope - user_scope.scopes,
    )


def _meet(sets: Iterable[FrozenSet[str]]) -> FrozenSet[str]:
    return reduce(frozenset.intersection, sets)


def _join(sets: Iterable[FrozenSet[str]]) -> FrozenSet[str]:
    return reduce(frozenset.union, sets, frozenset())


def permission_envelope(
    manifests: Sequence[PermissionManifest],
    user_scope: UserScope,
) -> Tuple[PermissionEnvelope, PermissionCheck]:
    if not manifests:
        raise ValueError("At least one manifest is required")
    tools = [m.declared_tools for m in manifests]
    scopes = [m.data_scope for m in manifests]
    common_tools, common_scopes = _meet(tools), _meet(scopes)
    envelope = PermissionEnvelope(
        granted_tools=common_tools,
        granted_scopes=common_scopes,
        granted_bounds=_join(m.behavior_bounds for m in manifests),
        escalation_tools=_join(tools) - common_tools,
        escalation_scopes=_join(scopes) - common_scopes,
    )
    check = PermissionCheck(
        excess_tools=common_tools - user_scope.tools,
        excess_scopes=common_scopes - user_scope.scopes,
    )
    return envelope, check
