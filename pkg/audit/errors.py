"""
SIGIL Audit - Errors
"""

from canon_crypto.errors import SigilError


class AuditError(SigilError):
    code = "audit-error"


class UnknownAuditor(AuditError):
    code = "not-found"


class DuplicateAuditor(AuditError):
    code = "duplicate-auditor"


class StakeBelowMinimum(AuditError):
    code = "stake-below-minimum"


class InactiveAuditor(AuditError):
    code = "inactive-auditor"


class UnknownTask(AuditError):
    code = "not-found"


class WrongTaskState(AuditError):
    code = "wrong-state"


class DuplicateClaim(AuditError):
    code = "duplicate-claim"


class BondRequired(AuditError):
    """Off-log publication types need a confidentiality bond."""

    code = "bond-required"


class BondNotApplicable(AuditError):
    code = "bond-not-applicable"


class DepositTooSmall(AuditError):
    code = "deposit-too-small"


class NotAClaimant(AuditError):
    code = "not-a-claimant"


class BadSignature(AuditError):
    code = "bad-signature"


class DuplicateVerdict(AuditError):
    code = "duplicate-verdict"


class NoQuorum(AuditError):
    """Every verdict abstained, or the non-abstaining weight is zero."""

    code = "no-quorum"


class NoBondHeld(AuditError):
    code = "no-bond-held"


class ContentMismatch(AuditError):
    """Decrypted audit content does not hash to the registered content_hash."""

    code = "integrity-mismatch"
