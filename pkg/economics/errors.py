"""
SIGIL Economics - Errors
"""

from canon_crypto.errors import SigilError


class LedgerError(SigilError):
    code = "ledger-error"


class InvalidAmount(LedgerError):
    code = "invalid-amount"


class InsufficientFunds(LedgerError):
    code = "insufficient-funds"


class UnknownEscrow(LedgerError):
    code = "not-found"


class DuplicateEscrow(LedgerError):
    code = "duplicate-escrow"


class ConservationViolation(LedgerError):
    """Sum of balances, treasury and escrows no longer equals total supply."""

    code = "conservation-violation"


class PoolMismatch(LedgerError):
    code = "pool-mismatch"


class EmptyPool(LedgerError):
    code = "empty-pool"


class WrongSkillState(LedgerError):
    code = "wrong-state"


class NoBondFrozen(LedgerError):
    code = "no-bond-frozen"


class PurchaseExpired(LedgerError):
    code = "purchase-expired"


class InsufficientFee(LedgerError):
    code = "insufficient-fee"
