"""
SIGIL Protocol - Errors
"""

from canon_crypto.errors import SigilError


class ProtocolError(SigilError):
    code = "protocol-error"


class KeyMismatch(ProtocolError):
    """The supplied keypair is not the one recorded for this role."""

    code = "access-denied"


class UnknownPurchase(ProtocolError):
    code = "not-found"


class UnknownChallenge(ProtocolError):
    code = "not-found"


class MonitoringWindowOpen(ProtocolError):
    code = "wrong-state"


class AlreadyMonitored(ProtocolError):
    code = "wrong-state"


class DuplicatePurchase(ProtocolError):
    code = "duplicate-purchase"


class ChallengePending(ProtocolError):
    code = "wrong-state"
