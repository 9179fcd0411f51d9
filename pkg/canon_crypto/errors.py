"""
SIGIL - Error Types
Base exception shared by every package, plus the crypto-layer failures.
"""


class SigilError(Exception):
    """Root of every protocol error. `code` is stable and machine readable."""

    code = "sigil-error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class CryptoError(SigilError):
    code = "crypto-error"


class EncodingError(CryptoError):
    code = "encoding-error"


class InvalidPeerKey(CryptoError):
    """Peer public key is malformed, all-zero or of low order."""

    code = "invalid-peer-key"


class AuthenticationFailed(CryptoError):
    """AEAD tag check failed: wrong key, wrong context or tampered bytes."""

    code = "authentication-failed"


class MalformedSignature(CryptoError):
    code = "malformed-signature"
