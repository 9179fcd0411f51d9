"""
SIGIL - Verdict Signatures
Ed25519 signatures over canonical verdict bytes.
"""

from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from .errors import MalformedSignature
from .keys import KeyPair

SIGNATURE_SIZE = 64


@dataclass(frozen=True)
class VerdictSignature:
    signature: bytes
    signer: bytes  # Ed25519 verify key of the signer

    def to_dict(self) -> dict:
        return {"signature": self.signature.hex(), "signer": self.signer.hex()}

    @classmethod
    def from_dict(cls, data: dict) -> "VerdictSignature":
        return cls(signature=bytes.fromhex(data["signature"]), signer=bytes.fromhex(data["signer"]))


def sign_verdict(verdict_bytes: bytes, keypair: KeyPair) -> VerdictSignature:
    signature = keypair.signing_key().sign(bytes(verdict_bytes))
    return VerdictSignature(signature=signature, signer=keypair.verify_key)


def verify_verdict(verdict_bytes: bytes, sig: VerdictSignature, public_key: bytes) -> bool:
    """True iff `sig` is a valid signature by `public_key` over the exact bytes."""
    if len(sig.signature) != SIGNATURE_SIZE:
        raise MalformedSignature(f"Signature must be {SIGNATURE_SIZE} bytes")
    try:
        verifier = Ed25519PublicKey.from_public_bytes(bytes(public_key))
    except ValueError as e:
        raise MalformedSignature(f"Bad verify key: {e}") from e
    try:
        verifier.verify(sig.signature, bytes(verdict_bytes))
    except InvalidSignature:
        return False
    return True
