"""
SIGIL - Key Pairs
One 32-byte secret per identity. The X25519 key is used for ECDH key
delivery; an Ed25519 signing key is derived from the same secret for
verdict signatures.
"""

import hashlib
import os
from dataclasses import dataclass, field
from typing import Union

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey

from .errors import InvalidPeerKey

KEY_SIZE = 32
_SIGNING_LABEL = b"sigil/ed25519"

_RAW = dict(encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw)


def _x25519_public(secret_key: bytes) -> bytes:
    return X25519PrivateKey.from_private_bytes(secret_key).public_key().public_bytes(**_RAW)


def _signing_key(secret_key: bytes) -> Ed25519PrivateKey:
    seed = hashlib.sha256(_SIGNING_LABEL + secret_key).digest()
    return Ed25519PrivateKey.from_private_bytes(seed)


@dataclass(frozen=True)
class KeyPair:
    """X25519 key pair plus the derived Ed25519 verify key.

    `public_key` and `verify_key` are derived from `secret_key`; the
    secret never appears in repr().
    """

    secret_key: bytes = field(repr=False)
    public_key: bytes = b""
    verify_key: bytes = b""

    def __post_init__(self):
        if len(self.secret_key) != KEY_SIZE:
            raise ValueError(f"Secret key must be {KEY_SIZE} bytes")
        object.__setattr__(self, "public_key", _x25519_public(self.secret_key))
        object.__setattr__(
            self, "verify_key", _signing_key(self.secret_key).public_key().public_bytes(**_RAW)
        )

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls(os.urandom(KEY_SIZE))

    @classmethod
    def from_secret(cls, secret_key: bytes) -> "KeyPair":
        return cls(bytes(secret_key))

    def signing_key(self) -> Ed25519PrivateKey:
        return _signing_key(self.secret_key)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.public_key).hexdigest()[:16]


def ecdh_shared_secret(own_secret: Union[bytes, "KeyPair"], peer_public: bytes) -> bytes:
    """X25519 shared secret. Symmetric: ecdh(a, B) == ecdh(b, A)."""
    if isinstance(own_secret, KeyPair):
        own_secret = own_secret.secret_key
    peer_public = bytes(peer_public)
    if len(peer_public) != KEY_SIZE or peer_public == bytes(KEY_SIZE):
        raise InvalidPeerKey("Peer public key is malformed or all-zero")
    try:
        peer = X25519PublicKey.from_public_bytes(peer_public)
        shared = X25519PrivateKey.from_private_bytes(own_secret).exchange(peer)
    except ValueError as e:
        # cryptography rejects low-order points that give an all-zero secret
        raise InvalidPeerKey(f"Peer public key rejected: {e}") from e
    return shared
