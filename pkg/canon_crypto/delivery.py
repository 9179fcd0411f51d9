"""
SIGIL - Key Delivery
HKDF-derived delivery keys and AES-256-GCM wrapping for the three
domain-separated flows (audit, license, sealed), plus content encryption.

Serialized blobs (wrapped keys and content ciphertexts):
    context byte | 12-byte nonce | ciphertext+tag
"""

import os
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .encoding import canonical_encode
from .errors import AuthenticationFailed, EncodingError
from .hashing import ContentHash

NONCE_SIZE = 12
KEY_SIZE = 32
_INFO_PREFIX = b"sigil/"


class KeyContext(IntEnum):
    CONTENT = 0
    AUDIT = 1
    LICENSE = 2
    SEALED = 3

    @property
    def label(self) -> bytes:
        return self.name.lower().encode("ascii")


def _digest(value) -> bytes:
    return value.digest if isinstance(value, ContentHash) else bytes(value)


def audit_binding(skill_id, auditor_public: bytes, developer_public: bytes) -> bytes:
    return canonical_encode([_digest(skill_id), bytes(auditor_public), bytes(developer_public)])


def license_binding(skill_id, buyer_public: bytes, developer_public: bytes) -> bytes:
    return canonical_encode([_digest(skill_id), bytes(buyer_public), bytes(developer_public)])


def sealed_binding(skill_id) -> bytes:
    return canonical_encode([_digest(skill_id)])


def derive_delivery_key(shared: bytes, context: KeyContext, binding: bytes) -> bytes:
    """HKDF-SHA256(shared, info = "sigil/" + context + 0x00 + binding)."""
    context = KeyContext(context)
    if context == KeyContext.CONTENT:
        raise ValueError("Content context is not a delivery flow")
    info = _INFO_PREFIX + context.label + b"\x00" + bytes(binding)
    hkdf = HKDF(algorithm=hashes.SHA256(), length=KEY_SIZE, salt=None, info=info)
    return hkdf.derive(bytes(shared))


def new_content_key() -> bytes:
    return AESGCM.generate_key(bit_length=256)


@dataclass(frozen=True)
class WrappedKey:
    ciphertext: bytes
    nonce: bytes
    context: KeyContext

    def to_bytes(self) -> bytes:
        return bytes([int(self.context)]) + self.nonce + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> "WrappedKey":
        context, nonce, ciphertext = _split_blob(data)
        return cls(ciphertext=ciphertext, nonce=nonce, context=context)

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_hex(cls, value: str) -> "WrappedKey":
        return cls.from_bytes(bytes.fromhex(value))


def _split_blob(data: bytes):
    data = bytes(data)
    if len(data) < 1 + NONCE_SIZE + 16:
        raise EncodingError("Blob too short")
    try:
        context = KeyContext(data[0])
    except ValueError as e:
        raise EncodingError(f"Unknown key context byte 0x{data[0]:02x}") from e
    return context, data[1:1 + NONCE_SIZE], data[1 + NONCE_SIZE:]


def _wrap_aad(context: KeyContext, skill_id) -> bytes:
    return bytes([int(context)]) + _digest(skill_id)


def wrap_content_key(
    content_key: bytes,
    delivery_key: bytes,
    context: KeyContext,
    skill_id,
    nonce: Optional[bytes] = None,
) -> WrappedKey:
    """Encrypt k_content under a delivery key, bound to (context, skill_id)."""
    context = KeyContext(context)
    nonce = nonce if nonce is not None else os.urandom(NONCE_SIZE)
    ciphertext = AESGCM(delivery_key).encrypt(nonce, bytes(content_key), _wrap_aad(context, skill_id))
    return WrappedKey(ciphertext=ciphertext, nonce=nonce, context=context)


def unwrap_content_key(wrapped: WrappedKey, delivery_key: bytes, skill_id) -> bytes:
    try:
        return AESGCM(delivery_key).decrypt(
            wrapped.nonce, wrapped.ciphertext, _wrap_aad(wrapped.context, skill_id)
        )
    except (InvalidTag, ValueError) as e:
        raise AuthenticationFailed("Key unwrap failed") from e


def encrypt_content(
    plaintext: bytes,
    content_key: bytes,
    associated_data: bytes = b"",
    nonce: Optional[bytes] = None,
) -> bytes:
    """AES-256-GCM over an arbitrary payload. Returns the serialized blob."""
    nonce = nonce if nonce is not None else os.urandom(NONCE_SIZE)
    ciphertext = AESGCM(content_key).encrypt(nonce, bytes(plaintext), associated_data or None)
    return bytes([int(KeyContext.CONTENT)]) + nonce + ciphertext


def decrypt_content(blob: bytes, content_key: bytes, associated_data: bytes = b"") -> bytes:
    try:
        context, nonce, ciphertext = _split_blob(blob)
    except EncodingError as e:
        raise AuthenticationFailed(str(e)) from e
    if context != KeyContext.CONTENT:
        raise AuthenticationFailed("Blob is not a content ciphertext")
    try:
        return AESGCM(content_key).decrypt(nonce, ciphertext, associated_data or None)
    except (InvalidTag, ValueError) as e:
        raise AuthenticationFailed("Content decryption failed") from e
