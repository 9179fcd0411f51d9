"""
SIGIL - Content Addressing
SHA-256 digests for skill content, skill identifiers and log chaining.
"""

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

from .encoding import canonical_encode
from .errors import EncodingError

DIGEST_SIZE = 32
NULL_DIGEST = bytes(DIGEST_SIZE)


@dataclass(frozen=True, order=True)
class ContentHash:
    """A 32-byte digest."""

    digest: bytes

    def __post_init__(self):
        if not isinstance(self.digest, (bytes, bytearray)) or len(self.digest) != DIGEST_SIZE:
            raise EncodingError(f"ContentHash must be exactly {DIGEST_SIZE} bytes")
        object.__setattr__(self, "digest", bytes(self.digest))

    @classmethod
    def null(cls) -> "ContentHash":
        return cls(NULL_DIGEST)

    @classmethod
    def from_hex(cls, value: str) -> "ContentHash":
        try:
            raw = bytes.fromhex(value)
        except ValueError as e:
            raise EncodingError(f"Not a hex digest: {value!r}") from e
        return cls(raw)

    @property
    def is_null(self) -> bool:
        return self.digest == NULL_DIGEST

    def hex(self) -> str:
        return self.digest.hex()

    def short(self) -> str:
        return self.digest.hex()[:12]

    def __str__(self) -> str:
        return self.hex()

    def __bytes__(self) -> bytes:
        return self.digest


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def content_hash(content: bytes) -> ContentHash:
    """h = H(content)."""
    return ContentHash(sha256(bytes(content)))


def derive_skill_id(
    content_payload: bytes,
    developer: str,
    prev_version: Optional[Union[ContentHash, bytes]],
    timestamp: int,
) -> ContentHash:
    """skill_id = H(content || developer || prev_version || timestamp).

    A first version passes None (or ContentHash.null()); it is encoded as
    32 zero bytes.
    """
    if prev_version is None:
        prev = NULL_DIGEST
    elif isinstance(prev_version, ContentHash):
        prev = prev_version.digest
    else:
        prev = ContentHash(prev_version).digest
    encoded = canonical_encode([bytes(content_payload), developer, prev, int(timestamp)])
    return ContentHash(sha256(encoded))
