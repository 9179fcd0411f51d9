"""
SIGIL Canonical Crypto Package
"""

from .delivery import (
    KeyContext,
    WrappedKey,
    audit_binding,
    decrypt_content,
    derive_delivery_key,
    encrypt_content,
    license_binding,
    new_content_key,
    sealed_binding,
    unwrap_content_key,
    wrap_content_key,
)
from .encoding import canonical_decode, canonical_encode, canonical_json
from .errors import (
    AuthenticationFailed,
    CryptoError,
    EncodingError,
    InvalidPeerKey,
    MalformedSignature,
    SigilError,
)
from .hashing import ContentHash, content_hash, derive_skill_id, sha256
from .keys import KeyPair, ecdh_shared_secret
from .signing import VerdictSignature, sign_verdict, verify_verdict

__all__ = [
    'KeyContext',
    'WrappedKey',
    'audit_binding',
    'decrypt_content',
    'derive_delivery_key',
    'encrypt_content',
    'license_binding',
    'new_content_key',
    'sealed_binding',
    'unwrap_content_key',
    'wrap_content_key',
    'canonical_decode',
    'canonical_encode',
    'canonical_json',
    'AuthenticationFailed',
    'CryptoError',
    'EncodingError',
    'InvalidPeerKey',
    'MalformedSignature',
    'SigilError',
    'ContentHash',
    'content_hash',
    'derive_skill_id',
    'sha256',
    'KeyPair',
    'ecdh_shared_secret',
    'VerdictSignature',
    'sign_verdict',
    'verify_verdict',
]
