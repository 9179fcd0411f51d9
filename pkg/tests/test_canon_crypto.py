import os

import pytest
from hypothesis import given, settings, strategies as st

from canon_crypto import (
    AuthenticationFailed,
    ContentHash,
    EncodingError,
    InvalidPeerKey,
    KeyContext,
    KeyPair,
    audit_binding,
    canonical_decode,
    canonical_encode,
    content_hash,
    decrypt_content,
    derive_delivery_key,
    derive_skill_id,
    ecdh_shared_secret,
    encrypt_content,
    license_binding,
    new_content_key,
    sealed_binding,
    sign_verdict,
    unwrap_content_key,
    verify_verdict,
    wrap_content_key,
)
from canon_crypto.signing import VerdictSignature

SKILL_ID_GOLDEN = "fa009e604bc5708f5d6daf79e6223a82709acb493948a53d7f304c7e3e35b623"
SHARED = bytes(range(32))
SKILL = b"\xab" * 32
DELIVERY_GOLDEN = {
    KeyContext.SEALED: "89dec72323011f6740928e514e0107cdff53f0b809cb63582661bf2eeca66f6e",
    KeyContext.AUDIT: "30f0fed7a37d968d8f5ddaf5e636da00fdaf229953cf04679c0ecbf58d0ea668",
    KeyContext.LICENSE: "6a74240b81d74f38e65b7b5cb87d6f8cba28ea965bb8c7fd546772e9d6af4157",
}

field_values = st.recursive(
    st.one_of(
        st.binary(max_size=40),
        st.text(max_size=20),
        st.integers(min_value=-(2 ** 63), max_value=2 ** 63 - 1),
    ),
    lambda inner: st.lists(inner, max_size=4),
    max_leaves=12,
)


# ============================================
# HASHING AND ENCODING
# ============================================

def test_empty_content_hash():
    assert content_hash(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_skill_id_golden_vector():
    assert derive_skill_id(b"hello skill", "alice", None, 1700000000).hex() == SKILL_ID_GOLDEN


def test_null_prev_version_equals_none():
    a = derive_skill_id(b"x", "alice", None, 5)
    b = derive_skill_id(b"x", "alice", ContentHash.null(), 5)
    assert a == b


def test_skill_id_separates_fields():
    # concatenation ambiguity: ("ab", "c") vs ("a", "bc")
    assert derive_skill_id(b"ab", "c", None, 1) != derive_skill_id(b"a", "bc", None, 1)


@given(st.lists(field_values, max_size=6))
def test_encoding_round_trip(fields):
    assert canonical_decode(canonical_encode(fields)) == fields


@given(st.lists(field_values, max_size=4), st.lists(field_values, max_size=4))
def test_encoding_is_injective(a, b):
    if a != b:
        assert canonical_encode(a) != canonical_encode(b)


def test_str_and_bytes_encode_differently():
    assert canonical_encode(["abc"]) != canonical_encode([b"abc"])


def test_encoding_wire_layout():
    encoded = canonical_encode([b"\xff", "ab", -1, [7]])
    nested = (1).to_bytes(8, "big") + b"\x03" + (8).to_bytes(8, "big") + (7).to_bytes(8, "big")
    expected = (
        (4).to_bytes(8, "big")
        + b"\x01" + (1).to_bytes(8, "big") + b"\xff"
        + b"\x02" + (2).to_bytes(8, "big") + b"ab"
        + b"\x03" + (8).to_bytes(8, "big") + b"\xff" * 8
        + b"\x05" + len(nested).to_bytes(8, "big") + nested
    )
    assert encoded == expected


@pytest.mark.parametrize("value", [True, 2 ** 63, 1.5, None, {"a": 1}])
def test_values_without_canonical_form(value):
    with pytest.raises(EncodingError):
        canonical_encode([value])


@given(st.binary(max_size=64))
def test_decode_never_crashes_on_garbage(data):
    try:
        canonical_decode(data)
    except EncodingError:
        pass


def test_decode_rejects_trailing_bytes():
    with pytest.raises(EncodingError):
        canonical_decode(canonical_encode([1]) + b"\x00")


def test_content_hash_length_enforced():
    with pytest.raises(EncodingError):
        ContentHash(b"short")


# ============================================
# KEYS AND SIGNATURES
# ============================================

def test_keypair_derives_public_keys():
    keys = KeyPair.generate()
    again = KeyPair.from_secret(keys.secret_key)
    assert again.public_key == keys.public_key
    assert again.verify_key == keys.verify_key
    assert keys.secret_key.hex() not in repr(keys)


def test_ecdh_symmetry():
    for _ in range(1000):
        a, b = KeyPair.generate(), KeyPair.generate()
        assert ecdh_shared_secret(a, b.public_key) == ecdh_shared_secret(b, a.public_key)


def test_ecdh_rejects_zero_key():
    with pytest.raises(InvalidPeerKey):
        ecdh_shared_secret(KeyPair.generate(), bytes(32))


def test_signature_round_trip_and_tamper():
    keys = KeyPair.generate()
    sig = sign_verdict(b"verdict bytes", keys)
    assert verify_verdict(b"verdict bytes", sig, keys.verify_key)
    assert not verify_verdict(b"verdict bytez", sig, keys.verify_key)
    assert not verify_verdict(b"verdict bytes", sig, KeyPair.generate().verify_key)
    flipped = VerdictSignature(bytes([sig.signature[0] ^ 1]) + sig.signature[1:], sig.signer)
    assert not verify_verdict(b"verdict bytes", flipped, keys.verify_key)


# ============================================
# DELIVERY KEYS
# ============================================

@pytest.mark.parametrize("context", list(DELIVERY_GOLDEN))
def test_delivery_key_golden_vectors(context):
    key = derive_delivery_key(SHARED, context, sealed_binding(SKILL))
    assert key.hex() == DELIVERY_GOLDEN[context]


def test_contexts_give_distinct_keys():
    keys = {derive_delivery_key(SHARED, c, sealed_binding(SKILL)) for c in DELIVERY_GOLDEN}
    assert len(keys) == 3


def test_content_context_is_not_a_delivery_flow():
    with pytest.raises(ValueError):
        derive_delivery_key(SHARED, KeyContext.CONTENT, b"")


def _flow(context, dev, peer, skill_id):
    if context == KeyContext.AUDIT:
        binding = audit_binding(skill_id, peer.public_key, dev.public_key)
    elif context == KeyContext.LICENSE:
        binding = license_binding(skill_id, peer.public_key, dev.public_key)
    else:
        binding = sealed_binding(skill_id)
    sender = derive_delivery_key(ecdh_shared_secret(dev, peer.public_key), context, binding)
    receiver = derive_delivery_key(ecdh_shared_secret(peer, dev.public_key), context, binding)
    return sender, receiver


@pytest.mark.parametrize("context", [KeyContext.AUDIT, KeyContext.LICENSE, KeyContext.SEALED])
def test_delivery_round_trips(context):
    dev = KeyPair.generate()
    for _ in range(1000):
        peer = dev if context == KeyContext.SEALED else KeyPair.generate()
        skill_id = ContentHash(os.urandom(32))
        k_content = new_content_key()
        sender, receiver = _flow(context, dev, peer, skill_id)
        wrapped = wrap_content_key(k_content, sender, context, skill_id)
        assert unwrap_content_key(wrapped, receiver, skill_id) == k_content


def test_cross_context_unwrap_fails():
    dev, peer = KeyPair.generate(), KeyPair.generate()
    skill_id = ContentHash(os.urandom(32))
    k_content = new_content_key()
    audit_key, _ = _flow(KeyContext.AUDIT, dev, peer, skill_id)
    license_key, _ = _flow(KeyContext.LICENSE, dev, peer, skill_id)
    wrapped = wrap_content_key(k_content, audit_key, KeyContext.AUDIT, skill_id)
    with pytest.raises(AuthenticationFailed):
        unwrap_content_key(wrapped, license_key, skill_id)


def test_cross_recipient_and_cross_skill_unwrap_fails():
    dev, buyer, other = KeyPair.generate(), KeyPair.generate(), KeyPair.generate()
    for _ in range(200):
        skill_id = ContentHash(os.urandom(32))
        key, _ = _flow(KeyContext.LICENSE, dev, buyer, skill_id)
        _, wrong = _flow(KeyContext.LICENSE, dev, other, skill_id)
        wrapped = wrap_content_key(new_content_key(), key, KeyContext.LICENSE, skill_id)
        with pytest.raises(AuthenticationFailed):
            unwrap_content_key(wrapped, wrong, skill_id)
        with pytest.raises(AuthenticationFailed):
            unwrap_content_key(wrapped, key, ContentHash(os.urandom(32)))


@settings(max_examples=50)
@given(st.binary(max_size=2048), st.binary(max_size=32))
def test_content_round_trip(plaintext, aad):
    key = new_content_key()
    blob = encrypt_content(plaintext, key, aad)
    assert decrypt_content(blob, key, aad) == plaintext


def test_content_tamper_detected():
    key = new_content_key()
    blob = bytearray(encrypt_content(b"instructions", key, b"h"))
    blob[-1] ^= 0x01
    with pytest.raises(AuthenticationFailed):
        decrypt_content(bytes(blob), key, b"h")
    with pytest.raises(AuthenticationFailed):
        decrypt_content(encrypt_content(b"instructions", key, b"h"), key, b"other")
