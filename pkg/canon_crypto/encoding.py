"""
SIGIL - Canonical Encoding
Injective, platform-independent byte encoding for ordered field lists.

Layout:
    count (8-byte big-endian)
    per field: type tag (1 byte) | body length (8-byte big-endian) | body

Bodies:
    bytes  -> raw bytes
    str    -> UTF-8
    int    -> 8-byte signed big-endian
    enum   -> one byte (IntEnum members)
    list   -> nested canonical encoding
"""

import json
from enum import IntEnum
from typing import Any, List, Sequence, Tuple

from .errors import EncodingError

COUNT_WIDTH = 8
LENGTH_WIDTH = 8
INT_WIDTH = 8


class FieldTag(IntEnum):
    BYTES = 0x01
    STR = 0x02
    INT = 0x03
    ENUM = 0x04
    LIST = 0x05


def _encode_field(value: Any) -> Tuple[FieldTag, bytes]:
    # IntEnum is checked before int (it is a subclass)
    if isinstance(value, IntEnum):
        if not 0 <= int(value) <= 0xFF:
            raise EncodingError(f"Enum value out of byte range: {value!r}")
        return FieldTag.ENUM, bytes([int(value)])
    if isinstance(value, bool):
        raise EncodingError("Booleans have no canonical form; use an IntEnum")
    if isinstance(value, (bytes, bytearray, memoryview)):
        return FieldTag.BYTES, bytes(value)
    if isinstance(value, str):
        return FieldTag.STR, value.encode("utf-8")
    if isinstance(value, int):
        try:
            return FieldTag.INT, value.to_bytes(INT_WIDTH, "big", signed=True)
        except OverflowError as e:
            raise EncodingError(f"Integer does not fit in {INT_WIDTH} bytes: {value}") from e
    if isinstance(value, (list, tuple)):
        return FieldTag.LIST, canonical_encode(value)
    raise EncodingError(f"No canonical form for {type(value).__name__}")


def canonical_encode(fields: Sequence[Any]) -> bytes:
    """Encode an ordered list of typed values. Deterministic and injective."""
    parts = [len(fields).to_bytes(COUNT_WIDTH, "big")]
    for value in fields:
        tag, body = _encode_field(value)
        parts.append(bytes([tag]))
        parts.append(len(body).to_bytes(LENGTH_WIDTH, "big"))
        parts.append(body)
    return b"".join(parts)


def _decode_at(data: bytes, offset: int) -> Tuple[List[Any], int]:
    if len(data) - offset < COUNT_WIDTH:
        raise EncodingError("Truncated field count")
    count = int.from_bytes(data[offset:offset + COUNT_WIDTH], "big")
    offset += COUNT_WIDTH
    values: List[Any] = []
    for _ in range(count):
        if len(data) - offset < 1 + LENGTH_WIDTH:
            raise EncodingError("Truncated field header")
        raw_tag = data[offset]
        length = int.from_bytes(data[offset + 1:offset + 1 + LENGTH_WIDTH], "big")
        offset += 1 + LENGTH_WIDTH
        if len(data) - offset < length:
            raise EncodingError("Truncated field body")
        body = data[offset:offset + length]
        offset += length

        try:
            tag = FieldTag(raw_tag)
        except ValueError as e:
            raise EncodingError(f"Unknown field tag 0x{raw_tag:02x}") from e

        if tag == FieldTag.BYTES:
            values.append(body)
        elif tag == FieldTag.STR:
            try:
                values.append(body.decode("utf-8"))
            except UnicodeDecodeError as e:
                raise EncodingError("Invalid UTF-8 in string field") from e
        elif tag == FieldTag.INT:
            if length != INT_WIDTH:
                raise EncodingError("Integer field has wrong width")
            values.append(int.from_bytes(body, "big", signed=True))
        elif tag == FieldTag.ENUM:
            if length != 1:
                raise EncodingError("Enum field has wrong width")
            values.append(body[0])
        else:
            nested, used = _decode_at(body, 0)
            if used != len(body):
                raise EncodingError("Trailing bytes inside list field")
            values.append(nested)
    return values, offset


def canonical_decode(data: bytes) -> List[Any]:
    """Inverse of canonical_encode. Enum fields come back as plain ints."""
    values, used = _decode_at(bytes(data), 0)
    if used != len(data):
        raise EncodingError("Trailing bytes after encoding")
    return values


def canonical_json(obj: Any) -> bytes:
    """Sorted-key compact JSON, used for log event bodies and digests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")
