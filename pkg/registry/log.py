"""
SIGIL Registry - Tamper-Evident Log
Append-only, hash-chained event log. One entry per line:

    hex( canonical_encode([index, prev_entry_hash, kind, body, entry_hash]) ) "\n"

    entry_hash = H( canonical_encode([index, prev_entry_hash, kind, body]) )

`body` is the canonical JSON of the event. Entry 0 chains from 32 zero
bytes. The log file alone is the source of truth.
"""

import json
import logging
import os
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

from canon_crypto import ContentHash, canonical_decode, canonical_encode, canonical_json, sha256
from canon_crypto.errors import EncodingError

from .errors import LogCorrupt

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    COMMIT = "commit"
    AUDIT_REQUEST = "audit_request"
    CLAIM = "claim"
    VERDICT = "verdict"
    PROMOTION = "promotion"
    REJECTION = "rejection"
    REVOCATION = "revocation"
    SETTLEMENT = "settlement"
    PURCHASE = "purchase"
    DELIVERY = "delivery"
    AUDITOR = "auditor_registration"
    LEAK = "leak"
    MONITORING = "monitoring"
    CHALLENGE = "challenge"
    EXPIRY = "expiry"
    DECAY = "decay"
    MINT = "mint"


def _entry_hash(index: int, prev: ContentHash, kind: str, body: bytes) -> ContentHash:
    return ContentHash(sha256(canonical_encode([index, prev.digest, kind, body])))


@dataclass(frozen=True)
class LogEntry:
    index: int
    prev_entry_hash: ContentHash
    kind: EventKind
    body: bytes
    entry_hash: ContentHash

    @property
    def event(self) -> Dict[str, Any]:
        return json.loads(self.body)

    def expected_hash(self) -> ContentHash:
        return _entry_hash(self.index, self.prev_entry_hash, self.kind.value, self.body)

    def to_bytes(self) -> bytes:
        return canonical_encode([
            self.index, self.prev_entry_hash.digest, self.kind.value, self.body, self.entry_hash.digest,
        ])

    def to_line(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LogEntry":
        fields = canonical_decode(data)
        if len(fields) != 5:
            raise EncodingError("Log entry must have 5 fields")
        index, prev, kind, body, entry_hash = fields
        if not isinstance(index, int) or not isinstance(kind, str):
            raise EncodingError("Log entry field types are wrong")
        if not isinstance(prev, bytes) or not isinstance(body, bytes) or not isinstance(entry_hash, bytes):
            raise EncodingError("Log entry field types are wrong")
        try:
            event_kind = EventKind(kind)
        except ValueError as e:
            raise EncodingError(f"Unknown event kind {kind!r}") from e
        return cls(index, ContentHash(prev), event_kind, body, ContentHash(entry_hash))

    @classmethod
    def from_line(cls, line: bytes) -> "LogEntry":
        text = line.decode("ascii")
        raw = bytes.fromhex(text)
        # fromhex tolerates whitespace and upper case; the stored form does not
        if raw.hex() != text:
            raise EncodingError("Log line is not canonical lowercase hex")
        return cls.from_bytes(raw)


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    entries: int
    corrupt_at: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        if self.ok:
            return {"ok": True, "entries": self.entries}
        return {"ok": False, "entries": self.entries, "corrupt_at": self.corrupt_at, "reason": self.reason}


def _check_chain(entries_or_lines, parse) -> Tuple[VerifyResult, List[LogEntry]]:
    entries: List[LogEntry] = []
    prev = ContentHash.null()
    for i, item in enumerate(entries_or_lines):
        try:
            entry = parse(item)
        except (EncodingError, ValueError, UnicodeDecodeError) as e:
            return VerifyResult(False, len(entries), i, f"unreadable entry: {e}"), entries
        if entry.index != i:
            return VerifyResult(False, len(entries), i, "index out of sequence"), entries
        if entry.prev_entry_hash != prev:
            return VerifyResult(False, len(entries), i, "broken prev link"), entries
        if entry.expected_hash() != entry.entry_hash:
            return VerifyResult(False, len(entries), i, "entry hash mismatch"), entries
        entries.append(entry)
        prev = entry.entry_hash
    return VerifyResult(True, len(entries)), entries


def _check_head(
    result: VerifyResult,
    entries: List[LogEntry],
    expected_count: Optional[int],
    expected_head: Optional[ContentHash],
) -> VerifyResult:
    if not result.ok or expected_count is None:
        return result
    if len(entries) < expected_count:
        return VerifyResult(False, len(entries), len(entries), "log shorter than recorded head")
    if expected_count and expected_head is not None:
        if entries[expected_count - 1].entry_hash != expected_head:
            return VerifyResult(False, len(entries), expected_count - 1, "head hash differs from record")
    return result


def scan_log_bytes(
    raw: bytes,
    expected_count: Optional[int] = None,
    expected_head: Optional[ContentHash] = None,
) -> Tuple[VerifyResult, List[LogEntry]]:
    """Parse and verify a serialized log; reports the first bad index."""
    if not raw:
        result, entries = VerifyResult(True, 0), []
        return _check_head(result, entries, expected_count, expected_head), entries
    lines = raw.split(b"\n")
    complete, tail = lines[:-1], lines[-1]
    result, entries = _check_chain(complete, LogEntry.from_line)
    if result.ok and tail != b"":
        result = VerifyResult(False, len(entries), len(entries), "truncated entry")
    return _check_head(result, entries, expected_count, expected_head), entries


class RegistryLog:
    """Append-only log, in memory or backed by a file.

    All appends go through one lock (single writer). Readers get tuples of
    immutable entries.
    """

    def __init__(self, path: Optional[os.PathLike] = None):
        self.path = Path(path) if path is not None else None
        self._entries: List[LogEntry] = []
        self._lock = threading.RLock()
        if self.path is not None and self.path.exists():
            result, entries = scan_log_bytes(self.path.read_bytes())
            if not result.ok:
                raise LogCorrupt(
                    f"Registry log corrupt at entry {result.corrupt_at}: {result.reason}",
                    index=result.corrupt_at,
                )
            self._entries = entries
            logger.debug(f"[Registry] Loaded {len(entries)} log entries from {self.path}")

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[LogEntry]:
        return iter(tuple(self._entries))

    def entries(self) -> Tuple[LogEntry, ...]:
        return tuple(self._entries)

    def entry(self, index: int) -> LogEntry:
        return self._entries[index]

    @property
    def head(self) -> ContentHash:
        return self._entries[-1].entry_hash if self._entries else ContentHash.null()

    def append(self, kind: EventKind, body: Dict[str, Any]) -> LogEntry:
        kind = EventKind(kind)
        body_bytes = canonical_json(body)
        with self._lock:
            index = len(self._entries)
            prev = self.head
            entry = LogEntry(index, prev, kind, body_bytes, _entry_hash(index, prev, kind.value, body_bytes))
            if self.path is not None:
                with open(self.path, "ab") as f:
                    f.write(entry.to_line().encode("ascii") + b"\n")
                    f.flush()
                    os.fsync(f.fileno())
            self._entries.append(entry)
        return entry

    def verify(
        self,
        expected_count: Optional[int] = None,
        expected_head: Optional[ContentHash] = None,
    ) -> VerifyResult:
        """Re-verify the chain. File-backed logs are re-read from disk."""
        if self.path is not None:
            return self.verify_file(self.path, expected_count, expected_head)
        result, entries = _check_chain(self._entries, lambda e: e)
        return _check_head(result, entries, expected_count, expected_head)

    @staticmethod
    def verify_file(
        path: os.PathLike,
        expected_count: Optional[int] = None,
        expected_head: Optional[ContentHash] = None,
    ) -> VerifyResult:
        path = Path(path)
        raw = path.read_bytes() if path.exists() else b""
        result, _ = scan_log_bytes(raw, expected_count, expected_head)
        return result
