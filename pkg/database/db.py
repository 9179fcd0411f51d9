"""
SIGIL - Workspace State Database
SQLite store for node state documents (ledger, auditors, tasks, purchases,
challenges) and the registry log head sidecar.
"""

import json
import logging
import os
import sqlite3
from contextlib import contextmanager
from typing import Any, Dict, Optional, Tuple

logger = logging.getLogger(__name__)

DB_FILENAME = "state.db"

SCHEMA = """
CREATE TABLE IF NOT EXISTS node_state (
    key TEXT PRIMARY KEY,
    document TEXT NOT NULL,
    updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);

CREATE TABLE IF NOT EXISTS log_head (
    id INTEGER PRIMARY KEY CHECK (id = 1),
    entry_count INTEGER NOT NULL,
    head_hash TEXT NOT NULL,
    updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);
"""


def db_path(workspace: os.PathLike) -> str:
    return os.path.join(os.fspath(workspace), DB_FILENAME)


@contextmanager
def get_connection(db_file: os.PathLike, timeout: int = 30):
    """Context manager for database connections."""
    conn = sqlite3.connect(os.fspath(db_file), timeout=timeout)
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA journal_mode = WAL")
    conn.execute(f"PRAGMA busy_timeout = {timeout * 1000}")
    conn.execute("PRAGMA synchronous = FULL")
    try:
        yield conn
        conn.commit()
    except Exception:
        conn.rollback()
        raise
    finally:
        conn.close()


def init_database(db_file: os.PathLike) -> bool:
    """Create the schema if missing."""
    os.makedirs(os.path.dirname(os.path.abspath(db_file)), exist_ok=True)
    with get_connection(db_file) as conn:
        conn.executescript(SCHEMA)
    logger.debug(f"[State] Database initialized: {db_file}")
    return True


# ============================================
# STATE DOCUMENTS
# ============================================

def save_state(db_file: os.PathLike, documents: Dict[str, Any], head: Optional[Tuple[int, str]] = None):
    """Write every document (and optionally the log head) in one transaction."""
    with get_connection(db_file) as conn:
        for key, document in documents.items():
            conn.execute("""
                INSERT INTO node_state (key, document, updated_at)
                VALUES (?, ?, CURRENT_TIMESTAMP)
                ON CONFLICT(key) DO UPDATE SET
                    document = excluded.document,
                    updated_at = CURRENT_TIMESTAMP
            """, (key, json.dumps(document, sort_keys=True)))
        if head is not None:
            _write_head(conn, *head)


def load_state(db_file: os.PathLike, key: str) -> Optional[Any]:
    with get_connection(db_file) as conn:
        row = conn.execute("SELECT document FROM node_state WHERE key = ?", (key,)).fetchone()
        return json.loads(row["document"]) if row else None


# ============================================
# LOG HEAD
# ============================================

def _write_head(conn: sqlite3.Connection, entry_count: int, head_hash: str):
    conn.execute("""
        INSERT INTO log_head (id, entry_count, head_hash, updated_at)
        VALUES (1, ?, ?, CURRENT_TIMESTAMP)
        ON CONFLICT(id) DO UPDATE SET
            entry_count = excluded.entry_count,
            head_hash = excluded.head_hash,
            updated_at = CURRENT_TIMESTAMP
    """, (entry_count, head_hash))


def get_log_head(db_file: os.PathLike) -> Optional[Tuple[int, str]]:
    """(entry count, head hash hex) as last recorded, or None."""
    with get_connection(db_file) as conn:
        row = conn.execute("SELECT entry_count, head_hash FROM log_head WHERE id = 1").fetchone()
        return (row["entry_count"], row["head_hash"]) if row else None
