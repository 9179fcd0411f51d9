"""
SIGIL Database Package
"""

from .db import (
    db_path,
    get_connection,
    get_log_head,
    init_database,
    load_state,
    save_state,
)

__all__ = [
    'db_path',
    'get_connection',
    'get_log_head',
    'init_database',
    'load_state',
    'save_state',
]
