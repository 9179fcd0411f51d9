"""
SIGIL CLI Package
"""

from .logs import configure_logging
from .main import EXIT_CODES, build_parser, exit_code_for, main
from .workspace import IdentityExists, IdentityMissing, Workspace, WorkspaceConfig, WorkspaceError, WorkspaceMissing

__all__ = [
    'configure_logging',
    'EXIT_CODES',
    'build_parser',
    'exit_code_for',
    'main',
    'IdentityExists',
    'IdentityMissing',
    'Workspace',
    'WorkspaceConfig',
    'WorkspaceError',
    'WorkspaceMissing',
]
