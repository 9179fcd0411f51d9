"""
SIGIL Audit Package

The committee workflow lives in audit.committee; this package root only
exposes the leaf types so the registry can import them.
"""

from .models import AuditOutcome, Verdict, Vote
from .tally import TallyResult, safe_score, tally

__all__ = [
    'AuditOutcome',
    'Verdict',
    'Vote',
    'TallyResult',
    'safe_score',
    'tally',
]
