"""
SIGIL Economics Package
"""

from .export import accounts_frame, export_accounts, export_journal, export_ledger, journal_frame
from .ledger import TREASURY, TokenLedger, stake_account
from .params import MILLI, PPM, EconomicParams, tc, to_tc
from .reputation import MonitoringEvent, apply_monitoring_outcome, decay_reputations
from .rewards import (
    apply_settlement,
    check_activation,
    compute_settlement,
    publication_fee,
    r_base,
    retrospective_slash,
    reward_amount,
    settle_audit,
    slash_amount,
    slippage_r_base,
)

__all__ = [
    'accounts_frame',
    'export_accounts',
    'export_journal',
    'export_ledger',
    'journal_frame',
    'TREASURY',
    'TokenLedger',
    'stake_account',
    'MILLI',
    'PPM',
    'EconomicParams',
    'tc',
    'to_tc',
    'MonitoringEvent',
    'apply_monitoring_outcome',
    'decay_reputations',
    'check_activation',
    'apply_settlement',
    'compute_settlement',
    'publication_fee',
    'r_base',
    'retrospective_slash',
    'reward_amount',
    'slash_amount',
    'settle_audit',
    'slippage_r_base',
]
