"""
SIGIL Protocol Package
"""

from .errors import ProtocolError
from .node import MonitoringReport, PublishReceipt, SigilNode, TallyReport

__all__ = [
    'ProtocolError',
    'MonitoringReport',
    'PublishReceipt',
    'SigilNode',
    'TallyReport',
]
