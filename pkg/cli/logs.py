"""
SIGIL CLI - Logging Setup
One stderr handler; timestamps rendered in a configurable timezone.
"""

import logging
import os
import sys
from datetime import datetime

import pytz

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class ZoneFormatter(logging.Formatter):
    def __init__(self, tz: str = "UTC"):
        super().__init__(LOG_FORMAT, DATE_FORMAT)
        self.zone = pytz.timezone(tz)

    def formatTime(self, record, datefmt=None):
        stamp = datetime.fromtimestamp(record.created, tz=pytz.utc).astimezone(self.zone)
        return stamp.strftime(datefmt or DATE_FORMAT)


def configure_logging(level: int = logging.WARNING, tz: str = None) -> logging.Handler:
    tz = tz or os.getenv("SIGIL_TZ", "UTC")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ZoneFormatter(tz))
    root = logging.getLogger()
    for existing in list(root.handlers):
        if getattr(existing, "_sigil", False):
            root.removeHandler(existing)
    handler._sigil = True
    root.addHandler(handler)
    root.setLevel(level)
    return handler
