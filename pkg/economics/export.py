"""
SIGIL Economics - Ledger Export
Account balances, open escrows and the transfer journal as pandas frames,
written to CSV or to one Excel workbook (openpyxl engine). Account rows are
(id, balance_milli_tc, reputation, active); reputation and active are filled
for auditor wallets and stake accounts and left empty for everything else.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import pandas as pd

from .ledger import STAKE_PREFIX, TREASURY, TokenLedger

logger = logging.getLogger(__name__)

FORMATS = ("csv", "xlsx")
ACCOUNT_COLUMNS = ["id", "balance_milli_tc", "reputation", "active"]


def _owner(holder: str) -> str:
    return holder[len(STAKE_PREFIX):] if holder.startswith(STAKE_PREFIX) else holder


def accounts_frame(ledger: TokenLedger, auditors: Optional[Mapping[str, Any]] = None) -> pd.DataFrame:
    """`auditors` maps auditor id to anything with `reputation` and `active`
    (the audit book's accounts)."""
    auditors = auditors or {}
    holders = [(TREASURY, ledger.balance(TREASURY))]
    holders += [(h, amount) for h, amount in sorted(ledger.accounts.items()) if h != TREASURY]
    holders += [(escrow_id, escrow.amount) for escrow_id, escrow in sorted(ledger.escrows.items())]
    rows = []
    for holder, amount in holders:
        account = auditors.get(_owner(holder))
        rows.append({
            "id": holder,
            "balance_milli_tc": amount,
            "reputation": None if account is None else int(account.reputation),
            "active": None if account is None else bool(account.active),
        })
    frame = pd.DataFrame(rows, columns=ACCOUNT_COLUMNS)
    return frame.astype({"balance_milli_tc": "int64", "reputation": "Int64", "active": "boolean"})


def journal_frame(ledger: TokenLedger) -> pd.DataFrame:
    columns = ["seq", "kind", "source", "target", "amount", "memo"]
    return pd.DataFrame([j.to_dict() for j in ledger.journal], columns=columns)


def _write(frame: pd.DataFrame, path: Path, fmt: str, sheet: str) -> Path:
    if fmt not in FORMATS:
        raise ValueError(f"Unknown export format {fmt!r} (expected csv or xlsx)")
    path = Path(path).with_suffix(f".{fmt}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "xlsx":
        frame.to_excel(path, sheet_name=sheet, index=False, engine="openpyxl")
    else:
        frame.to_csv(path, index=False, lineterminator="\n")
    return path


def export_accounts(ledger: TokenLedger, path: Path, fmt: str = "csv",
                    auditors: Optional[Mapping[str, Any]] = None) -> Path:
    return _write(accounts_frame(ledger, auditors), path, fmt, "accounts")


def export_journal(ledger: TokenLedger, path: Path, fmt: str = "csv") -> Path:
    return _write(journal_frame(ledger), path, fmt, "journal")


def export_ledger(ledger: TokenLedger, path: Path, fmt: str = "csv",
                  auditors: Optional[Mapping[str, Any]] = None) -> Dict[str, Path]:
    """CSV writes <stem>_accounts.csv and <stem>_journal.csv; xlsx writes one
    workbook with a sheet per table."""
    path = Path(path)
    frames = {"accounts": accounts_frame(ledger, auditors), "journal": journal_frame(ledger)}
    if fmt == "xlsx":
        target = path.with_suffix(".xlsx")
        target.parent.mkdir(parents=True, exist_ok=True)
        with pd.ExcelWriter(target, engine="openpyxl") as writer:
            for sheet, frame in frames.items():
                frame.to_excel(writer, sheet_name=sheet, index=False)
        written = {sheet: target for sheet in frames}
    else:
        written = {
            sheet: _write(frame, path.with_name(f"{path.stem}_{sheet}"), fmt, sheet)
            for sheet, frame in frames.items()
        }
    logger.info(f"[Ledger] Exported {len(frames)} tables as {fmt} next to {path}")
    return written
