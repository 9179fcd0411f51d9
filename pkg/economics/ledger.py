"""
SIGIL Economics - Token Ledger
Integer milli-TC accounts, a Treasury and escrows. Supply changes only
through mint(); every other flow moves value between holders, so

    sum(accounts) + treasury + sum(escrows) == total_supply

holds after every operation. Operations validate before mutating; the
atomic() context restores the previous state if a multi-step flow fails.
"""

import copy
import logging
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, List, Optional

from .errors import (
    ConservationViolation,
    DuplicateEscrow,
    InsufficientFunds,
    InvalidAmount,
    UnknownEscrow,
)

logger = logging.getLogger(__name__)

TREASURY = "treasury"
STAKE_PREFIX = "stake:"


def stake_account(holder: str) -> str:
    return f"{STAKE_PREFIX}{holder}"


@dataclass
class Escrow:
    escrow_id: str
    amount: int
    purpose: str
    parties: List[str] = field(default_factory=list)
    deadline: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class JournalEntry:
    seq: int
    kind: str
    source: str
    target: str
    amount: int
    memo: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class TokenLedger:
    def __init__(self, journal: bool = True):
        self.accounts: Dict[str, int] = {}
        self.treasury: int = 0
        self.escrows: Dict[str, Escrow] = {}
        self.total_supply: int = 0
        self.keep_journal = journal
        self.journal: List[JournalEntry] = []
        self._seq = 0
        self._lock = threading.RLock()

    # ============================================
    # HELPERS
    # ============================================

    @staticmethod
    def _check_amount(amount: int, allow_zero: bool = False):
        if not isinstance(amount, int) or isinstance(amount, bool):
            raise InvalidAmount(f"Amounts are integer milli-TC, got {amount!r}")
        if amount < 0 or (amount == 0 and not allow_zero):
            raise InvalidAmount(f"Amount must be positive, got {amount}")

    def _record(self, kind: str, source: str, target: str, amount: int, memo: str):
        self._seq += 1
        if self.keep_journal:
            self.journal.append(JournalEntry(self._seq, kind, source, target, amount, memo))

    def _debit(self, holder: str, amount: int):
        if holder == TREASURY:
            self.treasury -= amount
        else:
            self.accounts[holder] = self.accounts.get(holder, 0) - amount

    def _credit(self, holder: str, amount: int):
        if holder == TREASURY:
            self.treasury += amount
        else:
            self.accounts[holder] = self.accounts.get(holder, 0) + amount

    def balance(self, holder: str) -> int:
        if holder == TREASURY:
            return self.treasury
        return self.accounts.get(holder, 0)

    def escrow(self, escrow_id: str) -> Escrow:
        escrow = self.escrows.get(escrow_id)
        if escrow is None:
            raise UnknownEscrow(f"No escrow {escrow_id}")
        return escrow

    def has_escrow(self, escrow_id: str) -> bool:
        return escrow_id in self.escrows

    def require_funds(self, holder: str, amount: int):
        available = self.balance(holder)
        if available < amount:
            raise InsufficientFunds(
                f"{holder} holds {available} milli-TC, needs {amount}",
                holder=holder, available=available, required=amount,
            )

    # ============================================
    # FLOWS
    # ============================================

    def mint(self, holder: str, amount: int, memo: str = "genesis"):
        """The only operation that changes total supply."""
        self._check_amount(amount)
        with self._lock:
            self._credit(holder, amount)
            self.total_supply += amount
            self._record("mint", "", holder, amount, memo)
        logger.info(f"[Ledger] Minted {amount} to {holder} ({memo})")

    def transfer(self, source: str, target: str, amount: int, memo: str = ""):
        self._check_amount(amount, allow_zero=True)
        if amount == 0:
            return
        with self._lock:
            self.require_funds(source, amount)
            self._debit(source, amount)
            self._credit(target, amount)
            self._record("transfer", source, target, amount, memo)

    def open_escrow(
        self,
        escrow_id: str,
        payer: str,
        amount: int,
        purpose: str,
        parties: Optional[List[str]] = None,
        deadline: Optional[int] = None,
    ) -> Escrow:
        self._check_amount(amount)
        with self._lock:
            if escrow_id in self.escrows:
                raise DuplicateEscrow(f"Escrow {escrow_id} already open")
            self.require_funds(payer, amount)
            self._debit(payer, amount)
            escrow = Escrow(escrow_id, amount, purpose, list(parties or [payer]), deadline)
            self.escrows[escrow_id] = escrow
            self._record("escrow", payer, escrow_id, amount, purpose)
        return escrow

    def release_escrow(self, escrow_id: str, target: str, amount: Optional[int] = None, memo: str = "") -> int:
        """Pay `amount` (default: everything left) out of an escrow."""
        with self._lock:
            escrow = self.escrow(escrow_id)
            amount = escrow.amount if amount is None else amount
            self._check_amount(amount, allow_zero=True)
            if amount > escrow.amount:
                raise InsufficientFunds(f"Escrow {escrow_id} holds {escrow.amount}, asked {amount}")
            if amount:
                escrow.amount -= amount
                self._credit(target, amount)
                self._record("release", escrow_id, target, amount, memo or escrow.purpose)
            if escrow.amount == 0:
                del self.escrows[escrow_id]
        return amount

    def escrow_total(self) -> int:
        return sum(e.amount for e in self.escrows.values())

    # ============================================
    # INVARIANTS
    # ============================================

    def holdings(self) -> int:
        return sum(self.accounts.values()) + self.treasury + self.escrow_total()

    def is_conserved(self) -> bool:
        return self.holdings() == self.total_supply and self.min_balance() >= 0

    def min_balance(self) -> int:
        values = list(self.accounts.values()) + [self.treasury] + [e.amount for e in self.escrows.values()]
        return min(values) if values else 0

    def assert_conserved(self):
        if not self.is_conserved():
            raise ConservationViolation(
                f"Holdings {self.holdings()} != supply {self.total_supply} "
                f"(min balance {self.min_balance()})"
            )

    @contextmanager
    def atomic(self) -> Iterator["TokenLedger"]:
        """All-or-nothing block of ledger operations."""
        with self._lock:
            saved = (
                dict(self.accounts), self.treasury, copy.deepcopy(self.escrows),
                self.total_supply, len(self.journal), self._seq,
            )
            try:
                yield self
            except Exception:
                accounts, treasury, escrows, supply, journal_len, seq = saved
                self.accounts, self.treasury, self.escrows = accounts, treasury, escrows
                self.total_supply, self._seq = supply, seq
                del self.journal[journal_len:]
                raise

    # ============================================
    # PERSISTENCE
    # ============================================

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accounts": dict(self.accounts),
            "treasury": self.treasury,
            "escrows": {k: e.to_dict() for k, e in self.escrows.items()},
            "total_supply": self.total_supply,
            "journal": [j.to_dict() for j in self.journal],
            "seq": self._seq,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TokenLedger":
        ledger = cls()
        ledger.accounts = {k: int(v) for k, v in data.get("accounts", {}).items()}
        ledger.treasury = int(data.get("treasury", 0))
        ledger.escrows = {k: Escrow(**v) for k, v in data.get("escrows", {}).items()}
        ledger.total_supply = int(data.get("total_supply", 0))
        ledger.journal = [JournalEntry(**j) for j in data.get("journal", [])]
        ledger._seq = int(data.get("seq", len(ledger.journal)))
        return ledger
