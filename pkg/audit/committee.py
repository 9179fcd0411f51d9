"""
SIGIL Audit - Committee Workflow
Auditor registration, task claiming with deposits and bonds, verdict
collection, tallying, settlement and audit key delivery.

Stake lives in the ledger (`stake:<id>`); AuditorAccount.stake mirrors it
and is refreshed after every flow that touches it.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from canon_crypto import (
    ContentHash,
    KeyContext,
    KeyPair,
    WrappedKey,
    audit_binding,
    content_hash,
    decrypt_content,
    derive_delivery_key,
    ecdh_shared_secret,
    encrypt_content,
    new_content_key,
    unwrap_content_key,
    wrap_content_key,
)
from economics.ledger import TREASURY, TokenLedger, stake_account
from economics.params import EconomicParams
from economics.reputation import REPUTATION_SCALE, decay_reputation, to_scaled
from economics.rewards import (
    Participant,
    Settlement,
    check_activation,
    settle_audit,
    slippage_r_base,
)
from registry.errors import WrongPublicationType
from registry.models import PublicationType, SkillRecord
from registry.store import SkillRegistry

from .errors import (
    BadSignature,
    BondNotApplicable,
    BondRequired,
    ContentMismatch,
    DepositTooSmall,
    DuplicateAuditor,
    DuplicateClaim,
    DuplicateVerdict,
    InactiveAuditor,
    NoBondHeld,
    NotAClaimant,
    StakeBelowMinimum,
    UnknownAuditor,
    UnknownTask,
    WrongTaskState,
)
from .models import AuditOutcome, Verdict
from .tally import tally

logger = logging.getLogger(__name__)


class TaskState(str, Enum):
    OPEN = "open"
    REVIEWING = "reviewing"
    TALLYING = "tallying"
    SETTLED = "settled"


@dataclass
class AuditorAccount:
    id: str
    public_key: bytes
    verify_key: bytes
    stake: int
    reputation: int
    active: bool = True
    bonds: Dict[str, int] = field(default_factory=dict)
    reputation_fraction: int = 0

    @property
    def confidentiality_bond(self) -> int:
        return sum(self.bonds.values())

    @property
    def scaled_reputation(self) -> int:
        """Reputation in millionths of a point, fraction included."""
        return to_scaled(self.reputation) + self.reputation_fraction

    def set_scaled_reputation(self, value: int):
        self.reputation, self.reputation_fraction = divmod(max(0, int(value)), REPUTATION_SCALE)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "public_key": self.public_key.hex(),
            "verify_key": self.verify_key.hex(),
            "stake": self.stake,
            "reputation": self.reputation,
            "active": self.active,
            "bonds": dict(self.bonds),
            "reputation_fraction": self.reputation_fraction,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuditorAccount":
        return cls(
            id=data["id"],
            public_key=bytes.fromhex(data["public_key"]),
            verify_key=bytes.fromhex(data["verify_key"]),
            stake=int(data["stake"]),
            reputation=int(data["reputation"]),
            active=bool(data["active"]),
            bonds={k: int(v) for k, v in data.get("bonds", {}).items()},
            reputation_fraction=int(data.get("reputation_fraction", 0)),
        )


@dataclass
class Claim:
    auditor: str
    deposit: int
    bond: int
    claimed_at: int


@dataclass
class AuditTask:
    skill_id: ContentHash
    publication_type: PublicationType
    developer: str
    token_count: int
    required_claims: int
    opened_at: int
    round: int = 0
    pool: int = 0
    state: TaskState = TaskState.OPEN
    claimants: Dict[str, Claim] = field(default_factory=dict)
    verdicts: Dict[str, Verdict] = field(default_factory=dict)
    reviewing_since: Optional[int] = None
    defaulted: List[str] = field(default_factory=list)
    unclaimed: bool = False
    outcome: Optional[AuditOutcome] = None

    @property
    def task_id(self) -> str:
        return f"{self.skill_id.hex()}:{self.round}"

    @property
    def pool_escrow_id(self) -> str:
        return f"pool:{self.task_id}"

    def deposit_escrow_id(self, auditor: str) -> str:
        return f"deposit:{self.task_id}:{auditor}"

    def bond_escrow_id(self, auditor: str) -> str:
        return f"bond:{self.task_id}:{auditor}"

    @property
    def is_reaudit(self) -> bool:
        return self.round > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "publication_type": self.publication_type.label,
            "developer": self.developer,
            "token_count": self.token_count,
            "required_claims": self.required_claims,
            "opened_at": self.opened_at,
            "round": self.round,
            "pool": self.pool,
            "state": self.state.value,
            "claimants": {k: vars(c) for k, c in self.claimants.items()},
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "reviewing_since": self.reviewing_since,
            "defaulted": list(self.defaulted),
            "unclaimed": self.unclaimed,
            "outcome": self.outcome.to_dict() if self.outcome else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuditTask":
        return cls(
            skill_id=ContentHash.from_hex(data["skill_id"]),
            publication_type=PublicationType.parse(data["publication_type"]),
            developer=data["developer"],
            token_count=int(data["token_count"]),
            required_claims=int(data["required_claims"]),
            opened_at=int(data["opened_at"]),
            round=int(data.get("round", 0)),
            pool=int(data.get("pool", 0)),
            state=TaskState(data.get("state", "open")),
            claimants={k: Claim(**c) for k, c in data.get("claimants", {}).items()},
            verdicts={k: Verdict.from_dict(v) for k, v in data.get("verdicts", {}).items()},
            reviewing_since=data.get("reviewing_since"),
            defaulted=list(data.get("defaulted", [])),
            unclaimed=bool(data.get("unclaimed", False)),
            outcome=AuditOutcome.from_dict(data["outcome"]) if data.get("outcome") else None,
        )


@dataclass(frozen=True)
class AuditDelivery:
    """One auditor's key: on-log for Licensed/Sealed, off-log bundle for Committed."""

    auditor: str
    recipient: bytes
    wrapped: WrappedKey
    ciphertext: Optional[bytes] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "auditor": self.auditor,
            "recipient": self.recipient.hex(),
            "wrapped": self.wrapped.hex(),
            "ciphertext": self.ciphertext.hex() if self.ciphertext is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuditDelivery":
        ct = data.get("ciphertext")
        return cls(
            auditor=data["auditor"],
            recipient=bytes.fromhex(data["recipient"]),
            wrapped=WrappedKey.from_hex(data["wrapped"]),
            ciphertext=bytes.fromhex(ct) if ct else None,
        )


def _audit_key(own_secret: bytes, peer_public: bytes, skill_id, auditor_pk: bytes, developer_pk: bytes) -> bytes:
    shared = ecdh_shared_secret(own_secret, peer_public)
    return derive_delivery_key(shared, KeyContext.AUDIT, audit_binding(skill_id, auditor_pk, developer_pk))


def open_audit_delivery(
    record: SkillRecord,
    auditor_keys: KeyPair,
    wrapped: WrappedKey,
    ciphertext: Optional[bytes] = None,
) -> bytes:
    """Auditor side: unwrap k_content with the ECDH audit key and decrypt."""
    key = _audit_key(
        auditor_keys.secret_key, record.developer_key, record.skill_id,
        auditor_keys.public_key, record.developer_key,
    )
    content_key = unwrap_content_key(wrapped, key, record.skill_id)
    blob = ciphertext if ciphertext is not None else record.payload
    if blob is None:
        raise WrongPublicationType("Committed audits need the off-log ciphertext")
    plaintext = decrypt_content(blob, content_key, record.content_hash.digest)
    if content_hash(plaintext) != record.content_hash:
        raise ContentMismatch(f"Audit content of {record.skill_id.short()} does not match its hash")
    return plaintext


class AuditBook:
    """Auditor accounts and audit tasks over a shared ledger."""

    def __init__(self, ledger: TokenLedger, params: EconomicParams):
        self.ledger = ledger
        self.params = params
        self.auditors: Dict[str, AuditorAccount] = {}
        self.tasks: Dict[str, AuditTask] = {}

    # ============================================
    # AUDITORS
    # ============================================

    def auditor(self, auditor_id: str) -> AuditorAccount:
        account = self.auditors.get(auditor_id)
        if account is None:
            raise UnknownAuditor(f"Unknown auditor {auditor_id}")
        return account

    def refresh(self, auditor_id: str) -> AuditorAccount:
        account = self.auditor(auditor_id)
        account.stake = self.ledger.balance(stake_account(auditor_id))
        account.active = check_activation(account.stake, self.params)
        return account

    def register_auditor(
        self,
        auditor_id: str,
        public_key: bytes,
        verify_key: bytes,
        initial_stake: int,
    ) -> AuditorAccount:
        """Move initial_stake from the wallet into stake; reputation starts at r0."""
        if initial_stake < self.params.s_min:
            raise StakeBelowMinimum(f"Stake {initial_stake} is below s_min {self.params.s_min}")
        if auditor_id in self.auditors:
            raise DuplicateAuditor(f"Auditor {auditor_id} already registered")
        if any(a.public_key == bytes(public_key) for a in self.auditors.values()):
            raise DuplicateAuditor("Public key already registered to another auditor")
        self.ledger.transfer(auditor_id, stake_account(auditor_id), initial_stake, memo="initial stake")
        account = AuditorAccount(
            id=auditor_id,
            public_key=bytes(public_key),
            verify_key=bytes(verify_key),
            stake=initial_stake,
            reputation=self.params.r0,
        )
        self.auditors[auditor_id] = account
        self.refresh(auditor_id)
        logger.info(f"[Audit] Registered auditor {auditor_id} with stake {initial_stake}")
        return account

    def top_up(self, auditor_id: str, amount: int) -> AuditorAccount:
        self.auditor(auditor_id)
        self.ledger.transfer(auditor_id, stake_account(auditor_id), amount, memo="stake top-up")
        return self.refresh(auditor_id)

    def reputations(self) -> Dict[str, int]:
        return {a.id: a.reputation for a in self.auditors.values()}

    def set_reputations(self, updates: Dict[str, int]):
        """Whole-point updates; the carried fraction survives unless clamped."""
        for auditor_id, value in updates.items():
            account = self.auditor(auditor_id)
            account.reputation = max(0, min(self.params.r_max, int(value)))
            if account.reputation in (0, self.params.r_max):
                account.reputation_fraction = 0

    def decay_reputations(self) -> Dict[str, int]:
        for account in self.auditors.values():
            account.set_scaled_reputation(decay_reputation(account.scaled_reputation, self.params))
        return self.reputations()

    # ============================================
    # TASKS
    # ============================================

    def open_task(
        self,
        skill_id: ContentHash,
        publication_type: PublicationType,
        developer: str,
        token_count: int,
        opened_at: int,
        round: int = 0,
        pool: int = 0,
    ) -> AuditTask:
        task = AuditTask(
            skill_id=skill_id,
            publication_type=publication_type,
            developer=developer,
            token_count=token_count,
            required_claims=self.params.committee_size,
            opened_at=opened_at,
            round=round,
            pool=pool,
        )
        self.tasks[task.task_id] = task
        logger.info(f"[Audit] Opened task {skill_id.short()} round {round} (needs {task.required_claims})")
        return task

    def task(self, skill_id: ContentHash, round: Optional[int] = None) -> AuditTask:
        if round is not None:
            task = self.tasks.get(f"{skill_id.hex()}:{round}")
        else:
            rounds = [t for t in self.tasks.values() if t.skill_id == skill_id]
            task = max(rounds, key=lambda t: t.round) if rounds else None
        if task is None:
            raise UnknownTask(f"No audit task for {skill_id.short()}")
        return task

    def claim_task(
        self,
        task: AuditTask,
        auditor_id: str,
        now: int,
        deposit: Optional[int] = None,
        bond: Optional[int] = None,
    ) -> AuditTask:
        if task.state != TaskState.OPEN:
            raise WrongTaskState(f"Task {task.skill_id.short()} is {task.state.value}, not open")
        account = self.refresh(auditor_id)
        if not account.active:
            raise InactiveAuditor(f"Auditor {auditor_id} is inactive (stake {account.stake})")
        if auditor_id in task.claimants:
            raise DuplicateClaim(f"{auditor_id} already claimed {task.skill_id.short()}")

        deposit = self.params.commitment_deposit if deposit is None else deposit
        if deposit < self.params.commitment_deposit:
            raise DepositTooSmall(f"Deposit {deposit} below {self.params.commitment_deposit}")
        if task.publication_type.confidential:
            bond = self.params.confidentiality_bond if bond is None else bond
            if bond <= 0:
                raise BondRequired(f"{task.publication_type.label} skills need a confidentiality bond")
        else:
            bond = 0 if bond is None else bond
            if bond:
                raise BondNotApplicable("Transparent skills take no confidentiality bond")

        with self.ledger.atomic():
            if deposit:
                self.ledger.open_escrow(task.deposit_escrow_id(auditor_id), auditor_id, deposit,
                                        "commitment_deposit", parties=[auditor_id])
            if bond:
                self.ledger.open_escrow(task.bond_escrow_id(auditor_id), auditor_id, bond,
                                        "confidentiality_bond", parties=[auditor_id])
        if bond:
            account.bonds[task.task_id] = bond
        task.claimants[auditor_id] = Claim(auditor_id, deposit, bond, now)
        logger.info(f"[Audit] {auditor_id} claimed {task.skill_id.short()} "
                    f"({len(task.claimants)}/{task.required_claims})")
        if len(task.claimants) >= task.required_claims:
            task.state = TaskState.REVIEWING
            task.reviewing_since = now
        return task

    def submit_verdict(self, task: AuditTask, verdict: Verdict) -> AuditTask:
        if task.state != TaskState.REVIEWING:
            raise WrongTaskState(f"Task {task.skill_id.short()} is {task.state.value}, not reviewing")
        if verdict.auditor not in task.claimants:
            raise NotAClaimant(f"{verdict.auditor} did not claim {task.skill_id.short()}")
        if verdict.auditor in task.verdicts:
            raise DuplicateVerdict(f"{verdict.auditor} already submitted a verdict")
        if verdict.skill_id != task.skill_id:
            raise BadSignature("Verdict is for a different skill")
        if not verdict.verify(self.auditor(verdict.auditor).verify_key):
            raise BadSignature(f"Verdict signature from {verdict.auditor} does not verify")
        task.verdicts[verdict.auditor] = verdict
        if len(task.verdicts) == len(task.claimants):
            task.state = TaskState.TALLYING
        return task

    def expire_task(self, task: AuditTask, now: int) -> List[str]:
        """Close a task whose window has run out; returns the defaulted claimants.

        Reviewing past the verdict window: non-submitters forfeit their deposit.
        Open past the claim window: the few claimants get their deposits and
        bonds back and the task tallies with no verdicts, i.e. no quorum.
        """
        if task.state == TaskState.OPEN:
            self._expire_unclaimed(task, now)
            return []
        if task.state != TaskState.REVIEWING or task.reviewing_since is None:
            return []
        if now < task.reviewing_since + self.params.verdict_window:
            return []
        missing = sorted(set(task.claimants) - set(task.verdicts))
        with self.ledger.atomic():
            for auditor_id in missing:
                escrow_id = task.deposit_escrow_id(auditor_id)
                if self.ledger.has_escrow(escrow_id):
                    self.ledger.release_escrow(escrow_id, TREASURY, memo="verdict deadline missed")
        task.defaulted.extend(missing)
        task.state = TaskState.TALLYING
        if missing:
            logger.warning(f"[Audit] Deadline passed for {task.skill_id.short()}; defaulted: {missing}")
        return missing

    def _expire_unclaimed(self, task: AuditTask, now: int):
        if now < task.opened_at + self.params.claim_window:
            return
        with self.ledger.atomic():
            for auditor_id in task.claimants:
                escrow_id = task.deposit_escrow_id(auditor_id)
                if self.ledger.has_escrow(escrow_id):
                    self.ledger.release_escrow(escrow_id, auditor_id, memo="claim window closed")
            self.release_bonds(task)
        for auditor_id in task.claimants:
            self.refresh(auditor_id)
        task.unclaimed = True
        task.state = TaskState.TALLYING
        logger.warning(f"[Audit] Claim window closed for {task.skill_id.short()} "
                       f"with {len(task.claimants)}/{task.required_claims} claims")

    def decide(self, task: AuditTask, theta_ppm: Optional[int] = None) -> AuditOutcome:
        if task.state != TaskState.TALLYING:
            raise WrongTaskState(f"Task {task.skill_id.short()} is {task.state.value}, not ready to tally")
        theta_ppm = self.params.theta_ppm if theta_ppm is None else theta_ppm
        verdicts = tuple(task.verdicts[a] for a in sorted(task.verdicts))
        reputations = {v.auditor: self.auditor(v.auditor).reputation for v in verdicts}
        result = tally(verdicts, reputations, theta_ppm)
        outcome = AuditOutcome(
            skill_id=task.skill_id,
            safe_weight=result.safe_weight,
            total_weight=result.total_weight,
            approved=result.approved,
            threshold_ppm=theta_ppm,
            verdicts=verdicts,
            no_quorum=result.no_quorum,
            round=task.round,
            reputations=reputations,
        )
        logger.info(
            f"[Audit] Tally {task.skill_id.short()}: {result.safe_weight}/{result.total_weight} "
            f"-> {'approved' if outcome.approved else 'rejected'}"
            f"{' (no quorum)' if outcome.no_quorum else ''}"
        )
        return outcome

    # ============================================
    # SETTLEMENT
    # ============================================

    def settle(self, task: AuditTask, outcome: AuditOutcome) -> Optional[Settlement]:
        """Apply rewards, slashes, refunds. Re-audits only refund deposits."""
        if task.state != TaskState.TALLYING:
            raise WrongTaskState(f"Task {task.skill_id.short()} is {task.state.value}")
        settlement = None
        with self.ledger.atomic():
            if not task.is_reaudit:
                settlement = self._settle_pool(task, outcome)
            for auditor_id in task.verdicts:
                escrow_id = task.deposit_escrow_id(auditor_id)
                if self.ledger.has_escrow(escrow_id):
                    self.ledger.release_escrow(escrow_id, auditor_id, memo="deposit refund")
            if task.is_reaudit or not outcome.approved:
                self.release_bonds(task)
        for auditor_id in task.claimants:
            self.refresh(auditor_id)
        task.outcome = outcome
        task.state = TaskState.SETTLED
        return settlement

    def _settle_pool(self, task: AuditTask, outcome: AuditOutcome) -> Settlement:
        participants = [
            Participant(v.auditor, v.vote, self.auditor(v.auditor).reputation,
                        self.ledger.balance(stake_account(v.auditor)))
            for v in outcome.verdicts
        ]
        reward_base = slippage_r_base(
            task.token_count, task.reviewing_since or task.opened_at, task.opened_at, self.params
        )
        settlement = settle_audit(
            self.ledger, outcome, participants, task.pool, task.pool_escrow_id, task.developer,
            task.token_count, self.params, reward_base=reward_base,
        )
        logger.info(
            f"[Audit] Settled {task.skill_id.short()}: rewards {sum(settlement.rewards.values())}, "
            f"slashes {sum(settlement.slashes.values())}, refund {settlement.developer_refund}"
        )
        return settlement

    def release_bonds(self, task: AuditTask):
        for auditor_id in task.claimants:
            escrow_id = task.bond_escrow_id(auditor_id)
            if self.ledger.has_escrow(escrow_id):
                self.ledger.release_escrow(escrow_id, auditor_id, memo="bond release")
            self.auditors[auditor_id].bonds.pop(task.task_id, None)

    def release_skill_bonds(self, skill_id: ContentHash):
        for task in self.tasks.values():
            if task.skill_id == skill_id and task.state == TaskState.SETTLED:
                self.release_bonds(task)

    def report_leak(self, auditor_id: str, skill_id: ContentHash) -> int:
        """Forfeit the auditor's bond(s) on this skill and zero their reputation."""
        account = self.auditor(auditor_id)
        prefix = skill_id.hex() + ":"
        held = [task_id for task_id in account.bonds if task_id.startswith(prefix)]
        if not held:
            raise NoBondHeld(f"{auditor_id} holds no bond for {skill_id.short()}")
        forfeited = 0
        with self.ledger.atomic():
            for task_id in held:
                escrow_id = f"bond:{task_id}:{auditor_id}"
                if self.ledger.has_escrow(escrow_id):
                    forfeited += self.ledger.release_escrow(escrow_id, TREASURY, memo="leak forfeiture")
        for task_id in held:
            account.bonds.pop(task_id, None)
        account.set_scaled_reputation(0)
        self.refresh(auditor_id)
        logger.warning(f"[Audit] Leak by {auditor_id} on {skill_id.short()}: bond {forfeited} forfeited")
        return forfeited

    # ============================================
    # KEY DELIVERY
    # ============================================

    def deliver_audit_keys(
        self,
        registry: SkillRegistry,
        task: AuditTask,
        record: SkillRecord,
        developer_keys: KeyPair,
        content_key: Optional[bytes] = None,
        plaintext: Optional[bytes] = None,
    ) -> List[AuditDelivery]:
        """Wrap k_content for each claimant under an ECDH+HKDF audit key.

        Licensed/Sealed deliveries go on the log; Committed deliveries are
        returned (with a fresh ciphertext) for off-log transfer.
        """
        ptype = record.publication_type
        if ptype == PublicationType.TRANSPARENT:
            raise WrongPublicationType("Transparent skills need no key delivery")
        if task.state != TaskState.REVIEWING:
            raise WrongTaskState(f"Task {task.skill_id.short()} is {task.state.value}, not reviewing")

        ciphertext = None
        if ptype == PublicationType.COMMITTED:
            if plaintext is None or content_hash(plaintext) != record.content_hash:
                raise ContentMismatch("Committed delivery needs the exact committed content")
            content_key = content_key or new_content_key()
            ciphertext = encrypt_content(plaintext, content_key, record.content_hash.digest)
        elif content_key is None:
            raise WrongPublicationType("The developer's content key is required")

        deliveries = []
        for auditor_id in sorted(task.claimants):
            pk_i = self.auditor(auditor_id).public_key
            key = _audit_key(developer_keys.secret_key, pk_i, record.skill_id, pk_i, developer_keys.public_key)
            wrapped = wrap_content_key(content_key, key, KeyContext.AUDIT, record.skill_id)
            if ptype != PublicationType.COMMITTED:
                existing = registry.deliveries_for(record.skill_id, pk_i, KeyContext.AUDIT)
                if existing:
                    wrapped = existing[-1].wrapped
                else:
                    registry.post_key_delivery(record.skill_id, pk_i, wrapped)
            deliveries.append(AuditDelivery(auditor_id, pk_i, wrapped, ciphertext))
        logger.info(f"[Audit] Delivered audit keys for {record.skill_id.short()} to {len(deliveries)} auditors")
        return deliveries

    # ============================================
    # PERSISTENCE
    # ============================================

    def to_dict(self) -> Dict[str, Any]:
        return {
            "auditors": {k: a.to_dict() for k, a in self.auditors.items()},
            "tasks": {k: t.to_dict() for k, t in self.tasks.items()},
        }

    def load_dict(self, data: Dict[str, Any]):
        self.auditors = {k: AuditorAccount.from_dict(a) for k, a in data.get("auditors", {}).items()}
        self.tasks = {k: AuditTask.from_dict(t) for k, t in data.get("tasks", {}).items()}
