"""
SIGIL Protocol - Node
One process's view of the protocol: the registry log, the token ledger and
the audit book wired into publish -> audit -> settle -> load, plus the
post-approval flows (licensing, monitoring, leaks, re-audit challenges).

Every state change that is not already a registry event is mirrored onto
the log with record_event so the log tells the whole story.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Union

from audit.committee import AuditBook, AuditDelivery, AuditTask, open_audit_delivery
from audit.models import AuditOutcome, Verdict
from canon_crypto import (
    AuthenticationFailed,
    ContentHash,
    KeyContext,
    KeyPair,
    content_hash,
    decrypt_content,
    derive_delivery_key,
    ecdh_shared_secret,
    encrypt_content,
    license_binding,
    new_content_key,
    sealed_binding,
    unwrap_content_key,
    wrap_content_key,
)
from economics.challenge import Challenge, ChallengeStatus, re_audit_challenge, settle_challenge
from economics.ledger import TREASURY, TokenLedger, stake_account
from economics.licensing import (
    Purchase,
    PurchaseStatus,
    confirm_delivery,
    expire_purchase,
    freeze_delivery_bond,
    purchase_licensed,
)
from economics.params import EconomicParams
from economics.reputation import MonitoringEvent, apply_monitoring_outcome
from economics.rewards import FeeSplit, RetroDistribution, Settlement, publication_fee, retrospective_slash
from registry.errors import MalformedPayload, NotApproved, NotPending, WrongPublicationType
from registry.log import EventKind
from registry.models import (
    DeliveryRecord,
    PermissionManifest,
    PublicationType,
    SkillAuditEvent,
    SkillRecord,
    SkillStatus,
)
from registry.store import SkillRegistry, estimate_tokens
from svl import LoadRequest, LoadResult, SkillVerificationLoader

from .errors import (
    AlreadyMonitored,
    ChallengePending,
    DuplicatePurchase,
    KeyMismatch,
    MonitoringWindowOpen,
    UnknownChallenge,
    UnknownPurchase,
)

logger = logging.getLogger(__name__)

SkillRef = Union[str, ContentHash]


@dataclass(frozen=True)
class PublishReceipt:
    skill_id: ContentHash
    content_hash: ContentHash
    publication_type: PublicationType
    fee: FeeSplit
    token_count: int
    content_key: Optional[bytes] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id.hex(),
            "content_hash": self.content_hash.hex(),
            "publication_type": self.publication_type.label,
            "fee": self.fee.to_dict(),
            "token_count": self.token_count,
        }


@dataclass
class MonitoringReport:
    skill_id: str
    event: MonitoringEvent
    reputations: Dict[str, int] = field(default_factory=dict)
    slashes: Dict[str, int] = field(default_factory=dict)
    distribution: Optional[RetroDistribution] = None
    revoked: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "event": self.event.value,
            "reputations": dict(self.reputations),
            "slashes": dict(self.slashes),
            "distribution": self.distribution.to_dict() if self.distribution else None,
            "revoked": self.revoked,
        }


@dataclass
class TallyReport:
    outcome: AuditOutcome
    record: SkillRecord
    settlement: Optional[Settlement] = None
    challenge: Optional[Challenge] = None
    monitoring: Optional[MonitoringReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skill_id": self.record.skill_id.hex(),
            "round": self.outcome.round,
            "safe_score": float(self.outcome.safe_score),
            "approved": self.outcome.approved,
            "no_quorum": self.outcome.no_quorum,
            "status": self.record.status.value,
            "settlement": self.settlement.to_dict() if self.settlement else None,
            "challenge": self.challenge.to_dict() if self.challenge else None,
            "monitoring": self.monitoring.to_dict() if self.monitoring else None,
        }


class SigilNode:
    def __init__(
        self,
        params: Optional[EconomicParams] = None,
        registry: Optional[SkillRegistry] = None,
        ledger: Optional[TokenLedger] = None,
    ):
        self.params = params or EconomicParams()
        self.registry = registry if registry is not None else SkillRegistry()
        self.ledger = ledger if ledger is not None else TokenLedger()
        self.book = AuditBook(self.ledger, self.params)
        self.purchases: Dict[str, Purchase] = {}
        self.challenges: Dict[str, Challenge] = {}
        self.approved_at: Dict[str, int] = {}
        self.monitored: Set[str] = set()
        self.registry.add_callback(self._on_commit)

    # ============================================
    # SUPPLY
    # ============================================

    def genesis(self):
        """Fund the Treasury with T0 once per node."""
        if self.ledger.total_supply == 0 and self.params.treasury_initial:
            self.mint(TREASURY, self.params.treasury_initial, memo="treasury genesis")

    def mint(self, holder: str, amount: int, memo: str = "faucet"):
        self.ledger.mint(holder, amount, memo=memo)
        self.registry.record_event(EventKind.MINT, {"holder": holder, "amount": amount, "memo": memo})

    # ============================================
    # HELPERS
    # ============================================

    def skill(self, ref: SkillRef) -> SkillRecord:
        return self.registry.get_skill(ref)

    def task(self, ref: SkillRef, round: Optional[int] = None) -> AuditTask:
        return self.book.task(self.skill(ref).skill_id, round)

    def _on_commit(self, event: SkillAuditEvent):
        record = self.registry.get_skill(event.skill_id)
        self.book.open_task(
            event.skill_id, event.publication_type, event.developer,
            record.token_count, opened_at=event.timestamp,
        )
        self.registry.record_event(EventKind.AUDIT_REQUEST, event.to_dict())

    @staticmethod
    def _require_developer(record: SkillRecord, keys: KeyPair):
        if keys.public_key != record.developer_key:
            raise KeyMismatch(f"Keypair is not the developer key of {record.qualified_name}")

    def recover_content_key(self, record: SkillRecord, developer_keys: KeyPair) -> bytes:
        """Sealed skills carry k_content on the log, wrapped for the developer."""
        self._require_developer(record, developer_keys)
        deliveries = self.registry.deliveries_for(record.skill_id, record.developer_key, KeyContext.SEALED)
        if not deliveries:
            raise WrongPublicationType(f"{record.qualified_name} has no sealed self-delivery")
        key = derive_delivery_key(
            ecdh_shared_secret(developer_keys.secret_key, record.developer_key),
            KeyContext.SEALED, sealed_binding(record.skill_id),
        )
        return unwrap_content_key(deliveries[-1].wrapped, key, record.skill_id)

    @staticmethod
    def _check_content_key(record: SkillRecord, content_key: bytes):
        try:
            decrypt_content(record.payload or b"", content_key, record.content_hash.digest)
        except AuthenticationFailed:
            raise KeyMismatch(f"Content key does not open {record.qualified_name}")

    # ============================================
    # PUBLISH
    # ============================================

    def publish(
        self,
        developer: str,
        keys: KeyPair,
        name: str,
        publication_type: Union[PublicationType, str],
        content: bytes,
        manifest: Union[PermissionManifest, dict],
        now: int,
        prev_version: Optional[ContentHash] = None,
        token_count: Optional[int] = None,
        price: int = 0,
    ) -> PublishReceipt:
        """Commit a skill, pay C_pub into its audit pool and open the task."""
        ptype = PublicationType.parse(publication_type)
        token_count = estimate_tokens(content) if token_count is None else int(token_count)
        fee = publication_fee(token_count, self.params)
        licensed = ptype == PublicationType.LICENSED
        price = int(price) if licensed else 0
        if licensed and price > self.params.delivery_bond:
            raise MalformedPayload(f"Price {price} exceeds the delivery bond {self.params.delivery_bond}")
        self.ledger.require_funds(developer, fee.total + (self.params.delivery_bond if licensed else 0))

        digest = content_hash(content)
        content_key = None
        if ptype == PublicationType.TRANSPARENT:
            payload = content
        elif ptype == PublicationType.COMMITTED:
            payload = digest
        else:
            content_key = new_content_key()
            payload = encrypt_content(content, content_key, digest.digest)

        skill_id = self.registry.commit_skill(
            developer, name, ptype, payload, manifest, prev_version, now,
            developer_key=keys.public_key, content_hash_value=digest,
            token_count=token_count, price=price,
        )
        record = self.registry.get_skill(skill_id)
        task = self.book.task(skill_id, 0)
        with self.ledger.atomic():
            self.ledger.transfer(developer, TREASURY, fee.treasury_cut, memo="protocol fee")
            if fee.audit_pool:
                self.ledger.open_escrow(task.pool_escrow_id, developer, fee.audit_pool, "audit_pool",
                                        parties=[developer])
            if licensed:
                freeze_delivery_bond(self.ledger, record, self.params)
        task.pool = fee.audit_pool

        if ptype == PublicationType.SEALED:
            seal = derive_delivery_key(
                ecdh_shared_secret(keys.secret_key, keys.public_key),
                KeyContext.SEALED, sealed_binding(skill_id),
            )
            wrapped = wrap_content_key(content_key, seal, KeyContext.SEALED, skill_id)
            self.registry.post_key_delivery(skill_id, keys.public_key, wrapped)

        return PublishReceipt(skill_id, digest, ptype, fee, token_count, content_key)

    # ============================================
    # AUDIT
    # ============================================

    def register_auditor(self, auditor_id: str, keys: KeyPair, stake: int, now: int = 0):
        account = self.book.register_auditor(auditor_id, keys.public_key, keys.verify_key, stake)
        self.registry.record_event(EventKind.AUDITOR, {
            "auditor": auditor_id,
            "public_key": keys.public_key.hex(),
            "verify_key": keys.verify_key.hex(),
            "stake": stake,
            "time": now,
        })
        return account

    def claim(self, ref: SkillRef, auditor_id: str, now: int,
              deposit: Optional[int] = None, bond: Optional[int] = None) -> AuditTask:
        task = self.task(ref)
        self.book.claim_task(task, auditor_id, now, deposit=deposit, bond=bond)
        claim = task.claimants[auditor_id]
        self.registry.record_event(EventKind.CLAIM, {
            "skill_id": task.skill_id.hex(),
            "round": task.round,
            "auditor": auditor_id,
            "deposit": claim.deposit,
            "bond": claim.bond,
            "time": now,
        })
        return task

    def deliver_audit_keys(
        self,
        ref: SkillRef,
        developer_keys: KeyPair,
        content_key: Optional[bytes] = None,
        plaintext: Optional[bytes] = None,
    ) -> List[AuditDelivery]:
        record = self.skill(ref)
        self._require_developer(record, developer_keys)
        if record.publication_type == PublicationType.SEALED and content_key is None:
            content_key = self.recover_content_key(record, developer_keys)
        task = self.book.task(record.skill_id)
        return self.book.deliver_audit_keys(
            self.registry, task, record, developer_keys, content_key=content_key, plaintext=plaintext
        )

    def fetch_audit_content(
        self,
        ref: SkillRef,
        auditor_keys: KeyPair,
        delivery: Optional[AuditDelivery] = None,
    ) -> bytes:
        """What a claimant reviews: plaintext for Transparent, else its decrypted delivery."""
        record = self.skill(ref)
        if record.publication_type == PublicationType.TRANSPARENT:
            return record.payload or b""
        if delivery is None:
            if record.publication_type == PublicationType.COMMITTED:
                raise WrongPublicationType("Committed audits are delivered off-log")
            found = self.registry.deliveries_for(record.skill_id, auditor_keys.public_key, KeyContext.AUDIT)
            if not found:
                raise NotPending(f"No audit key delivered to this auditor for {record.skill_id.short()}")
            return open_audit_delivery(record, auditor_keys, found[-1].wrapped)
        return open_audit_delivery(record, auditor_keys, delivery.wrapped, delivery.ciphertext)

    def submit_verdict(self, verdict: Verdict, now: int = 0) -> AuditTask:
        task = self.book.task(verdict.skill_id)
        self.book.submit_verdict(task, verdict)
        body = verdict.to_dict()
        body.update({"round": task.round, "time": now})
        self.registry.record_event(EventKind.VERDICT, body)
        return task

    def expire_task(self, ref: SkillRef, now: int) -> List[str]:
        """Apply the verdict or claim deadline; the task then awaits tally()."""
        task = self.task(ref)
        before = task.state
        missing = self.book.expire_task(task, now)
        if task.state != before:
            self.registry.record_event(EventKind.EXPIRY, {
                "skill_id": task.skill_id.hex(), "round": task.round, "defaulted": missing,
                "unclaimed": task.unclaimed, "time": now,
            })
        return missing

    def tally(self, ref: SkillRef, now: int) -> TallyReport:
        """Decide, settle, then promote or reject (or resolve a challenge)."""
        record = self.skill(ref)
        task = self.book.task(record.skill_id)
        if not task.is_reaudit and record.status != SkillStatus.PENDING:
            raise NotPending(f"{record.qualified_name} is {record.status.value}, not pending")
        outcome = self.book.decide(task)
        if task.is_reaudit:
            return self._resolve_challenge(record, task, outcome, now)

        settlement = self.book.settle(task, outcome)
        if outcome.approved:
            record = self.registry.promote(record.skill_id, outcome)
            self.approved_at[record.skill_id.hex()] = now
        else:
            record = self.registry.reject(record.skill_id, outcome)
        body = settlement.to_dict() if settlement else {"skill_id": record.skill_id.hex()}
        body.update({"round": task.round, "time": now})
        self.registry.record_event(EventKind.SETTLEMENT, body)
        return TallyReport(outcome, record, settlement)

    # ============================================
    # LICENSING
    # ============================================

    def purchase(self, ref: SkillRef, buyer: str, buyer_key: bytes, now: int) -> Purchase:
        record = self.skill(ref)
        key = f"{record.skill_id.hex()}:{buyer}"
        existing = self.purchases.get(key)
        if existing is not None and existing.status != PurchaseStatus.REFUNDED:
            raise DuplicatePurchase(f"{buyer} already bought {record.qualified_name}")
        purchase = purchase_licensed(self.ledger, record, buyer, buyer_key, now, self.params)
        self.purchases[key] = purchase
        self.registry.record_event(EventKind.PURCHASE, purchase.to_dict())
        return purchase

    def purchase_for(self, ref: SkillRef, buyer: str) -> Purchase:
        record = self.skill(ref)
        purchase = self.purchases.get(f"{record.skill_id.hex()}:{buyer}")
        if purchase is None:
            raise UnknownPurchase(f"{buyer} has no purchase of {record.qualified_name}")
        return purchase

    def deliver_license(
        self,
        ref: SkillRef,
        buyer: str,
        developer_keys: KeyPair,
        content_key: Optional[bytes],
        now: int,
    ) -> DeliveryRecord:
        """Wrap k_content for the buyer and release the escrowed price."""
        record = self.skill(ref)
        self._require_developer(record, developer_keys)
        purchase = self.purchase_for(record.skill_id, buyer)
        if content_key is None:
            raise KeyMismatch("The content key is required to deliver a license")
        self._check_content_key(record, content_key)

        confirm_delivery(self.ledger, purchase, now)
        pk_b = bytes.fromhex(purchase.buyer_key)
        key = derive_delivery_key(
            ecdh_shared_secret(developer_keys.secret_key, pk_b),
            KeyContext.LICENSE, license_binding(record.skill_id, pk_b, record.developer_key),
        )
        wrapped = wrap_content_key(content_key, key, KeyContext.LICENSE, record.skill_id)
        return self.registry.post_key_delivery(record.skill_id, pk_b, wrapped)

    def expire_purchases(self, now: int) -> List[Purchase]:
        expired = []
        for purchase in self.purchases.values():
            if expire_purchase(self.ledger, purchase, now):
                expired.append(purchase)
                self.registry.record_event(EventKind.EXPIRY, {
                    "purchase": purchase.escrow_id, "time": now,
                })
        return expired

    # ============================================
    # GOVERNANCE
    # ============================================

    def report_leak(self, auditor_id: str, ref: SkillRef, now: int = 0) -> int:
        record = self.skill(ref)
        forfeited = self.book.report_leak(auditor_id, record.skill_id)
        self.registry.record_event(EventKind.LEAK, {
            "auditor": auditor_id, "skill_id": record.skill_id.hex(), "forfeited": forfeited, "time": now,
        })
        return forfeited

    def _require_live(self, record: SkillRecord):
        if record.status != SkillStatus.APPROVED or self.registry.is_revoked(record.skill_id):
            raise NotApproved(f"{record.qualified_name} is not an approved, unrevoked skill")

    def _stakes(self) -> Dict[str, int]:
        return {a: self.ledger.balance(stake_account(a)) for a in self.book.auditors}

    def monitor(
        self,
        ref: SkillRef,
        event: Union[MonitoringEvent, str],
        now: int,
        whistleblower: Optional[str] = None,
    ) -> MonitoringReport:
        """Close the monitoring window of an approved skill, once."""
        record = self.skill(ref)
        event = MonitoringEvent.parse(event)
        self._require_live(record)
        skill_hex = record.skill_id.hex()
        if skill_hex in self.monitored:
            raise AlreadyMonitored(f"{record.qualified_name} was already monitored")

        if event == MonitoringEvent.CLEAN_WINDOW:
            since = self.approved_at.get(skill_hex, record.timestamp)
            if now < since + self.params.monitoring_window:
                raise MonitoringWindowOpen(
                    f"Monitoring window of {record.qualified_name} closes at {since + self.params.monitoring_window}"
                )
            update = apply_monitoring_outcome(
                record.audit_report.verdicts, event, self.book.reputations(), self._stakes(),
                record.token_count, self.params,
            )
            self.book.set_reputations(update.reputations)
            with self.ledger.atomic():
                self.book.release_skill_bonds(record.skill_id)
            report = MonitoringReport(skill_hex, event, reputations=update.reputations)
        else:
            report = self._punish(record, whistleblower, "proven malicious in monitoring")

        self.monitored.add(skill_hex)
        body = report.to_dict()
        body["time"] = now
        self.registry.record_event(EventKind.MONITORING, body)
        return report

    def _punish(self, record: SkillRecord, whistleblower: Optional[str], reason: str) -> MonitoringReport:
        """Retrospective slash of the approving voters, 30/40/30 split, revocation."""
        update = apply_monitoring_outcome(
            record.audit_report.verdicts, MonitoringEvent.PROVEN_MALICIOUS,
            self.book.reputations(), self._stakes(), record.token_count, self.params,
        )
        distribution = None
        with self.ledger.atomic():
            for auditor_id, amount in update.slashes.items():
                self.ledger.transfer(stake_account(auditor_id), TREASURY, amount, memo="retrospective slash")
            pool = sum(update.slashes.values())
            if pool > 0:
                distribution = retrospective_slash(pool, whistleblower, update.dissenters, self.params)
                if distribution.whistleblower_amount:
                    self.ledger.transfer(TREASURY, distribution.whistleblower, distribution.whistleblower_amount,
                                         memo="whistleblower share")
                for auditor_id, amount in distribution.dissenter_amounts.items():
                    self.ledger.transfer(TREASURY, stake_account(auditor_id), amount, memo="dissenter share")
            self.book.release_skill_bonds(record.skill_id)
        self.book.set_reputations(update.reputations)
        for auditor_id in set(update.slashes) | set(update.dissenters):
            self.book.refresh(auditor_id)
        self.registry.revoke(record.skill_id, reason)
        return MonitoringReport(
            record.skill_id.hex(), MonitoringEvent.PROVEN_MALICIOUS,
            reputations=update.reputations, slashes=update.slashes,
            distribution=distribution, revoked=True,
        )

    def open_challenge(self, ref: SkillRef, submitter: str, now: int, fee: Optional[int] = None) -> Challenge:
        record = self.skill(ref)
        self._require_live(record)
        skill_hex = record.skill_id.hex()
        if any(c.skill_id == skill_hex and c.status == ChallengeStatus.OPEN for c in self.challenges.values()):
            raise ChallengePending(f"{record.qualified_name} already has an open re-audit")
        round = max(t.round for t in self.book.tasks.values() if t.skill_id == record.skill_id) + 1
        fee = self.params.reaudit_fee if fee is None else fee
        challenge = re_audit_challenge(self.ledger, record, submitter, fee, now, round, self.params)
        task = self.book.open_task(
            record.skill_id, record.publication_type, record.developer, record.token_count,
            opened_at=now, round=round,
        )
        self.challenges[task.task_id] = challenge
        self.registry.record_event(EventKind.CHALLENGE, challenge.to_dict())
        return challenge

    def challenge(self, ref: SkillRef, round: Optional[int] = None) -> Challenge:
        task = self.task(ref, round)
        challenge = self.challenges.get(task.task_id)
        if challenge is None:
            raise UnknownChallenge(f"No challenge for round {task.round} of {task.skill_id.short()}")
        return challenge

    def resolve_challenge(self, ref: SkillRef, now: int) -> TallyReport:
        task = self.task(ref)
        if not task.is_reaudit:
            raise UnknownChallenge(f"{task.skill_id.short()} has no re-audit in progress")
        return self.tally(ref, now)

    def _resolve_challenge(self, record: SkillRecord, task: AuditTask, outcome: AuditOutcome, now: int) -> TallyReport:
        challenge = self.challenges.get(task.task_id)
        if challenge is None:
            raise UnknownChallenge(f"No challenge for task {task.task_id}")
        reversed_verdict = not outcome.approved and not outcome.no_quorum
        self.book.settle(task, outcome)
        settle_challenge(self.ledger, challenge, reversed_verdict)
        monitoring = None
        if reversed_verdict:
            monitoring = self._punish(record, challenge.submitter, "re-audit reversed the approval")
            self.monitored.add(record.skill_id.hex())
        self.registry.record_event(EventKind.SETTLEMENT, {
            "skill_id": record.skill_id.hex(),
            "round": task.round,
            "challenge": challenge.status.value,
            "time": now,
        })
        logger.info(f"[Audit] Re-audit of {record.qualified_name}: {challenge.status.value}")
        return TallyReport(outcome, self.skill(record.skill_id), None, challenge, monitoring)

    def decay(self, now: int = 0) -> Dict[str, int]:
        """One α-decay step for every auditor."""
        updated = self.book.decay_reputations()
        self.registry.record_event(EventKind.DECAY, {"reputations": updated, "time": now})
        return updated

    # ============================================
    # LOADING
    # ============================================

    def loader(self) -> SkillVerificationLoader:
        return SkillVerificationLoader(self.registry)

    def load(self, request: LoadRequest) -> LoadResult:
        return self.loader().load(request)

    # ============================================
    # PERSISTENCE
    # ============================================

    def to_state(self) -> Dict[str, Any]:
        return {
            "params": self.params.model_dump(mode="json"),
            "ledger": self.ledger.to_dict(),
            "book": self.book.to_dict(),
            "purchases": {k: p.to_dict() for k, p in self.purchases.items()},
            "challenges": {k: c.to_dict() for k, c in self.challenges.items()},
            "approved_at": dict(self.approved_at),
            "monitored": sorted(self.monitored),
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any], registry: SkillRegistry) -> "SigilNode":
        node = cls(
            EconomicParams.model_validate(state["params"]),
            registry=registry,
            ledger=TokenLedger.from_dict(state["ledger"]),
        )
        node.book.load_dict(state.get("book", {}))
        node.purchases = {k: Purchase.from_dict(p) for k, p in state.get("purchases", {}).items()}
        node.challenges = {k: Challenge.from_dict(c) for k, c in state.get("challenges", {}).items()}
        node.approved_at = {k: int(v) for k, v in state.get("approved_at", {}).items()}
        node.monitored = set(state.get("monitored", []))
        return node
