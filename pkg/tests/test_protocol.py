import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from audit.errors import NoBondHeld, WrongTaskState
from audit.models import Verdict, Vote
from canon_crypto import KeyPair, SigilError, content_hash, new_content_key
from economics import tc
from economics.challenge import ChallengeStatus
from economics.ledger import TREASURY, stake_account
from economics.licensing import PurchaseStatus
from protocol import SigilNode
from protocol.errors import (
    AlreadyMonitored,
    ChallengePending,
    DuplicatePurchase,
    KeyMismatch,
    MonitoringWindowOpen,
)
from registry import SkillRegistry, SkillStatus
from registry.errors import MalformedPayload, NotApproved, NotPending
from svl import LoadRefused, LoadRequest, LoadTarget, RefusalKind, UserScope

from .conftest import AUDITORS, MANIFEST, Publisher

SCOPE = UserScope(frozenset(MANIFEST["tools"]), frozenset(MANIFEST["scopes"]))
CONTENT = b"# helper\nSummarize files.\n"


def buy(publisher, keypairs, receipt, buyer="user"):
    node = publisher.node
    node.purchase(receipt.skill_id, buyer, keypairs(buyer).public_key, publisher.tick())
    return node.deliver_license(receipt.skill_id, buyer, keypairs("dev"), receipt.content_key, publisher.tick())


# ============================================
# END TO END
# ============================================

def test_all_publication_types_round_trip(publisher, keypairs):
    node = publisher.node
    supply = node.ledger.total_supply
    transparent = publisher.approved("transparent", b"# open\n")
    licensed = publisher.approved("licensed", b"# paid\n", price=tc(1))
    sealed = publisher.approved("sealed", b"# private\n")
    committed = publisher.approved("committed", b"# local\n")
    buy(publisher, keypairs, licensed)

    requests = [
        (transparent, LoadTarget(transparent.skill_id), None),
        (licensed, LoadTarget(licensed.skill_id), keypairs("user")),
        (sealed, LoadTarget(sealed.skill_id), keypairs("dev")),
        (committed, LoadTarget(committed.skill_id, "skill.md", b"# local\n"), keypairs("user")),
    ]
    for receipt, target, requester in requests:
        result = node.load(LoadRequest((target,), requester=requester, user_scope=SCOPE))
        assert content_hash(result.skills[0].content) == receipt.content_hash

    assert node.registry.verify_log().ok
    assert node.ledger.total_supply == supply
    node.ledger.assert_conserved()


def test_publish_charges_fee_and_bond(publisher):
    node = publisher.node
    before = node.ledger.balance("dev")
    receipt = publisher.publish("licensed", CONTENT, price=tc(1))
    assert receipt.token_count == 7
    assert receipt.fee.total == 5 * 201
    assert node.ledger.balance("dev") == before - receipt.fee.total - node.params.delivery_bond
    with pytest.raises(MalformedPayload):
        publisher.publish("licensed", b"too dear", price=node.params.delivery_bond + 1)


def test_audit_settles_rewards(publisher):
    node = publisher.node
    receipt = publisher.publish("transparent", CONTENT)
    report = publisher.audit(receipt, votes=["safe"] * 4 + ["unsafe"])
    assert report.record.status == SkillStatus.APPROVED
    assert report.settlement.rewards == {a: 20 for a in AUDITORS[:4]}
    assert report.settlement.slashes == {"a5": 402}
    assert node.ledger.balance(stake_account("a1")) == tc(20) + 20
    assert report.to_dict()["status"] == "approved"


def test_rejected_skill_never_loads(publisher):
    receipt = publisher.publish("transparent", CONTENT)
    report = publisher.audit(receipt, votes=["unsafe"] * 3 + ["safe"] * 2)
    assert report.record.status == SkillStatus.REJECTED
    with pytest.raises(LoadRefused) as excinfo:
        publisher.node.load(LoadRequest((receipt.skill_id,), user_scope=SCOPE))
    assert excinfo.value.kind == RefusalKind.NOT_APPROVED


def test_tally_needs_every_verdict(publisher, keypairs):
    node = publisher.node
    receipt = publisher.publish("transparent", CONTENT)
    for auditor in AUDITORS:
        node.claim(receipt.skill_id, auditor, publisher.tick())
    node.submit_verdict(Verdict.create(receipt.skill_id, "a1", Vote.SAFE, keypairs("a1")))
    with pytest.raises(WrongTaskState):
        node.tally(receipt.skill_id, publisher.tick())
    for auditor in AUDITORS[1:]:
        node.submit_verdict(Verdict.create(receipt.skill_id, auditor, Vote.SAFE, keypairs(auditor)))
    node.tally(receipt.skill_id, publisher.tick())
    with pytest.raises(NotPending):
        node.tally(receipt.skill_id, publisher.tick())


def test_unclaimed_task_expires_and_refunds_developer(publisher):
    node = publisher.node
    before = node.ledger.balance("dev")
    receipt = publisher.publish("transparent", CONTENT)
    for auditor in AUDITORS[:2]:
        node.claim(receipt.skill_id, auditor, publisher.tick())
    with pytest.raises(WrongTaskState):
        node.tally(receipt.skill_id, publisher.tick())
    assert node.expire_task(receipt.skill_id, publisher.tick()) == []
    assert node.task(receipt.skill_id).state.value == "open"

    publisher.clock += node.params.claim_window
    assert node.expire_task(receipt.skill_id, publisher.tick()) == []
    assert node.task(receipt.skill_id).unclaimed
    report = node.tally(receipt.skill_id, publisher.tick())
    assert report.outcome.no_quorum
    assert report.record.status == SkillStatus.REJECTED
    assert report.settlement.developer_refund == receipt.fee.audit_pool
    assert node.ledger.balance("dev") == before - (receipt.fee.total - receipt.fee.audit_pool)
    assert node.ledger.balance("a1") == tc(80)
    node.ledger.assert_conserved()


def test_auditors_read_encrypted_content(publisher, keypairs):
    node = publisher.node
    receipt = publisher.publish("sealed", CONTENT)
    for auditor in AUDITORS:
        node.claim(receipt.skill_id, auditor, publisher.tick())
    node.deliver_audit_keys(receipt.skill_id, keypairs("dev"))
    assert node.fetch_audit_content(receipt.skill_id, keypairs("a3")) == CONTENT
    with pytest.raises(KeyMismatch):
        node.deliver_audit_keys(receipt.skill_id, keypairs("user"))


# ============================================
# LICENSING
# ============================================

def test_license_flow(publisher, keypairs):
    node = publisher.node
    receipt = publisher.approved("licensed", price=tc(1))
    node.purchase(receipt.skill_id, "user", keypairs("user").public_key, publisher.tick())
    with pytest.raises(DuplicatePurchase):
        node.purchase(receipt.skill_id, "user", keypairs("user").public_key, publisher.tick())
    with pytest.raises(KeyMismatch):
        node.deliver_license(receipt.skill_id, "user", keypairs("dev"), new_content_key(), publisher.tick())
    dev_before = node.ledger.balance("dev")
    delivery = node.deliver_license(receipt.skill_id, "user", keypairs("dev"), receipt.content_key, publisher.tick())
    assert delivery.to_dict()["context"] == "license"
    assert node.ledger.balance("dev") == dev_before + tc(1)
    assert node.purchase_for(receipt.skill_id, "user").status == PurchaseStatus.DELIVERED


def test_missed_license_delivery_refunds(publisher, keypairs):
    node = publisher.node
    receipt = publisher.approved("licensed", price=tc(1))
    purchase = node.purchase(receipt.skill_id, "user", keypairs("user").public_key, publisher.tick())
    assert node.expire_purchases(purchase.deadline) == []
    expired = node.expire_purchases(purchase.deadline + 1)
    assert [p.status for p in expired] == [PurchaseStatus.REFUNDED]
    assert node.ledger.balance("user") == tc(100)
    node.ledger.assert_conserved()


# ============================================
# MONITORING, LEAKS, CHALLENGES
# ============================================

def test_clean_window_raises_reputation_and_frees_bonds(publisher):
    node = publisher.node
    receipt = publisher.approved("licensed", price=tc(1))
    assert node.book.auditor("a1").confidentiality_bond == tc(5)
    with pytest.raises(MonitoringWindowOpen):
        node.monitor(receipt.skill_id, "clean", publisher.tick())
    later = publisher.clock + node.params.monitoring_window
    report = node.monitor(receipt.skill_id, "clean", later)
    assert report.reputations == {a: 115 for a in AUDITORS}
    assert node.book.auditor("a1").confidentiality_bond == 0
    with pytest.raises(AlreadyMonitored):
        node.monitor(receipt.skill_id, "clean", later + 1)


def test_proven_malicious_slashes_and_revokes(publisher):
    node = publisher.node
    receipt = publisher.approved("transparent")
    user_before = node.ledger.balance("user")
    report = node.monitor(receipt.skill_id, "malicious", publisher.tick(), whistleblower="user")
    assert report.revoked
    assert report.slashes == {a: 402 for a in AUDITORS}
    assert report.distribution.whistleblower_amount == 603
    assert node.ledger.balance("user") == user_before + 603
    assert node.book.auditor("a1").reputation == 70
    with pytest.raises(LoadRefused):
        node.load(LoadRequest((receipt.skill_id,), user_scope=SCOPE))
    with pytest.raises(NotApproved):
        node.monitor(receipt.skill_id, "clean", publisher.tick())
    node.ledger.assert_conserved()


def test_leak_forfeits_bond(publisher):
    node = publisher.node
    sealed = publisher.approved("sealed")
    treasury = node.ledger.balance(TREASURY)
    assert node.report_leak("a2", sealed.skill_id) == tc(5)
    assert node.ledger.balance(TREASURY) == treasury + tc(5)
    assert node.book.auditor("a2").reputation == 0
    with pytest.raises(NoBondHeld):
        node.report_leak("a2", sealed.skill_id)
    transparent = publisher.approved("transparent")
    with pytest.raises(NoBondHeld):
        node.report_leak("a1", transparent.skill_id)


def test_confirmed_challenge_keeps_fee(publisher):
    node = publisher.node
    receipt = publisher.approved("transparent")
    treasury = node.ledger.balance(TREASURY)
    node.open_challenge(receipt.skill_id, "user", publisher.tick())
    with pytest.raises(ChallengePending):
        node.open_challenge(receipt.skill_id, "user", publisher.tick())
    report = publisher.audit(receipt)
    assert report.challenge.status == ChallengeStatus.CONFIRMED
    assert node.ledger.balance(TREASURY) == treasury + node.params.reaudit_fee
    assert not node.registry.is_revoked(receipt.skill_id)


def test_reversed_challenge_revokes(publisher):
    node = publisher.node
    receipt = publisher.approved("transparent")
    user_before = node.ledger.balance("user")
    node.open_challenge(receipt.skill_id, "user", publisher.tick())
    report = publisher.audit(receipt, votes=["unsafe"] * 5)
    assert report.challenge.status == ChallengeStatus.REVERSED
    assert report.monitoring.revoked
    assert node.registry.is_revoked(receipt.skill_id)
    assert node.ledger.balance("user") == user_before + 603
    node.ledger.assert_conserved()


def test_decay_step(node):
    assert node.decay() == {a: 99 for a in AUDITORS}


def test_decay_carries_fractional_reputation(node):
    node.decay()
    assert node.decay() == {a: 99 for a in AUDITORS}
    restored = SigilNode.from_state(node.to_state(), node.registry)
    for _ in range(598):
        restored.decay()
    # floor(100 * 0.995 ** 600) == 4
    assert restored.book.reputations() == {a: 4 for a in AUDITORS}


# ============================================
# PERSISTENCE
# ============================================

def test_state_survives_serialization(publisher, keypairs):
    node = publisher.node
    licensed = publisher.approved("licensed", price=tc(1))
    publisher.publish("transparent", b"# waiting\n")
    state = json.loads(json.dumps(node.to_state()))
    restored = SigilNode.from_state(state, SkillRegistry.from_log(node.registry.log))
    assert json.dumps(restored.to_state(), sort_keys=True) == json.dumps(node.to_state(), sort_keys=True)

    restored.purchase(licensed.skill_id, "user", keypairs("user").public_key, publisher.tick())
    restored.deliver_license(licensed.skill_id, "user", keypairs("dev"), licensed.content_key, publisher.tick())
    result = restored.load(LoadRequest((licensed.skill_id,), requester=keypairs("user"), user_scope=SCOPE))
    assert result.skills[0].content == CONTENT


# ============================================
# CONSERVATION
# ============================================

KEYS = {name: KeyPair.generate() for name in ["dev", "user", *AUDITORS]}
SKILL_INDEX = st.integers(0, 7)

OPERATIONS = st.one_of(
    st.tuples(st.just("publish"), st.sampled_from(["transparent", "licensed", "sealed", "committed"]),
              st.integers(0, 3)),
    st.tuples(st.just("audit"), SKILL_INDEX, st.integers(0, 5)),
    st.tuples(st.just("claim"), SKILL_INDEX, st.sampled_from(AUDITORS)),
    st.tuples(st.just("expire_task"), SKILL_INDEX),
    st.tuples(st.just("purchase"), SKILL_INDEX),
    st.tuples(st.just("deliver"), SKILL_INDEX),
    st.tuples(st.just("expire_purchases")),
    st.tuples(st.just("malicious"), SKILL_INDEX),
    st.tuples(st.just("clean"), SKILL_INDEX),
    st.tuples(st.just("leak"), st.sampled_from(AUDITORS), SKILL_INDEX),
    st.tuples(st.just("challenge"), SKILL_INDEX, st.integers(0, 5)),
    st.tuples(st.just("decay")),
)


def funded_publisher() -> Publisher:
    node = SigilNode()
    node.genesis()
    node.mint("dev", tc(500))
    node.mint("user", tc(100))
    for auditor in AUDITORS:
        node.mint(auditor, tc(100))
        node.register_auditor(auditor, KEYS[auditor], tc(20))
    return Publisher(node, KEYS.__getitem__)


def apply_operation(publisher: Publisher, skills: list, op: tuple):
    node = publisher.node
    name, *args = op
    if name == "publish":
        ptype, price = args
        content = f"# skill {len(skills)}\nSummarize files.\n".encode()
        receipt = publisher.publish(ptype, content, name=f"skill-{len(skills)}",
                                    price=tc(price) if ptype == "licensed" else 0)
        skills.append((receipt, content))
        return
    if name == "expire_purchases":
        publisher.clock += node.params.tau_deliver + 1
        node.expire_purchases(publisher.tick())
        return
    if name == "decay":
        node.decay(publisher.tick())
        return
    if not skills:
        return
    receipt, content = skills[args[0] % len(skills)]
    skill_id = receipt.skill_id
    if name == "audit":
        publisher.audit(receipt, votes=["unsafe"] * args[1] + ["safe"] * (5 - args[1]), content=content)
    elif name == "claim":
        node.claim(skill_id, args[1], publisher.tick())
    elif name == "expire_task":
        publisher.clock += node.params.verdict_window + 1
        node.expire_task(skill_id, publisher.tick())
    elif name == "purchase":
        node.purchase(skill_id, "user", KEYS["user"].public_key, publisher.tick())
    elif name == "deliver":
        node.deliver_license(skill_id, "user", KEYS["dev"], receipt.content_key, publisher.tick())
    elif name == "malicious":
        node.monitor(skill_id, "malicious", publisher.tick(), whistleblower="user")
    elif name == "clean":
        publisher.clock += node.params.monitoring_window
        node.monitor(skill_id, "clean", publisher.tick())
    elif name == "leak":
        node.report_leak(args[0], skills[args[1] % len(skills)][0].skill_id, publisher.tick())
    elif name == "challenge":
        node.open_challenge(skill_id, "user", publisher.tick())
        publisher.audit(receipt, votes=["unsafe"] * args[1] + ["safe"] * (5 - args[1]), content=content)


@pytest.mark.slow
@settings(max_examples=10_000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(OPERATIONS, min_size=1, max_size=12))
def test_node_operations_conserve_supply(ops):
    publisher = funded_publisher()
    node = publisher.node
    supply = node.ledger.total_supply
    skills = []
    for op in ops:
        try:
            apply_operation(publisher, skills, op)
        except SigilError:
            pass
        node.ledger.assert_conserved()
        assert node.ledger.total_supply == supply
        assert node.ledger.min_balance() >= 0
