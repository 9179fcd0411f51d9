import math
from types import SimpleNamespace

import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from audit.models import AuditOutcome, Verdict, Vote
from canon_crypto import content_hash
from economics import (
    EconomicParams,
    MonitoringEvent,
    TokenLedger,
    apply_monitoring_outcome,
    compute_settlement,
    decay_reputations,
    export_ledger,
    publication_fee,
    r_base,
    retrospective_slash,
    reward_amount,
    settle_audit,
    slash_amount,
    slippage_r_base,
    tc,
)
from economics.challenge import ChallengeStatus, re_audit_challenge, settle_challenge
from economics.errors import (
    DuplicateEscrow,
    EmptyPool,
    InsufficientFee,
    InsufficientFunds,
    InvalidAmount,
    NoBondFrozen,
    PurchaseExpired,
    WrongSkillState,
)
from economics.ledger import TREASURY, stake_account
from economics.licensing import (
    PurchaseStatus,
    confirm_delivery,
    expire_purchase,
    freeze_delivery_bond,
    purchase_licensed,
)
from economics.reputation import decay_reputation, to_points, to_scaled
from economics.rewards import Participant
from registry.models import PermissionManifest, PublicationType, SkillRecord, SkillStatus

SKILL = content_hash(b"priced skill")


def licensed_record(price=tc(2), status=SkillStatus.APPROVED):
    return SkillRecord(
        skill_id=SKILL, name="priced", developer="dev", publication_type=PublicationType.LICENSED,
        payload=b"\x00" * 40, content_hash=content_hash(b"plain"), manifest=PermissionManifest(),
        prev_version=None, timestamp=1, status=status, price=price,
    )


# ============================================
# PARAMETERS AND FORMULAS
# ============================================

def test_default_params():
    p = EconomicParams()
    assert p.committee_size == 5
    assert p.theta == 0.6
    assert p.s_min == tc(10)
    assert p.treasury_initial == tc(1000)
    assert (p.r0, p.r_max) == (100, 1000)


@pytest.mark.parametrize("overrides", [
    {"gamma_ppm": 999_999},
    {"delta_minus": 10, "delta_plus": 15},
    {"alpha_ppm": 1_000_000},
    {"slash_split_ppm": (300_000, 300_000, 300_000)},
    {"r0": 2000},
    {"unknown_knob": 1},
    {"theta_ppm": 0},
])
def test_invalid_params_rejected(overrides):
    with pytest.raises(ValidationError):
        EconomicParams(**overrides)


def test_reward_formulas():
    p = EconomicParams()
    assert r_base(2000, p) == 560
    assert r_base(0, p) == 200
    fee = publication_fee(2000, p)
    assert fee.total == 2800 and fee.treasury_cut == 0 and fee.audit_pool == 2800
    assert reward_amount(560, 1000, p) == 560
    assert reward_amount(560, 100, p) == 56
    assert slash_amount(560, p.gamma_ppm) == 1120


def test_protocol_fee_cut():
    p = EconomicParams(phi_proto_ppm=100_000)
    fee = publication_fee(2000, p)
    assert fee.treasury_cut == 280 and fee.audit_pool == 2520
    assert reward_amount(560, 1000, p) == 504


def test_slippage_steps_per_interval():
    p = EconomicParams()
    assert slippage_r_base(2000, 0, 0, p) == 560
    assert slippage_r_base(2000, p.delta_t - 1, 0, p) == 560
    assert slippage_r_base(2000, p.delta_t, 0, p) == 700
    assert slippage_r_base(2000, 4 * p.delta_t, 0, p) == 1120
    with pytest.raises(ValueError):
        slippage_r_base(2000, 0, 10, p)


def outcome(votes, approved=True, no_quorum=False):
    verdicts = tuple(Verdict(SKILL, f"a{i}", v) for i, v in enumerate(votes))
    return AuditOutcome(SKILL, 0, 0, approved, 600_000, verdicts, no_quorum=no_quorum)


def participants(votes, rep=100, stake=tc(20)):
    return [Participant(f"a{i}", v, rep, stake) for i, v in enumerate(votes)]


def test_settlement_subsidy_capped_by_treasury():
    p = EconomicParams()
    votes = [Vote.SAFE] * 5
    s = compute_settlement(outcome(votes), participants(votes, rep=1000), 2800, 2000, p,
                           reward_base=1120, treasury_available=1000)
    assert sum(s.rewards.values()) == 2800 + 1000
    assert s.subsidy == 1000
    assert s.developer_refund == 0


def test_settlement_abstainers_and_small_stake():
    p = EconomicParams()
    votes = [Vote.SAFE, Vote.SAFE, Vote.SAFE, Vote.UNSAFE, Vote.ABSTAIN]
    parts = participants(votes)
    parts[3] = Participant("a3", Vote.UNSAFE, 100, 500)
    s = compute_settlement(outcome(votes), parts, 2800, 2000, p)
    assert set(s.rewards) == {"a0", "a1", "a2"}
    assert s.slashes == {"a3": 500}
    assert s.developer_refund == 2800 - 3 * 56


def test_settlement_no_quorum_refunds_everything():
    votes = [Vote.ABSTAIN] * 5
    s = compute_settlement(outcome(votes, False, True), participants(votes), 2800, 2000, EconomicParams())
    assert s.consensus is None
    assert s.developer_refund == 2800
    assert not s.rewards and not s.slashes


def test_settle_audit_applies_flows():
    p = EconomicParams()
    ledger = TokenLedger()
    ledger.mint("dev", 2800)
    ledger.mint(TREASURY, 1000)
    for i in range(5):
        ledger.mint(stake_account(f"a{i}"), tc(20))
    ledger.open_escrow("pool", "dev", 2800, "audit_pool")
    votes = [Vote.SAFE] * 4 + [Vote.UNSAFE]
    s = settle_audit(ledger, outcome(votes), participants(votes, rep=1000), 2800, "pool", "dev", 2000, p,
                     reward_base=840)
    assert s.rewards == {f"a{i}": 840 for i in range(4)}
    assert s.subsidy == 560
    assert s.slashes == {"a4": 1120}
    assert not ledger.has_escrow("pool")
    assert ledger.balance(stake_account("a3")) == tc(20) + 840
    assert ledger.balance(stake_account("a4")) == tc(20) - 1120
    assert ledger.balance(TREASURY) == 1000 - 560 + 1120
    assert ledger.balance("dev") == 0
    ledger.assert_conserved()


def test_settlement_against_reference_vote():
    p = EconomicParams()
    votes = [Vote.SAFE] * 4 + [Vote.UNSAFE]
    s = compute_settlement(outcome(votes), participants(votes, rep=1000), 2800, 2000, p, reference=Vote.UNSAFE)
    assert s.consensus == "unsafe"
    assert s.rewards == {"a4": 560}
    assert s.slashes == {f"a{i}": 1120 for i in range(4)}
    assert s.developer_refund == 2800 - 560
    safe = compute_settlement(outcome(votes, approved=False), participants(votes, rep=1000), 2800, 2000, p,
                              reference=Vote.SAFE)
    assert set(safe.rewards) == {"a0", "a1", "a2", "a3"}


def test_retrospective_split():
    p = EconomicParams()
    d = retrospective_slash(1000, "wb", ["x", "y", "z"], p)
    assert d.whistleblower_amount == 300
    assert d.dissenter_amounts == {"x": 133, "y": 133, "z": 133}
    assert d.treasury_amount == 1000 - 300 - 399
    alone = retrospective_slash(1000, None, [], p)
    assert alone.treasury_amount == 1000
    with pytest.raises(EmptyPool):
        retrospective_slash(0, "wb", [], p)


@given(st.integers(1, 10**9), st.booleans(), st.lists(st.text(min_size=1, max_size=4), max_size=7))
def test_retrospective_split_conserves(pool, has_wb, dissenters):
    d = retrospective_slash(pool, "wb" if has_wb else None, dissenters, EconomicParams())
    assert d.whistleblower_amount + sum(d.dissenter_amounts.values()) + d.treasury_amount == pool
    assert d.treasury_amount >= 0


# ============================================
# REPUTATION
# ============================================

def test_monitoring_clean_window():
    p = EconomicParams()
    votes = [Verdict(SKILL, "s", Vote.SAFE), Verdict(SKILL, "u", Vote.UNSAFE)]
    update = apply_monitoring_outcome(votes, MonitoringEvent.CLEAN_WINDOW, {"s": 995, "u": 100}, {}, 2000, p)
    assert update.reputations == {"s": 1000}
    assert not update.slashes


def test_monitoring_proven_malicious():
    p = EconomicParams()
    votes = [Verdict(SKILL, "s", Vote.SAFE), Verdict(SKILL, "u", Vote.UNSAFE), Verdict(SKILL, "x", Vote.ABSTAIN)]
    update = apply_monitoring_outcome(
        votes, MonitoringEvent.parse("malicious"), {"s": 20, "u": 100, "x": 100}, {"s": 700}, 2000, p,
    )
    assert update.reputations == {"s": 0, "u": 115}
    assert update.slashes == {"s": 700}
    assert update.dissenters == ["u"]


def test_decay_floors():
    assert decay_reputations({"a": 1000, "b": 1, "c": 0}, EconomicParams()) == {"a": 995, "b": 0, "c": 0}


def test_scaled_decay_tracks_exact_value():
    params = EconomicParams()
    r = to_scaled(1000)
    for _ in range(600):
        r = decay_reputation(r, params)
    assert abs(to_points(r) - math.floor(1000 * 0.995 ** 600)) <= 1
    assert to_points(r) == 49


# ============================================
# LEDGER
# ============================================

def test_ledger_rejects_bad_amounts():
    ledger = TokenLedger()
    ledger.mint("a", 100)
    with pytest.raises(InvalidAmount):
        ledger.transfer("a", "b", -1)
    with pytest.raises(InvalidAmount):
        ledger.transfer("a", "b", 1.5)
    with pytest.raises(InsufficientFunds):
        ledger.transfer("a", "b", 101)
    ledger.open_escrow("e", "a", 10, "test")
    with pytest.raises(DuplicateEscrow):
        ledger.open_escrow("e", "a", 10, "test")
    assert ledger.balance("a") == 90
    ledger.assert_conserved()


def test_atomic_rolls_back():
    ledger = TokenLedger()
    ledger.mint("a", 100)
    with pytest.raises(InsufficientFunds):
        with ledger.atomic():
            ledger.transfer("a", "b", 60)
            ledger.open_escrow("e", "a", 60, "test")
    assert ledger.balance("a") == 100
    assert ledger.balance("b") == 0
    assert not ledger.has_escrow("e")
    assert len(ledger.journal) == 1


HOLDERS = ["a", "b", "c", TREASURY, stake_account("a")]

operations = st.lists(
    st.one_of(
        st.tuples(st.just("mint"), st.sampled_from(HOLDERS), st.integers(1, 10_000)),
        st.tuples(st.just("transfer"), st.sampled_from(HOLDERS), st.sampled_from(HOLDERS), st.integers(0, 5_000)),
        st.tuples(st.just("escrow"), st.sampled_from(HOLDERS), st.integers(1, 5_000)),
        st.tuples(st.just("release"), st.sampled_from(HOLDERS), st.integers(0, 5_000)),
    ),
    max_size=60,
)


@settings(max_examples=200)
@given(operations)
def test_conservation_under_random_flows(ops):
    ledger = TokenLedger()
    opened = []
    for op in ops:
        try:
            if op[0] == "mint":
                ledger.mint(op[1], op[2])
            elif op[0] == "transfer":
                ledger.transfer(op[1], op[2], op[3])
            elif op[0] == "escrow":
                opened.append(ledger.open_escrow(f"e{len(opened)}", op[1], op[2], "fuzz").escrow_id)
            elif opened:
                escrow_id = opened[-1]
                if ledger.has_escrow(escrow_id):
                    ledger.release_escrow(escrow_id, op[1], min(op[2], ledger.escrow(escrow_id).amount))
        except InsufficientFunds:
            pass
        assert ledger.is_conserved()
    assert TokenLedger.from_dict(ledger.to_dict()).holdings() == ledger.holdings()


# ============================================
# LICENSING AND CHALLENGES
# ============================================

@pytest.fixture
def market():
    ledger = TokenLedger()
    ledger.mint("dev", tc(100))
    ledger.mint("buyer", tc(10))
    return ledger, EconomicParams(phi_proto_ppm=100_000)


def test_purchase_and_delivery(market):
    ledger, p = market
    record = licensed_record()
    with pytest.raises(NoBondFrozen):
        purchase_licensed(ledger, record, "buyer", b"\x01" * 32, 10, p)
    freeze_delivery_bond(ledger, record, p)
    purchase = purchase_licensed(ledger, record, "buyer", b"\x01" * 32, 10, p)
    assert purchase.protocol_fee == 200
    assert ledger.balance("buyer") == tc(10) - tc(2) - 200
    assert ledger.balance(TREASURY) == 200
    confirm_delivery(ledger, purchase, 10 + p.tau_deliver)
    assert purchase.status == PurchaseStatus.DELIVERED
    assert ledger.balance("dev") == tc(100) - p.delivery_bond + tc(2)
    assert not expire_purchase(ledger, purchase, 10**9)
    ledger.assert_conserved()


def test_missed_delivery_refunds_and_forfeits(market):
    ledger, p = market
    record = licensed_record()
    freeze_delivery_bond(ledger, record, p)
    purchase = purchase_licensed(ledger, record, "buyer", b"\x01" * 32, 10, p)
    assert not expire_purchase(ledger, purchase, purchase.deadline)
    assert expire_purchase(ledger, purchase, purchase.deadline + 1)
    assert purchase.status == PurchaseStatus.REFUNDED
    assert ledger.balance("buyer") == tc(10) - 200
    assert ledger.balance(TREASURY) == 200 + p.delivery_bond - tc(2)
    assert ledger.balance("dev") == tc(100) - p.delivery_bond + tc(2)
    with pytest.raises(WrongSkillState):
        confirm_delivery(ledger, purchase, purchase.deadline + 2)
    ledger.assert_conserved()


def test_late_confirmation_refused(market):
    ledger, p = market
    record = licensed_record()
    freeze_delivery_bond(ledger, record, p)
    purchase = purchase_licensed(ledger, record, "buyer", b"\x01" * 32, 10, p)
    with pytest.raises(PurchaseExpired):
        confirm_delivery(ledger, purchase, purchase.deadline + 1)


def test_purchase_needs_approval_and_funds(market):
    ledger, p = market
    record = licensed_record(status=SkillStatus.PENDING)
    with pytest.raises(WrongSkillState):
        purchase_licensed(ledger, record, "buyer", b"", 1, p)
    rich = licensed_record(price=tc(20))
    freeze_delivery_bond(ledger, rich, p)
    with pytest.raises(InsufficientFunds):
        purchase_licensed(ledger, rich, "buyer", b"", 1, p)
    assert ledger.balance("buyer") == tc(10)


def test_challenge_fee_flows():
    p = EconomicParams()
    ledger = TokenLedger()
    ledger.mint("c", tc(20))
    record = licensed_record()
    with pytest.raises(InsufficientFee):
        re_audit_challenge(ledger, record, "c", tc(1), 5, 1, p)
    with pytest.raises(WrongSkillState):
        re_audit_challenge(ledger, licensed_record(status=SkillStatus.REJECTED), "c", tc(5), 5, 1, p)
    confirmed = re_audit_challenge(ledger, record, "c", tc(5), 5, 1, p)
    settle_challenge(ledger, confirmed, reversed_verdict=False)
    assert confirmed.status == ChallengeStatus.CONFIRMED
    assert ledger.balance(TREASURY) == tc(5)
    reversed_ = re_audit_challenge(ledger, record, "c", tc(5), 6, 2, p)
    settle_challenge(ledger, reversed_, reversed_verdict=True)
    assert ledger.balance("c") == tc(15)
    with pytest.raises(WrongSkillState):
        settle_challenge(ledger, reversed_, True)


# ============================================
# EXPORT
# ============================================

def test_export_csv_and_xlsx(tmp_path):
    ledger = TokenLedger()
    ledger.mint(TREASURY, tc(1000))
    ledger.mint("dev", tc(5))
    ledger.transfer("dev", stake_account("dev"), tc(1), memo="stake")
    ledger.open_escrow("pool:x", "dev", tc(1), "audit_pool")

    auditors = {"dev": SimpleNamespace(reputation=250, active=False)}
    written = export_ledger(ledger, tmp_path / "ledger", "csv", auditors=auditors)
    accounts = pd.read_csv(written["accounts"], dtype={"active": "boolean"})
    assert list(accounts.columns) == ["id", "balance_milli_tc", "reputation", "active"]
    assert list(accounts["id"]) == [TREASURY, "dev", "stake:dev", "pool:x"]
    assert accounts["balance_milli_tc"].sum() == ledger.total_supply
    rows = accounts.set_index("id")
    assert rows.loc["stake:dev", "reputation"] == 250
    assert not rows.loc["stake:dev", "active"]
    assert pd.isna(rows.loc["pool:x", "reputation"])
    assert pd.isna(rows.loc[TREASURY, "active"])
    journal = pd.read_csv(written["journal"])
    assert list(journal["kind"]) == ["mint", "mint", "transfer", "escrow"]

    book = export_ledger(ledger, tmp_path / "ledger", "xlsx")["accounts"]
    sheets = pd.read_excel(book, sheet_name=None, engine="openpyxl")
    assert set(sheets) == {"accounts", "journal"}
