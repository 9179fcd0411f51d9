"""
SIGIL Economics - Fees, Rewards and Slashes

    R_base(j)      = beta0 + beta1 * L_j / kappa_tc
    C_pub(j)       = N * R_base(j), of which phi_proto goes to the Treasury
    R_i            = (1 - phi_proto) * R_base * r_i / r_max   for consensus votes
    S_slash(j)     = gamma * R_base(j)                        for dissenting votes
    R_base(j, t)   = R_base(j) * (1 + sigma * floor((t - t0) / delta_t))

The formulas accept numpy integer arrays as well as ints so the simulator
reuses them unchanged.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence

from audit.models import AuditOutcome, Vote

from .errors import EmptyPool, PoolMismatch
from .ledger import TREASURY, TokenLedger, stake_account
from .params import MILLI, PPM, EconomicParams


def r_base(token_count, params: EconomicParams):
    """Reference reward in milli-TC, floored."""
    if isinstance(token_count, int) and token_count < 0:
        raise ValueError("Token count cannot be negative")
    return params.beta0 + params.beta1_ppm * token_count * MILLI // (params.kappa_tc * PPM)


@dataclass(frozen=True)
class FeeSplit:
    total: int
    treasury_cut: int
    audit_pool: int

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


def publication_fee(token_count: int, params: EconomicParams) -> FeeSplit:
    total = params.committee_size * r_base(token_count, params)
    cut = total * params.phi_proto_ppm // PPM
    return FeeSplit(total=total, treasury_cut=cut, audit_pool=total - cut)


def reward_amount(base, reputation, params: EconomicParams):
    """(1 - phi) * R_base * r_i / r_max, floored."""
    return base * (PPM - params.phi_proto_ppm) * reputation // (PPM * params.r_max)


def slash_amount(base, gamma_ppm):
    return base * gamma_ppm // PPM


def slippage_r_base(token_count: int, t: int, t0: int, params: EconomicParams) -> int:
    if t < t0:
        raise ValueError("t precedes the task's opening time")
    base = r_base(token_count, params)
    steps = (t - t0) // params.delta_t
    return base + base * params.sigma_ppm * steps // PPM


def check_activation(stake: int, params: EconomicParams) -> bool:
    return stake >= params.s_min


# ============================================
# SETTLEMENT
# ============================================

@dataclass(frozen=True)
class Participant:
    auditor: str
    vote: Vote
    reputation: int
    stake: int


@dataclass
class Settlement:
    """Pure description of the flows that settle one audit."""

    skill_id: str
    consensus: Optional[str]
    no_quorum: bool
    r_base: int
    reward_base: int
    pool: int
    rewards: Dict[str, int] = field(default_factory=dict)
    slashes: Dict[str, int] = field(default_factory=dict)
    subsidy: int = 0
    developer_refund: int = 0

    @property
    def paid_from_pool(self) -> int:
        return sum(self.rewards.values()) - self.subsidy

    def to_dict(self) -> Dict:
        return asdict(self)


def compute_settlement(
    outcome: AuditOutcome,
    participants: Sequence[Participant],
    pool: int,
    token_count: int,
    params: EconomicParams,
    reward_base: Optional[int] = None,
    treasury_available: int = 0,
    pay_rewards: bool = True,
    reference: Optional[Vote] = None,
) -> Settlement:
    """Rewards for consensus votes, slashes for dissent, residual to developer.

    `reward_base` is the slippage-adjusted R_base at settlement time; the
    part of the rewards the pool cannot cover is drawn from the Treasury up
    to `treasury_available`. Abstainers are neither paid nor slashed. With no
    quorum nothing is paid or slashed and the whole pool is refunded.
    `reference` replaces the committee consensus as the vote that is paid,
    e.g. the ground truth in simulations.
    """
    if pool < 0:
        raise PoolMismatch("Pool cannot be negative")
    base = r_base(token_count, params)
    reward_base = base if reward_base is None else reward_base
    paid_vote = outcome.consensus if reference is None else reference
    settlement = Settlement(
        skill_id=outcome.skill_id.hex(),
        consensus=None if outcome.no_quorum else paid_vote.name.lower(),
        no_quorum=outcome.no_quorum,
        r_base=base,
        reward_base=reward_base,
        pool=pool,
    )
    if outcome.no_quorum:
        settlement.developer_refund = pool
        return settlement

    budget = pool + max(0, treasury_available)
    paid = 0
    for p in participants:
        if p.vote == Vote.ABSTAIN:
            continue
        if p.vote == paid_vote:
            if not pay_rewards:
                continue
            amount = min(reward_amount(reward_base, p.reputation, params), budget - paid)
            if amount > 0:
                settlement.rewards[p.auditor] = amount
                paid += amount
        else:
            amount = min(slash_amount(base, params.gamma_ppm), p.stake)
            if amount > 0:
                settlement.slashes[p.auditor] = amount

    settlement.subsidy = max(0, paid - pool)
    settlement.developer_refund = pool - (paid - settlement.subsidy)
    return settlement


def apply_settlement(ledger: TokenLedger, settlement: Settlement, pool_id: str, developer: str) -> Settlement:
    """Rewards leave the pool escrow (the Treasury covers any subsidy), slashes
    go to the Treasury, whatever is left in the pool returns to the developer."""
    for auditor_id, amount in settlement.rewards.items():
        from_pool = min(amount, ledger.escrow(pool_id).amount) if ledger.has_escrow(pool_id) else 0
        if from_pool:
            ledger.release_escrow(pool_id, stake_account(auditor_id), from_pool, memo="audit reward")
        ledger.transfer(TREASURY, stake_account(auditor_id), amount - from_pool, memo="slippage subsidy")
    for auditor_id, amount in settlement.slashes.items():
        ledger.transfer(stake_account(auditor_id), TREASURY, amount, memo="dissent slash")
    if ledger.has_escrow(pool_id):
        ledger.release_escrow(pool_id, developer, memo="residual pool")
    return settlement


def settle_audit(
    ledger: TokenLedger,
    outcome: AuditOutcome,
    participants: Sequence[Participant],
    pool: int,
    pool_id: str,
    developer: str,
    token_count: int,
    params: EconomicParams,
    reward_base: Optional[int] = None,
    reference: Optional[Vote] = None,
) -> Settlement:
    """compute_settlement against the live Treasury balance, then apply it."""
    settlement = compute_settlement(
        outcome, participants, pool, token_count, params,
        reward_base=reward_base, treasury_available=ledger.balance(TREASURY), reference=reference,
    )
    with ledger.atomic():
        return apply_settlement(ledger, settlement, pool_id, developer)


# ============================================
# RETROSPECTIVE SLASH
# ============================================

@dataclass(frozen=True)
class RetroDistribution:
    pool: int
    whistleblower: Optional[str]
    whistleblower_amount: int
    dissenter_amounts: Dict[str, int]
    treasury_amount: int

    def to_dict(self) -> Dict:
        return asdict(self)


def retrospective_slash(
    pool: int,
    whistleblower: Optional[str],
    dissenters: Sequence[str],
    params: EconomicParams,
) -> RetroDistribution:
    """30/40/30 split of the collected retrospective slashes.

    The dissenter share is divided equally; remainders, an absent
    whistleblower's share and the share for zero dissenters go to the
    Treasury.
    """
    if pool <= 0:
        raise EmptyPool("Nothing was collected for the retrospective split")
    wb_ppm, diss_ppm, _ = params.slash_split_ppm
    wb_amount = pool * wb_ppm // PPM if whistleblower else 0
    dissenters = sorted(set(dissenters))
    per_dissenter = (pool * diss_ppm // PPM) // len(dissenters) if dissenters else 0
    dissenter_amounts = {d: per_dissenter for d in dissenters if per_dissenter > 0}
    treasury_amount = pool - wb_amount - per_dissenter * len(dissenters)
    return RetroDistribution(
        pool=pool,
        whistleblower=whistleblower,
        whistleblower_amount=wb_amount,
        dissenter_amounts=dissenter_amounts,
        treasury_amount=treasury_amount,
    )


