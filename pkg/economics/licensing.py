"""
SIGIL Economics - Licensed Purchases
Buyer pays P(1 + phi): phi*P to the Treasury at once, P into escrow until
the developer delivers the buyer's key. Missing the delivery deadline
refunds P and forfeits the developer's delivery bond (B_deliver - P to
the Treasury, the remaining P of the bond back to the developer).
"""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional

from registry.models import PublicationType, SkillRecord, SkillStatus
from registry.errors import WrongPublicationType

from .errors import NoBondFrozen, PurchaseExpired, WrongSkillState
from .ledger import TREASURY, Escrow, TokenLedger
from .params import PPM, EconomicParams

logger = logging.getLogger(__name__)


def bond_escrow_id(skill_hex: str) -> str:
    return f"dbond:{skill_hex}"


class PurchaseStatus(str, Enum):
    ESCROWED = "escrowed"
    DELIVERED = "delivered"
    REFUNDED = "refunded"


@dataclass
class Purchase:
    skill_id: str
    buyer: str
    buyer_key: str
    developer: str
    price: int
    protocol_fee: int
    purchased_at: int
    deadline: int
    status: PurchaseStatus = PurchaseStatus.ESCROWED

    @property
    def escrow_id(self) -> str:
        return f"purchase:{self.skill_id}:{self.buyer}"

    @property
    def total(self) -> int:
        return self.price + self.protocol_fee

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["status"] = self.status.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Purchase":
        data = dict(data)
        data["status"] = PurchaseStatus(data.get("status", "escrowed"))
        return cls(**data)


def freeze_delivery_bond(
    ledger: TokenLedger,
    record: SkillRecord,
    params: EconomicParams,
    amount: Optional[int] = None,
) -> Escrow:
    """Developer locks B_deliver for a Licensed skill at publication."""
    if record.publication_type != PublicationType.LICENSED:
        raise WrongPublicationType("Delivery bonds apply to Licensed skills only")
    amount = params.delivery_bond if amount is None else amount
    return ledger.open_escrow(
        bond_escrow_id(record.skill_id.hex()), record.developer, amount, "delivery_bond",
        parties=[record.developer],
    )


def purchase_licensed(
    ledger: TokenLedger,
    record: SkillRecord,
    buyer: str,
    buyer_key: bytes,
    now: int,
    params: EconomicParams,
) -> Purchase:
    if record.publication_type != PublicationType.LICENSED:
        raise WrongPublicationType(f"{record.qualified_name} is not a Licensed skill")
    if record.status != SkillStatus.APPROVED:
        raise WrongSkillState(f"{record.qualified_name} is not approved")
    bond_id = bond_escrow_id(record.skill_id.hex())
    if not ledger.has_escrow(bond_id):
        raise NoBondFrozen(f"No delivery bond frozen for {record.qualified_name}")
    if ledger.escrow(bond_id).amount < record.price:
        raise NoBondFrozen("Delivery bond is smaller than the price")

    price = record.price
    fee = price * params.phi_proto_ppm // PPM
    purchase = Purchase(
        skill_id=record.skill_id.hex(),
        buyer=buyer,
        buyer_key=bytes(buyer_key).hex(),
        developer=record.developer,
        price=price,
        protocol_fee=fee,
        purchased_at=now,
        deadline=now + params.tau_deliver,
    )
    ledger.require_funds(buyer, purchase.total)
    with ledger.atomic():
        ledger.transfer(buyer, TREASURY, fee, memo="license protocol fee")
        if price:
            ledger.open_escrow(
                purchase.escrow_id, buyer, price, "license_price",
                parties=[buyer, record.developer], deadline=purchase.deadline,
            )
    logger.info(f"[Ledger] {buyer} bought {record.qualified_name} for {price} (+{fee} fee)")
    return purchase


def confirm_delivery(ledger: TokenLedger, purchase: Purchase, now: int) -> Purchase:
    """Release the escrowed price to the developer on timely delivery."""
    if purchase.status != PurchaseStatus.ESCROWED:
        raise WrongSkillState(f"Purchase is already {purchase.status.value}")
    if now > purchase.deadline:
        raise PurchaseExpired(f"Delivery deadline {purchase.deadline} passed")
    if purchase.price:
        ledger.release_escrow(purchase.escrow_id, purchase.developer, memo="license delivered")
    purchase.status = PurchaseStatus.DELIVERED
    return purchase


def expire_purchase(ledger: TokenLedger, purchase: Purchase, now: int) -> bool:
    """Refund the buyer and forfeit the bond once the deadline has passed."""
    if purchase.status != PurchaseStatus.ESCROWED or now <= purchase.deadline:
        return False
    bond_id = bond_escrow_id(purchase.skill_id)
    with ledger.atomic():
        if purchase.price:
            ledger.release_escrow(purchase.escrow_id, purchase.buyer, memo="license refund")
        if ledger.has_escrow(bond_id):
            bond = ledger.escrow(bond_id).amount
            forfeited = max(0, bond - purchase.price)
            ledger.release_escrow(bond_id, TREASURY, forfeited, memo="delivery bond forfeit")
            if ledger.has_escrow(bond_id):
                ledger.release_escrow(bond_id, purchase.developer, memo="delivery bond remainder")
            logger.warning(f"[Ledger] Delivery bond for {purchase.skill_id[:12]} forfeited ({forfeited})")
    purchase.status = PurchaseStatus.REFUNDED
    return True
