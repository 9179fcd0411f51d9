"""
SIGIL Economics - Reputation Dynamics
Integer reputation in [0, r_max]:
    clean monitoring window   -> safe voters + delta_plus
    proven malicious          -> safe voters - delta_minus, unsafe voters + delta_plus
    decay                     -> r * alpha, floored

Repeated decay is carried at REPUTATION_SCALE (millionths of a point) so the
floor costs at most a millionth per step; callers read whole points.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Mapping

import numpy as np

from audit.models import Verdict, Vote

from .params import PPM, EconomicParams
from .rewards import r_base, slash_amount


class MonitoringEvent(str, Enum):
    CLEAN_WINDOW = "clean_window"
    PROVEN_MALICIOUS = "proven_malicious"

    @classmethod
    def parse(cls, value: str) -> "MonitoringEvent":
        aliases = {"clean": cls.CLEAN_WINDOW, "malicious": cls.PROVEN_MALICIOUS}
        value = str(value).strip().lower()
        return aliases.get(value) or cls(value)


REPUTATION_SCALE = PPM


def raise_reputation(r, params: EconomicParams, scale: int = 1):
    cap, raised = params.r_max * scale, r + params.delta_plus * scale
    return np.minimum(cap, raised) if isinstance(r, np.ndarray) else min(cap, raised)


def lower_reputation(r, params: EconomicParams, scale: int = 1):
    lowered = r - params.delta_minus * scale
    return np.maximum(0, lowered) if isinstance(r, np.ndarray) else max(0, lowered)


def decay_reputation(r, params: EconomicParams):
    """One step at whatever scale r is held in."""
    return r * params.alpha_ppm // PPM


def to_scaled(points):
    return points * REPUTATION_SCALE


def to_points(scaled):
    return scaled // REPUTATION_SCALE


def decay_reputations(reputations: Mapping[str, int], params: EconomicParams) -> Dict[str, int]:
    return {k: decay_reputation(v, params) for k, v in reputations.items()}


@dataclass
class MonitoringUpdate:
    reputations: Dict[str, int] = field(default_factory=dict)
    slashes: Dict[str, int] = field(default_factory=dict)
    dissenters: list = field(default_factory=list)


def apply_monitoring_outcome(
    verdicts: Iterable[Verdict],
    event: MonitoringEvent,
    reputations: Mapping[str, int],
    stakes: Mapping[str, int],
    token_count: int,
    params: EconomicParams,
) -> MonitoringUpdate:
    """New reputations (and retrospective slashes) for the original voters.

    Callers check the skill was approved before calling.
    """
    event = MonitoringEvent(event)
    update = MonitoringUpdate()
    s_slash = slash_amount(r_base(token_count, params), params.gamma_ppm)
    for verdict in verdicts:
        who = verdict.auditor
        r = reputations.get(who, 0)
        if event == MonitoringEvent.CLEAN_WINDOW:
            if verdict.vote == Vote.SAFE:
                update.reputations[who] = raise_reputation(r, params)
        elif verdict.vote == Vote.SAFE:
            update.reputations[who] = lower_reputation(r, params)
            amount = min(s_slash, stakes.get(who, 0))
            if amount > 0:
                update.slashes[who] = amount
        elif verdict.vote == Vote.UNSAFE:
            update.reputations[who] = raise_reputation(r, params)
            update.dissenters.append(who)
    return update
