"""Scoring rules, station volumes, and the descending base clock.

A station's price offer in any round is its volume times the shared base
clock, so the scoring rule fixes relative prices for the whole auction.
Volumes are computed once up front and never change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .model import ClearingTarget, Instance, StationId

#: The regulator-style rule rescales volumes so the largest is exactly this.
MAX_SCORED_VOLUME = 1_000_000.0

#: Default opening base clock per scoring rule, in dollars per unit volume.
DEFAULT_C0_FCC = 900.0
DEFAULT_C0_UNSCORED = 900_000_000.0


class ScoringRule(str, Enum):
    FCC = "fcc"
    UNSCORED = "unscored"


class InterferenceMeasure(str, Enum):
    """How a station's interference weight is counted for the scored rule.

    The count restricts to constraints whose channels both survive the
    clearing target. Counting constraints is the default; counting distinct
    neighbor stations is the alternative reading.
    """

    CONSTRAINT_COUNT = "constraints"
    NEIGHBOR_COUNT = "neighbors"


class DegenerateInstanceError(ValueError):
    """Every station has zero interference-population weight, so scored
    volumes cannot be normalized."""


@dataclass(frozen=True)
class VolumeTable:
    """Per-station volumes plus the scaling constant that produced them.
    ``zero_weight`` lists stations whose raw weight was zero; they get volume
    zero and can never face a positive offer."""

    volumes: dict[StationId, float]
    scaling: float
    zero_weight: tuple[StationId, ...] = ()

    def volume(self, sid: StationId) -> float:
        return self.volumes[sid]


def fcc_volumes(
    inst: Instance,
    ct: ClearingTarget,
    measure: InterferenceMeasure = InterferenceMeasure.CONSTRAINT_COUNT,
) -> VolumeTable:
    """Volume(s) = A * sqrt(interference(s)) * sqrt(population(s)), with A
    chosen so the maximum volume is exactly one million (to one ulp)."""
    counts: dict[StationId, int] = {s.id: 0 for s in inst.stations}
    if measure is InterferenceMeasure.NEIGHBOR_COUNT:
        neighbors: dict[StationId, set[StationId]] = {s.id: set() for s in inst.stations}
        for con in inst.constraints:
            (s1, c1), (s2, c2) = con.first, con.second
            if s1 != s2 and c1 < ct.bar_c and c2 < ct.bar_c:
                neighbors[s1].add(s2)
                neighbors[s2].add(s1)
        counts = {sid: len(adj) for sid, adj in neighbors.items()}
    else:
        for con in inst.constraints:
            (s1, c1), (s2, c2) = con.first, con.second
            if c1 >= ct.bar_c or c2 >= ct.bar_c:
                continue
            counts[s1] += 1
            if s2 != s1:
                counts[s2] += 1

    raw = {
        st.id: math.sqrt(counts[st.id]) * math.sqrt(st.population)
        for st in inst.stations
    }
    max_raw = max(raw.values(), default=0.0)
    if max_raw <= 0.0:
        raise DegenerateInstanceError(
            "no station has a positive interference-population weight"
        )
    scaling = MAX_SCORED_VOLUME / max_raw
    volumes = {sid: scaling * r for sid, r in raw.items()}
    zero_weight = tuple(sorted(sid for sid, r in raw.items() if r == 0.0))
    return VolumeTable(volumes, scaling, zero_weight)


def unscored_volumes(inst: Instance) -> VolumeTable:
    """Every station gets volume one, so offers equal the base clock."""
    return VolumeTable({s.id: 1.0 for s in inst.stations}, 1.0)


def volumes_for(inst: Instance, ct: ClearingTarget, rule: ScoringRule) -> VolumeTable:
    if rule is ScoringRule.FCC:
        return fcc_volumes(inst, ct)
    return unscored_volumes(inst)


def default_initial_clock_price(rule: ScoringRule) -> float:
    return DEFAULT_C0_FCC if rule is ScoringRule.FCC else DEFAULT_C0_UNSCORED


@dataclass(frozen=True)
class ClockState:
    """Shared descending price level: the initial price, the current price,
    and the round index."""

    c0: float
    current: float
    round_index: int = 0

    def __post_init__(self) -> None:
        if self.c0 <= 0:
            raise ValueError("initial clock price must be positive")
        if not 0 <= self.current <= self.c0:
            raise ValueError("clock must stay within [0, c0]")
        if self.round_index < 0:
            raise ValueError("round index must be non-negative")


def initial_clock(c0: float) -> ClockState:
    return ClockState(c0, c0, 0)


def decrement(c_prev: float, c0: float) -> float:
    """Per-round decrement: the larger of 5% of the previous clock and 1% of
    the initial clock."""
    return max(0.05 * c_prev, 0.01 * c0)


def next_clock(state: ClockState) -> ClockState:
    """Advance one round. The raw rule would eventually go negative, so the
    clock clamps at zero, which also guarantees termination."""
    lowered = max(0.0, state.current - decrement(state.current, state.c0))
    return ClockState(state.c0, lowered, state.round_index + 1)


def offer_price(volume: float, clock: float) -> float:
    """Dollar offer for a station: its volume times the base clock."""
    if volume < 0 or clock < 0:
        raise ValueError("volume and clock must be non-negative")
    return volume * clock
