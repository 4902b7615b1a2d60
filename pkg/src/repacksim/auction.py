"""The descending clock auction state machine.

One shared base clock falls round by round. Every active station is offered
clock times volume, answers with accept or exit, and the bids are processed
one at a time in descending order of price reduction (ties shuffled by a
seeded stream drawn per round). Processing a bid first asks the feasibility
checker whether the bidder still fits alongside the packed stations: if it
does, an exit permanently packs it and an accept just lowers its standing
price; if it does not (or the checker times out), the station freezes and is
owed the last price it accepted. Frozen stations are the auction's winners.

Given an instance, a value profile, and a config with a step-limited budget,
the whole run is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping

import numpy as np

from .feasibility import (
    Budget,
    Feasible,
    FeasibilityProblem,
    FeasibilityVerdict,
    SearchSpaceError,
    Timeout,
    check_exhaustive,
    check_greedy,
    check_sat,
    decode_model,
    encode_stations,
    solve,
)
from .model import (
    Assignment,
    ClearingTarget,
    Instance,
    StationId,
    UnpackableError,
    ValueProfile,
)
from .pricing import (
    ScoringRule,
    VolumeTable,
    default_initial_clock_price,
    initial_clock,
    next_clock,
    offer_price,
    volumes_for,
)

_TIEBREAK_STREAM = 3

# The whole-set fallback in initial packing gets a larger deterministic budget
# than a single in-auction check.
_FALLBACK_STEP_FLOOR = 1_000_000


class CheckerKind(str, Enum):
    GREEDY = "greedy"
    SAT = "sat"
    EXHAUSTIVE = "exhaustive"


class StationStatus(str, Enum):
    NOT_PARTICIPATING = "not_participating"
    ACTIVE = "active"
    EXITED = "exited"
    FROZEN = "frozen"


class BidDecision(str, Enum):
    ACCEPT = "accept"
    EXIT = "exit"


#: Bidder hook: (round index, offered price, on-air value) -> decision.
BidStrategy = Callable[[int, float, float], BidDecision]


@dataclass(frozen=True)
class AuctionConfig:
    ct: ClearingTarget
    scoring: ScoringRule = ScoringRule.FCC
    c0: float | None = None  # None picks the default for the scoring rule
    checker: CheckerKind = CheckerKind.SAT
    budget: Budget = Budget(step_limit=50_000)
    seed: int = 0
    bid_order: str = "descending"  # or "ascending", on price reduction

    def __post_init__(self) -> None:
        if self.c0 is not None and self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.bid_order not in ("descending", "ascending"):
            raise ValueError("bid_order must be 'descending' or 'ascending'")

    def initial_price(self) -> float:
        return self.c0 if self.c0 is not None else default_initial_clock_price(self.scoring)


@dataclass(frozen=True)
class Bid:
    station: StationId
    decision: BidDecision
    price_reduction: float
    offer: float

    def __post_init__(self) -> None:
        if self.price_reduction < 0:
            raise ValueError("price reduction must be non-negative")


@dataclass(frozen=True)
class ProcessedBid:
    """Round-log entry for one processed bid."""

    station: StationId
    decision: str
    price_reduction: float
    offer: float
    verdict: str  # "feasible" | "infeasible" | "timeout"
    new_status: str
    payment: float | None = None


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    clock: float
    bids: tuple[ProcessedBid, ...]
    final_resolution: bool = False


@dataclass(frozen=True)
class AuctionOutcome:
    winners: dict[StationId, float]
    final_assignment: Assignment
    participants: tuple[StationId, ...]
    non_participants: tuple[StationId, ...]
    rounds: int
    checker_timeout_count: int
    round_log: tuple[RoundRecord, ...]

    def cost(self) -> float:
        return sum(self.winners[sid] for sid in sorted(self.winners))


def determine_participants(
    inst: Instance,
    values: ValueProfile,
    volumes: VolumeTable,
    c0: float,
) -> tuple[tuple[StationId, ...], tuple[StationId, ...]]:
    """Split stations into participants and non-participants: a station
    participates exactly when its value is strictly below its opening price."""
    missing = [s.id for s in inst.stations if s.id not in values]
    if missing:
        raise ValueError(f"value profile is missing stations {missing}")
    participants = []
    non_participants = []
    for st in inst.stations:
        opening = offer_price(volumes.volume(st.id), c0)
        if values[st.id] < opening:
            participants.append(st.id)
        else:
            non_participants.append(st.id)
    return tuple(participants), tuple(non_participants)


def _run_checker(
    kind: CheckerKind, problem: FeasibilityProblem, budget: Budget
) -> FeasibilityVerdict:
    if kind is CheckerKind.GREEDY:
        return check_greedy(problem, budget)
    if kind is CheckerKind.SAT:
        return check_sat(problem, budget)
    return check_exhaustive(problem)


def _whole_set_pack(
    inst: Instance,
    sids: Iterable[StationId],
    ct: ClearingTarget,
    budget: Budget,
) -> Assignment:
    """Single joint solve used when station-by-station packing fails."""
    sids = sorted(sids)
    formula = encode_stations(inst, ct, sids)
    steps = max(_FALLBACK_STEP_FLOOR, 20 * (budget.step_limit or 0))
    result = solve(formula, Budget(step_limit=steps, deadline_s=budget.deadline_s))
    if result.status == "sat":
        assert result.model is not None
        return decode_model(formula, result.model)
    if result.status == "unsat":
        raise UnpackableError(
            f"stations {sids} cannot be jointly packed in the reduced band"
        )
    raise SearchSpaceError(
        f"joint packing of {len(sids)} stations undecided within the fallback budget"
    )


def initial_assignment(
    inst: Instance,
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
    checker: CheckerKind,
    budget: Budget,
) -> Assignment:
    """Pack the non-participating stations, which the auction must keep on
    air. Stations are added one at a time in ascending id order with the
    configured checker; any failure falls back to one whole-set solve.
    Rejects the instance when the set is jointly unpackable."""
    packed: Assignment = {}
    ordered = sorted(non_participants)
    for sid in ordered:
        problem = FeasibilityProblem(sid, packed, inst, ct)
        verdict = _run_checker(checker, problem, budget)
        if isinstance(verdict, Feasible):
            packed = verdict.certificate
        else:
            return _whole_set_pack(inst, ordered, ct, budget)
    return packed


def truthful_bid(value: float, new_offer: float) -> BidDecision:
    """Accept when the new offer still covers the station's value; the
    indifferent case resolves to accept."""
    return BidDecision.ACCEPT if new_offer >= value else BidDecision.EXIT


@dataclass
class AuctionState:
    """Mutable per-run state shared by the round loop and bid processing."""

    inst: Instance
    ct: ClearingTarget
    checker: CheckerKind
    budget: Budget
    status: dict[StationId, StationStatus]
    last_accepted: dict[StationId, float]
    payments: dict[StationId, float] = field(default_factory=dict)
    packed: Assignment = field(default_factory=dict)
    packed_version: int = 0
    timeout_count: int = 0
    _verdicts: dict[StationId, tuple[int, FeasibilityVerdict]] = field(
        default_factory=dict
    )

    def active_stations(self) -> list[StationId]:
        return sorted(
            sid for sid, st in self.status.items() if st is StationStatus.ACTIVE
        )

    def check(self, sid: StationId) -> FeasibilityVerdict:
        """Feasibility of packing ``sid`` with the current packed set. Checkers
        are pure, so verdicts are cached until the packed set changes."""
        cached = self._verdicts.get(sid)
        if cached is not None and cached[0] == self.packed_version:
            return cached[1]
        problem = FeasibilityProblem(sid, self.packed, self.inst, self.ct)
        verdict = _run_checker(self.checker, problem, self.budget)
        self._verdicts[sid] = (self.packed_version, verdict)
        return verdict


def _processing_order(
    bids: list[Bid], seed: int, round_index: int, bid_order: str
) -> list[Bid]:
    """Sort bids by price reduction (descending by default), breaking ties
    with a shuffle drawn per round index so the order never depends on map
    iteration order."""
    ordered = sorted(bids, key=lambda b: b.station)
    rng = np.random.default_rng([seed, _TIEBREAK_STREAM, round_index])
    ranks = rng.permutation(len(ordered))
    sign = -1.0 if bid_order == "descending" else 1.0
    keyed = sorted(
        zip(ordered, ranks), key=lambda br: (sign * br[0].price_reduction, br[1])
    )
    return [b for b, _ in keyed]


def process_bids(
    state: AuctionState,
    bids: list[Bid],
    seed: int,
    round_index: int,
    bid_order: str = "descending",
) -> tuple[ProcessedBid, ...]:
    """Process one round's bids in order. Each bid is checked against the
    packed set as it stands at that moment: exits repack immediately, so a
    later bid in the same round sees the updated assignment."""
    log: list[ProcessedBid] = []
    for bid in _processing_order(bids, seed, round_index, bid_order):
        sid = bid.station
        verdict = state.check(sid)
        if isinstance(verdict, Feasible):
            verdict_name = "feasible"
            if bid.decision is BidDecision.EXIT:
                state.status[sid] = StationStatus.EXITED
                state.packed = verdict.certificate
                state.packed_version += 1
                new_status = StationStatus.EXITED.value
                payment = None
            else:
                state.last_accepted[sid] = bid.offer
                new_status = StationStatus.ACTIVE.value
                payment = None
        else:
            verdict_name = "timeout" if isinstance(verdict, Timeout) else "infeasible"
            if isinstance(verdict, Timeout):
                state.timeout_count += 1
            state.status[sid] = StationStatus.FROZEN
            payment = state.last_accepted[sid]
            state.payments[sid] = payment
            new_status = StationStatus.FROZEN.value
        log.append(
            ProcessedBid(
                station=sid,
                decision=bid.decision.value,
                price_reduction=bid.price_reduction,
                offer=bid.offer,
                verdict=verdict_name,
                new_status=new_status,
                payment=payment,
            )
        )
    return tuple(log)


def _resolve_stalled(
    state: AuctionState, round_index: int, seed: int, bid_order: str
) -> tuple[ProcessedBid, ...]:
    """Close out the absorbing state at clock zero.

    Once the clock sits at zero and every remaining active station has
    accepted a zero offer, no future round can change any offer, so the rounds
    would repeat forever. Such stations are indifferent between holding at
    zero and exiting, and each is still re-checked in order: the packable ones
    exit into the assignment, the rest freeze at their accepted price of zero.
    """
    bids = [
        Bid(sid, BidDecision.EXIT, 0.0, 0.0) for sid in state.active_stations()
    ]
    return process_bids(state, bids, seed, round_index, bid_order)


def run_auction(
    inst: Instance,
    values: ValueProfile,
    config: AuctionConfig,
    strategies: Mapping[StationId, BidStrategy] | None = None,
) -> AuctionOutcome:
    """Run the clock auction to completion and return the outcome with a full
    round log.

    ``strategies`` overrides the truthful bidder for selected stations; it is
    a simulation hook and does not change participation, which is always
    decided by value against opening price.
    """
    c0 = config.initial_price()
    volumes = volumes_for(inst, config.ct, config.scoring)
    participants, non_participants = determine_participants(inst, values, volumes, c0)
    packed0 = initial_assignment(
        inst, non_participants, config.ct, config.checker, config.budget
    )

    state = AuctionState(
        inst=inst,
        ct=config.ct,
        checker=config.checker,
        budget=config.budget,
        status={sid: StationStatus.NOT_PARTICIPATING for sid in non_participants},
        last_accepted={},
        packed=packed0,
    )
    for sid in participants:
        state.status[sid] = StationStatus.ACTIVE
        # The opening price counts as accepted: participation implies the
        # station took the round-zero offer.
        state.last_accepted[sid] = offer_price(volumes.volume(sid), c0)

    clock = initial_clock(c0)
    log: list[RoundRecord] = []

    while True:
        active = state.active_stations()
        if not active:
            break
        if clock.current == 0.0 and all(
            state.last_accepted[sid] == 0.0 for sid in active
        ):
            round_index = clock.round_index + 1
            processed = _resolve_stalled(
                state, round_index, config.seed, config.bid_order
            )
            log.append(RoundRecord(round_index, 0.0, processed, final_resolution=True))
            break

        previous = clock.current
        clock = next_clock(clock)
        bids = []
        for sid in active:
            vol = volumes.volume(sid)
            offer = offer_price(vol, clock.current)
            reduction = offer_price(vol, previous) - offer
            strategy = strategies.get(sid) if strategies else None
            if strategy is not None:
                decision = strategy(clock.round_index, offer, values[sid])
            else:
                decision = truthful_bid(values[sid], offer)
            bids.append(Bid(sid, decision, reduction, offer))
        processed = process_bids(
            state, bids, config.seed, clock.round_index, config.bid_order
        )
        log.append(RoundRecord(clock.round_index, clock.current, processed))

    winners = {sid: state.payments[sid] for sid in sorted(state.payments)}
    return AuctionOutcome(
        winners=winners,
        final_assignment=dict(state.packed),
        participants=participants,
        non_participants=non_participants,
        rounds=len(log),
        checker_timeout_count=state.timeout_count,
        round_log=tuple(log),
    )
