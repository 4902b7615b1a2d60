"""Exact benchmark: the value-maximizing packing and externality prices.

The packing problem maximizes the total value of participating stations kept
on air, subject to the forbidden pairs, at most one channel per station, and
exactly one channel for every non-participating station. It is solved exactly
by depth-first branch and bound, decomposed over connected components of the
interference graph, with the sum of undecided station values as the bound.

A winner's price is the drop in everyone else's optimal value caused by
taking it off the air: optimal value minus the optimal value when the winner
is forced to stay on air (its own value excluded). Losing stations are paid
nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .model import (
    Assignment,
    ClearingTarget,
    Instance,
    StationId,
    UnpackableError,
    ValueProfile,
    interference_graph,
    reduced_domain,
)

DEFAULT_NODE_BUDGET = 50_000_000


class ResourceLimitError(RuntimeError):
    """The branch-and-bound node budget ran out before an exact answer; the
    search never degrades to an approximation."""


@dataclass(frozen=True)
class VcgOutcome:
    optimal_assignment: Assignment
    optimal_value: float
    winners: tuple[StationId, ...]
    prices: dict[StationId, float]
    restricted_values: dict[StationId, float]


def _partition_check(
    inst: Instance,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
) -> tuple[frozenset[StationId], frozenset[StationId]]:
    parts = frozenset(participants)
    nons = frozenset(non_participants)
    if parts & nons:
        raise ValueError(f"stations {sorted(parts & nons)} appear in both sets")
    all_ids = frozenset(inst.station_ids())
    if parts | nons != all_ids:
        raise ValueError("participants and non-participants must cover all stations")
    return parts, nons


def _components(inst: Instance, ct: ClearingTarget) -> list[list[StationId]]:
    graph = interference_graph(inst, ct)
    seen: set[StationId] = set()
    components: list[list[StationId]] = []
    for root in sorted(graph):
        if root in seen:
            continue
        stack = [root]
        seen.add(root)
        comp = []
        while stack:
            sid = stack.pop()
            comp.append(sid)
            for nb in graph[sid]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(sorted(comp))
    return components


class _NodeCounter:
    __slots__ = ("remaining",)

    def __init__(self, budget: int) -> None:
        self.remaining = budget

    def spend(self) -> None:
        self.remaining -= 1
        if self.remaining < 0:
            raise ResourceLimitError(
                "packing search exceeded its node budget; raise node_budget "
                "for an exact answer"
            )


def _solve_component(
    comp: list[StationId],
    forced: frozenset[StationId],
    values: ValueProfile,
    inst: Instance,
    ct: ClearingTarget,
    counter: _NodeCounter,
) -> tuple[Assignment, float] | None:
    """Exact max-value packing of one component; None if the forced stations
    cannot all be placed.

    Depth-first branch and bound with forward checking: assigning a channel
    removes the conflicting channels from undecided neighbors, and the next
    station to decide is always the one with the fewest channels left (forced
    stations and high values break ties). The bound is the value decided so
    far plus everything still undecided.
    """
    conflicts = inst.conflicts_in_band(ct)
    gain = {sid: (0.0 if sid in forced else values[sid]) for sid in comp}
    domains = {sid: sorted(reduced_domain(inst.station(sid), ct)) for sid in comp}

    chosen: Assignment = {}

    def fits(sid: StationId, ch: int) -> bool:
        return all(
            chosen.get(osid) != och for osid, och in conflicts.get((sid, ch), ())
        )

    # Greedy incumbent over a static order: forced first, then by value.
    best_value = -1.0
    best_assign: Assignment | None = None
    static_order = sorted(comp, key=lambda s: (s not in forced, -gain[s], s))
    greedy_value = 0.0
    feasible_greedy = True
    for sid in static_order:
        placed = False
        for ch in domains[sid]:
            if fits(sid, ch):
                chosen[sid] = ch
                greedy_value += gain[sid]
                placed = True
                break
        if not placed and sid in forced:
            feasible_greedy = False
            break
    if feasible_greedy:
        best_value = greedy_value
        best_assign = dict(chosen)
    chosen.clear()

    avail: dict[StationId, set[int]] = {sid: set(domains[sid]) for sid in comp}
    undecided = set(comp)
    comp_set = frozenset(comp)

    def pick() -> StationId:
        return min(
            undecided,
            key=lambda s: (len(avail[s]), s not in forced, -gain[s], s),
        )

    def restrict(sid: StationId, ch: int) -> tuple[list[tuple[StationId, int]], float, bool]:
        """Remove channels conflicting with (sid, ch) from undecided neighbors.
        Returns the removals, the value of stations that just lost their last
        channel (they can no longer contribute), and whether a forced station
        was starved (the subtree is dead)."""
        removed = []
        lost = 0.0
        dead = False
        for osid, och in conflicts.get((sid, ch), ()):
            if osid != sid and osid in comp_set and osid in undecided:
                channels = avail[osid]
                if och in channels:
                    channels.discard(och)
                    removed.append((osid, och))
                    if not channels:
                        lost += gain[osid]
                        if osid in forced:
                            dead = True
        return removed, lost, dead

    def descend(acc: float, undecided_value: float) -> None:
        nonlocal best_value, best_assign
        if not undecided:
            if acc > best_value:
                best_value = acc
                best_assign = dict(chosen)
            return
        if acc + undecided_value <= best_value:
            return
        sid = pick()
        undecided.discard(sid)
        # stations starved of channels were already deducted by restrict()
        remaining = undecided_value - (gain[sid] if avail[sid] else 0.0)
        for ch in sorted(avail[sid]):
            counter.spend()
            chosen[sid] = ch
            removed, lost, dead = restrict(sid, ch)
            if not dead:
                descend(acc + gain[sid], remaining - lost)
            for osid, och in removed:
                avail[osid].add(och)
            del chosen[sid]
        if sid not in forced:
            counter.spend()
            descend(acc, remaining)
        undecided.add(sid)

    descend(0.0, sum(gain[sid] for sid in comp))
    if best_assign is None:
        return None
    return best_assign, best_value


def _canonical_value(
    assignment: Assignment, parts: frozenset[StationId], values: ValueProfile
) -> float:
    # Summing in sorted order makes equal packings report bit-identical
    # totals no matter which search path found them.
    return sum(values[sid] for sid in sorted(assignment) if sid in parts)


def optimal_packing(
    inst: Instance,
    values: ValueProfile,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[Assignment, float]:
    """Exact value-maximizing packing. Participants may stay on air or not;
    non-participants must be packed. Raises :class:`UnpackableError` when the
    non-participants cannot all be placed, and :class:`ResourceLimitError`
    when the node budget runs out."""
    parts, nons = _partition_check(inst, participants, non_participants)
    counter = _NodeCounter(node_budget)
    assignment: Assignment = {}
    for comp in _components(inst, ct):
        solved = _solve_component(comp, nons, values, inst, ct, counter)
        if solved is None:
            raise UnpackableError(
                f"non-participating stations in component {comp} cannot be packed"
            )
        assignment.update(solved[0])
    return assignment, _canonical_value(assignment, parts, values)


def restricted_optimal_value(
    inst: Instance,
    values: ValueProfile,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
    sid: StationId,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> float:
    """Optimal value with ``sid`` forced on air and its value excluded.

    When even that forced problem is infeasible the value degenerates to
    zero, which prices the station at the full optimum.
    """
    parts = [p for p in participants if p != sid]
    nons = sorted(set(non_participants) | {sid})
    try:
        _, value = optimal_packing(inst, values, parts, nons, ct, node_budget)
    except UnpackableError:
        return 0.0
    return value


def vcg_price(
    sid: StationId,
    base: VcgOutcome,
    inst: Instance,
    values: ValueProfile,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> float:
    """Externality price for one winner of the base outcome."""
    if sid not in base.winners:
        raise ValueError(f"station {sid} is not a winner")
    restricted = restricted_optimal_value(
        inst, values, participants, non_participants, ct, sid, node_budget
    )
    return base.optimal_value - restricted


def vcg_outcome(
    inst: Instance,
    values: ValueProfile,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> VcgOutcome:
    """Optimal packing plus a price for every winner.

    The pricing subproblems are independent; they run in ascending station
    order so the result never depends on scheduling. Forcing one winner on
    air only perturbs its own interference component, so each subproblem
    re-solves just that component; the answers are identical to a full
    re-solve because the other components' subproblems are unchanged.
    """
    parts, nons = _partition_check(inst, participants, non_participants)
    components = _components(inst, ct)
    counter = _NodeCounter(node_budget)
    comp_of: dict[StationId, int] = {}
    assignment: Assignment = {}
    for index, comp in enumerate(components):
        solved = _solve_component(comp, nons, values, inst, ct, counter)
        if solved is None:
            raise UnpackableError(
                f"non-participating stations in component {comp} cannot be packed"
            )
        for sid in comp:
            comp_of[sid] = index
        assignment.update(solved[0])
    value = _canonical_value(assignment, parts, values)

    winners = tuple(sorted(parts - set(assignment)))
    prices: dict[StationId, float] = {}
    restricted: dict[StationId, float] = {}
    for sid in winners:
        index = comp_of[sid]
        solved = _solve_component(
            components[index],
            frozenset(nons | {sid}),
            values,
            inst,
            ct,
            _NodeCounter(node_budget),
        )
        if solved is None:
            # Forcing the winner on air is infeasible: its price degenerates
            # to the full optimal value.
            restricted[sid] = 0.0
        else:
            merged = dict(assignment)
            for other in components[index]:
                merged.pop(other, None)
            merged.update(solved[0])
            restricted[sid] = _canonical_value(merged, parts - {sid}, values)
        prices[sid] = value - restricted[sid]
    return VcgOutcome(assignment, value, winners, prices, restricted)


def packing_problem_lp(
    inst: Instance,
    values: ValueProfile,
    participants: Iterable[StationId],
    non_participants: Iterable[StationId],
    ct: ClearingTarget,
) -> str:
    """The packing problem as LP-format text for external verification."""
    parts, nons = _partition_check(inst, participants, non_participants)

    def var(sid: StationId, ch: int) -> str:
        return f"x_{sid}_{ch}"

    admissible = {
        st.id: sorted(reduced_domain(st, ct)) for st in inst.stations
    }
    objective_terms = [
        f"{values[sid]!r} {var(sid, ch)}"
        for sid in sorted(parts)
        for ch in admissible[sid]
    ]
    lines = ["Maximize", " obj: " + (" + ".join(objective_terms) or "0"), "Subject To"]
    cnum = 0
    for con in sorted(inst.constraints):
        (s1, c1), (s2, c2) = con.first, con.second
        if c1 >= ct.bar_c or c2 >= ct.bar_c:
            continue
        cnum += 1
        lines.append(f" pair{cnum}: {var(s1, c1)} + {var(s2, c2)} <= 1")
    for sid in sorted(parts | nons):
        chans = admissible[sid]
        if not chans and sid in nons:
            # no admissible channel for a station that must be packed: keep
            # the export equivalent by making the model overtly infeasible
            lines.append(f"\\ station {sid} must be packed but has no admissible channel")
            lines.append(f" assign_{sid}: 0 = 1")
            continue
        if not chans:
            continue
        total = " + ".join(var(sid, ch) for ch in chans)
        relation = "=" if sid in nons else "<="
        lines.append(f" assign_{sid}: {total} {relation} 1")
    lines.append("Binaries")
    names = [var(sid, ch) for sid in sorted(admissible) for ch in admissible[sid]]
    lines.append(" " + " ".join(names))
    lines.append("End")
    return "\n".join(lines) + "\n"
