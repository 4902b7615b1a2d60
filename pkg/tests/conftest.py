"""Shared builders for small hand-constructed problems."""

from __future__ import annotations

import pytest

from repacksim.model import (
    ClearingTarget,
    Instance,
    InterferenceConstraint,
    Station,
)


def mk_instance(stations, constraints=(), universe=None):
    """Compact instance builder.

    ``stations``: iterable of (id, domain, population, pre_auction_channel)
    or (id, domain) with defaults. ``constraints``: iterable of
    (s1, c1, s2, c2).
    """
    built = []
    for entry in stations:
        if len(entry) == 2:
            sid, domain = entry
            pop, pre = 1000, min(domain)
        else:
            sid, domain, pop, pre = entry
        built.append(Station(sid, frozenset(domain), pop, pre))
    cons = frozenset(
        InterferenceConstraint((s1, c1), (s2, c2)) for s1, c1, s2, c2 in constraints
    )
    if universe is None:
        chans = set()
        for st in built:
            chans |= st.domain
        universe = tuple(sorted(chans)) if chans else (14,)
    return Instance(tuple(built), cons, tuple(universe))


@pytest.fixture
def two_station_conflict():
    """Two stations sharing channel 14 and forbidden from using it jointly;
    station 1 can also use 15."""
    inst = mk_instance(
        [(1, {14, 15}), (2, {14})],
        [(1, 14, 2, 14)],
        universe=range(14, 17),
    )
    return inst, ClearingTarget(16)


@pytest.fixture
def triangle_one_channel():
    """Three stations pairwise conflicting on the single channel 14."""
    inst = mk_instance(
        [(1, {14}), (2, {14}), (3, {14})],
        [(1, 14, 2, 14), (1, 14, 3, 14), (2, 14, 3, 14)],
    )
    return inst, ClearingTarget(15)
