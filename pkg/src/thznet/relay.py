"""Decode-and-forward relay selection: best and random strategies.

A UE is an eligible relay for a source-destination pair when it is not
itself part of any transmitting pair, both of its legs are unblocked, and
the bottleneck (minimum) of its leg capacities meets the QoS threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .capacity import LinkBudget, end_to_end_capacity
from .geometry import Topology

DIRECT = "direct"
RELAYED = "relayed"
OUTAGE = "outage"

STRATEGY_BEST = "best"
STRATEGY_RANDOM = "random"
STRATEGIES = (STRATEGY_BEST, STRATEGY_RANDOM)

# Relaying triggers when the direct link is blocked or misses the QoS
# threshold (default), or strictly on blockage.
TRIGGER_BLOCKED_OR_BELOW = "blocked_or_below_threshold"
TRIGGER_BLOCKED_ONLY = "blocked_only"
TRIGGERS = (TRIGGER_BLOCKED_OR_BELOW, TRIGGER_BLOCKED_ONLY)


class RelayCandidate(NamedTuple):
    relay: int
    source_leg_bps: float   # capacity source -> relay
    dest_leg_bps: float     # capacity relay -> destination

    @property
    def bottleneck_bps(self) -> float:
        return min(self.source_leg_bps, self.dest_leg_bps)


@dataclass(frozen=True)
class RelayCandidateSet:
    """Eligible relays for one pair, ascending by UE id."""

    pair: tuple[int, int]
    candidates: tuple[RelayCandidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def ids(self) -> tuple[int, ...]:
        return tuple(c.relay for c in self.candidates)


@dataclass(frozen=True)
class RelayDecision:
    """How a pair is served: direct, through a relay, or not at all."""

    pair: tuple[int, int]
    mode: str
    relay: int | None
    e2e_capacity_bps: float

    def __post_init__(self) -> None:
        if self.mode not in (DIRECT, RELAYED, OUTAGE):
            raise ValueError(f"unknown decision mode {self.mode!r}")
        if self.mode == RELAYED and self.relay is None:
            raise ValueError("relayed decision needs a relay id")
        if self.mode != RELAYED and self.relay is not None:
            raise ValueError("only relayed decisions carry a relay id")
        if self.mode == OUTAGE and self.e2e_capacity_bps != 0.0:
            raise ValueError("outage carries zero capacity")


def build_candidate_set(topo: Topology, budgets: Mapping[tuple[int, int], LinkBudget],
                        pair: tuple[int, int], qos_threshold_bps: float,
                        candidate_ids: Iterable[int] | None = None,
                        exclude: frozenset[int] | set[int] = frozenset()) -> RelayCandidateSet:
    """Collect the eligible relays for ``pair``.

    ``candidate_ids`` defaults to every UE outside the transmitting pair
    set; ``budgets`` must contain both legs for every considered UE.
    ``exclude`` removes relays already committed elsewhere.
    """
    s, d = pair
    if candidate_ids is None:
        candidate_ids = topo.pool_ids()
    chosen = []
    for r in candidate_ids:
        if r == s or r == d or r in exclude:
            continue
        leg_in = budgets[(s, r)]
        leg_out = budgets[(r, d)]
        if not (leg_in.unblocked and leg_out.unblocked):
            continue
        if min(leg_in.capacity_bps, leg_out.capacity_bps) < qos_threshold_bps:
            continue
        chosen.append(RelayCandidate(r, leg_in.capacity_bps, leg_out.capacity_bps))
    chosen.sort(key=lambda c: c.relay)
    return RelayCandidateSet(pair=(s, d), candidates=tuple(chosen))


def select_best(cands: RelayCandidateSet) -> RelayDecision:
    """Pick the candidate with the largest bottleneck capacity.

    Ties break toward the lowest UE id; an empty set is an outage.
    """
    if not cands.candidates:
        return RelayDecision(pair=cands.pair, mode=OUTAGE, relay=None, e2e_capacity_bps=0.0)
    best = max(cands.candidates, key=lambda c: (c.bottleneck_bps, -c.relay))
    return RelayDecision(pair=cands.pair, mode=RELAYED, relay=best.relay,
                         e2e_capacity_bps=best.bottleneck_bps)


def select_random(cands: RelayCandidateSet, rng: np.random.Generator) -> RelayDecision:
    """Pick uniformly among the candidates; an empty set is an outage."""
    if not cands.candidates:
        return RelayDecision(pair=cands.pair, mode=OUTAGE, relay=None, e2e_capacity_bps=0.0)
    pick = cands.candidates[int(rng.integers(len(cands.candidates)))]
    return RelayDecision(pair=cands.pair, mode=RELAYED, relay=pick.relay,
                         e2e_capacity_bps=pick.bottleneck_bps)


def resolve_pair(topo: Topology, budgets: Mapping[tuple[int, int], LinkBudget],
                 pair: tuple[int, int], strategy: str, qos_threshold_bps: float,
                 rng: np.random.Generator | None = None,
                 trigger: str = TRIGGER_BLOCKED_OR_BELOW,
                 candidate_ids: Iterable[int] | None = None,
                 exclude: frozenset[int] | set[int] = frozenset(),
                 candidate_set: RelayCandidateSet | None = None) -> RelayDecision:
    """Serve one pair: keep the direct link if it qualifies, else relay.

    The direct link is kept when it is unblocked and, under the default
    trigger, also meets the QoS threshold. Otherwise the strategy runs on
    the candidate set (built here unless supplied precomputed); with no
    eligible relay the pair is in outage.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if trigger not in TRIGGERS:
        raise ValueError(f"unknown relay trigger {trigger!r}")
    s, d = pair
    direct = budgets[(s, d)]
    keep_direct = direct.unblocked and (
        trigger == TRIGGER_BLOCKED_ONLY or direct.capacity_bps >= qos_threshold_bps
    )
    if keep_direct:
        cap, _ = end_to_end_capacity(direct, None)
        return RelayDecision(pair=(s, d), mode=DIRECT, relay=None, e2e_capacity_bps=cap)
    if candidate_set is None:
        candidate_set = build_candidate_set(topo, budgets, pair, qos_threshold_bps,
                                            candidate_ids=candidate_ids, exclude=exclude)
    elif exclude:
        candidate_set = RelayCandidateSet(
            pair=candidate_set.pair,
            candidates=tuple(c for c in candidate_set.candidates if c.relay not in exclude),
        )
    if strategy == STRATEGY_BEST:
        return select_best(candidate_set)
    if rng is None:
        raise ValueError("random selection needs a random generator")
    return select_random(candidate_set, rng)
