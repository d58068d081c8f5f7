"""Monte-Carlo drops, strategy comparison on frozen draws, aggregation.

Each drop derives its own random streams from (master seed, sweep cell,
drop index, stream label), so drops can run in any order or in parallel
without changing a single draw, and a (density, jitter) cell reproduces
identically whether it runs alone or inside a sweep.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import geometry, relay
from .capacity import LinkBudget, QuadratureError, link_capacity_batch
from .channel import beam_geometry, pointing_gain, sample_misalignment
from .config import DEFAULT_THRESHOLD_GRID_BPS, ScenarioConfig
from .geometry import DensityInfeasibleError, Topology

# Stream labels for per-drop substreams.
_STREAM_TOPOLOGY = 0
_STREAM_MISALIGNMENT = 1
_STREAM_ORDER = 2
_STREAM_SELECTION = {relay.STRATEGY_BEST: 3, relay.STRATEGY_RANDOM: 4}


class AggregationError(RuntimeError):
    """No usable samples to aggregate."""


def _nano(value: float) -> int:
    return int(round(value * 1e9))


def drop_rng(cfg: ScenarioConfig, drop_index: int, stream: int) -> np.random.Generator:
    """Counter-based substream: (seed, density, jitter, drop, stream)."""
    seq = np.random.SeedSequence([
        int(cfg.master_seed), _nano(cfg.ue_density), _nano(cfg.jitter_std_m),
        int(drop_index), int(stream),
    ])
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class PairRecord:
    """Everything recorded for one pair in one drop."""

    pair: tuple[int, int]
    direct: LinkBudget
    candidate_ids: dict[str, tuple[int, ...]]   # per strategy
    decisions: dict[str, relay.RelayDecision]   # per strategy


@dataclass(frozen=True)
class DropResult:
    drop_index: int
    n_ues: int
    n_pool: int
    records: tuple[PairRecord, ...]


def _link_table(cfg: ScenarioConfig, topo: Topology,
                pool: tuple[int, ...]) -> list[tuple[int, int]]:
    """Deterministic enumeration of every link a drop can need."""
    links: list[tuple[int, int]] = []
    for s, d in topo.pairs:
        links.append((s, d))
        for r in pool:
            links.append((s, r))
            links.append((r, d))
    return links


@dataclass(frozen=True)
class FrozenDrop:
    """All random draws of one drop, fixed before any strategy runs."""

    drop_index: int
    topo: Topology
    pool: tuple[int, ...]
    budgets: dict[tuple[int, int], LinkBudget]


def freeze_drop(cfg: ScenarioConfig, topo: Topology, drop_index: int) -> FrozenDrop:
    """Evaluate blockage, misalignment, and capacity for every potential link."""
    params = cfg.channel_params()
    pool = topo.pool_ids(include_inactive=cfg.allow_inactive_relays)
    links = _link_table(cfg, topo, pool)
    if not links:
        return FrozenDrop(drop_index=drop_index, topo=topo, pool=pool, budgets={})

    ends_a = topo.positions[[a for a, _ in links]]
    ends_b = topo.positions[[b for _, b in links]]
    d = np.hypot(ends_a[:, 0] - ends_b[:, 0], ends_a[:, 1] - ends_b[:, 1])

    dist = geometry.segment_point_distances(ends_a, ends_b, topo.positions)
    for row, (a, b) in enumerate(links):   # endpoints never block their own link
        dist[row, a] = math.inf
        dist[row, b] = math.inf
    unblocked = ~(dist <= topo.body_radius).any(axis=1)

    geo = beam_geometry(params, d)
    rng_mis = drop_rng(cfg, drop_index, _STREAM_MISALIGNMENT)
    fade = sample_misalignment(params, geo, rng_mis, size=len(links))
    gains = np.asarray(fade.gain, dtype=float)

    caps = link_capacity_batch(params, d, unblocked, gains, cfg.quadrature)
    budgets = {
        link: LinkBudget(source=link[0], dest=link[1], distance_m=float(d[i]),
                         unblocked=bool(unblocked[i]), pointing_gain=float(gains[i]),
                         capacity_bps=float(caps[i]))
        for i, link in enumerate(links)
    }
    return FrozenDrop(drop_index=drop_index, topo=topo, pool=pool, budgets=budgets)


def decide_drop(cfg: ScenarioConfig, frozen: FrozenDrop) -> DropResult:
    """Run every requested strategy on one frozen realization."""
    topo = frozen.topo
    n_pairs = len(topo.pairs)
    if cfg.relay_exclusivity and n_pairs > 1:
        rng_order = drop_rng(cfg, frozen.drop_index, _STREAM_ORDER)
        order = [int(i) for i in rng_order.permutation(n_pairs)]
    else:
        order = list(range(n_pairs))

    base_sets = {
        j: relay.build_candidate_set(topo, frozen.budgets, topo.pairs[j],
                                     cfg.qos_threshold_bps, candidate_ids=frozen.pool)
        for j in range(n_pairs)
    }

    decisions: dict[int, dict[str, relay.RelayDecision]] = {j: {} for j in range(n_pairs)}
    cand_ids: dict[int, dict[str, tuple[int, ...]]] = {j: {} for j in range(n_pairs)}
    for strategy in cfg.strategies:
        rng_sel = drop_rng(cfg, frozen.drop_index, _STREAM_SELECTION[strategy])
        used: set[int] = set()
        for j in order:
            pair = topo.pairs[j]
            exclude = frozenset(used) if cfg.relay_exclusivity else frozenset()
            dec = relay.resolve_pair(
                topo, frozen.budgets, pair, strategy, cfg.qos_threshold_bps,
                rng=rng_sel, trigger=cfg.relay_trigger,
                candidate_set=base_sets[j], exclude=exclude,
            )
            if cfg.half_duplex_factor and dec.mode == relay.RELAYED:
                dec = replace(dec, e2e_capacity_bps=0.5 * dec.e2e_capacity_bps)
            if cfg.relay_exclusivity and dec.mode == relay.RELAYED:
                used.add(dec.relay)
            decisions[j][strategy] = dec
            cand_ids[j][strategy] = tuple(
                c for c in base_sets[j].ids() if c not in exclude
            )

    records = tuple(
        PairRecord(pair=topo.pairs[j], direct=frozen.budgets[topo.pairs[j]],
                   candidate_ids=cand_ids[j], decisions=decisions[j])
        for j in range(n_pairs)
    )
    return DropResult(drop_index=frozen.drop_index, n_ues=topo.n_ues,
                      n_pool=len(frozen.pool), records=records)


def evaluate_topology(cfg: ScenarioConfig, topo: Topology, drop_index: int) -> DropResult:
    """Freeze blockage, misalignment, and capacities, then run every strategy.

    All channel draws happen once, before any strategy looks at them, so
    strategies are compared on identical realizations.
    """
    return decide_drop(cfg, freeze_drop(cfg, topo, drop_index))


def run_drop(cfg: ScenarioConfig, drop_index: int) -> DropResult:
    """One full Monte-Carlo drop: topology, frozen draws, all strategies."""
    rng_topo = drop_rng(cfg, drop_index, _STREAM_TOPOLOGY)
    topo = geometry.generate_topology(cfg, rng_topo)
    return evaluate_topology(cfg, topo, drop_index)


@dataclass(frozen=True)
class AggregateStats:
    """Pooled end-to-end capacity statistics for one strategy in one cell."""

    strategy: str
    n_samples: int
    mean_bps: float
    stderr_bps: float
    samples_bps: np.ndarray          # sorted pool of end-to-end capacities
    thresholds_bps: np.ndarray
    cdf: np.ndarray                  # P(capacity <= threshold) on the grid


def aggregate(results: list[DropResult], c_thr_grid_bps,
              strategies: tuple[str, ...],
              include_outages_in_mean: bool = True) -> dict[str, AggregateStats]:
    """Pool per-pair capacities across drops; mean, stderr, empirical CDF."""
    if not results:
        raise AggregationError("no successful drops to aggregate")
    grid = np.asarray(sorted(float(t) for t in c_thr_grid_bps), dtype=float)
    out: dict[str, AggregateStats] = {}
    for strategy in strategies:
        samples = np.sort(np.asarray([
            rec.decisions[strategy].e2e_capacity_bps
            for drop in results for rec in drop.records
        ], dtype=float))
        if samples.size == 0:
            raise AggregationError("drops succeeded but produced no pair samples")
        pool = samples if include_outages_in_mean else samples[samples > 0.0]
        if pool.size == 0:
            mean, stderr = 0.0, 0.0
        else:
            mean = float(pool.mean())
            stderr = float(pool.std(ddof=1) / math.sqrt(pool.size)) if pool.size > 1 else 0.0
        cdf = np.searchsorted(samples, grid, side="right") / samples.size
        samples.setflags(write=False)
        out[strategy] = AggregateStats(
            strategy=strategy, n_samples=int(samples.size), mean_bps=mean,
            stderr_bps=stderr, samples_bps=samples,
            thresholds_bps=grid, cdf=cdf,
        )
    return out


@dataclass(frozen=True)
class CellResult:
    """One (density, jitter) sweep cell with per-strategy statistics."""

    ue_density: float
    jitter_std_m: float
    drops_requested: int
    drops_ok: int
    drops_failed: int
    stats: dict[str, AggregateStats]
    # per-strategy capacities in shared pair order, for paired comparisons
    aligned_samples_bps: dict[str, np.ndarray] | None = None
    failures: tuple[str, ...] = ()
    error: str | None = None


def _drop_worker(args: tuple[ScenarioConfig, int]):
    cfg, index = args
    try:
        return index, run_drop(cfg, index), None
    except (DensityInfeasibleError, QuadratureError) as exc:
        return index, None, f"drop {index}: {type(exc).__name__}: {exc}"


def run_cell(cfg: ScenarioConfig, c_thr_grid_bps=DEFAULT_THRESHOLD_GRID_BPS,
             workers: int = 1) -> CellResult:
    """Run cfg.drops drops at the config's own (density, jitter) cell."""
    jobs = [(cfg, i) for i in range(cfg.drops)]
    if workers > 1 and cfg.drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_drop_worker, jobs, chunksize=max(1, cfg.drops // (8 * workers))))
    else:
        raw = [_drop_worker(job) for job in jobs]
    raw.sort(key=lambda item: item[0])

    results = [res for _, res, err in raw if err is None]
    failures = tuple(err for _, _, err in raw if err is not None)
    stats = aggregate(results, c_thr_grid_bps, cfg.strategies, cfg.include_outages_in_mean)
    aligned = {
        strategy: np.asarray([rec.decisions[strategy].e2e_capacity_bps
                              for drop in results for rec in drop.records], dtype=float)
        for strategy in cfg.strategies
    }
    return CellResult(
        ue_density=cfg.ue_density, jitter_std_m=cfg.jitter_std_m,
        drops_requested=cfg.drops, drops_ok=len(results), drops_failed=len(failures),
        stats=stats, aligned_samples_bps=aligned, failures=failures,
    )


def sweep(cfg: ScenarioConfig, ue_density_values, jitter_std_values,
          c_thr_grid_bps=DEFAULT_THRESHOLD_GRID_BPS, workers: int = 1) -> list[CellResult]:
    """Cartesian (density x jitter) sweep; failed cells are recorded, not fatal."""
    densities = tuple(ue_density_values)
    jitters = tuple(jitter_std_values)
    if not densities or not jitters:
        raise ValueError("sweep needs at least one density and one jitter value")
    cells: list[CellResult] = []
    for lam in densities:
        for sig in jitters:
            cell_cfg = cfg.at_cell(lam, sig)
            try:
                cells.append(run_cell(cell_cfg, c_thr_grid_bps, workers=workers))
            except AggregationError as exc:
                cells.append(CellResult(
                    ue_density=float(lam), jitter_std_m=float(sig),
                    drops_requested=cfg.drops, drops_ok=0, drops_failed=cfg.drops,
                    stats={}, error=str(exc),
                ))
    return cells
