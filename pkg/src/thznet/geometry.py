"""Hard-core network topologies on a disc and line-of-sight blockage tests.

UEs are circles of radius ``body_radius`` whose centers come from a Poisson
point process thinned to a minimum center spacing of twice the body radius.
A link is blocked when any third UE's body disc touches the line-of-sight
segment between its endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .config import ScenarioConfig

# Dart-throwing gives up on a point after this many rejected candidates.
MAX_CANDIDATE_REJECTIONS = 10_000


class DensityInfeasibleError(RuntimeError):
    """Hard-core dart throwing could not place another UE center."""


@dataclass(frozen=True)
class Topology:
    """One network realization: UE centers, activity flags, S-D pairings.

    Invariants enforced at construction: all centers inside the network
    disc, pairwise spacing >= 2 * body_radius, pair indices valid and
    disjoint (no UE belongs to two pairs, sources differ from destinations).
    """

    positions: np.ndarray                  # (n, 2) UE centers [m]
    active: np.ndarray                     # (n,) bool, True = transmitting
    pairs: tuple[tuple[int, int], ...]     # (source, destination) indices
    network_radius: float                  # disc radius [m]
    body_radius: float                     # UE body radius [m]

    def __post_init__(self) -> None:
        positions = np.ascontiguousarray(np.asarray(self.positions, dtype=float).reshape(-1, 2))
        active = np.asarray(self.active, dtype=bool).reshape(-1)
        if active.shape[0] != positions.shape[0]:
            raise ValueError("active flags and positions disagree on UE count")
        if not np.all(np.isfinite(positions)):
            raise ValueError("non-finite UE coordinates")
        if positions.size:
            radii = np.hypot(positions[:, 0], positions[:, 1])
            if np.any(radii > self.network_radius * (1.0 + 1e-12)):
                raise ValueError("UE center outside the network disc")
        if positions.shape[0] >= 2:
            if min_pairwise_distance(positions) < 2.0 * self.body_radius * (1.0 - 1e-12):
                raise ValueError("UE centers violate the 2*body_radius hard-core spacing")
        seen: set[int] = set()
        n = positions.shape[0]
        for s, d in self.pairs:
            if not (0 <= s < n and 0 <= d < n):
                raise ValueError(f"pair ({s}, {d}) references an invalid UE index")
            if s == d:
                raise ValueError(f"pair ({s}, {d}) has identical endpoints")
            if s in seen or d in seen:
                raise ValueError("a UE appears in more than one pair")
            seen.update((s, d))
        positions.setflags(write=False)
        active.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "pairs", tuple((int(s), int(d)) for s, d in self.pairs))

    @property
    def n_ues(self) -> int:
        return self.positions.shape[0]

    def paired_ids(self) -> frozenset[int]:
        """UEs currently transmitting as a source or destination."""
        return frozenset(i for pair in self.pairs for i in pair)

    def pool_ids(self, include_inactive: bool = True) -> tuple[int, ...]:
        """Relay-candidate pool: UEs in no pair, ascending ids.

        Inactive UEs are included unless ``include_inactive`` is False, in
        which case only idle-but-active (unmatched) UEs remain.
        """
        paired = self.paired_ids()
        return tuple(
            i for i in range(self.n_ues)
            if i not in paired and (include_inactive or bool(self.active[i]))
        )


@dataclass(frozen=True)
class BlockageVerdict:
    """Outcome of a line-of-sight test: unblocked flag plus blocker ids."""

    unblocked: bool
    blocker_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.unblocked != (len(self.blocker_ids) == 0):
            raise ValueError("unblocked flag inconsistent with blocker list")


def min_pairwise_distance(positions: np.ndarray) -> float:
    """Smallest center-to-center distance among all point pairs."""
    positions = np.asarray(positions, dtype=float)
    if positions.shape[0] < 2:
        return math.inf
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    dist[np.diag_indices(positions.shape[0])] = math.inf
    return float(dist.min())


def _uniform_point_in_disc(radius: float, rng: np.random.Generator) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return r * math.cos(theta), r * math.sin(theta)


def generate_topology(cfg: "ScenarioConfig", rng: np.random.Generator) -> Topology:
    """Draw one hard-core network realization from the scenario parameters.

    The UE count is Poisson(density * disc area). Points are placed one by
    one, uniformly in the disc, rejecting candidates closer than twice the
    body radius to any accepted point; a candidate that fails
    ``MAX_CANDIDATE_REJECTIONS`` times aborts the drop. Activity flags are
    independent Bernoulli(tx_probability) draws, and active UEs are matched
    into source-destination pairs uniformly at random without replacement
    (an odd UE out stays unmatched and joins the relay pool).
    """
    density = float(cfg.ue_density)
    radius = float(cfg.network_radius_m)
    body = float(cfg.body_radius_m)
    p_tx = float(cfg.tx_probability)
    if density <= 0.0 or radius <= 0.0 or body <= 0.0:
        raise ValueError("ue_density, network_radius_m and body_radius_m must be positive")
    if not 0.0 <= p_tx <= 1.0:
        raise ValueError("tx_probability must lie in [0, 1]")

    n = int(rng.poisson(density * math.pi * radius * radius))
    positions = np.empty((n, 2), dtype=float)
    min_sq = (2.0 * body) ** 2
    for i in range(n):
        for _ in range(MAX_CANDIDATE_REJECTIONS):
            x, y = _uniform_point_in_disc(radius, rng)
            if i == 0:
                positions[0] = (x, y)
                break
            d_sq = (positions[:i, 0] - x) ** 2 + (positions[:i, 1] - y) ** 2
            if d_sq.min() >= min_sq:
                positions[i] = (x, y)
                break
        else:
            raise DensityInfeasibleError(
                f"could not place UE {i + 1}/{n} after {MAX_CANDIDATE_REJECTIONS} rejections; "
                f"density {density}/m^2 with spacing {2 * body} m is too tight"
            )

    active = rng.random(n) < p_tx
    matched = rng.permutation(np.flatnonzero(active))
    pairs = tuple(
        (int(matched[2 * k]), int(matched[2 * k + 1]))
        for k in range(len(matched) // 2)
    )
    return Topology(positions=positions, active=active, pairs=pairs,
                    network_radius=radius, body_radius=body)


def segment_point_distances(seg_start: np.ndarray, seg_end: np.ndarray,
                            points: np.ndarray) -> np.ndarray:
    """Distance from each point to each closed segment, shape (L, N).

    ``seg_start`` and ``seg_end`` are (L, 2); ``points`` is (N, 2). Segments
    must have nonzero length.
    """
    a = np.asarray(seg_start, dtype=float).reshape(-1, 2)
    b = np.asarray(seg_end, dtype=float).reshape(-1, 2)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ux = (b[:, 0] - a[:, 0])[:, None]
    uy = (b[:, 1] - a[:, 1])[:, None]
    uu = ux * ux + uy * uy
    if np.any(uu == 0.0):
        raise ValueError("degenerate segment: endpoints coincide")
    out = np.empty((a.shape[0], pts.shape[0]), dtype=float)
    # Work in row chunks so the (chunk, N) temporaries stay cache-resident.
    chunk = max(1, 32_768 // max(1, pts.shape[0]))
    for lo in range(0, a.shape[0], chunk):
        hi = lo + chunk
        wx = pts[None, :, 0] - a[lo:hi, None, 0]
        wy = pts[None, :, 1] - a[lo:hi, None, 1]
        t = wx * ux[lo:hi]
        t += wy * uy[lo:hi]
        t /= uu[lo:hi]
        np.clip(t, 0.0, 1.0, out=t)
        wx -= t * ux[lo:hi]
        wy -= t * uy[lo:hi]
        wx *= wx
        wy *= wy
        wx += wy
        np.sqrt(wx, out=out[lo:hi])
    return out


def segment_disc_intersects(a, b, center, radius: float) -> bool:
    """True iff the closed segment [a, b] passes within ``radius`` of ``center``.

    Tangency (distance exactly equal to the radius) counts as intersecting.
    """
    dist = segment_point_distances(np.asarray(a, dtype=float)[None, :],
                                   np.asarray(b, dtype=float)[None, :],
                                   np.asarray(center, dtype=float)[None, :])[0, 0]
    return bool(dist <= radius)


def check_blockage(topo: Topology, s: int, d: int) -> BlockageVerdict:
    """Line-of-sight verdict for the link between UEs ``s`` and ``d``.

    A third UE blocks when its body disc touches the segment between the
    endpoint centers; the endpoints themselves never block their own link.
    """
    n = topo.n_ues
    if not (0 <= s < n and 0 <= d < n):
        raise IndexError(f"link ({s}, {d}) references an invalid UE index")
    if s == d:
        raise ValueError("link endpoints must differ")
    dist = segment_point_distances(topo.positions[s][None, :],
                                   topo.positions[d][None, :],
                                   topo.positions)[0]
    dist[s] = math.inf
    dist[d] = math.inf
    blockers = np.flatnonzero(dist <= topo.body_radius)
    return BlockageVerdict(unblocked=blockers.size == 0,
                           blocker_ids=tuple(int(i) for i in blockers))
