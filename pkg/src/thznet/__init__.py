"""Monte-Carlo link-level simulator for dense THz networks.

Quantifies the joint impact of human blockage and antenna misalignment and
compares best vs. random dual-hop decode-and-forward relay selection via
average throughput and the capacity-threshold CDF.
"""

__version__ = "0.1.0"

from .capacity import (LinkBudget, QuadratureError, QuadratureSpec,
                       adaptive_simpson, end_to_end_capacity, link_capacity,
                       link_capacity_batch, snr_density)
from .channel import (AbsorptionModel, BeamGeometry, ChannelParams,
                      MisalignmentSample, beam_geometry, default_absorption,
                      molecular_absorption, path_gain, pointing_gain,
                      sample_misalignment)
from .config import (CDF_DENSITIES, DEFAULT_SWEEP_DENSITIES, DEFAULT_SWEEP_JITTERS,
                     DEFAULT_THRESHOLD_GRID_BPS, ScenarioConfig)
from .geometry import (BlockageVerdict, DensityInfeasibleError, Topology,
                       check_blockage, generate_topology, min_pairwise_distance,
                       segment_disc_intersects, segment_point_distances)
from .relay import (DIRECT, OUTAGE, RELAYED, STRATEGIES, STRATEGY_BEST,
                    STRATEGY_RANDOM, RelayCandidate, RelayCandidateSet,
                    RelayDecision, build_candidate_set, resolve_pair,
                    select_best, select_random)
from .simulation import (AggregateStats, AggregationError, CellResult,
                         DropResult, FrozenDrop, PairRecord, aggregate,
                         decide_drop, drop_rng, evaluate_topology, freeze_drop,
                         run_cell, run_drop, sweep)

__all__ = [name for name in dir() if not name.startswith("_")]
