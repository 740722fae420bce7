"""Balanced dynamic content addressing on tree-based greedy embeddings.

The package simulates a content-addressable store whose node coordinates come
from a spanning-tree embedding, kept balanced under churn by local
re-embeddings.
"""

from .chord import ChordRing, chord_imbalance, chord_join, chord_leave
from .churn import ChurnDistributions, ChurnProcess, default_distributions, load_trace
from .config import SweepConfig, parse_config
from .embedding import (
    AddressMass,
    EmbeddingParams,
    Interval,
    address_mass,
    cil,
    closest_node_bruteforce,
    content_address,
    distance,
    embed_subtree,
    greedy_route,
)
from .errors import (
    BdcatError,
    CapacityError,
    ConfigError,
    ConsistencyError,
    DepthError,
    ParameterError,
    ParseError,
    StateError,
)
from .forest import SpanningForest, draw_tickets
from .graph import Graph, generate_barabasi_albert, generate_erdos_renyi, parse_edge_list
from .sim import (
    RunSummary,
    SimConfig,
    StepRecord,
    TopologySpec,
    baseline_full_reembed_cost,
    imbalance_snapshot,
    run_simulation,
)
from .stabilization import StabOutcome, StabParams, Stabilizer
from .sweep import run_sweep

__version__ = "0.1.0"
