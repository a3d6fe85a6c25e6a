"""Classical and avoidance metrics of random walks on weighted graphs, and node pivotality."""

from .avoidance import (
    FEASIBILITY_EPS,
    AvoidanceFundamental,
    AvoidanceQuery,
    AvoidanceResult,
    ViaSweep,
    avoidance_fundamental,
    avoidance_hitting_cost,
    avoidance_hitting_time,
    conditioned_transition,
    transit_hitting_time,
    via_sweep,
)
from .classical import (
    AbsorptionMatrix,
    FundamentalMatrix,
    IllConditionedWarning,
    SingularChainError,
    absorption_from_fundamental,
    absorption_probabilities,
    fundamental_for,
    fundamental_matrix,
    hitting_cost,
    hitting_time,
    incremental_fundamental,
    on_all_states,
)
from .graph import (
    Chain,
    ChainPartition,
    DanglingNodeError,
    Edge,
    Graph,
    GraphError,
    GraphParseError,
    StrandedStatesError,
    build_chain,
    dump_graph,
    load_graph,
    partition,
)
from .identities import IDENTITIES, IdentityReport, identity_residuals, identity_sweep, verify_identities
from .netgen import GeneratorSpec, example1, example2, example3b, fat_tree, generate, parse_spec, random_graph
from .oracle import EstimateReport, SeriesResult, estimate_avoidance, sample_walk, series_metrics
from .pivotality import METRICS, PivotalityReport, rank

__version__ = "0.1.0"
