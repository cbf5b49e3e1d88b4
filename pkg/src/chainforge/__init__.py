"""Desk-scale experimentation with robust Hamilton chains in hypergraphs."""

from .errors import (
    BudgetExceededError,
    ChainforgeError,
    ConstructionInfeasibleError,
    GraphParseError,
    InternalInvariantError,
    ParameterError,
    SchemaError,
)
from .hypercore import (
    Digraph,
    EdgePartition,
    Hypergraph,
    check_degree_sequence,
    clique_graph,
    complete_hypergraph,
    complete_kl_digraph,
    components2,
    count_crossing_edges,
    degree_map,
    degree_min,
    digraph_union,
    induced_digraph,
    induced_hypergraph,
    is_uniformly_dense,
    l_shadow,
    line_graph,
    orient_all,
    parse_graph,
    serialize_graph,
    shadow2,
    tight_components,
    vertex_degrees,
)
from .linkchain import (
    BalanceReport,
    ClosedChain,
    Link,
    OpenChain,
    build_closed_chain,
    build_open_chain,
    builtin_link,
    check_balanced,
    ell_cycle_link,
    f_copy_hypergraph,
    is_strictly_one_balanced,
    make_link,
    matching_link,
    one_density,
    parse_link_spec,
    power_link,
    validate_closed_chain,
    validate_open_chain,
)
from .hamilton import (
    UNKNOWN,
    AperiodicityReport,
    FractionalMatching,
    FrameworkReport,
    Predicate,
    PropertyGraph,
    SearchResult,
    check_consistency_pair,
    default_selector,
    find_hamilton_chain,
    framework_report,
    hamilton_tuples,
    has_perfect_fractional_matching,
    is_aperiodic,
    is_hamilton_L_connected,
    is_strongly_hamilton_l_connected,
    is_tightly_connected,
    predicate_hamilton_connected,
    predicate_has_perfect_matching,
    predicate_min_degree,
    predicate_strongly_hamilton_connected,
    property_graph,
    property_graph_min_degree,
)
from .randomness import (
    GENERATOR_ID,
    CorrectnessReport,
    HamiltonCycleSampler,
    SeededStream,
    SpreadReport,
    UniformMatchingSampler,
    binomial_tuple_set,
    count_perfect_matchings,
    estimate_correctness,
    estimate_spread,
    sample_hamilton_cycle_uniform,
    sample_perfect_matching_uniform,
    sparsify,
    spread_census,
    verify_spread_matching_bound,
    wilson_interval,
)
from .constructor import (
    ConstructionPlan,
    ConstructionResult,
    ConstructionSampler,
    PartitionWitness,
    PredicateCache,
    connect_phase,
    construct_chain,
    construction_record,
    cover_phase,
    partition_vertices,
    plan_parameters,
    replay_construction,
)
from .experiments import (
    CSV_HEADER,
    InheritanceReport,
    StressConfig,
    StressReport,
    SweepConfig,
    SweepRow,
    correctness_battery,
    dirac_extremal_core,
    estimate_crossing,
    load_sweep_config,
    parse_sweep_config,
    read_csv,
    run_constructor_stress,
    run_inheritance_experiment,
    run_threshold_sweep,
    write_csv,
)

__version__ = "0.1.0"
