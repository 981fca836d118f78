"""Certified local marginal inference for sparse Ising models.

Answer p(x_q = +1) for a single query node by growing a small subgraph around
it, decoupling the rest of the graph, and running exact inference on the
subgraph alone. Under a local contraction condition the answer comes with a
computable bound on its distance from the true global marginal, so the cost of
a query depends on the neighbourhood that matters and not on the graph size.
"""
from .dobrushin import (
    DobrushinCertificate,
    DobrushinConditionError,
    EnumerationCapError,
    conditional_gap,
    decay_bound,
    decay_radius,
    dobrushin_coefficient,
    influence_matrix,
    interaction_entry,
    interaction_matrix,
    local_certificate,
    perturbation_vector,
    spectral_radius,
)
from .exact import (
    CliqueTooLargeError,
    GraphTooLargeError,
    brute_force_marginal,
    eliminate_marginal,
    log_partition,
    min_fill_order,
)
from .expansion import (
    ExpansionStep,
    ExpansionTrace,
    InferenceMethod,
    QueryResult,
    StopReason,
    greedy_expand,
    maxnorm_expand,
    query_marginal,
    random_expand,
)
from .experiments import (
    COMPARISON_METHODS,
    CitationGraph,
    CoraSpec,
    GridSpec,
    cora_pipeline,
    dobrushin_heatmap,
    evaluate_prefixes,
    expansion_comparison,
    gen_citation_graph,
    gen_grid,
    grid_edges,
    grid_node_id,
    i1_sweep,
    load_citation_graph,
    substream,
    write_csv,
    write_edge_file,
    write_label_file,
)
from .meanfield import (
    MeanFieldConfig,
    marginals,
    MeanFieldState,
    boundary_mean_field,
    mean_field,
    variational_objective,
)
from .model import (
    BoundaryMethod,
    IsingModel,
    LocalMRFError,
    LocalizedModel,
    MeanFieldDivergence,
    ModelError,
    Region,
    RegionError,
    build_model,
    connected_component,
    connected_components,
    distance_to_set,
    graph_distance,
    load_model,
    localize,
    make_region,
    model_json,
    read_edge_list,
    read_labels,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryMethod",
    "COMPARISON_METHODS",
    "CitationGraph",
    "CliqueTooLargeError",
    "CoraSpec",
    "DobrushinCertificate",
    "DobrushinConditionError",
    "EnumerationCapError",
    "ExpansionStep",
    "ExpansionTrace",
    "GraphTooLargeError",
    "GridSpec",
    "InferenceMethod",
    "IsingModel",
    "LocalMRFError",
    "LocalizedModel",
    "MeanFieldConfig",
    "MeanFieldDivergence",
    "MeanFieldState",
    "ModelError",
    "QueryResult",
    "Region",
    "RegionError",
    "StopReason",
    "boundary_mean_field",
    "brute_force_marginal",
    "build_model",
    "conditional_gap",
    "connected_component",
    "connected_components",
    "cora_pipeline",
    "decay_bound",
    "decay_radius",
    "distance_to_set",
    "dobrushin_coefficient",
    "dobrushin_heatmap",
    "eliminate_marginal",
    "evaluate_prefixes",
    "expansion_comparison",
    "gen_citation_graph",
    "gen_grid",
    "graph_distance",
    "greedy_expand",
    "grid_edges",
    "grid_node_id",
    "i1_sweep",
    "influence_matrix",
    "interaction_entry",
    "interaction_matrix",
    "load_citation_graph",
    "load_model",
    "local_certificate",
    "localize",
    "log_partition",
    "make_region",
    "marginals",
    "maxnorm_expand",
    "mean_field",
    "min_fill_order",
    "model_json",
    "perturbation_vector",
    "query_marginal",
    "random_expand",
    "read_edge_list",
    "read_labels",
    "save_model",
    "spectral_radius",
    "substream",
    "variational_objective",
    "write_csv",
    "write_edge_file",
    "write_label_file",
]
