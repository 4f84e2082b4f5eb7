"""Group consensus of clustered linear multi-agent systems over weighted digraphs."""

from .analysis import Verdict, analyze, group_consensus_verdict
from .control import (
    ControlDesign,
    CouplingThresholds,
    Dynamics,
    coupling_thresholds,
    design,
    gain,
    is_stabilizable,
    oscillator,
    single_integrator,
    solve_riccati,
)
from .errors import (
    AssumptionError,
    DecompositionError,
    EigenvalueError,
    GraphError,
    GroupConsensusError,
    InfeasibleTopologyError,
    RiccatiError,
    SpectrumSplitError,
)
from .graph import (
    ClusteredDigraph,
    build_graph,
    condensation,
    has_cluster_spanning_trees,
    laplacian,
    min_spanning_forest_size,
    reachable_set,
)
from .quotient import check_common_influence, quotient_graph, quotient_laplacian
from .reduction import reach_decomposition, reduced_laplacian, similarity_decomposition
from .simulate import Scenario, Trajectory, predict_limit, simulate, verify_prediction
from .spectral import eigenvalues, hurwitz_check, zero_eig_count

__version__ = "0.1.0"

__all__ = [
    "Verdict",
    "analyze",
    "group_consensus_verdict",
    "ControlDesign",
    "CouplingThresholds",
    "Dynamics",
    "coupling_thresholds",
    "design",
    "gain",
    "is_stabilizable",
    "oscillator",
    "single_integrator",
    "solve_riccati",
    "AssumptionError",
    "DecompositionError",
    "EigenvalueError",
    "GraphError",
    "GroupConsensusError",
    "InfeasibleTopologyError",
    "RiccatiError",
    "SpectrumSplitError",
    "ClusteredDigraph",
    "build_graph",
    "condensation",
    "has_cluster_spanning_trees",
    "laplacian",
    "min_spanning_forest_size",
    "reachable_set",
    "check_common_influence",
    "quotient_graph",
    "quotient_laplacian",
    "reach_decomposition",
    "reduced_laplacian",
    "similarity_decomposition",
    "Scenario",
    "Trajectory",
    "predict_limit",
    "simulate",
    "verify_prediction",
    "eigenvalues",
    "hurwitz_check",
    "zero_eig_count",
]
