"""Joint-entropy estimation and risk analytics for browser fingerprinting surfaces."""

__version__ = "0.1.0"

from .chowliu import (
    EntropyBound,
    MiGraph,
    best_chain_lower_bound,
    chain_lower_bound,
    chow_liu_upper_bound,
    estimate_graph,
    max_spanning_forest,
    naive_upper_bound,
)
from .estimation import (
    EmpiricalDistribution,
    EntropyEstimate,
    EstimationError,
    JointDistribution,
    MiEstimate,
    build_distribution,
    build_joint,
    entropy_confidence_interval,
    mi_confidence_interval,
    mi_estimate,
    mutual_information,
    plugin_entropy,
    required_samples,
)
from .independence import Verdict, VerdictMatrix, classify_pair, classify_pairs
from .planner import AssignmentPlan, PlanningInput, greedy_assign, verify_plan
from .simulator import (
    PopulationModel,
    exact_joint_entropy,
    exact_mutual_information,
    generate_population,
    hash_values,
    k_anonymity_filter,
    random_forest_model,
    run_phase1,
    run_phase2,
    run_phase3,
)
from .structure import AdjacencyMatrix, bandwidth, cuthill_mckee_order, single_linkage_clusters

__all__ = [
    "AdjacencyMatrix",
    "AssignmentPlan",
    "EmpiricalDistribution",
    "EntropyBound",
    "EntropyEstimate",
    "EstimationError",
    "JointDistribution",
    "MiEstimate",
    "MiGraph",
    "PlanningInput",
    "PopulationModel",
    "Verdict",
    "VerdictMatrix",
    "bandwidth",
    "best_chain_lower_bound",
    "build_distribution",
    "build_joint",
    "chain_lower_bound",
    "chow_liu_upper_bound",
    "classify_pair",
    "classify_pairs",
    "cuthill_mckee_order",
    "entropy_confidence_interval",
    "estimate_graph",
    "exact_joint_entropy",
    "exact_mutual_information",
    "generate_population",
    "greedy_assign",
    "hash_values",
    "k_anonymity_filter",
    "max_spanning_forest",
    "mi_confidence_interval",
    "mi_estimate",
    "mutual_information",
    "naive_upper_bound",
    "plugin_entropy",
    "random_forest_model",
    "required_samples",
    "run_phase1",
    "run_phase2",
    "run_phase3",
    "single_linkage_clusters",
    "verify_plan",
]
