"""Constrained, active, and self-taught semidefinite spectral clustering."""

from .algorithms import (
    ActiveParams,
    ConstrainedCutParams,
    FPCParams,
    InfeasibleCut,
    active_loop,
    constrained_cut,
    csdsc,
    fcsc,
    fpc_complete,
    query_strategy,
    sdsc,
    self_taught,
    solve_active_cut,
    spectral_clustering,
)
from .constraints import ConstraintMatrix, OracleSim, constraint_budget, sample_constraints
from .dataset import Dataset, generate_twomoon, load_benchmark, load_csv, standardize
from .evaluation import ExperimentResult, aggregate_ari, rand_index
from .graph import AffinityGraph, build_affinity, build_graph, graph_from_points, median_sigma, normalize_sym
from .sdp import EquipartitionSDP, FeasibleMatrix, SDPSolution, build_equipartition_sdp, extract_feasible, solve_sdp
from .spectral import ClusterAssignment, EigenPairs, generalized_eigs, kmeans, row_normalize, sym_eigs

__version__ = "0.1.0"
