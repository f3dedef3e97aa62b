"""Sparse-recovery laboratory for the unconstrained l1-weighted LASSO."""
from .problem import (
    GroundTruth,
    Observation,
    SensingMatrix,
    best_k,
    gen_gaussian_matrix,
    gen_sparse_signal,
    lambda_inf,
    make_observation,
    sigma_k,
)
from .solver import (
    LassoConfig,
    LassoSolution,
    check_extremal_pair,
    duality_gap,
    extract_support,
    soft_threshold,
    solve_lasso,
)
from .bounds import (
    BoundReport,
    RnspConstants,
    entropy,
    evaluate_bounds,
    l1_bounds,
    l2_bounds,
    rnsp_from_ric,
    sparsity_bound,
)
from .oracle import OracleBudget, exact_lasso_small, exact_ric, falsify_rnsp, mc_ric_lower
from .experiments import SweepConfig, SweepRecord, emit_figure_data, run_sweep

__version__ = "0.1.0"
