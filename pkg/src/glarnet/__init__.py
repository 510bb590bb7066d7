"""Sparse network inference for generalized linear autoregressive processes.

Simulation of Bernoulli and Poisson GLAR chains, l1-regularized maximum
likelihood estimation of the interaction matrix, and numeric evaluation of
the closed-form error/concentration/mixing constants for both families.
"""
from .families import Family, log_partition
from .model import (
    GlarModel,
    SparsityProfile,
    load_model,
    save_model,
    sparsity_of,
    validate_model,
)
from .simulate import (
    GenSpec,
    TimeSeries,
    derive_seed,
    read_series_csv,
    sample_sparse_matrix,
    simulate,
    step,
    write_series_csv,
)
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    default_lambda,
    empirical_lambda_floor,
    fit,
    fit_row,
    grad_nll_row,
    lasso_baseline,
    nll_row,
    prox_l1_box,
)
from .theory import (
    AssumptionParams,
    TheoryReport,
    corollary_bound,
    cross_term_stat,
    empirical_tv,
    gamma_conditional,
    mixing_tv_bound,
    omega_bernoulli,
    omega_poisson,
    poisson_bound_report,
    poisson_tail_bound,
    sigma_bernoulli,
    sigma_poisson,
    stationary_pi,
    theory_report,
    thm1_bounds,
    transition_kernel,
    truncated_poisson_variance,
)
from .experiments import (
    ExperimentGrid,
    ExperimentResult,
    burn_in_comparison,
    mse,
    run_grid,
    scaling_diagnostics,
    support_metrics,
)

__version__ = "0.1.0"
