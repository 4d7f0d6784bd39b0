"""Preferential-attachment hypergraph growth with vertex deactivation.

A simulator for the three-event growth process (vertex arrival, hyperedge
arrival, degree-proportional deactivation), the fixed-point machinery that
predicts the limiting mean deactivated degree, and analysis tools for the
resulting power-law-with-exponential-cutoff degree distribution.
"""

from .analysis import (
    ComparisonReport,
    DegreeHistogram,
    FitResult,
    SlopeFit,
    ccdf,
    compare_to_theory,
    concentration_report,
    fit_powerlaw_cutoff,
    log_binned_pmf,
    read_degrees_csv,
    slope_fit,
    theta_convergence,
    write_degrees_csv,
)
from .cardinality import CardinalityLaw, Constant, Empirical, TruncatedPoisson, from_sizes_file
from .errors import ConfigError, NonConvergenceError
from .process import (
    Deactivated,
    EdgeAdded,
    EnsembleResult,
    GrowthState,
    InitialHypergraph,
    ModelParams,
    RunTrace,
    StepEvent,
    Terminated,
    VertexAdded,
    ensemble,
    initialize,
    run,
    step,
    write_hyperedge_log,
    write_trajectory_csv,
)
from .rng import SplitMix64, derive_run_seed
from .sampler import DegreeIndex
from .theory import (
    CutoffParams,
    TheoryParams,
    ThetaSolution,
    cutoff_params,
    expected_fraction,
    gauss_2f1,
    lipschitz_bound,
    powerlaw_reduction,
    r_map,
    rho,
    slope_alpha,
    solve_theta,
)

__version__ = "0.1.0"
