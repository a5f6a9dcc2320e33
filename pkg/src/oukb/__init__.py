"""Estimation and adaptive filtering for a hidden ergodic Ornstein-Uhlenbeck
process observed through additive white noise.

Pipeline: exact trajectory simulation -> preliminary method-of-moments
estimate on a short learning interval -> one-step MLE-process -> plug-in
(adaptive) Kalman-Bucy filter, with closed-form asymptotic targets and a
Monte Carlo harness that checks the implementation against them.
"""

from .adaptive import AdaptiveFilterPath, ErrorConstants, adaptive_filter, error_constants
from .harness import McConfig, McReport, emit_report, normality_check, run_mc
from .kalman import (
    FilterPath,
    StationaryFilterPath,
    initial_values_at_tau,
    kb_filter,
    riccati_closed,
    stationary_filter_with_derivative,
)
from .model import (
    DerivedQuantities,
    ModelSpec,
    derived_quantities,
    fisher_matrix_af,
    fisher_scalar,
    h_dec,
    h_dec_inv,
    h_inc,
    h_inc_inv,
    k11_variance,
    make_spec,
    moment_functions,
)
from .moments import MmeResult, MomentStats, mme_ab, mme_af, mme_scalar, r_statistics
from .onestep import (
    EstimatorPath,
    LearningConfig,
    eta_process,
    grid_mle_and_bayes,
    onestep_process,
)
from .simulate import RngStream, Trajectory, simulate_path, unit_increments

__version__ = "0.1.0"
