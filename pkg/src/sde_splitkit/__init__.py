"""Structure-preserving splitting integrators for semi-linear SDEs with
additive noise, plus tamed/truncated Euler-Maruyama baselines and the
experiment harness for convergence, moment-bound, hypoellipticity,
spectral and invariant-density studies."""

from .analysis import (
    batch_means,
    bounds_1d,
    check_assumptions,
    fit_order,
    hypoellipticity_report,
    kde,
    lt_nll,
    moment_series,
    periodogram,
    rmse_study,
)
from .integrators import (
    METHOD_TAGS,
    Ensemble,
    Trajectory,
    simulate_ensemble,
    simulate_path,
    step_euler_family,
    step_lie_trotter,
    step_strang,
)
from .linalg import cov_quadrature, log_norm, mat_exp, psd_factor, spectral_norm
from .models import (
    FhnParams,
    ModelSpec,
    ToyParams,
    build_model,
    fhn_cov,
    fhn_flow,
    fhn_kappa,
    fhn_mat_exp,
    fhn_stationary_cov,
    toy_flow,
)
from .noise import StreamKey, derive_stream, sample_xi, xi_from_fine_path

__version__ = "0.1.0"
