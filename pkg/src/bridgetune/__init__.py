"""bridgetune: non-iterative bridge (l_alpha-penalized) regression.

Posterior moments are computed by exact latent-scale Monte Carlo (tilted
positive-stable mixing), the unbiased prediction-risk estimate is available in
closed form from those moments, and the penalty is chosen by one-dimensional
risk minimization; no MCMC chains and no cross validation.
"""

from .backend import active_backend
from .data_io import (
    Dataset,
    SplitPlan,
    destandardize_predictions,
    load_dataset,
    load_xy,
    make_folds,
    make_splits,
    standardize,
    write_dataset,
    write_results,
)
from .errors import NumericalError, ValidationError, WeightDegeneracyWarning
from .experiment import run_experiment, run_replicate, timing_sweep
from .nmeans import (
    ScalarDiagnostics,
    ScalarModelConfig,
    ScalarPosterior,
    ep_log_density,
    scalar_diagnostics,
    scalar_fit,
)
from .regression import (
    ConditionalGaussian,
    LatentGaussianFit,
    ModelConfig,
    PosteriorSummary,
    RegressionDiagnostics,
    conditional_posterior,
    posterior_summary,
    regression_diagnostics,
)
from .simulate import SimDesign, gen_equicorrelated_design, gen_response
from .sure import (
    BridgeFit,
    GridSpec,
    SurePath,
    estimate_dof_fd,
    fit_bridge,
    ridge_sure_fit,
    sure_profile,
    sure_value,
)
from .svd_orthogonal import SvdBasis, orthogonal_fit, orthogonal_sure, svd_reduce
from .tilted_stable import (
    LatentDraws,
    StableIndex,
    draw_latent,
    laplace_transform_oracle,
    sample_tilted_stable,
    tilted_moment_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "active_backend",
    "BridgeFit",
    "ConditionalGaussian",
    "Dataset",
    "GridSpec",
    "LatentDraws",
    "LatentGaussianFit",
    "ModelConfig",
    "NumericalError",
    "PosteriorSummary",
    "RegressionDiagnostics",
    "ScalarDiagnostics",
    "ScalarModelConfig",
    "ScalarPosterior",
    "SimDesign",
    "SplitPlan",
    "SurePath",
    "SvdBasis",
    "ValidationError",
    "WeightDegeneracyWarning",
    "conditional_posterior",
    "destandardize_predictions",
    "draw_latent",
    "ep_log_density",
    "estimate_dof_fd",
    "fit_bridge",
    "gen_equicorrelated_design",
    "gen_response",
    "laplace_transform_oracle",
    "load_dataset",
    "load_xy",
    "make_folds",
    "make_splits",
    "orthogonal_fit",
    "orthogonal_sure",
    "posterior_summary",
    "regression_diagnostics",
    "ridge_sure_fit",
    "run_experiment",
    "run_replicate",
    "sample_tilted_stable",
    "scalar_diagnostics",
    "scalar_fit",
    "standardize",
    "sure_profile",
    "sure_value",
    "svd_reduce",
    "tilted_moment_oracle",
    "timing_sweep",
    "write_dataset",
    "write_results",
]
