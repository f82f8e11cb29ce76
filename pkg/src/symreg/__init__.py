"""Sparse symmetric low-rank matrix regression with CP baselines.

Scalar responses, symmetric matrix covariates: the coefficient matrix is
modelled as B diag(lam) B' and estimated by block GLM updates plus proximal
gradient with soft-thresholding, next to standard and symmetrized CP
regression baselines, seeded simulation generators, and a cross-validation /
replication harness.
"""

from .glm import (
    BERNOULLI,
    GAUSSIAN,
    Family,
    GlmConvergenceError,
    GlmProblem,
    fit_glm,
    fit_glm_lasso,
    soft_threshold,
)
from .solvers import (
    CPFactors,
    Dataset,
    FitConfig,
    FitResult,
    NumericalError,
    SymCPFactors,
    construct_init,
    default_pipeline,
    fit_cp,
    fit_sym_cp,
    fit_sym_tensor,
    grad_loss_B,
    objective,
    prox_update_B,
)
from .simulate import (
    SHAPE_NAMES,
    SignalShape,
    SimSpec,
    gen_dataset,
    random_correlation,
    shape_signal,
    synth_dataset,
)
from .evaluate import (
    CvPlan,
    ExperimentSpec,
    cv_select,
    kfold_split,
    mse_coef,
    mse_pred,
    predict_mean,
    replicate_experiment,
)
from . import tensor_ops

__version__ = "0.1.0"
