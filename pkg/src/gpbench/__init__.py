"""Gaussian-process approximation toolkit and benchmark harness.

Exact GP regression plus four scalable approximations (Vecchia, covariance
tapering, FITC inducing points, and the full-scale/sparse-residual hybrid),
with a CLI for accuracy-versus-runtime benchmarking.
"""

from .covkernel import CovarianceSpec, TaperSpec, UnsupportedSmoothnessError
from .gp_exact import (Dataset, PredictiveDistribution, loglik_exact,
                       grad_loglik_exact, predict_exact)
from .vecchia import build_vecchia, vecchia_loglik, vecchia_predict
from .lowrank import LowRankConfig, lowrank_loglik, lowrank_predict
from .taper import taper_loglik, taper_predict
from .estimate import FitResult, default_init, fit_params
from .metrics import aggregate_estimates, kl_gaussian, score_predictions
from .simulate import read_csv, scenario_spec, simulate_dataset, write_csv

__all__ = [
    "CovarianceSpec", "TaperSpec", "UnsupportedSmoothnessError",
    "Dataset", "PredictiveDistribution", "loglik_exact",
    "grad_loglik_exact", "predict_exact",
    "build_vecchia", "vecchia_loglik", "vecchia_predict",
    "LowRankConfig", "lowrank_loglik", "lowrank_predict",
    "taper_loglik", "taper_predict",
    "FitResult", "default_init", "fit_params",
    "aggregate_estimates", "kl_gaussian", "score_predictions",
    "read_csv", "scenario_spec", "simulate_dataset", "write_csv",
]

__version__ = "0.1.0"
