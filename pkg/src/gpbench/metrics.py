"""Evaluation criteria: RMSE, Gaussian log-score and CRPS, univariate
Gaussian KL divergence, and bias/MSE aggregation of parameter estimates."""

import math

import numpy as np
from scipy.stats import norm

LOG_2PI = math.log(2.0 * math.pi)


def score_predictions(pred, truth, sigma_n2_hat=0.0):
    """{rmse, log_score, crps} of a Gaussian predictive distribution.

    Latent-flavor predictions are scored with their own variances against
    the latent truth.  Observable-flavor predictions are scored against the
    observed responses; their variances already include the estimated noise
    variance (sigma_n2_hat is the amount to add when the caller passes a
    latent-flavor prediction to be scored as observable, via
    ``pred.to_observable(sigma_n2_hat)`` -- it is not added here twice).
    """
    truth = np.asarray(truth, dtype=float)
    mu = pred.means
    if len(mu) != len(truth):
        raise ValueError("length mismatch")
    var = pred.variances.copy()
    resid = truth - mu
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    if (var == 0).any() and (resid[var == 0] != 0).any():
        log_score = math.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ls = resid ** 2 / (2 * var) + 0.5 * np.log(2 * np.pi * var)
        log_score = float(np.mean(ls))
    sd = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, resid / sd, 0.0)
    crps_each = sd * (-1.0 / math.sqrt(math.pi) + 2.0 * norm.pdf(z)
                      + z * (2.0 * norm.cdf(z) - 1.0))
    crps_each = np.where(sd > 0, crps_each, np.abs(resid))
    return {"rmse": rmse, "log_score": log_score,
            "crps": float(np.mean(crps_each))}


def kl_gaussian(mu_q, sigma_q, mu_p, sigma_p):
    """KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2)); q approximate, p exact.

    Accepts scalars or arrays (standard deviations, not variances).
    """
    sigma_q = np.asarray(sigma_q, dtype=float)
    sigma_p = np.asarray(sigma_p, dtype=float)
    if (sigma_q <= 0).any() or (sigma_p <= 0).any():
        raise ValueError("standard deviations must be > 0")
    mu_q = np.asarray(mu_q, dtype=float)
    mu_p = np.asarray(mu_p, dtype=float)
    out = (np.log(sigma_p / sigma_q)
           + (sigma_q ** 2 + (mu_q - mu_p) ** 2) / (2.0 * sigma_p ** 2) - 0.5)
    return float(out) if out.ndim == 0 else out


def aggregate_estimates(estimates, truth):
    """Per-parameter bias and MSE with standard errors over repetitions."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.ndim != 2 or estimates.shape[0] < 2:
        raise ValueError("need >= 2 repetitions of parameter vectors")
    dev = estimates - truth
    sq = dev ** 2
    r = estimates.shape[0]
    return {
        "bias": dev.mean(axis=0),
        "mse": sq.mean(axis=0),
        "se_bias": dev.std(axis=0, ddof=1) / math.sqrt(r),
        "se_mse": sq.std(axis=0, ddof=1) / math.sqrt(r),
    }
