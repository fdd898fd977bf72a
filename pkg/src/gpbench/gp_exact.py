"""Exact GP marginal likelihood, gradient, and posterior prediction."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .covkernel import build_cov, SUPPORTED_NU
from .numerics import chol_dense_jittered

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class Dataset:
    """Locations, responses, optional latent values / covariates, split labels."""

    locations: np.ndarray          # (n, 2)
    y: np.ndarray                  # (n,)
    latent: np.ndarray | None = None
    covariates: np.ndarray | None = None
    split: np.ndarray = field(default=None)  # per-point label

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.split is None:
            self.split = np.full(len(self.y), "train")
        self.split = np.asarray(self.split)
        n = self.locations.shape[0]
        if len(self.y) != n or len(self.split) != n:
            raise ValueError("locations, y, split must have equal length")
        if self.latent is not None and len(self.latent) != n:
            raise ValueError("latent length mismatch")
        if self.covariates is not None and self.covariates.shape[0] != n:
            raise ValueError("covariate rows mismatch")
        if not np.isfinite(self.locations).all():
            raise ValueError("non-finite coordinates")

    def subset(self, label):
        mask = self.split == label
        return Dataset(
            locations=self.locations[mask],
            y=self.y[mask],
            latent=None if self.latent is None else self.latent[mask],
            covariates=None if self.covariates is None else self.covariates[mask],
            split=self.split[mask],
        )

    @property
    def train(self):
        return self.subset("train")


@dataclass
class PredictiveDistribution:
    """Per-point predictive means and variances, latent- or observable-flavor."""

    means: np.ndarray
    variances: np.ndarray
    flavor: str = "latent"  # or "observable"

    def __post_init__(self):
        if self.flavor not in ("latent", "observable"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        v = np.asarray(self.variances, dtype=float)
        tiny = (v < 0) & (v > -1e-10)
        if tiny.any():
            log.warning("clamping %d slightly negative predictive variances",
                        tiny.sum())
            v = np.where(tiny, 0.0, v)
        if (v < 0).any():
            raise ValueError("negative predictive variance beyond tolerance")
        self.variances = v
        self.means = np.asarray(self.means, dtype=float)

    def to_observable(self, sigma_n2):
        if self.flavor == "observable":
            return self
        return PredictiveDistribution(self.means, self.variances + sigma_n2,
                                      "observable")


def ols_detrend(data, test_covariates=None):
    """Two-stage linear mean: OLS fit on training covariates, residual response.

    Returns (residual_y, coefficients, predict_fn); predict_fn maps a
    covariate matrix to the fitted mean.
    """
    X = data.covariates
    if X is None:
        raise ValueError("dataset has no covariates")
    beta, *_ = np.linalg.lstsq(X, data.y, rcond=None)
    return data.y - X @ beta, beta, (lambda Xs: Xs @ beta)


def _factor(spec, data):
    K = build_cov(spec, data.locations, data.locations, add_nugget=True)
    return chol_dense_jittered(K)


def loglik_exact(spec, data):
    """Log marginal likelihood of the training responses under spec."""
    n = len(data.y)
    if n < 1:
        raise ValueError("need at least one training point")
    f = _factor(spec, data)
    alpha = f.solve(data.y)
    return float(-0.5 * data.y @ alpha - 0.5 * f.logdet() - 0.5 * n * LOG_2PI)


def _scaled_dist_parts(spec, A, B):
    """Scaled distance matrix u plus the per-axis pieces needed for range
    derivatives."""
    family, nucase, _, irx, iry = spec.scalars()
    c = (1.0, _kernels.SQRT3, _kernels.SQRT5)[nucase]
    dx = np.abs(A[:, 0][:, None] - B[:, 0][None, :])
    dy = np.abs(A[:, 1][:, None] - B[:, 1][None, :])
    if family == 0:
        u = c * np.hypot(dx, dy) * irx
        return u, {"rho": -u / spec.rho}
    ux = c * dx * irx
    uy = c * dy * iry
    return ux + uy, {"rho_x": -ux / spec.rho_x, "rho_y": -uy / spec.rho_y}


def _dcorr(u, nucase):
    if nucase == 0:
        return -np.exp(-u)
    if nucase == 1:
        return -u * np.exp(-u)
    return -(u / 3.0) * (1.0 + u) * np.exp(-u)


def cov_gradients(spec, A, B):
    """dK/dtheta for theta = spec.param_names(); K excludes the nugget."""
    _, nucase, sigma2, _, _ = spec.scalars()
    u, du = _scaled_dist_parts(spec, A, B)
    g = _dcorr(u, nucase)
    K = build_cov(spec, A, B)
    out = {"sigma_n2": np.eye(A.shape[0]) if A.shape == B.shape else None,
           "sigma2": K / sigma2}
    for name, dudr in du.items():
        out[name] = sigma2 * g * dudr
    return out


def grad_loglik_exact(spec, data):
    """Analytic gradient of loglik_exact over (sigma_n2, sigma2, rho[, rho_y])."""
    S = data.locations
    f = _factor(spec, data)
    alpha = f.solve(data.y)
    Sinv = f.solve(np.eye(len(data.y)))
    grads = cov_gradients(spec, S, S)
    out = np.empty(len(spec.param_names()))
    for i, name in enumerate(spec.param_names()):
        dK = grads[name]
        out[i] = 0.5 * alpha @ dK @ alpha - 0.5 * np.einsum("ij,ji->", Sinv, dK)
    return out


def predict_exact(spec, data, test_locations, flavor="latent"):
    """Posterior predictive distribution at test_locations."""
    S = data.locations
    Sstar = np.asarray(test_locations, dtype=float)
    f = _factor(spec, data)
    Kcross = build_cov(spec, Sstar, S)
    alpha = f.solve(data.y)
    means = Kcross @ alpha
    V = f.solve(Kcross.T)
    lat_var = spec.sigma2 - np.einsum("ij,ji->i", Kcross, V)
    pred = PredictiveDistribution(means, lat_var, "latent")
    if flavor == "observable":
        pred = pred.to_observable(spec.sigma_n2)
    return pred
