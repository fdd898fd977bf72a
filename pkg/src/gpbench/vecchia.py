"""Vecchia approximation of the observable process: random ordering,
sequential nearest-neighbor conditioning sets, and conditional prediction."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from ._accel import NUMBA_ENABLED
from .gp_exact import PredictiveDistribution
from .numerics import FactorizationError

GRID_SEARCH_THRESHOLD = 5000


@dataclass(frozen=True)
class VecchiaStructure:
    ordering: np.ndarray       # permutation of training indices
    neighbors: np.ndarray      # (n, m) indices into the ordered arrays, -1 pad
    m: int
    distance_mode: str         # "euclidean" or "correlation"


def _search_coords(spec, locations):
    """Coordinates in the metric used for neighbor ranking.

    Correlation distance for the ARD family = per-axis range-scaled
    Euclidean distance (equivalent ranking for a monotone kernel)."""
    family, _, _, irx, iry = spec.scalars()
    if family == 0:
        return np.ascontiguousarray(locations, dtype=float), "euclidean"
    sc = locations * np.array([irx, iry])
    return np.ascontiguousarray(sc), "correlation"


def _neighbors_numpy(x, y, m):
    n = len(x)
    nb = np.full((n, m), -1, dtype=np.int64)
    for i in range(1, n):
        d2 = (x[:i] - x[i]) ** 2 + (y[:i] - y[i]) ** 2
        k = min(m, i)
        idx = np.argpartition(d2, k - 1)[:k] if k < i else np.arange(i)
        idx = idx[np.argsort(d2[idx], kind="stable")]
        nb[i, :k] = idx
    return nb


def build_vecchia(train, spec, m, seed):
    """Seeded random ordering plus m-nearest-predecessor conditioning sets."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n = len(train.y)
    rng = np.random.Generator(np.random.Philox(seed))
    ordering = rng.permutation(n)
    coords, mode = _search_coords(spec, train.locations)
    coords = coords[ordering]
    x = np.ascontiguousarray(coords[:, 0])
    y = np.ascontiguousarray(coords[:, 1])
    m_eff = min(m, n - 1) if n > 1 else 1
    if NUMBA_ENABLED:
        if n > GRID_SEARCH_THRESHOLD:
            nbrs = _kernels.neighbors_grid(x, y, m_eff)
        else:
            nbrs = _kernels.neighbors_bruteforce(x, y, m_eff)
    else:
        nbrs = _neighbors_numpy(x, y, m_eff)
    return VecchiaStructure(ordering=ordering, neighbors=nbrs, m=m,
                            distance_mode=mode)


def _loglik_numpy(x, y, obs, nbrs, family, nucase, sigma2, irx, iry, sigma_n2):
    n = len(x)
    stot = sigma2 + sigma_n2
    coords = np.column_stack([x, y])
    ll = 0.0
    for i in range(n):
        nb = nbrs[i][nbrs[i] >= 0]
        if len(nb) == 0:
            mean, var = 0.0, stot
        else:
            C = _kernels.cov_matrix_numpy(x[nb], y[nb], x[nb], y[nb],
                                          family, nucase, sigma2, irx, iry)
            C[np.diag_indices_from(C)] += sigma_n2
            c = _kernels.cov_matrix_numpy(x[i:i + 1], y[i:i + 1], x[nb], y[nb],
                                          family, nucase, sigma2, irx, iry)[0]
            try:
                L = np.linalg.cholesky(C)
            except np.linalg.LinAlgError:
                raise FactorizationError(i)
            z = np.linalg.solve(L, c)
            v = np.linalg.solve(L, obs[nb])
            mean = z @ v
            var = stot - z @ z
            if var <= 0:
                raise FactorizationError(i)
        r = obs[i] - mean
        ll += -0.5 * math.log(2 * math.pi * var) - 0.5 * r * r / var
    return ll


def vecchia_loglik(structure, spec, train):
    """Sum of ordered conditional Gaussian log-densities (observable process)."""
    family, nucase, sigma2, irx, iry = spec.scalars()
    ordering = structure.ordering
    locs = train.locations[ordering]
    x = np.ascontiguousarray(locs[:, 0])
    y = np.ascontiguousarray(locs[:, 1])
    obs = np.ascontiguousarray(train.y[ordering])
    if NUMBA_ENABLED:
        ll, status = _kernels.vecchia_loglik_core(
            x, y, obs, structure.neighbors, family, nucase, sigma2, irx, iry,
            spec.sigma_n2)
        if status != 0:
            raise FactorizationError(status - 1)
        return float(ll)
    return float(_loglik_numpy(x, y, obs, structure.neighbors, family, nucase,
                               sigma2, irx, iry, spec.sigma_n2))


def _predict_numpy(tx, ty, tobs, px, py, nbrs, family, nucase, sigma2,
                   irx, iry, sigma_n2):
    npts = len(px)
    means = np.empty(npts)
    lvars = np.empty(npts)
    for i in range(npts):
        nb = nbrs[i][nbrs[i] >= 0]
        C = _kernels.cov_matrix_numpy(tx[nb], ty[nb], tx[nb], ty[nb],
                                      family, nucase, sigma2, irx, iry)
        C[np.diag_indices_from(C)] += sigma_n2
        c = _kernels.cov_matrix_numpy(px[i:i + 1], py[i:i + 1], tx[nb], ty[nb],
                                      family, nucase, sigma2, irx, iry)[0]
        L = np.linalg.cholesky(C)
        z = np.linalg.solve(L, c)
        v = np.linalg.solve(L, tobs[nb])
        means[i] = z @ v
        lvars[i] = sigma2 - z @ z
    return means, lvars


def vecchia_predict(structure, spec, train, test_locations, flavor="latent",
                    m=None):
    """Per-test-point conditional Gaussian given its m nearest observed
    (training) locations; observed points come first in the ordering."""
    if m is None:
        m = structure.m
    test_locations = np.asarray(test_locations, dtype=float)
    family, nucase, sigma2, irx, iry = spec.scalars()
    coords, _ = _search_coords(spec, train.locations)
    tcoords, _ = _search_coords(spec, test_locations)
    m_eff = min(m, len(train.y))
    tree = cKDTree(coords)
    _, nbrs = tree.query(tcoords, k=m_eff)
    nbrs = np.asarray(nbrs, dtype=np.int64).reshape(len(test_locations), m_eff)

    tx = np.ascontiguousarray(train.locations[:, 0])
    ty = np.ascontiguousarray(train.locations[:, 1])
    px = np.ascontiguousarray(test_locations[:, 0])
    py = np.ascontiguousarray(test_locations[:, 1])
    tobs = np.ascontiguousarray(train.y)
    if NUMBA_ENABLED:
        means, lvars = _kernels.vecchia_predict_core(
            tx, ty, tobs, px, py, nbrs, family, nucase, sigma2, irx, iry,
            spec.sigma_n2)
        if np.isnan(means).any():
            raise FactorizationError(int(np.flatnonzero(np.isnan(means))[0]))
    else:
        means, lvars = _predict_numpy(tx, ty, tobs, px, py, nbrs, family,
                                      nucase, sigma2, irx, iry, spec.sigma_n2)
    pred = PredictiveDistribution(means, lvars, "latent")
    if flavor == "observable":
        pred = pred.to_observable(spec.sigma_n2)
    return pred
