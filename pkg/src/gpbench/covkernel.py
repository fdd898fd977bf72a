"""Covariance specifications, Matern and taper functions, matrix assembly."""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from . import _kernels
from ._accel import NUMBA_ENABLED

SUPPORTED_NU = (0.5, 1.5, 2.5)


class UnsupportedSmoothnessError(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceSpec:
    """Matern covariance parameters (isotropic or ARD) plus nugget.

    Only half-integer smoothness nu in {0.5, 1.5, 2.5} is supported (closed
    forms, no Bessel evaluation).  Exactly one of rho / (rho_x, rho_y) must
    be set, matching the family.
    """

    family: str = "matern_iso"
    sigma2: float = 1.0
    rho: float | None = None
    rho_x: float | None = None
    rho_y: float | None = None
    nu: float = 1.5
    sigma_n2: float = 0.0

    def __post_init__(self):
        if self.family not in ("matern_iso", "matern_ard"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.nu not in SUPPORTED_NU:
            raise UnsupportedSmoothnessError(
                f"nu={self.nu} unsupported; choose from {SUPPORTED_NU}")
        if self.sigma2 < 0 or self.sigma_n2 < 0:
            raise ValueError("variances must be >= 0")
        if self.family == "matern_iso":
            if self.rho is None or self.rho_x is not None or self.rho_y is not None:
                raise ValueError("matern_iso requires rho and no rho_x/rho_y")
            if self.rho <= 0:
                raise ValueError("rho must be > 0")
        else:
            if self.rho is not None or self.rho_x is None or self.rho_y is None:
                raise ValueError("matern_ard requires rho_x, rho_y and no rho")
            if self.rho_x <= 0 or self.rho_y <= 0:
                raise ValueError("ranges must be > 0")

    def scalars(self):
        """(family_code, nucase, sigma2, inv_rho_x, inv_rho_y) for kernels."""
        nucase = SUPPORTED_NU.index(self.nu)
        if self.family == "matern_iso":
            return 0, nucase, self.sigma2, 1.0 / self.rho, 1.0 / self.rho
        return 1, nucase, self.sigma2, 1.0 / self.rho_x, 1.0 / self.rho_y

    def param_names(self):
        if self.family == "matern_iso":
            return ("sigma_n2", "sigma2", "rho")
        return ("sigma_n2", "sigma2", "rho_x", "rho_y")

    def params(self):
        return np.array([getattr(self, p) for p in self.param_names()])

    def replace_params(self, values):
        names = self.param_names()
        kw = dict(zip(names, values))
        return CovarianceSpec(family=self.family, nu=self.nu,
                              sigma2=kw["sigma2"], sigma_n2=kw["sigma_n2"],
                              rho=kw.get("rho"), rho_x=kw.get("rho_x"),
                              rho_y=kw.get("rho_y"))


@dataclass(frozen=True)
class TaperSpec:
    """Compactly supported Wendland taper: 1 at distance 0, exactly 0 at
    distances >= taper_range."""

    taper_range: float
    taper_shape: float = 1.0  # Wendland_1: (1 - t)^4_+ (1 + 4 t)

    def __post_init__(self):
        if self.taper_range <= 0:
            raise ValueError("taper_range must be > 0")


def matern(spec, a, b=None):
    """Covariance between locations (or at a plain distance for matern_iso).

    ``matern(spec, d)`` with a scalar distance is allowed for the isotropic
    family; the ARD family needs coordinate pairs since it combines per-axis
    scaled distances.  The nugget is never included.
    """
    family, nucase, sigma2, irx, iry = spec.scalars()
    if b is None:
        if family != 0:
            raise ValueError("matern_ard needs a coordinate pair, not a distance")
        d = float(a)
        if d < 0:
            raise ValueError("distance must be >= 0")
        return _kernels.cov_value(d, 0.0, family, nucase, sigma2, irx, iry)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _kernels.cov_value(a[0] - b[0], a[1] - b[1],
                              family, nucase, sigma2, irx, iry)


def taper_value(t, d):
    """Wendland taper multiplier in [0, 1] at distance d >= 0."""
    if d < 0:
        raise ValueError("distance must be >= 0")
    return _kernels.wendland1(float(d), t.taper_range)


def _coords(A):
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != 2:
        raise ValueError("locations must be (n, 2)")
    return A


def build_cov(spec, A, B, add_nugget=False, taper=None):
    """Dense covariance matrix between location sets A (rows) and B (cols).

    add_nugget is only legal when A and B are the same set (same object or
    identical arrays).
    """
    A = _coords(A)
    B = _coords(B)
    family, nucase, sigma2, irx, iry = spec.scalars()
    if NUMBA_ENABLED:
        out = np.empty((A.shape[0], B.shape[0]))
        _kernels.cov_matrix_fill(A[:, 0].copy(), A[:, 1].copy(),
                                 B[:, 0].copy(), B[:, 1].copy(),
                                 family, nucase, sigma2, irx, iry, out)
    else:
        out = _kernels.cov_matrix_numpy(A[:, 0], A[:, 1], B[:, 0], B[:, 1],
                                        family, nucase, sigma2, irx, iry)
    if taper is not None:
        dx = A[:, 0][:, None] - B[:, 0][None, :]
        dy = A[:, 1][:, None] - B[:, 1][None, :]
        d = np.hypot(dx, dy)
        t = np.clip(1.0 - d / taper.taper_range, 0.0, None)
        out *= t ** 4 * (1.0 + 4.0 * d / taper.taper_range)
    if add_nugget:
        if A.shape != B.shape or not np.array_equal(A, B):
            raise ValueError("add_nugget requires A and B to be the same set")
        out[np.diag_indices_from(out)] += spec.sigma_n2
    return out


def build_cov_tapered_sparse(spec, A, taper, add_nugget=False, B=None):
    """Sparse (CSR) tapered covariance.

    Same-set (B=None): symmetric pattern {(i, j): |a_i - a_j| < taper_range}
    including the diagonal.  Cross-set: rows over A, columns over B.
    """
    A = _coords(A)
    family, nucase, sigma2, irx, iry = spec.scalars()
    if B is None:
        tree = cKDTree(A)
        pairs = tree.query_pairs(taper.taper_range, output_type="ndarray")
        n = A.shape[0]
        rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
        bx, by = A[:, 0], A[:, 1]
        shape = (n, n)
    else:
        B = _coords(B)
        tree = cKDTree(B)
        hits = tree.query_ball_point(A, taper.taper_range)
        rows = np.concatenate([np.full(len(h), i, dtype=np.int64)
                               for i, h in enumerate(hits)]) if len(A) else np.empty(0, np.int64)
        cols = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]) \
            if len(A) else np.empty(0, np.int64)
        bx, by = B[:, 0], B[:, 1]
        shape = (A.shape[0], B.shape[0])
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    vals = np.empty(rows.shape[0])
    _kernels.cov_entries_fill(A[:, 0].copy(), A[:, 1].copy(),
                              bx.copy(), by.copy(), rows, cols,
                              family, nucase, sigma2, irx, iry,
                              taper.taper_range, vals)
    M = sparse.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    if add_nugget:
        if B is not None:
            raise ValueError("add_nugget requires a same-set matrix")
        M = M + sparse.identity(shape[0], format="csr") * spec.sigma_n2
    return M
