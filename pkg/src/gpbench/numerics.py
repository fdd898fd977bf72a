"""Dense and sparse linear algebra plus kmeans++ site selection.

The sparse Cholesky is a CSparse-style up-looking factorization with a
fill-reducing permutation computed once (symbolic part) and reused across
numeric refactorizations with the same pattern.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.csgraph import reverse_cuthill_mckee

from . import _kernels

log = logging.getLogger(__name__)

# incremented on every symbolic analysis; tests assert reuse skips it
SYMBOLIC_ANALYSES = 0


class FactorizationError(RuntimeError):
    def __init__(self, pivot):
        super().__init__(f"factorization failed at pivot {pivot}")
        self.pivot = pivot


@dataclass(frozen=True)
class DenseCholesky:
    L: np.ndarray
    n: int

    def logdet(self):
        return 2.0 * np.sum(np.log(np.diag(self.L)))

    def solve(self, b):
        return linalg.cho_solve((self.L, True), b)


def chol_dense(M):
    """Lower Cholesky factor of a symmetric PD matrix."""
    M = np.asarray(M, dtype=float)
    try:
        L = linalg.cholesky(M, lower=True)
    except linalg.LinAlgError as e:
        # scipy reports the 1-based order of the failing leading minor
        pivot = int(str(e).split("-th")[0].split()[-1]) - 1 if "-th" in str(e) else -1
        raise FactorizationError(pivot) from e
    return DenseCholesky(L=L, n=M.shape[0])


def chol_dense_jittered(M, jitter_scale=1e-10):
    """chol_dense with one retry adding jitter_scale * trace/n to the diagonal."""
    try:
        return chol_dense(M)
    except FactorizationError:
        n = M.shape[0]
        jitter = jitter_scale * np.trace(M) / n
        log.warning("Cholesky failed; retrying with jitter %.3e", jitter)
        return chol_dense(M + jitter * np.eye(n))


@dataclass(frozen=True)
class SparseSymbolic:
    """Symbolic part: permutation plus elimination pattern of L."""
    n: int
    perm: np.ndarray          # fill-reducing permutation (new -> old)
    pattern_key: tuple        # (indptr bytes, indices bytes) of the input CSR
    ap: np.ndarray            # permuted lower-triangle CSR pointers
    ai: np.ndarray
    a_order: np.ndarray       # maps permuted lower-tri slots to input data slots
    rowpat_ptr: np.ndarray
    rowpat_idx: np.ndarray
    Lp: np.ndarray


@dataclass(frozen=True)
class SparseCholesky:
    symbolic: SparseSymbolic
    Li: np.ndarray
    Lx: np.ndarray

    def logdet(self):
        s = self.symbolic
        return 2.0 * np.sum(np.log(self.Lx[s.Lp[:-1]]))

    def solve(self, b):
        s = self.symbolic
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            x = b[s.perm].copy()
            _kernels.sparse_lsolve(s.n, s.Lp, self.Li, self.Lx, x)
            _kernels.sparse_ltsolve(s.n, s.Lp, self.Li, self.Lx, x)
            out = np.empty_like(x)
            out[s.perm] = x
            return out
        X = np.ascontiguousarray(b[s.perm, :], dtype=float)
        _kernels.sparse_solve_many(s.n, s.Lp, self.Li, self.Lx, X)
        out = np.empty_like(X)
        out[s.perm, :] = X
        return out


def _pattern_key(M):
    return (M.indptr.tobytes(), M.indices.tobytes())


def _analyze(M):
    """Symbolic analysis: RCM permutation, etree, row patterns of L."""
    global SYMBOLIC_ANALYSES
    SYMBOLIC_ANALYSES += 1
    n = M.shape[0]
    perm = np.asarray(reverse_cuthill_mckee(M, symmetric_mode=True), dtype=np.int64)
    # permuted lower triangle, tracking where each entry's value lives in M.data
    coo = M.tocoo()
    iperm = np.empty(n, dtype=np.int64)
    iperm[perm] = np.arange(n)
    r = iperm[coo.row]
    c = iperm[coo.col]
    keep = c <= r
    r, c = r[keep], c[keep]
    src = np.flatnonzero(keep)
    order = np.lexsort((c, r))
    r, c, src = r[order], c[order], src[order]
    ap = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ap, r + 1, 1)
    ap = np.cumsum(ap)
    parent = _kernels.etree(n, ap, c)
    rowpat_ptr, rowpat_idx, Lp = _kernels.symbolic_pattern(n, ap, c, parent)
    return SparseSymbolic(n=n, perm=perm, pattern_key=_pattern_key(M),
                          ap=ap, ai=c, a_order=src,
                          rowpat_ptr=rowpat_ptr, rowpat_idx=rowpat_idx, Lp=Lp)


def chol_sparse(M, reuse=None, jitter_scale=1e-10):
    """Sparse Cholesky of a symmetric PD CSR matrix.

    When ``reuse`` (a SparseSymbolic from a previous factorization with the
    same pattern) is given, only the numeric phase runs.
    """
    M = sparse.csr_matrix(M)
    M.sort_indices()
    if reuse is not None:
        if reuse.pattern_key != _pattern_key(M):
            raise ValueError("symbolic part does not match this pattern")
        sym = reuse
    else:
        sym = _analyze(M)
    ax = np.ascontiguousarray(M.data[sym.a_order], dtype=float)
    Li, Lx, status = _kernels.chol_numeric(sym.n, sym.ap, sym.ai, ax,
                                           sym.rowpat_ptr, sym.rowpat_idx, sym.Lp)
    if status != 0:
        jitter = jitter_scale * M.diagonal().sum() / sym.n
        log.warning("sparse Cholesky failed at pivot %d; retrying with jitter %.3e",
                    status - 1, jitter)
        diag_slots = np.flatnonzero(sym.ai == np.repeat(
            np.arange(sym.n), np.diff(sym.ap)))
        ax2 = ax.copy()
        ax2[diag_slots] += jitter
        Li, Lx, status = _kernels.chol_numeric(sym.n, sym.ap, sym.ai, ax2,
                                               sym.rowpat_ptr, sym.rowpat_idx,
                                               sym.Lp)
        if status != 0:
            raise FactorizationError(status - 1)
    return SparseCholesky(symbolic=sym, Li=Li, Lx=Lx)


def kmeanspp(points, k, seed):
    """kmeans++ seeding followed by Lloyd iterations to an assignment fixpoint.

    Deterministic given seed (Philox counter-based generator).  Returns the
    final (k, 2) centroids.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")
    rng = np.random.Generator(np.random.Philox(seed))

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[i] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))

    labels = np.full(n, -1)
    for _ in range(100):
        dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2) \
            if n * k <= 4_000_000 else None
        if dist is None:
            # chunk over points to bound memory
            new_labels = np.empty(n, dtype=np.int64)
            for lo in range(0, n, 4096):
                hi = min(lo + 4096, n)
                dd = np.sum((points[lo:hi, None, :] - centers[None, :, :]) ** 2,
                            axis=2)
                new_labels[lo:hi] = np.argmin(dd, axis=1)
        else:
            new_labels = np.argmin(dist, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = points[mask].mean(axis=0)
    return centers
