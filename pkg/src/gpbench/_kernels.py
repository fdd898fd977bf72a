"""Hot numeric kernels (numba-compiled unless GPBENCH_NO_NUMBA=1).

Everything here is written in nopython-compatible style: plain loops over
preallocated numpy arrays, no python objects.  Covariance parameters are
passed as scalars:

    family : 0 = isotropic Matern, 1 = ARD Matern
    nucase : 0 -> nu=0.5, 1 -> nu=1.5, 2 -> nu=2.5
    irx, iry : inverse ranges (for isotropic both equal 1/rho)

For the ARD family the scaled distance is the sum of per-axis scaled
absolute differences (an L1-type combination), not a Euclidean anisotropic
distance.
"""

import math

import numpy as np

from ._accel import jit

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)


@jit
def corr_scaled(u, nucase):
    """Matern correlation as a function of the scaled distance u = sqrt(2 nu) d / rho."""
    if nucase == 0:
        return math.exp(-u)
    elif nucase == 1:
        return (1.0 + u) * math.exp(-u)
    else:
        return (1.0 + u + u * u / 3.0) * math.exp(-u)


@jit
def dcorr_scaled(u, nucase):
    """Derivative of corr_scaled with respect to u."""
    if nucase == 0:
        return -math.exp(-u)
    elif nucase == 1:
        return -u * math.exp(-u)
    else:
        return -(u / 3.0) * (1.0 + u) * math.exp(-u)


@jit
def scaled_dist(dx, dy, family, nucase, irx, iry):
    if nucase == 0:
        c = 1.0
    elif nucase == 1:
        c = SQRT3
    else:
        c = SQRT5
    if family == 0:
        return c * math.hypot(dx, dy) * irx
    return c * (abs(dx) * irx + abs(dy) * iry)


@jit
def cov_value(dx, dy, family, nucase, sigma2, irx, iry):
    u = scaled_dist(dx, dy, family, nucase, irx, iry)
    return sigma2 * corr_scaled(u, nucase)


@jit
def wendland1(d, taper_range):
    """Wendland taper (1 - t)^4_+ (1 + 4 t), t = d / taper_range."""
    t = d / taper_range
    if t >= 1.0:
        return 0.0
    s = 1.0 - t
    s2 = s * s
    return s2 * s2 * (1.0 + 4.0 * t)


@jit
def cov_matrix_fill(ax, ay, bx, by, family, nucase, sigma2, irx, iry, out):
    for i in range(ax.shape[0]):
        for j in range(bx.shape[0]):
            out[i, j] = cov_value(ax[i] - bx[j], ay[i] - by[j],
                                  family, nucase, sigma2, irx, iry)


def cov_matrix_numpy(ax, ay, bx, by, family, nucase, sigma2, irx, iry):
    """Vectorized fallback for dense covariance assembly."""
    dx = ax[:, None] - bx[None, :]
    dy = ay[:, None] - by[None, :]
    c = (1.0, SQRT3, SQRT5)[nucase]
    if family == 0:
        u = c * np.hypot(dx, dy) * irx
    else:
        u = c * (np.abs(dx) * irx + np.abs(dy) * iry)
    if nucase == 0:
        g = np.exp(-u)
    elif nucase == 1:
        g = (1.0 + u) * np.exp(-u)
    else:
        g = (1.0 + u + u * u / 3.0) * np.exp(-u)
    return sigma2 * g


@jit
def cov_entries_fill(ax, ay, bx, by, rows, cols, family, nucase, sigma2,
                     irx, iry, taper_range, out):
    """Covariance values for an explicit (rows, cols) entry list.

    taper_range <= 0 disables tapering.
    """
    for p in range(rows.shape[0]):
        i = rows[p]
        j = cols[p]
        dx = ax[i] - bx[j]
        dy = ay[i] - by[j]
        v = cov_value(dx, dy, family, nucase, sigma2, irx, iry)
        if taper_range > 0.0:
            v *= wendland1(math.hypot(dx, dy), taper_range)
        out[p] = v


# ---------------------------------------------------------------------------
# Sequential constrained nearest-neighbor search (Vecchia structure)
# ---------------------------------------------------------------------------

@jit
def _insert_neighbor(bestd, besti, cnt, m, d2, idx):
    """Keep the m smallest (d2, idx) pairs; returns new count."""
    if cnt < m:
        k = cnt
        bestd[k] = d2
        besti[k] = idx
        cnt += 1
    elif d2 < bestd[m - 1]:
        k = m - 1
        bestd[k] = d2
        besti[k] = idx
    else:
        return cnt
    while k > 0 and bestd[k] < bestd[k - 1]:
        bestd[k], bestd[k - 1] = bestd[k - 1], bestd[k]
        besti[k], besti[k - 1] = besti[k - 1], besti[k]
        k -= 1
    return cnt


@jit
def neighbors_bruteforce(x, y, m):
    """For each point i, the m nearest among points 0..i-1 (-1 padded)."""
    n = x.shape[0]
    nb = np.full((n, m), -1, dtype=np.int64)
    bestd = np.empty(m)
    besti = np.empty(m, dtype=np.int64)
    for i in range(n):
        cnt = 0
        for j in range(i):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            cnt = _insert_neighbor(bestd, besti, cnt, m, dx * dx + dy * dy, j)
        for k in range(cnt):
            nb[i, k] = besti[k]
    return nb


@jit
def neighbors_grid(x, y, m):
    """Grid-bucketed variant of neighbors_bruteforce for large n.

    Points are inserted into a uniform grid as they are processed; the search
    expands square rings of cells until the ring's distance lower bound
    exceeds the current m-th best distance.
    """
    n = x.shape[0]
    nb = np.full((n, m), -1, dtype=np.int64)
    xmin, xmax = x.min(), x.max()
    ymin, ymax = y.min(), y.max()
    ncell = max(1, int(math.sqrt(n / 2.0)))
    wx = max((xmax - xmin) / ncell, 1e-300)
    wy = max((ymax - ymin) / ncell, 1e-300)
    wmin = min(wx, wy)

    # per-cell slots sized by final occupancy
    cell_of = np.empty(n, dtype=np.int64)
    counts = np.zeros(ncell * ncell + 1, dtype=np.int64)
    for i in range(n):
        cx = min(int((x[i] - xmin) / wx), ncell - 1)
        cy = min(int((y[i] - ymin) / wy), ncell - 1)
        cell_of[i] = cx * ncell + cy
        counts[cell_of[i] + 1] += 1
    offsets = np.cumsum(counts)
    fill = offsets[:-1].copy()
    items = np.empty(n, dtype=np.int64)

    bestd = np.empty(m)
    besti = np.empty(m, dtype=np.int64)
    for i in range(n):
        ci = cell_of[i]
        cix = ci // ncell
        ciy = ci % ncell
        cnt = 0
        worst = np.inf
        for ring in range(2 * ncell):
            if cnt == m:
                lo = (ring - 1) * wmin
                if lo > 0.0 and lo * lo > worst:
                    break
            found_cell = False
            for cx in range(cix - ring, cix + ring + 1):
                if cx < 0 or cx >= ncell:
                    continue
                on_x_edge = (cx == cix - ring) or (cx == cix + ring)
                for cy in range(ciy - ring, ciy + ring + 1):
                    if cy < 0 or cy >= ncell:
                        continue
                    if not on_x_edge and cy != ciy - ring and cy != ciy + ring:
                        continue
                    found_cell = True
                    c = cx * ncell + cy
                    for p in range(offsets[c], fill[c]):
                        j = items[p]
                        dx = x[i] - x[j]
                        dy = y[i] - y[j]
                        cnt = _insert_neighbor(bestd, besti, cnt, m,
                                               dx * dx + dy * dy, j)
            if cnt == m:
                worst = bestd[m - 1]
            if not found_cell and ring > 0:
                break
        for k in range(cnt):
            nb[i, k] = besti[k]
        items[fill[ci]] = i
        fill[ci] += 1
    return nb


# ---------------------------------------------------------------------------
# Vecchia conditional likelihood and prediction
# ---------------------------------------------------------------------------

@jit
def _chol_small(C, k):
    """In-place lower Cholesky of the leading k x k block; 0 on success."""
    for j in range(k):
        d = C[j, j]
        for p in range(j):
            d -= C[j, p] * C[j, p]
        if d <= 0.0:
            return j + 1
        d = math.sqrt(d)
        C[j, j] = d
        for i in range(j + 1, k):
            s = C[i, j]
            for p in range(j):
                s -= C[i, p] * C[j, p]
            C[i, j] = s / d
    return 0


@jit
def _forward_small(C, b, k):
    for i in range(k):
        s = b[i]
        for p in range(i):
            s -= C[i, p] * b[p]
        b[i] = s / C[i, i]


@jit
def vecchia_loglik_core(x, y, obs, nbrs, family, nucase, sigma2, irx, iry,
                        sigma_n2):
    """Sum of ordered univariate conditional Gaussian log-densities.

    x, y, obs are in Vecchia ordering; nbrs holds earlier-point indices
    (into the ordered arrays), -1 padded.  Conditioning covariances are
    nugget-augmented (observable process).  Returns (loglik, status) with
    status > 0 on a failed conditional factorization.
    """
    n = x.shape[0]
    m = nbrs.shape[1]
    C = np.empty((m, m))
    c = np.empty(m)
    v = np.empty(m)
    stot = sigma2 + sigma_n2
    ll = 0.0
    for i in range(n):
        k = 0
        while k < m and nbrs[i, k] >= 0:
            k += 1
        if k == 0:
            mean = 0.0
            var = stot
        else:
            for a in range(k):
                ja = nbrs[i, a]
                c[a] = cov_value(x[i] - x[ja], y[i] - y[ja],
                                 family, nucase, sigma2, irx, iry)
                v[a] = obs[ja]
                for b in range(a + 1):
                    jb = nbrs[i, b]
                    cv = cov_value(x[ja] - x[jb], y[ja] - y[jb],
                                   family, nucase, sigma2, irx, iry)
                    if a == b:
                        cv += sigma_n2
                    C[a, b] = cv
                    C[b, a] = cv
            st = _chol_small(C, k)
            if st != 0:
                return 0.0, i + 1
            _forward_small(C, c, k)
            _forward_small(C, v, k)
            mean = 0.0
            var = stot
            for a in range(k):
                mean += c[a] * v[a]
                var -= c[a] * c[a]
            if var <= 0.0:
                return 0.0, i + 1
        r = obs[i] - mean
        ll += -0.5 * math.log(2.0 * math.pi * var) - 0.5 * r * r / var
    return ll, 0


@jit
def vecchia_predict_core(tx, ty, tobs, px, py, nbrs, family, nucase, sigma2,
                         irx, iry, sigma_n2):
    """Univariate conditional Gaussian per test point given its m nearest
    training neighbors (nugget-augmented conditioning set)."""
    np_ = px.shape[0]
    m = nbrs.shape[1]
    C = np.empty((m, m))
    c = np.empty(m)
    v = np.empty(m)
    means = np.empty(np_)
    lvars = np.empty(np_)
    for i in range(np_):
        k = 0
        while k < m and nbrs[i, k] >= 0:
            k += 1
        if k == 0:
            means[i] = 0.0
            lvars[i] = sigma2
            continue
        for a in range(k):
            ja = nbrs[i, a]
            c[a] = cov_value(px[i] - tx[ja], py[i] - ty[ja],
                             family, nucase, sigma2, irx, iry)
            v[a] = tobs[ja]
            for b in range(a + 1):
                jb = nbrs[i, b]
                cv = cov_value(tx[ja] - tx[jb], ty[ja] - ty[jb],
                               family, nucase, sigma2, irx, iry)
                if a == b:
                    cv += sigma_n2
                C[a, b] = cv
                C[b, a] = cv
        st = _chol_small(C, k)
        if st != 0:
            means[i] = np.nan
            lvars[i] = np.nan
            continue
        _forward_small(C, c, k)
        _forward_small(C, v, k)
        mean = 0.0
        var = sigma2
        for a in range(k):
            mean += c[a] * v[a]
            var -= c[a] * c[a]
        means[i] = mean
        lvars[i] = var
    return means, lvars


# ---------------------------------------------------------------------------
# Sparse Cholesky (CSparse-style, L stored by columns)
# ---------------------------------------------------------------------------

@jit
def etree(n, ap, ai):
    """Elimination tree of a lower-triangular CSR pattern (cols <= row)."""
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(ap[k], ap[k + 1]):
            j = ai[p]
            while j != -1 and j < k:
                jnext = ancestor[j]
                ancestor[j] = k
                if jnext == -1:
                    parent[j] = k
                j = jnext
    return parent


@jit
def symbolic_pattern(n, ap, ai, parent):
    """Row patterns of L (ereach per row, topological order) and column counts.

    Returns (rowpat_ptr, rowpat_idx, Lp) where rowpat excludes the diagonal
    and Lp are column pointers of L (diagonal first in each column).
    """
    w = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    s = np.empty(n, dtype=np.int64)
    rowpat_ptr = np.zeros(n + 1, dtype=np.int64)
    cap = max(4 * n, ap[n])
    rowpat_idx = np.empty(cap, dtype=np.int64)
    colcount = np.ones(n, dtype=np.int64)  # diagonal
    nz = 0
    for k in range(n):
        w[k] = k
        top = n
        for p in range(ap[k], ap[k + 1]):
            j = ai[p]
            if j >= k:
                continue
            ln = 0
            while w[j] != k:
                s[ln] = j
                ln += 1
                w[j] = k
                j = parent[j]
            while ln > 0:
                ln -= 1
                top -= 1
                stack[top] = s[ln]
        cnt = n - top
        if nz + cnt > rowpat_idx.shape[0]:
            newcap = max(2 * rowpat_idx.shape[0], nz + cnt)
            tmp = np.empty(newcap, dtype=np.int64)
            tmp[:nz] = rowpat_idx[:nz]
            rowpat_idx = tmp
        for q in range(top, n):
            rowpat_idx[nz] = stack[q]
            colcount[stack[q]] += 1
            nz += 1
        rowpat_ptr[k + 1] = nz
    # sort each row pattern ascending (ereach emits path segments, not sorted)
    for k in range(n):
        lo = rowpat_ptr[k]
        hi = rowpat_ptr[k + 1]
        seg = np.sort(rowpat_idx[lo:hi])
        rowpat_idx[lo:hi] = seg
    Lp = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        Lp[j + 1] = Lp[j] + colcount[j]
    return rowpat_ptr, rowpat_idx[:nz].copy(), Lp


@jit
def chol_numeric(n, ap, ai, ax, rowpat_ptr, rowpat_idx, Lp):
    """Up-looking numeric factorization on a fixed symbolic pattern.

    Returns (Li, Lx, status); status > 0 gives 1 + the failing pivot index.
    """
    nnz = Lp[n]
    Li = np.empty(nnz, dtype=np.int64)
    Lx = np.zeros(nnz)
    nxt = Lp[:n].copy()
    x = np.zeros(n)
    for k in range(n):
        d = 0.0
        for p in range(ap[k], ap[k + 1]):
            j = ai[p]
            if j == k:
                d = ax[p]
            elif j < k:
                x[j] = ax[p]
        for q in range(rowpat_ptr[k], rowpat_ptr[k + 1]):
            j = rowpat_idx[q]
            lkj = x[j] / Lx[Lp[j]]
            x[j] = 0.0
            for p in range(Lp[j] + 1, nxt[j]):
                x[Li[p]] -= Lx[p] * lkj
            d -= lkj * lkj
            Li[nxt[j]] = k
            Lx[nxt[j]] = lkj
            nxt[j] += 1
        if d <= 0.0:
            return Li, Lx, k + 1
        Li[Lp[k]] = k
        Lx[Lp[k]] = math.sqrt(d)
        nxt[k] = Lp[k] + 1
    return Li, Lx, 0


@jit
def sparse_lsolve(n, Lp, Li, Lx, b):
    """Solve L x = b in place (L by columns, diagonal first)."""
    for j in range(n):
        b[j] /= Lx[Lp[j]]
        for p in range(Lp[j] + 1, Lp[j + 1]):
            b[Li[p]] -= Lx[p] * b[j]


@jit
def sparse_ltsolve(n, Lp, Li, Lx, b):
    """Solve L^T x = b in place."""
    for j in range(n - 1, -1, -1):
        for p in range(Lp[j] + 1, Lp[j + 1]):
            b[j] -= Lx[p] * b[Li[p]]
        b[j] /= Lx[Lp[j]]


@jit
def sparse_solve_many(n, Lp, Li, Lx, B):
    """Solve L L^T X = B column-wise; B (n, k) is overwritten."""
    for c in range(B.shape[1]):
        col = B[:, c].copy()
        sparse_lsolve(n, Lp, Li, Lx, col)
        sparse_ltsolve(n, Lp, Li, Lx, col)
        B[:, c] = col
