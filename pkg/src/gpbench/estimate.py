"""Maximum-likelihood covariance-parameter estimation.

One shared optimizer for every method: gradient ascent over log-transformed
parameters with Barzilai-Borwein step initialization and Armijo backtracking.
The exact method supplies analytic gradients; all approximations use central
finite differences in log-space.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .covkernel import CovarianceSpec
from .gp_exact import grad_loglik_exact, loglik_exact
from .lowrank import LowRankConfig, lowrank_loglik
from .taper import taper_loglik
from .vecchia import build_vecchia, vecchia_loglik

MAX_ITER = 1000
REL_TOL = 1e-8
GRAD_TOL = 1e-5
FD_STEP = 1e-4  # in log-space (relative step for the raw parameters)


@dataclass
class FitResult:
    spec_hat: CovarianceSpec
    loglik_at_optimum: float
    iterations: int
    converged: bool
    wall_seconds: float


def default_init(train, nu=1.5, family="matern_iso", quantile=0.3,
                 target_corr=0.5, max_pairs=2000):
    """Reproducible starting spec: half the response variance for each
    variance component, range set so correlation at the 0.3-quantile of
    pairwise distances is 0.5."""
    v = float(np.var(train.y))
    v = max(v, 1e-8)
    S = train.locations
    n = len(S)
    rng = np.random.Generator(np.random.Philox(1234))
    idx = rng.choice(n, size=min(n, max_pairs), replace=False)
    sub = S[idx]
    d = np.hypot(sub[:, 0][:, None] - sub[:, 0][None, :],
                 sub[:, 1][:, None] - sub[:, 1][None, :])
    d = d[np.triu_indices_from(d, k=1)]
    dq = float(np.quantile(d, quantile))
    u_half = _corr_inverse(target_corr, nu)
    c = math.sqrt(2.0 * nu)
    rho = c * dq / u_half
    if family == "matern_iso":
        return CovarianceSpec(family=family, sigma2=v / 2, sigma_n2=v / 2,
                              rho=rho, nu=nu)
    return CovarianceSpec(family=family, sigma2=v / 2, sigma_n2=v / 2,
                          rho_x=rho, rho_y=rho, nu=nu)


def _corr_inverse(target, nu):
    """Scaled distance u with Matern correlation equal to target (bisection)."""
    from ._kernels import corr_scaled
    nucase = (0.5, 1.5, 2.5).index(nu)
    lo, hi = 1e-12, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if corr_scaled(mid, nucase) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def make_objective(method, config, train, init):
    """Callable spec -> loglik for one method, with per-method state built
    once from the init spec (Vecchia structure, inducing points, taper
    symbolic part)."""
    config = dict(config or {})
    if method == "exact":
        return (lambda spec: loglik_exact(spec, train)), True
    if method == "vecchia":
        structure = build_vecchia(train, init, config["m"],
                                  config.get("seed", 0))
        return (lambda spec: vecchia_loglik(structure, spec, train)), False
    if method in ("fitc", "fsa"):
        cfg = LowRankConfig(n_inducing=config["n_inducing"],
                            seed=config.get("seed", 0),
                            taper=config.get("taper"),
                            inducing=config.get("inducing"))
        return (lambda spec: lowrank_loglik(cfg, spec, train)), False
    if method == "taper":
        t = config["taper"]
        state = {"symbolic": None}

        def obj(spec):
            ll, sym = taper_loglik(t, spec, train, reuse=state["symbolic"])
            state["symbolic"] = sym
            return ll

        return obj, False
    raise ValueError(f"unknown method {method!r}")


def fit_params(method, config, train, init=None, fix_nu=True):
    """Maximize the method's loglik over log(sigma_n2, sigma2, rho[, rho_y]).

    nu stays fixed at the init value (fix_nu must be true; estimating nu is
    out of scope).
    """
    if not fix_nu:
        raise ValueError("estimating nu is not supported")
    start = time.perf_counter()
    if init is None:
        init = default_init(train)
    objective, analytic = make_objective(method, config, train, init)

    names = init.param_names()
    x = np.log(init.params())

    def f(xv):
        spec = init.replace_params(np.exp(xv))
        try:
            return objective(spec)
        except Exception:
            return -np.inf

    def grad(xv):
        if analytic:
            spec = init.replace_params(np.exp(xv))
            g = grad_loglik_exact(spec, train)
            return g * np.exp(xv)  # chain rule d/dlog(theta)
        g = np.empty(len(xv))
        for i in range(len(xv)):
            xp = xv.copy()
            xm = xv.copy()
            xp[i] += FD_STEP
            xm[i] -= FD_STEP
            g[i] = (f(xp) - f(xm)) / (2 * FD_STEP)
        return g

    fx = f(x)
    if not np.isfinite(fx):
        raise ValueError("non-finite loglik at the initial parameters")
    g = grad(x)
    step = 1.0 / max(1.0, np.linalg.norm(g))
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        gnorm = np.max(np.abs(g))
        if gnorm < GRAD_TOL:
            converged = True
            break
        t = step
        accepted = False
        for _ in range(50):
            xn = x + t * g
            fn = f(xn)
            if np.isfinite(fn) and fn >= fx + 1e-4 * t * (g @ g):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        gn = grad(xn)
        s = xn - x
        dg = gn - g  # note: ascent, curvature pair is (s, -dg)
        sy = -(s @ dg)
        step = (s @ s) / sy if sy > 1e-16 else min(2 * t, 1.0)
        step = float(np.clip(step, 1e-10, 1e3))
        rel_change = abs(fn - fx) / max(1.0, abs(fx))
        x, fx, g = xn, fn, gn
        if rel_change < REL_TOL and np.max(np.abs(g)) < GRAD_TOL:
            converged = True
            break

    spec_hat = init.replace_params(np.exp(x))
    return FitResult(spec_hat=spec_hat, loglik_at_optimum=fx, iterations=it,
                     converged=converged,
                     wall_seconds=time.perf_counter() - start)
