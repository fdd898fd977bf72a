"""Simulated-data generation: unit-square geometry, joint latent GP sampling,
and the dataset CSV format."""

import numpy as np

from .covkernel import CovarianceSpec, build_cov
from .gp_exact import Dataset
from .numerics import chol_dense_jittered

# scenario presets: sigma2=1, sigma_n2=0.5, rho=0.2/2.74, nu=1.5 unless varied
SCENARIOS = {
    "std": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.5,
                rho=0.2 / 2.74, nu=1.5),
    "small_range": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.5,
                        rho=0.05 / 2.74, nu=1.5),
    "large_range": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.5,
                        rho=0.5 / 2.74, nu=1.5),
    "low_nugget": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.1,
                       rho=0.2 / 2.74, nu=1.5),
    "aniso": dict(family="matern_ard", sigma2=1.0, sigma_n2=0.5,
                  rho_x=0.05 / 2.74, rho_y=0.2 / 2.74, nu=1.5),
    "nu05": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.5,
                 rho=0.2 / 3.0, nu=0.5),
    "nu25": dict(family="matern_iso", sigma2=1.0, sigma_n2=0.5,
                 rho=0.2 / 2.65, nu=2.5),
}


def scenario_spec(name):
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return CovarianceSpec(**SCENARIOS[name])


def _sample_lshape(rng, n):
    """Uniform points in [0,1]^2 excluding [0.5,1]^2 (three equal squares)."""
    pts = rng.random((n, 2)) * 0.5
    quad = rng.integers(0, 3, size=n)
    pts[quad == 1, 0] += 0.5
    pts[quad == 2, 1] += 0.5
    return pts


def simulate_dataset(N, scenario="std", seed=0, spec=None):
    """One GP realization over train / interpolation / extrapolation sets.

    Train and interpolation sets: N points each, uniform on the unit square
    excluding [0.5,1]^2; extrapolation set: N points uniform on [0.5,1]^2.
    The latent field is drawn jointly over all 3N locations by Cholesky of
    the joint covariance, then y = f + noise everywhere.  Deterministic per
    seed (Philox counter-based generator).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if spec is None:
        spec = scenario_spec(scenario)
    rng = np.random.Generator(np.random.Philox(seed))
    train = _sample_lshape(rng, N)
    interp = _sample_lshape(rng, N)
    extrap = 0.5 + rng.random((N, 2)) * 0.5
    S = np.vstack([train, interp, extrap])

    if spec.sigma2 == 0:
        f = np.zeros(3 * N)
    else:
        K = build_cov(spec, S, S)
        L = chol_dense_jittered(K, jitter_scale=1e-12).L
        f = L @ rng.standard_normal(3 * N)
    y = f + np.sqrt(spec.sigma_n2) * rng.standard_normal(3 * N)
    split = np.array(["train"] * N + ["test_interp"] * N + ["test_extrap"] * N)
    return Dataset(locations=S, y=y, latent=f, split=split)


CSV_HEADER = "x,y,value,latent,split"


def write_csv(data, path):
    """Dataset CSV: x,y,value,latent,split with 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        lat = data.latent
        for i in range(len(data.y)):
            lv = "" if lat is None else f"{lat[i]:.17g}"
            fh.write(f"{data.locations[i, 0]:.17g},{data.locations[i, 1]:.17g},"
                     f"{data.y[i]:.17g},{lv},{data.split[i]}\n")


def read_csv(path):
    locs, ys, lats, splits = [], [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected dataset header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            x, y, v, lat, split = line.split(",")
            locs.append((float(x), float(y)))
            ys.append(float(v))
            lats.append(float(lat) if lat else np.nan)
            splits.append(split)
    lats = np.asarray(lats)
    return Dataset(locations=np.asarray(locs), y=np.asarray(ys),
                   latent=None if np.isnan(lats).all() else lats,
                   split=np.asarray(splits))
