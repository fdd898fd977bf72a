import numpy as np
import pytest

from gpbench import CovarianceSpec, Dataset


def make_dataset(n, seed=0, spec=None, box=1.0):
    """Random locations in [0, box]^2 with responses drawn from the model."""
    if spec is None:
        spec = CovarianceSpec(sigma2=1.0, rho=0.2 / 2.74, nu=1.5, sigma_n2=0.5)
    rng = np.random.Generator(np.random.Philox(seed))
    S = rng.random((n, 2)) * box
    from gpbench.covkernel import build_cov
    K = build_cov(spec, S, S, add_nugget=True)
    L = np.linalg.cholesky(K + 1e-12 * np.eye(n))
    y = L @ rng.standard_normal(n)
    return Dataset(locations=S, y=y)


@pytest.fixture
def std_spec():
    return CovarianceSpec(sigma2=1.0, rho=0.2 / 2.74, nu=1.5, sigma_n2=0.5)


@pytest.fixture
def ard_spec():
    return CovarianceSpec(family="matern_ard", sigma2=1.0,
                          rho_x=0.05 / 2.74, rho_y=0.2 / 2.74,
                          nu=1.5, sigma_n2=0.5)
