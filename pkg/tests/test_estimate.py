import numpy as np
import pytest

from gpbench import CovarianceSpec, TaperSpec, default_init, fit_params, \
    loglik_exact
from gpbench.estimate import make_objective

from conftest import make_dataset


class TestDefaultInit:
    def test_variance_split_and_reproducibility(self):
        data = make_dataset(200, seed=0)
        init = default_init(data)
        v = np.var(data.y)
        assert init.sigma2 == pytest.approx(v / 2)
        assert init.sigma_n2 == pytest.approx(v / 2)
        assert init.rho > 0
        again = default_init(data)
        assert init == again

    def test_range_calibration(self):
        # correlation at the 0.3-quantile distance should be ~0.5
        from gpbench.covkernel import matern
        data = make_dataset(300, seed=1)
        init = default_init(data)
        S = data.locations
        d = np.hypot(S[:, 0][:, None] - S[:, 0][None, :],
                     S[:, 1][:, None] - S[:, 1][None, :])
        dq = np.quantile(d[np.triu_indices_from(d, k=1)], 0.3)
        unit = CovarianceSpec(sigma2=1.0, rho=init.rho, nu=init.nu)
        assert matern(unit, dq) == pytest.approx(0.5, abs=0.02)

    def test_ard_family(self):
        data = make_dataset(100, seed=2)
        init = default_init(data, family="matern_ard")
        assert init.family == "matern_ard"
        assert init.rho_x == init.rho_y > 0


class TestFitParams:
    def test_ascent_from_truth(self, std_spec):
        data = make_dataset(150, seed=3, spec=std_spec)
        res = fit_params("exact", {}, data, init=std_spec)
        assert res.loglik_at_optimum >= loglik_exact(std_spec, data) - 1e-10

    def test_optimum_reevaluates_identically(self, std_spec):
        data = make_dataset(120, seed=4)
        res = fit_params("exact", {}, data)
        assert res.loglik_at_optimum == pytest.approx(
            loglik_exact(res.spec_hat, data), rel=1e-10)

    def test_positivity_and_convergence_flag(self):
        data = make_dataset(150, seed=5)
        res = fit_params("exact", {}, data)
        assert res.converged
        assert (res.spec_hat.params() > 0).all()
        assert res.iterations <= 1000

    def test_restart_determinism(self):
        data = make_dataset(120, seed=6)
        a = fit_params("vecchia", {"m": 10, "seed": 2}, data)
        b = fit_params("vecchia", {"m": 10, "seed": 2}, data)
        np.testing.assert_array_equal(a.spec_hat.params(), b.spec_hat.params())
        assert a.loglik_at_optimum == b.loglik_at_optimum
        assert a.iterations == b.iterations

    @pytest.mark.parametrize("method,config", [
        ("vecchia", {"m": 10, "seed": 0}),
        ("fitc", {"n_inducing": 20, "seed": 0}),
        ("fsa", {"n_inducing": 15, "seed": 0, "taper": TaperSpec(0.2)}),
        ("taper", {"taper": TaperSpec(0.25)}),
    ])
    def test_each_method_fits(self, method, config):
        data = make_dataset(120, seed=7)
        init = default_init(data)
        obj, analytic = make_objective(method, config, data, init)
        assert not analytic
        res = fit_params(method, config, data, init=init)
        assert res.loglik_at_optimum >= obj(init) - 1e-10
        assert (res.spec_hat.params() > 0).all()

    def test_nu_must_stay_fixed(self):
        data = make_dataset(30, seed=8)
        with pytest.raises(ValueError):
            fit_params("exact", {}, data, fix_nu=False)

    def test_nonfinite_loglik_at_init_rejected(self):
        from gpbench import Dataset
        data = make_dataset(30, seed=9)
        bad = Dataset(locations=data.locations,
                      y=np.where(np.arange(30) == 0, np.nan, data.y))
        with pytest.raises(ValueError, match="non-finite"):
            fit_params("exact", {}, bad)
