import numpy as np
import pytest

from gpbench import (CovarianceSpec, LowRankConfig, TaperSpec, loglik_exact,
                     lowrank_loglik, lowrank_predict, predict_exact)
from gpbench.lowrank import _Prepared, _dense_sigma, lowrank_loglik_dense

from conftest import make_dataset

FULL_SUPPORT = TaperSpec(1e6)


class TestExactLimits:
    def test_fitc_inducing_equal_training(self, std_spec):
        data = make_dataset(150, seed=0)
        cfg = LowRankConfig(n_inducing=150, seed=0, inducing=data.locations)
        assert lowrank_loglik(cfg, std_spec, data) == pytest.approx(
            loglik_exact(std_spec, data), rel=1e-8)
        rng = np.random.Generator(np.random.Philox(1))
        Sstar = rng.random((40, 2))
        pred = lowrank_predict(cfg, std_spec, data, Sstar)
        ex = predict_exact(std_spec, data, Sstar)
        np.testing.assert_allclose(pred.means, ex.means, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(pred.variances, ex.variances, rtol=1e-8)

    def test_fsa_full_support_taper(self, std_spec):
        data = make_dataset(150, seed=2)
        cfg = LowRankConfig(n_inducing=10, seed=0, taper=FULL_SUPPORT)
        assert lowrank_loglik(cfg, std_spec, data) == pytest.approx(
            loglik_exact(std_spec, data), rel=1e-8)
        rng = np.random.Generator(np.random.Philox(3))
        Sstar = rng.random((30, 2))
        pred = lowrank_predict(cfg, std_spec, data, Sstar)
        ex = predict_exact(std_spec, data, Sstar)
        np.testing.assert_allclose(pred.means, ex.means, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(pred.variances, ex.variances, rtol=1e-8)

    def test_fsa_tiny_taper_collapses_to_fitc(self, std_spec):
        data = make_dataset(200, seed=4)
        fitc = LowRankConfig(n_inducing=25, seed=5)
        fsa = LowRankConfig(n_inducing=25, seed=5, taper=TaperSpec(1e-9))
        assert lowrank_loglik(fsa, std_spec, data) == pytest.approx(
            lowrank_loglik(fitc, std_spec, data), rel=1e-8)


class TestWoodburyOracle:
    @pytest.mark.parametrize("taper", [None, TaperSpec(0.2)],
                             ids=["fitc", "fsa"])
    def test_woodbury_equals_dense(self, std_spec, taper):
        data = make_dataset(250, seed=6)
        cfg = LowRankConfig(n_inducing=30, seed=7, taper=taper)
        assert lowrank_loglik(cfg, std_spec, data) == pytest.approx(
            lowrank_loglik_dense(cfg, std_spec, data), rel=1e-8)

    def test_fitc_training_marginals_exact(self, std_spec):
        # diag(Sigma_tilde) = sigma2 + sigma_n2 by construction
        data = make_dataset(120, seed=8)
        prep = _Prepared(LowRankConfig(n_inducing=15, seed=1), std_spec, data)
        Sig = _dense_sigma(prep, std_spec, data)
        np.testing.assert_allclose(np.diag(Sig),
                                   std_spec.sigma2 + std_spec.sigma_n2,
                                   rtol=1e-10)


class TestPredict:
    def test_variances_nonnegative(self, std_spec):
        data = make_dataset(200, seed=9)
        rng = np.random.Generator(np.random.Philox(10))
        Sstar = rng.random((60, 2))
        for taper in (None, TaperSpec(0.15)):
            cfg = LowRankConfig(n_inducing=20, seed=2, taper=taper)
            pred = lowrank_predict(cfg, std_spec, data, Sstar)
            assert (pred.variances >= 0).all()

    def test_inducing_training_point_vanishing_nugget(self):
        # with sigma_n2 exactly 0 this configuration is numerically singular
        # (D collapses to the inducing jitter); a vanishing nugget recovers
        # the intended limit: variance ~ 0 and mean ~ y at the shared point
        spec = CovarianceSpec(sigma2=1.0, rho=0.2, nu=1.5, sigma_n2=1e-6)
        data = make_dataset(30, seed=11, spec=spec)
        cfg = LowRankConfig(n_inducing=30, seed=0, inducing=data.locations)
        pred = lowrank_predict(cfg, spec, data, data.locations[:3])
        np.testing.assert_allclose(pred.variances, 0.0, atol=1e-5)
        np.testing.assert_allclose(pred.means, data.y[:3], atol=1e-4)

    def test_accuracy_improves_with_inducing_points(self, std_spec):
        data = make_dataset(400, seed=12)
        rng = np.random.Generator(np.random.Philox(13))
        Sstar = rng.random((100, 2))
        ex = predict_exact(std_spec, data, Sstar)
        rmse = {}
        for m in (16, 64):
            cfg = LowRankConfig(n_inducing=m, seed=3)
            p = lowrank_predict(cfg, std_spec, data, Sstar)
            rmse[m] = float(np.sqrt(np.mean((p.means - ex.means) ** 2)))
        assert rmse[64] < rmse[16]

    def test_too_many_inducing_points(self, std_spec):
        data = make_dataset(10, seed=14)
        with pytest.raises(ValueError):
            lowrank_loglik(LowRankConfig(n_inducing=11), std_spec, data)
