import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from mgtpc import entropy_model as em
from mgtpc.errors import ContractViolation


class TestScaleTable:
    def test_endpoints(self):
        t = em.scale_table()
        assert t.shape == (64,)
        assert abs(t[0] - em.SIGMA_MIN) < 1e-12
        assert abs(t[-1] - em.SIGMA_MAX) < 1e-9

    def test_geometric_spacing(self):
        t = em.scale_table()
        ratios = t[1:] / t[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)

    def test_monotone(self):
        assert np.all(np.diff(em.scale_table()) > 0)


class TestScaleIndex:
    def test_exact_table_values(self):
        t = em.scale_table()
        np.testing.assert_array_equal(em.scale_index(t), np.arange(64))

    def test_out_of_range_clamps(self):
        assert em.scale_index(np.array([1e-6]))[0] == 0
        assert em.scale_index(np.array([1e9]))[0] == 63

    def test_nearest_in_log_space(self, rng):
        t = em.scale_table()
        logs = np.log(t)
        sigma = rng.uniform(em.SIGMA_MIN, em.SIGMA_MAX, size=200)
        got = em.scale_index(sigma)
        ref = np.argmin(np.abs(np.log(sigma)[:, None] - logs[None, :]), axis=1)
        np.testing.assert_array_equal(got, ref)


class TestQuantize:
    def test_y_equals_mu(self):
        q, y_hat = em.quantize_st(np.array([2.5]), np.array([2.5]))
        assert q[0] == 0 and y_hat[0] == 2.5

    def test_tie_rule(self):
        q, _ = em.quantize_st(np.array([0.5, -1.5]), 0.0)
        assert q[0] == 1 and q[1] == -2

    def test_clip(self):
        q, y_hat = em.quantize_st(np.array([300.0, -300.0]), 0.0)
        assert q[0] == em.SYMBOL_MAX and q[1] == em.SYMBOL_MIN
        assert y_hat[0] == em.SYMBOL_MAX and y_hat[1] == em.SYMBOL_MIN

    def test_residual_bound(self, rng):
        y = (rng.random(500) * 40 - 20).astype(np.float64)
        mu = (rng.random(500) * 40 - 20).astype(np.float64)
        q, y_hat = em.quantize_st(y, mu)
        assert np.all(np.abs(q - (y - mu)) <= 0.5 + 1e-9)
        np.testing.assert_allclose(y_hat, q + mu, atol=1e-6)


class TestGaussianLikelihood:
    def test_unit_sigma_zero(self):
        t = em.scale_table()
        idx = int(np.argmin(np.abs(t - 1.0)))
        sigma = t[idx]
        p = em.gaussian_likelihood(np.array([0]), np.array([idx]))[0]
        expected = norm.cdf(0.5 / sigma) - norm.cdf(-0.5 / sigma)
        assert abs(p - expected) < 1e-9
        # reference value for sigma exactly 1
        ref = norm.cdf(0.5) - norm.cdf(-0.5)
        assert abs(ref - 0.382925) < 1e-5

    def test_matches_quadrature_oracle(self, rng):
        t = em.scale_table()
        for _ in range(20):
            idx = int(rng.integers(0, 64))
            q = int(rng.integers(-10, 11))
            p = em.gaussian_likelihood(np.array([q]), np.array([idx]))[0]
            ref, _ = quad(lambda u: norm.pdf(u, scale=t[idx]), q - 0.5, q + 0.5)
            assert abs(p - max(ref, em.PROB_FLOOR)) < 1e-9

    def test_total_mass_bounded(self):
        qs = np.arange(em.SYMBOL_MIN, em.SYMBOL_MAX + 1)
        for idx in range(64):
            p = em.gaussian_likelihood(qs, np.full(qs.shape, idx))
            assert p.sum() <= 1.0 + 2.0 ** -8

    def test_min_sigma_concentrated(self):
        p = em.gaussian_likelihood(np.array([0]), np.array([0]))[0]
        assert p >= 0.99

    def test_exact_symmetry(self):
        qs = np.arange(1, 64)
        for idx in (0, 20, 63):
            pos = em.gaussian_likelihood(qs, np.full(qs.shape, idx))
            neg = em.gaussian_likelihood(-qs, np.full(qs.shape, idx))
            np.testing.assert_array_equal(pos, neg)

    def test_floor(self):
        p = em.gaussian_likelihood(np.array([60]), np.array([0]))[0]
        assert p == em.PROB_FLOOR


class TestFactorized:
    def test_matches_broadcast_gaussian(self, rng):
        sigma_c = rng.uniform(0.2, 8.0, size=4)
        q = rng.integers(-5, 6, size=(1, 4, 3, 3))
        got = em.factorized_likelihood(q, sigma_c)
        idx = em.scale_index(sigma_c)
        for c in range(4):
            ref = em.gaussian_likelihood(q[:, c], np.full(q[:, c].shape, idx[c]))
            np.testing.assert_array_equal(got[:, c], ref)


class TestRates:
    def test_half_probability(self):
        p = np.full(4096, 0.5)
        assert em.rate_estimate(p, 4096) == 1.0

    def test_certain_symbols(self):
        assert em.rate_estimate(np.ones(100), 50) == 0.0

    def test_bad_pixel_count(self):
        with pytest.raises(ContractViolation):
            em.rate_estimate(np.ones(4), 0)


class TestRdLoss:
    def test_arithmetic(self):
        x = np.zeros((2, 2))
        x_hat = x + np.sqrt(50.0)
        loss = em.rd_loss(x, x_hat, 1.0, 0.1, 0.0483)
        assert abs(loss - 3.515) < 1e-9

    def test_perfect_reconstruction(self):
        x = np.arange(12.0).reshape(3, 4)
        assert em.rd_loss(x, x, 0.7, 0.05, 0.013) == 0.75

    def test_lambda_linearity(self, rng):
        x = rng.random((4, 4))
        x_hat = rng.random((4, 4))
        base = em.rd_loss(x, x_hat, 1.0, 0.1, 0.01)
        double = em.rd_loss(x, x_hat, 1.0, 0.1, 0.02)
        assert abs((double - 1.1) - 2.0 * (base - 1.1)) < 1e-12

    def test_nonpositive_lambda(self):
        with pytest.raises(ContractViolation, match="lambda"):
            em.rd_loss(np.zeros(1), np.zeros(1), 1.0, 0.1, 0.0)


class TestSigmaFromRaw:
    def test_softplus_then_clamp(self):
        raw = np.array([-100.0, 0.0, 1000.0])
        s = em.sigma_from_raw(raw)
        assert s[0] == em.SIGMA_MIN
        assert abs(s[1] - np.log(2.0)) < 1e-12
        assert s[2] == em.SIGMA_MAX
