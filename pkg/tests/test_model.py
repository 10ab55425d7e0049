import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierbench import _kernels
from hierbench.errors import NonFiniteInput
from hierbench.model import (
    ModelConfig,
    ParameterVector,
    from_unconstrained,
    gamma_rate_logpdf,
    log_likelihood_dataset,
    log_population,
    log_posterior_and_grad_packed,
    log_prior,
    pack_model,
    to_unconstrained,
)
from hierbench.synthetic import make_pair_data

from oracles import dense_equicorr_logpdf, fd_gradient, fd_jacobian_logdet


@pytest.fixture(scope="module")
def pair9():
    return make_pair_data(effect=0.02, noise_sd=0.01, n_datasets=9, n_folds=5, seed=42)


@pytest.fixture(scope="module")
def packed9(pair9):
    return pack_model(pair9, ModelConfig())


def random_params(pair, rng):
    d = pair.n_datasets
    return ParameterVector(
        delta0=float(rng.uniform(-0.9, 0.9)),
        sigma0=float(rng.uniform(0.05, 0.95)) * pair.s0_bar,
        nu=float(rng.uniform(1.5, 80.0)),
        alpha=float(rng.uniform(1.05, 1.95)),
        beta=float(rng.uniform(0.015, 0.095)),
        mu=rng.normal(0.0, 0.05, d),
        sigma_d=np.asarray(pair.sd_bar) * rng.uniform(0.05, 0.95, d),
    )


class TestModelConfig:
    def test_default_rho_is_one_over_k(self):
        cfg = ModelConfig()
        assert cfg.rho_for_folds(5) == pytest.approx(0.2)

    def test_alternative_rule(self):
        cfg = ModelConfig(rho_rule="1/(K-1)")
        assert cfg.rho_for_folds(5) == pytest.approx(0.25)

    def test_explicit_rho_overrides(self):
        cfg = ModelConfig(rho=0.3)
        assert cfg.rho_for_folds(5) == 0.3

    def test_default_epsilon(self):
        assert ModelConfig().epsilon == 0.01

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            ModelConfig(rho=1.0)
        with pytest.raises(ValueError):
            ModelConfig(epsilon=0.0)
        with pytest.raises(ValueError):
            ModelConfig(rho_rule="2/K")


class TestLikelihood:
    def test_standard_normal_at_mode(self):
        value = log_likelihood_dataset(np.array([0.0]), 0.0, 1.0, 0.0)
        assert value == pytest.approx(-0.9189385332046727, abs=1e-14)

    def test_k5_against_dense_oracle(self):
        x = np.array([0.012, 0.009, 0.015, 0.007, 0.011])
        closed = log_likelihood_dataset(x, 0.01, 0.05, 0.2)
        dense = dense_equicorr_logpdf(x, 0.01, 0.05, 0.2)
        assert closed == pytest.approx(dense, abs=1e-10)

    def test_rho_zero_equals_independent_sum(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0.0, 0.1, 7)
        total = log_likelihood_dataset(x, 0.02, 0.1, 0.0)
        indep = sum(
            -0.5 * math.log(2 * math.pi) - math.log(0.1) - (xi - 0.02) ** 2 / (2 * 0.01)
            for xi in x
        )
        assert total == pytest.approx(indep, abs=1e-12)

    def test_oracle_equivalence_random_cases(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(300):
            k = int(rng.integers(2, 11))
            rho = float(rng.uniform(0.0, 0.5))
            sigma = float(rng.uniform(1e-3, 1.0))
            mu = float(rng.normal(0.0, 0.3))
            x = rng.normal(mu, sigma, k)
            diff = abs(
                log_likelihood_dataset(x, mu, sigma, rho)
                - dense_equicorr_logpdf(x, mu, sigma, rho)
            )
            worst = max(worst, diff)
        assert worst <= 1e-10

    def test_nonfinite_input_raises(self):
        with pytest.raises(NonFiniteInput):
            log_likelihood_dataset(np.array([np.nan]), 0.0, 1.0, 0.0)


class TestPopulation:
    def test_cauchy_mode(self):
        assert log_population(0.0, 0.0, 1.0, 1.0000001) == pytest.approx(
            math.log(1.0 / math.pi), abs=1e-6
        )

    def test_frozen_high_precision_value(self):
        # mpmath, 40 digits: mu=2, delta0=0, sigma0=1, nu=5
        assert log_population(2.0, 0.0, 1.0, 5.0) == pytest.approx(
            -2.7319795837610811492, abs=1e-13
        )

    @given(c=st.floats(min_value=1e-6, max_value=5.0), nu=st.floats(min_value=1.1, max_value=200.0))
    @settings(max_examples=50, deadline=None)
    def test_symmetry_exact_in_z(self, c, nu):
        # even function of z = (mu - delta0)/sigma0; +-c around the center
        # hits bit-identical |z|
        assert log_population(-c, 0.0, 0.7, nu) == log_population(c, 0.0, 0.7, nu)

    def test_symmetry_off_center(self):
        for c in (0.013, 0.4, 2.0):
            left = log_population(0.3 - c, 0.3, 0.7, 5.0)
            right = log_population(0.3 + c, 0.3, 0.7, 5.0)
            assert left == pytest.approx(right, rel=1e-14)


class TestPrior:
    def test_out_of_support_is_minus_inf(self, pair9):
        p = random_params(pair9, np.random.default_rng(1))
        bad = ParameterVector(
            delta0=1.5, sigma0=p.sigma0, nu=p.nu, alpha=p.alpha, beta=p.beta,
            mu=p.mu, sigma_d=p.sigma_d,
        )
        assert log_prior(bad, pair9, ModelConfig()) == -math.inf

    def test_gamma_rate_frozen_value(self):
        # scipy.stats.gamma.logpdf(30, a=1.5, scale=1/0.05)
        assert gamma_rate_logpdf(30.0, 1.5, 0.05) == pytest.approx(
            -4.172217481864664, abs=1e-12
        )

    def test_midpoint_value_decomposes(self, pair9):
        d = pair9.n_datasets
        p = ParameterVector(
            delta0=0.0,
            sigma0=pair9.s0_bar / 2.0,
            nu=31.0,
            alpha=1.5,
            beta=0.055,
            mu=np.zeros(d),
            sigma_d=np.asarray(pair9.sd_bar) / 2.0,
        )
        value = log_prior(p, pair9, ModelConfig())
        expected = (
            -math.log(2.0)
            - math.log(pair9.s0_bar)
            - math.log(1.0)
            - math.log(0.09)
            - float(np.sum(np.log(pair9.sd_bar)))
            + gamma_rate_logpdf(30.0, 1.5, 0.055)
            + sum(log_population(0.0, 0.0, pair9.s0_bar / 2.0, 31.0) for _ in range(d))
        )
        assert value == pytest.approx(expected, rel=1e-12)

    def test_in_support_is_finite(self, pair9):
        rng = np.random.default_rng(5)
        for _ in range(20):
            assert math.isfinite(log_prior(random_params(pair9, rng), pair9, ModelConfig()))


class TestTransforms:
    def test_round_trip_random_points(self, pair9):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(1000):
            p = random_params(pair9, rng)
            theta = to_unconstrained(p, pair9)
            q, _ = from_unconstrained(theta, pair9)
            worst = max(
                worst,
                abs(p.delta0 - q.delta0),
                abs(p.sigma0 - q.sigma0) / pair9.s0_bar,
                abs(p.nu - q.nu) / p.nu,
                abs(p.alpha - q.alpha),
                abs(p.beta - q.beta),
                float(np.max(np.abs(p.mu - q.mu))),
                float(np.max(np.abs(p.sigma_d - q.sigma_d) / np.asarray(pair9.sd_bar))),
            )
        assert worst <= 1e-12

    def test_delta0_midpoint_maps_to_zero(self, pair9):
        p = random_params(pair9, np.random.default_rng(2))
        p = ParameterVector(
            delta0=0.0, sigma0=p.sigma0, nu=p.nu, alpha=p.alpha, beta=p.beta,
            mu=p.mu, sigma_d=p.sigma_d,
        )
        theta = to_unconstrained(p, pair9)
        assert theta[0] == pytest.approx(0.0, abs=1e-15)

    def test_log_jacobian_matches_fd(self, pair9):
        rng = np.random.default_rng(3)
        for _ in range(5):
            theta = rng.normal(0.0, 0.8, 5 + 2 * pair9.n_datasets)

            def constrain(t):
                p, _ = from_unconstrained(t, pair9)
                return p.as_array()

            _, log_jac = from_unconstrained(theta, pair9)
            fd = fd_jacobian_logdet(constrain, theta)
            assert log_jac == pytest.approx(fd, abs=1e-6, rel=1e-6)

    def test_nonfinite_rejected(self, pair9):
        with pytest.raises(NonFiniteInput):
            from_unconstrained(np.full(5 + 2 * pair9.n_datasets, np.nan), pair9)


class TestLogPosterior:
    def test_gradient_against_finite_differences(self, pair9, packed9):
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(30):
            theta = rng.normal(0.0, 1.0, packed9.dim)
            value, grad = log_posterior_and_grad_packed(theta, packed9)
            assert math.isfinite(value)
            fd = fd_gradient(lambda t: log_posterior_and_grad_packed(t, packed9)[0], theta)
            denom = np.maximum(np.abs(grad), 1.0)
            worst = max(worst, float(np.max(np.abs(fd - grad) / denom)))
        assert worst <= 1e-5

    def test_zero_datasets_reduces_to_prior(self):
        from hierbench.model import PackedModel

        empty = np.zeros(0)
        packed = PackedModel(
            sum_x=empty, sum_x2=empty, n_folds=empty, rho=empty, a=empty,
            c=empty, logdet_const=empty, sd_bar=empty, s0_bar=1.0,
            uniform_const=-math.log(2.0) - math.log(0.09),
            parameter_names=("delta0", "sigma0", "nu", "alpha", "beta"),
        )
        theta = np.array([0.1, -0.2, 3.0, 0.3, -0.1])
        value, grad = log_posterior_and_grad_packed(theta, packed)
        assert math.isfinite(value)
        assert grad.shape == (5,)
        # delta0 feels only its own Jacobian term when no data exist
        s = 1.0 / (1.0 + math.exp(-0.1))
        assert grad[0] == pytest.approx(1.0 - 2.0 * s, abs=1e-14)

    def test_sign_antisymmetry(self, pair9):
        import dataclasses

        neg_datasets = tuple(
            dataclasses.replace(ds, diffs=-ds.diffs) for ds in pair9.datasets
        )
        neg_pair = dataclasses.replace(pair9, datasets=neg_datasets)
        packed = pack_model(pair9, ModelConfig())
        packed_neg = pack_model(neg_pair, ModelConfig())
        rng = np.random.default_rng(23)
        for _ in range(20):
            theta = rng.normal(0.0, 1.0, packed.dim)
            theta_neg = theta.copy()
            theta_neg[0] = -theta[0]  # delta0 -> -delta0 (symmetric logistic)
            d = pair9.n_datasets
            theta_neg[5 : 5 + d] = -theta[5 : 5 + d]  # eta -> -eta
            v1, _ = log_posterior_and_grad_packed(theta, packed)
            v2, _ = log_posterior_and_grad_packed(theta_neg, packed_neg)
            assert v1 == pytest.approx(v2, rel=1e-12)

    def test_dataset_permutation_invariance(self, pair9):
        import dataclasses

        perm = np.array([3, 1, 4, 0, 2, 8, 6, 7, 5])
        permuted = tuple(pair9.datasets[i] for i in perm)
        pair_perm = dataclasses.replace(
            pair9,
            datasets=permuted,
            s_d=np.asarray(pair9.s_d)[perm],
            sd_bar=np.asarray(pair9.sd_bar)[perm],
        )
        packed = pack_model(pair9, ModelConfig())
        packed_perm = pack_model(pair_perm, ModelConfig())
        rng = np.random.default_rng(29)
        theta = rng.normal(0.0, 1.0, packed.dim)
        d = pair9.n_datasets
        theta_perm = theta.copy()
        theta_perm[5 : 5 + d] = theta[5 : 5 + d][perm]
        theta_perm[5 + d :] = theta[5 + d :][perm]
        v1, _ = log_posterior_and_grad_packed(theta, packed)
        v2, _ = log_posterior_and_grad_packed(theta_perm, packed_perm)
        assert v1 == pytest.approx(v2, rel=1e-12)

    def test_nonfinite_theta_returns_minus_inf(self, packed9):
        theta = np.zeros(packed9.dim)
        theta[2] = np.inf
        value, grad = log_posterior_and_grad_packed(theta, packed9)
        assert value == -math.inf
        assert np.all(grad == 0.0)


class TestKernelEquivalence:
    def test_jit_matches_reference(self, pair9, packed9):
        posterior = _kernels.make_jit_posterior(packed9)
        rng = np.random.default_rng(31)
        for _ in range(300):
            theta = rng.normal(0.0, 2.0, packed9.dim)
            v_ref, g_ref = log_posterior_and_grad_packed(theta, packed9)
            v_jit, g_jit = posterior(theta)
            if not math.isfinite(v_ref):
                assert not math.isfinite(v_jit)
                continue
            assert v_jit == pytest.approx(v_ref, rel=1e-12, abs=1e-10)
            np.testing.assert_allclose(
                g_jit, g_ref, rtol=1e-9, atol=1e-9
            )

    def test_jit_leaf_kernel_matches_python_leaf(self, packed9):
        from hierbench.sampler import _default_leaf_kernel

        posterior = _kernels.make_jit_posterior(packed9)
        py_leaf = _default_leaf_kernel(posterior)
        jit_leaf = _kernels.make_jit_leaf_kernel(packed9)
        rng = np.random.default_rng(37)
        for _ in range(50):
            theta = rng.normal(0.0, 0.5, packed9.dim)
            r = rng.normal(0.0, 1.0, packed9.dim)
            _, grad = posterior(theta)
            mass_inv = np.exp(rng.normal(0.0, 0.3, packed9.dim))
            out_py = py_leaf(theta, r, grad, 0.1, mass_inv, 12.0)
            out_jit = jit_leaf(theta, r, grad, 0.1, mass_inv, 12.0)
            for a, b in zip(out_py, out_jit):
                np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_digamma_matches_scipy(self):
        from scipy.special import digamma

        xs = np.concatenate(
            (np.linspace(0.5, 6.0, 40), np.linspace(6.0, 500.0, 40), [1e4, 1e6])
        )
        for x in xs:
            assert _kernels._digamma(float(x)) == pytest.approx(
                float(digamma(x)), rel=1e-13, abs=1e-13
            )
