"""Independent oracles used to validate the analytic implementations.

Every oracle here deliberately takes a different computational route than
the code under test: dense covariance factorization instead of the closed
form, adaptive quadrature instead of incomplete-beta CDFs, finite
differences instead of analytic gradients, and nested quadrature instead
of MCMC for the restricted model.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from hierbench.model import DELTA0_HIGH, DELTA0_LOW


def dense_equicorr_logpdf(x, mu, sigma, rho):
    """Multivariate normal log density via explicit covariance Cholesky."""
    x = np.asarray(x, dtype=float)
    k = x.shape[0]
    cov = sigma**2 * ((1.0 - rho) * np.eye(k) + rho * np.ones((k, k)))
    chol = np.linalg.cholesky(cov)
    resid = np.linalg.solve(chol, x - mu)
    return (
        -0.5 * k * math.log(2.0 * math.pi)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * float(resid @ resid)
    )


def t_logpdf(x, nu):
    return (
        math.lgamma((nu + 1.0) / 2.0)
        - math.lgamma(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
        - (nu + 1.0) / 2.0 * math.log1p(x * x / nu)
    )


def t_pdf(x, nu):
    return math.exp(t_logpdf(x, nu))


def t_cdf_quad(x, nu):
    """Student-t CDF by adaptive quadrature of the density."""
    if x <= 0.0:
        value, _ = integrate.quad(t_pdf, -np.inf, x, args=(nu,), epsabs=1e-13, limit=400)
        return value
    value, _ = integrate.quad(t_pdf, x, np.inf, args=(nu,), epsabs=1e-13, limit=400)
    return 1.0 - value


def region_probs_quad(delta0, sigma0, nu, eps):
    """Win/ROPE/loss mass of t(delta0, sigma0, nu) by quadrature."""
    p_left = t_cdf_quad((-eps - delta0) / sigma0, nu)
    p_right = 1.0 - t_cdf_quad((eps - delta0) / sigma0, nu)
    return p_left, 1.0 - p_left - p_right, p_right


def fd_gradient(fn, theta, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad


def fd_jacobian_logdet(transform, theta, h=1e-6):
    """log|det| of d(transform)/d(theta) by finite differences."""
    theta = np.asarray(theta, dtype=float)
    base = np.asarray(transform(theta), dtype=float)
    n = theta.shape[0]
    jac = np.zeros((base.shape[0], n))
    for i in range(n):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        jac[:, i] = (np.asarray(transform(up)) - np.asarray(transform(dn))) / (2.0 * h)
    sign, logdet = np.linalg.slogdet(jac)
    assert sign > 0
    return logdet


class RestrictedModel:
    """Comparison model with (sigma_d, sigma0, nu) frozen.

    Free parameters: delta0 on (-1, 1) via the symmetric logistic map and
    the dataset effects mu_d directly (no funnel with sigma0 fixed, so the
    centered form is fine here). Used both as a NUTS target (analytic
    gradient) and as the input of the quadrature oracle below.
    """

    def __init__(self, diffs, sigma_d, sigma0, nu, rho):
        self.diffs = [np.asarray(x, dtype=float) for x in diffs]
        self.sigma_d = np.asarray(sigma_d, dtype=float)
        self.sigma0 = float(sigma0)
        self.nu = float(nu)
        self.rho = float(rho)
        self.n_datasets = len(self.diffs)
        self.k = np.array([len(x) for x in self.diffs], dtype=float)
        self.xbar = np.array([float(np.mean(x)) for x in self.diffs])
        self.sum_sq = np.array(
            [float(np.sum((x - m) ** 2)) for x, m in zip(self.diffs, self.xbar)]
        )
        self.a = 1.0 - self.rho
        self.c = 1.0 + (self.k - 1.0) * self.rho
        self.dim = 1 + self.n_datasets

    def logp_grad(self, theta):
        t0 = theta[0]
        mu = theta[1:]
        s = 1.0 / (1.0 + math.exp(-t0)) if t0 >= 0 else math.exp(t0) / (1.0 + math.exp(t0))
        delta0 = DELTA0_LOW + (DELTA0_HIGH - DELTA0_LOW) * s

        # equicorrelated likelihood via the sufficient statistics
        resid = mu - self.xbar
        quad = (self.sum_sq / self.a + self.k * resid**2 / self.c) / self.sigma_d**2
        ll = float(
            np.sum(
                -0.5
                * (
                    self.k * math.log(2.0 * math.pi)
                    + 2.0 * self.k * np.log(self.sigma_d)
                    + (self.k - 1.0) * np.log(self.a)
                    + np.log(self.c)
                    + quad
                )
            )
        )
        ll_dmu = -self.k * resid / (self.c * self.sigma_d**2)

        z = (mu - delta0) / self.sigma0
        w = 1.0 + z * z / self.nu
        lt = float(
            self.n_datasets
            * (
                math.lgamma((self.nu + 1.0) / 2.0)
                - math.lgamma(self.nu / 2.0)
                - 0.5 * math.log(self.nu * math.pi)
                - math.log(self.sigma0)
            )
            - 0.5 * (self.nu + 1.0) * np.sum(np.log1p(z * z / self.nu))
        )
        lt_dmu = -(self.nu + 1.0) * z / (self.nu * w * self.sigma0)
        lt_dd0 = -float(np.sum(lt_dmu))

        log_jac = math.log(DELTA0_HIGH - DELTA0_LOW) + math.log(s) + math.log(1.0 - s)
        value = ll + lt + log_jac
        grad = np.empty(self.dim)
        grad[0] = lt_dd0 * (DELTA0_HIGH - DELTA0_LOW) * s * (1.0 - s) + (1.0 - 2.0 * s)
        grad[1:] = ll_dmu + lt_dmu
        return value, grad

    def delta0_constrained(self, draws_theta0):
        s = 1.0 / (1.0 + np.exp(-np.asarray(draws_theta0)))
        return DELTA0_LOW + (DELTA0_HIGH - DELTA0_LOW) * s

    def _log_marginal(self, delta0, gh_nodes, gh_weights):
        """log p(delta0 | data) up to a constant, mu integrated out."""
        total = 0.0
        for d in range(self.n_datasets):
            scale = self.sigma_d[d] * math.sqrt(self.c[d] / self.k[d])
            mu_nodes = self.xbar[d] + math.sqrt(2.0) * scale * gh_nodes
            z = (mu_nodes - delta0) / self.sigma0
            tvals = np.exp(
                math.lgamma((self.nu + 1.0) / 2.0)
                - math.lgamma(self.nu / 2.0)
                - 0.5 * math.log(self.nu * math.pi)
                - math.log(self.sigma0)
                - (self.nu + 1.0) / 2.0 * np.log1p(z * z / self.nu)
            )
            integral = float(gh_weights @ tvals)
            if integral <= 0.0:
                return -math.inf
            total += math.log(integral)
        return total

    def delta0_moments_quad(self, n_grid=8001, n_gh=120):
        """Posterior mean and SD of delta0 by nested quadrature."""
        gh_nodes, gh_weights = np.polynomial.hermite.hermgauss(n_gh)
        center = float(np.mean(self.xbar))
        spread = float(np.std(self.xbar)) + float(
            np.max(self.sigma_d * np.sqrt(self.c / self.k))
        )
        width = 12.0 * (spread + self.sigma0) + 0.05
        lo = max(DELTA0_LOW + 1e-9, center - width)
        hi = min(DELTA0_HIGH - 1e-9, center + width)
        grid = np.linspace(lo, hi, n_grid)
        logs = np.array([self._log_marginal(g, gh_nodes, gh_weights) for g in grid])
        logs -= np.max(logs)
        dens = np.exp(logs)
        norm = np.trapezoid(dens, grid)
        mean = np.trapezoid(grid * dens, grid) / norm
        second = np.trapezoid(grid**2 * dens, grid) / norm
        return float(mean), float(math.sqrt(max(second - mean**2, 0.0)))
