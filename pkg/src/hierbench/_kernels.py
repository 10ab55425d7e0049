"""Numba-compiled hot path for the unconstrained log posterior.

Mirrors :func:`hierbench.model.log_posterior_and_grad_packed` term by term;
the equivalence is asserted by the test suite at tight tolerance. The only
formula that differs from the numpy reference is ``digamma``, which numba
cannot take from scipy and is therefore evaluated here with the standard
recurrence-plus-asymptotic-series scheme (absolute error below 1e-13 on
the arguments this model produces).
"""

from __future__ import annotations

import math

import numba
import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)

DELTA0_LOW, DELTA0_HIGH = -1.0, 1.0
ALPHA_LOW, ALPHA_HIGH = 1.0, 2.0
BETA_LOW, BETA_HIGH = 0.01, 0.10


@numba.njit(cache=True, fastmath=False)
def _digamma(x):
    # Recurrence up to x >= 6, then the Bernoulli asymptotic series.
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = (
        math.log(x)
        - 0.5 * inv
        - inv2
        * (
            1.0 / 12.0
            - inv2
            * (
                1.0 / 120.0
                - inv2
                * (
                    1.0 / 252.0
                    - inv2
                    * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0)))
                )
            )
        )
    )
    return acc + series


@numba.njit(cache=True, fastmath=False)
def _sigmoid_s(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@numba.njit(cache=True, fastmath=False)
def _softplus_s(t):
    return max(t, 0.0) + math.log1p(math.exp(-abs(t)))


@numba.njit(cache=True, fastmath=False)
def log_posterior_and_grad_jit(
    theta, sum_x, sum_x2, kk, rho, a, c, logdet_const, sd_bar, s0_bar, uniform_const
):
    d = sum_x.shape[0]
    dim = 5 + 2 * d
    grad = np.zeros(dim)

    for i in range(dim):
        if not math.isfinite(theta[i]):
            return -math.inf, grad

    t_d0 = theta[0]
    t_s0 = theta[1]
    t_nu = theta[2]
    t_al = theta[3]
    t_be = theta[4]

    s_d0 = _sigmoid_s(t_d0)
    s_s0 = _sigmoid_s(t_s0)
    s_al = _sigmoid_s(t_al)
    s_be = _sigmoid_s(t_be)

    delta0 = DELTA0_LOW + (DELTA0_HIGH - DELTA0_LOW) * s_d0
    sigma0 = s0_bar * s_s0
    exp_tnu = math.exp(t_nu) if t_nu < 700.0 else math.inf
    nu = 1.0 + exp_tnu
    alpha = ALPHA_LOW + (ALPHA_HIGH - ALPHA_LOW) * s_al
    beta = BETA_LOW + (BETA_HIGH - BETA_LOW) * s_be

    nu1 = nu - 1.0
    if not (sigma0 > 0.0 and math.isfinite(nu) and nu1 > 0.0):
        return -math.inf, grad

    half_nu = 0.5 * nu
    lg_half = math.lgamma(half_nu + 0.5)
    lg_half0 = math.lgamma(half_nu)
    dg_half = _digamma(half_nu + 0.5)
    dg_half0 = _digamma(half_nu)

    ll = 0.0
    lt = 0.0
    sum_ll_dmu = 0.0
    sum_ll_dmu_eta = 0.0
    lt_dnu = d * (0.5 * dg_half - 0.5 * dg_half0 - 0.5 / nu)
    jac_boxes = _softplus_s(t_d0) + _softplus_s(-t_d0)
    jac_boxes += _softplus_s(t_s0) + _softplus_s(-t_s0)
    jac_boxes += _softplus_s(t_al) + _softplus_s(-t_al)
    jac_boxes += _softplus_s(t_be) + _softplus_s(-t_be)

    # Standardized t density constant; the -log sigma0 scale factor is
    # cancelled exactly by the non-centering Jacobian and omitted on both
    # sides.
    t_const = lg_half - lg_half0 - 0.5 * math.log(nu * math.pi)

    for i in range(d):
        eta = theta[5 + i]
        mu = delta0 + sigma0 * eta
        t_sd = theta[5 + d + i]
        s_sd = _sigmoid_s(t_sd)
        sigma = sd_bar[i] * s_sd
        if sigma <= 0.0:
            return -math.inf, grad
        jac_boxes += _softplus_s(t_sd) + _softplus_s(-t_sd)

        # equicorrelated normal likelihood via data summaries
        s_quad = sum_x2[i] - 2.0 * mu * sum_x[i] + kk[i] * mu * mu
        t_sum = sum_x[i] - kk[i] * mu
        inv_var = 1.0 / (sigma * sigma)
        quad = (s_quad / a[i] - rho[i] * t_sum * t_sum / (a[i] * c[i])) * inv_var
        ll += -0.5 * (
            kk[i] * _LOG_2PI + 2.0 * kk[i] * math.log(sigma) + logdet_const[i] + quad
        )
        ll_dmu = t_sum * inv_var / c[i]
        ll_dsigma = (-kk[i] + quad) / sigma
        sum_ll_dmu += ll_dmu
        sum_ll_dmu_eta += ll_dmu * eta

        # standardized Student-t population term
        z2_nu = eta * eta / nu
        w = 1.0 + z2_nu
        log_w = math.log1p(z2_nu)
        zw = eta / w
        lt += t_const - 0.5 * (nu + 1.0) * log_w
        lt_deta = -(nu + 1.0) / nu * zw
        lt_dnu += -0.5 * log_w + (nu + 1.0) * eta * zw / (2.0 * nu * nu)

        grad[5 + i] = ll_dmu * sigma0 + lt_deta
        grad[5 + d + i] = ll_dsigma * sd_bar[i] * s_sd * (1.0 - s_sd) + (1.0 - 2.0 * s_sd)

    lgam = (
        alpha * math.log(beta)
        - math.lgamma(alpha)
        + (alpha - 1.0) * math.log(nu1)
        - beta * nu1
    )
    g_dnu = (alpha - 1.0) / nu1 - beta
    g_dal = math.log(beta) - _digamma(alpha) + math.log(nu1)
    g_dbe = alpha / beta - nu1

    widths_log = -uniform_const
    log_jac = widths_log - jac_boxes + t_nu
    value = ll + lt + lgam + uniform_const + log_jac
    if not math.isfinite(value):
        return -math.inf, np.zeros(dim)

    grad[0] = sum_ll_dmu * (DELTA0_HIGH - DELTA0_LOW) * s_d0 * (1.0 - s_d0) + (1.0 - 2.0 * s_d0)
    grad[1] = sum_ll_dmu_eta * s0_bar * s_s0 * (1.0 - s_s0) + (1.0 - 2.0 * s_s0)
    grad[2] = (lt_dnu + g_dnu) * exp_tnu + 1.0
    grad[3] = g_dal * (ALPHA_HIGH - ALPHA_LOW) * s_al * (1.0 - s_al) + (1.0 - 2.0 * s_al)
    grad[4] = g_dbe * (BETA_HIGH - BETA_LOW) * s_be * (1.0 - s_be) + (1.0 - 2.0 * s_be)

    for i in range(dim):
        if not math.isfinite(grad[i]):
            return -math.inf, np.zeros(dim)
    return value, grad


@numba.njit(cache=True, fastmath=False)
def leapfrog_leaf_jit(
    theta, r, grad, eps, mass_inv, h0,
    sum_x, sum_x2, kk, rho, a, c, logdet_const, sd_bar, s0_bar, uniform_const,
):
    """Fused leapfrog step for the comparison model.

    Mirrors the sampler's default (Python) leaf kernel: one position
    update, one posterior evaluation, the closing momentum half-kick, the
    velocity at the new point, and the Hamiltonian error vs ``h0``.
    """
    n = theta.shape[0]
    r_half = np.empty(n)
    theta1 = np.empty(n)
    for i in range(n):
        r_half[i] = r[i] + 0.5 * eps * grad[i]
        theta1[i] = theta[i] + eps * mass_inv[i] * r_half[i]
    logp1, grad1 = log_posterior_and_grad_jit(
        theta1, sum_x, sum_x2, kk, rho, a, c, logdet_const, sd_bar, s0_bar, uniform_const
    )
    r1 = np.empty(n)
    sharp1 = np.empty(n)
    kinetic = 0.0
    for i in range(n):
        r1[i] = r_half[i] + 0.5 * eps * grad1[i]
        sharp1[i] = mass_inv[i] * r1[i]
        kinetic += r1[i] * sharp1[i]
    if math.isfinite(logp1):
        d_h = (-logp1 + 0.5 * kinetic) - h0
    else:
        d_h = math.inf
    return theta1, r1, logp1, grad1, sharp1, d_h


def _packed_arrays(packed):
    return (
        np.ascontiguousarray(packed.sum_x),
        np.ascontiguousarray(packed.sum_x2),
        np.ascontiguousarray(packed.n_folds),
        np.ascontiguousarray(packed.rho),
        np.ascontiguousarray(packed.a),
        np.ascontiguousarray(packed.c),
        np.ascontiguousarray(packed.logdet_const),
        np.ascontiguousarray(packed.sd_bar),
        float(packed.s0_bar),
        float(packed.uniform_const),
    )


def make_jit_posterior(packed):
    """Bind a PackedModel's arrays into a plain callable for the sampler."""
    data = _packed_arrays(packed)

    def posterior(theta):
        return log_posterior_and_grad_jit(theta, *data)

    return posterior


def make_jit_leaf_kernel(packed):
    """Fused leapfrog leaf kernel bound to a PackedModel's arrays."""
    data = _packed_arrays(packed)

    def leaf(theta, r, grad, eps, mass_inv, h0):
        return leapfrog_leaf_jit(theta, r, grad, eps, mass_inv, h0, *data)

    return leaf
