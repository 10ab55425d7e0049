"""Decision layer: ROPE classification of posterior draws.

For each posterior draw of (delta0, sigma0, nu), the predictive effect on
a new dataset is delta_new ~ StudentT(delta0, sigma0, nu). Its probability
mass is split into three regions: other-method better (delta_new < -eps),
practical equivalence (|delta_new| <= eps), and base-method better
(delta_new > eps). Each draw votes for its most probable region; the
reported probabilities are the resulting vote frequencies. The population
mean difference delta0 is summarized by its posterior mean and equal-tailed
95% credible interval, which do not depend on eps.

Convention: draws come from a fit of differences (method_i minus method_j)
where method_i is the base, so the right region favours the base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import EmptyDraws, NonFiniteInput
from .sampler import PosteriorDraws


@dataclass(frozen=True)
class RegionProbs:
    """Probability mass of (other better, equivalent, base better)."""

    p_left: float
    p_rope: float
    p_right: float


@dataclass(frozen=True)
class DecisionSummary:
    """Reported quantities of one comparison at a fixed ROPE half-width.

    The three probabilities are ratios of the integer vote counts, which
    sum exactly to ``n_draws``.
    """

    p_base_better: float
    p_rope: float
    p_other_better: float
    e_delta0: float
    ci_low: float
    ci_high: float
    p_bound_violation: float
    epsilon: float
    n_draws: int
    n_base_better: int
    n_rope: int
    n_other_better: int

    def __post_init__(self):
        if self.ci_low > self.ci_high:
            raise ValueError("ci_low exceeds ci_high")


def student_t_cdf(x, nu):
    """CDF of the standard Student-t via the regularized incomplete beta.

    Accepts scalars or arrays (broadcast); absolute error below 1e-10.
    """
    x_arr = np.asarray(x, dtype=float)
    nu_arr = np.asarray(nu, dtype=float)
    if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(nu_arr))):
        raise NonFiniteInput("non-finite input to student_t_cdf")
    if np.any(nu_arr <= 0.0):
        raise ValueError("nu must be positive")
    ib = betainc(nu_arr / 2.0, 0.5, nu_arr / (nu_arr + x_arr * x_arr))
    out = np.where(x_arr <= 0.0, 0.5 * ib, 1.0 - 0.5 * ib)
    if out.ndim == 0:
        return float(out)
    return out


def region_probabilities(
    delta0: float, sigma0: float, nu: float, epsilon: float
) -> RegionProbs:
    """Mass of delta_new ~ t(delta0, sigma0, nu) in the three regions."""
    for v in (delta0, sigma0, nu, epsilon):
        if not np.isfinite(v):
            raise NonFiniteInput("non-finite input to region_probabilities")
    if sigma0 <= 0.0 or epsilon <= 0.0:
        raise ValueError("sigma0 and epsilon must be positive")
    c_low = student_t_cdf((-epsilon - delta0) / sigma0, nu)
    c_high = student_t_cdf((epsilon - delta0) / sigma0, nu)
    p_left = c_low
    p_right = 1.0 - c_high
    p_rope = min(max(1.0 - p_left - p_right, 0.0), 1.0)
    return RegionProbs(p_left=p_left, p_rope=p_rope, p_right=p_right)


def _region_matrix(delta0, sigma0, nu, epsilon):
    """Vectorized region probabilities, one row per draw."""
    c_low = student_t_cdf((-epsilon - delta0) / sigma0, nu)
    c_high = student_t_cdf((epsilon - delta0) / sigma0, nu)
    p_left = c_low
    p_right = 1.0 - c_high
    p_rope = np.clip(c_high - c_low, 0.0, 1.0)
    return np.column_stack((p_left, p_rope, p_right))


def _key_draws(draws: PosteriorDraws):
    if draws.n_total == 0:
        raise EmptyDraws("no posterior draws")
    return (
        draws.stacked("delta0"),
        draws.stacked("sigma0"),
        draws.stacked("nu"),
    )


def bound_violation(draws: PosteriorDraws) -> float:
    """Posterior mean probability that |delta_new| exceeds 1.

    Metrics are bounded in [0, 1], so dataset-level mean differences live
    in [-1, 1]; a fitted population law placing visible mass outside that
    interval indicates misfit.
    """
    delta0, sigma0, nu = _key_draws(draws)
    tail = student_t_cdf((-1.0 - delta0) / sigma0, nu) + (
        1.0 - student_t_cdf((1.0 - delta0) / sigma0, nu)
    )
    return float(np.mean(tail))


def classify_draws(draws: PosteriorDraws, epsilon: float) -> DecisionSummary:
    """Vote over draws for the most probable region of delta_new.

    Ties break deterministically with priority left < rope < right. The
    delta0 summaries (mean and 95% equal-tailed interval) depend only on
    the draws, never on epsilon.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    delta0, sigma0, nu = _key_draws(draws)
    probs = _region_matrix(delta0, sigma0, nu, epsilon)
    votes = np.argmax(probs, axis=1)  # first max wins: left < rope < right
    n = votes.shape[0]
    n_left = int(np.sum(votes == 0))
    n_rope = int(np.sum(votes == 1))
    n_right = n - n_left - n_rope
    ci_low, ci_high = np.percentile(delta0, [2.5, 97.5])
    return DecisionSummary(
        p_base_better=n_right / n,
        p_rope=n_rope / n,
        p_other_better=n_left / n,
        e_delta0=float(np.mean(delta0)),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        p_bound_violation=bound_violation(draws),
        epsilon=float(epsilon),
        n_draws=n,
        n_base_better=n_right,
        n_rope=n_rope,
        n_other_better=n_left,
    )
