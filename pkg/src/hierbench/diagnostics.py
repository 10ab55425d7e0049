"""Convergence diagnostics: split R-hat and rank-normalized ESS.

Implements the standard definitions: each chain is split in half, R-hat is
the potential scale reduction factor over the split chains, bulk ESS is
computed on rank-normalized draws via Geyer's initial monotone sequence on
FFT autocovariances, and tail ESS is the minimum of the quantile ESS for
the 5% and 95% indicator sequences.

The pass rule gates on the key population parameters: maximum R-hat at
most 1.01, bulk ESS at least 400, tail ESS at least 100, and zero
post-warmup divergences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .errors import InsufficientDraws
from .sampler import PosteriorDraws

RHAT_MAX = 1.01
ESS_BULK_MIN = 400.0
ESS_TAIL_MIN = 100.0

KEY_PARAMETERS = ("delta0", "sigma0", "nu")


@dataclass(frozen=True)
class Diagnostics:
    """Per-parameter convergence summaries plus the overall pass flag."""

    rhat: dict[str, float]
    ess_bulk: dict[str, float]
    ess_tail: dict[str, float]
    n_divergent: int
    n_treedepth: int
    key_parameters: tuple[str, ...]
    max_rhat: float
    min_ess_bulk: float
    min_ess_tail: float

    @property
    def passed(self) -> bool:
        return passes(self.max_rhat, self.min_ess_bulk, self.min_ess_tail, self.n_divergent)


def passes(max_rhat: float, min_ess_bulk: float, min_ess_tail: float, n_divergent: int) -> bool:
    """The acceptance rule applied to the key-parameter summaries."""
    return (
        max_rhat <= RHAT_MAX
        and min_ess_bulk >= ESS_BULK_MIN
        and min_ess_tail >= ESS_TAIL_MIN
        and n_divergent == 0
    )


def _split_chains(x: np.ndarray) -> np.ndarray:
    """Stack first and second chain halves as separate chains."""
    _, n = x.shape
    half = n // 2
    return np.vstack((x[:, :half], x[:, n - half :]))


def _z_scale(x: np.ndarray) -> np.ndarray:
    """Rank-normal transform over the pooled draws."""
    shape = x.shape
    rank = rankdata(x, method="average")
    z = norm.ppf((rank - 0.5) / x.size)
    return z.reshape(shape)


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of one chain via FFT."""
    n = len(x)
    centered = x - np.mean(x)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n].real
    return acov / n


def split_rhat(x: np.ndarray) -> float:
    """Split potential scale reduction factor of a (chains, draws) array."""
    x = np.asarray(x, dtype=float)
    chains = _split_chains(x)
    n = chains.shape[1]
    if n < 2:
        raise InsufficientDraws("need at least 4 draws per chain for split R-hat")
    chain_means = np.mean(chains, axis=1)
    chain_vars = np.var(chains, axis=1, ddof=1)
    w = float(np.mean(chain_vars))
    b_over_n = float(np.var(chain_means, ddof=1))
    if w <= 0.0:
        return 1.0 if b_over_n <= 0.0 else math.inf
    var_plus = (n - 1.0) / n * w + b_over_n
    return math.sqrt(var_plus / w)


def _ess_geyer(chains: np.ndarray) -> float:
    """Geyer initial-monotone-sequence ESS for pre-transformed chains."""
    n_chain, n_draw = chains.shape
    if np.allclose(chains, chains.flat[0]):
        return float(n_chain * n_draw)
    acov = np.array([_autocov(chains[c]) for c in range(n_chain)])
    chain_means = chains.mean(axis=1)
    mean_var = float(np.mean(acov[:, 0])) * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if n_chain > 1:
        var_plus += float(np.var(chain_means, ddof=1))
    if var_plus <= 0.0:
        return float(n_chain * n_draw)

    rho_hat = np.zeros(n_draw)
    rho_hat[0] = 1.0
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, 1]))) / var_plus
    rho_hat[1] = rho_odd

    # Geyer's initial positive sequence
    t = 1
    while t < n_draw - 2 and (rho_even + rho_odd) >= 0.0:
        rho_even = 1.0 - (mean_var - float(np.mean(acov[:, t + 1]))) / var_plus
        rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, t + 2]))) / var_plus
        rho_hat[t + 1] = rho_even
        if (rho_even + rho_odd) >= 0.0:
            rho_hat[t + 2] = rho_odd
        t += 2
    max_t = t

    # Geyer's initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if (rho_hat[t + 1] + rho_hat[t + 2]) > (rho_hat[t - 1] + rho_hat[t]):
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0
            rho_hat[t + 2] = rho_hat[t + 1]
        t += 2

    tau_hat = -1.0 + 2.0 * float(np.sum(rho_hat[:max_t])) + float(
        np.sum(rho_hat[max_t + 1 : max_t + 2])
    )
    tau_hat = max(tau_hat, 1.0 / math.log10(n_chain * n_draw + 10.0))
    return float(n_chain * n_draw) / tau_hat


def ess_bulk(x: np.ndarray) -> float:
    """Rank-normalized bulk effective sample size of (chains, draws)."""
    x = np.asarray(x, dtype=float)
    return _ess_geyer(_z_scale(_split_chains(x)))


def ess_tail(x: np.ndarray) -> float:
    """Tail ESS: minimum quantile ESS at the 5% and 95% levels."""
    x = np.asarray(x, dtype=float)
    out = math.inf
    for prob in (0.05, 0.95):
        q = np.quantile(x, prob)
        indicator = (x <= q).astype(float)
        out = min(out, _ess_geyer(_z_scale(_split_chains(indicator))))
    return out


def compute_diagnostics(
    d: PosteriorDraws, key_parameters: tuple[str, ...] | None = None
) -> Diagnostics:
    """Compute per-parameter diagnostics and evaluate the pass rule.

    The rule gates on ``key_parameters``; by default the population
    parameters (delta0, sigma0, nu) when present, otherwise all columns.
    """
    if d.n_chains < 2:
        raise InsufficientDraws("need at least 2 chains")
    if d.n_draws < 4:
        raise InsufficientDraws("need at least 4 draws per chain")

    if key_parameters is None:
        key_parameters = tuple(p for p in KEY_PARAMETERS if p in d.parameter_names)
        if not key_parameters:
            key_parameters = d.parameter_names

    rhat = {}
    bulk = {}
    tail = {}
    for name in d.parameter_names:
        x = d.parameter(name)
        rhat[name] = split_rhat(x)
        bulk[name] = ess_bulk(x)
        tail[name] = ess_tail(x)

    max_rhat = max(rhat[p] for p in key_parameters)
    min_bulk = min(bulk[p] for p in key_parameters)
    min_tail = min(tail[p] for p in key_parameters)
    return Diagnostics(
        rhat=rhat,
        ess_bulk=bulk,
        ess_tail=tail,
        n_divergent=d.n_divergent,
        n_treedepth=d.n_treedepth,
        key_parameters=key_parameters,
        max_rhat=max_rhat,
        min_ess_bulk=min_bulk,
        min_ess_tail=min_tail,
    )
