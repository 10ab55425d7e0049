"""Dynamic Hamiltonian Monte Carlo (multinomial NUTS) with adaptation.

The sampler targets any callable returning ``(log_density, gradient)`` at a
point of R^dim. Each transition builds a binary trajectory tree by repeated
doubling, samples among the visited points with multinomial weights, and
terminates on the generalized U-turn criterion (momentum-sum checks across
the merged tree and across the seam between subtrees). A transition whose
Hamiltonian error exceeds ``MAX_ENERGY_ERROR`` is flagged divergent;
trajectories capped by ``max_treedepth`` are flagged as treedepth hits.

Warmup adapts the step size by dual averaging toward ``target_accept`` and
a diagonal mass matrix from warmup draw variances. The first half of
warmup runs expanding estimation windows (metric re-estimated and step
size re-initialized at each window end); the second half runs under a
stable metric to settle the averaged step size, and its draws provide the
final sampling metric. All randomness flows through per-chain generators
seeded from (seed, chain index), so runs are bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import AllChainsDiverged, InitializationFailure
from .seeds import as_uint64

MAX_ENERGY_ERROR = 1000.0

# Dual averaging constants (Hoffman & Gelman 2014).
_DA_GAMMA = 0.05
_DA_T0 = 10.0
_DA_KAPPA = 0.75

_INIT_ATTEMPTS = 100
_FIRST_WINDOW = 25
_MIN_WINDOWED_WARMUP = 40
_TERM_BUFFER = 50


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler budget and tuning knobs; defaults follow the protocol
    (four chains, 2000 warmup and 4000 kept draws per chain)."""

    chains: int = 4
    warmup: int = 2000
    draws: int = 4000
    target_accept: float = 0.8
    max_treedepth: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.chains < 1 or self.warmup < 0 or self.draws < 1:
            raise ValueError("chains/draws must be >= 1 and warmup >= 0")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.max_treedepth < 1:
            raise ValueError("max_treedepth must be >= 1")


@dataclass(frozen=True)
class PosteriorDraws:
    """Post-warmup draws with chain provenance.

    ``draws`` has shape (chains, draws, parameters) and holds values in the
    reporting (constrained) space. Divergence and treedepth flags are
    recorded per post-warmup transition.
    """

    draws: np.ndarray
    parameter_names: tuple[str, ...]
    divergence_flags: np.ndarray
    treedepth_hits: np.ndarray
    seed: int
    config: SamplerConfig
    chain_stats: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_draws(self) -> int:
        return self.draws.shape[1]

    @property
    def n_total(self) -> int:
        return self.draws.shape[0] * self.draws.shape[1]

    def index_of(self, name: str) -> int:
        return self.parameter_names.index(name)

    def parameter(self, name: str) -> np.ndarray:
        """(chains, draws) matrix of one parameter."""
        return self.draws[:, :, self.index_of(name)]

    def stacked(self, name: str) -> np.ndarray:
        """All chains concatenated, chain-major order."""
        return self.parameter(name).reshape(-1)

    @property
    def n_divergent(self) -> int:
        return int(np.sum(self.divergence_flags))

    @property
    def n_treedepth(self) -> int:
        return int(np.sum(self.treedepth_hits))


class _DualAveraging:
    """Nesterov dual averaging of log step size toward a target accept rate."""

    def __init__(self, eps0: float, target: float):
        self.mu = math.log(10.0 * eps0)
        self.target = target
        self.log_eps = math.log(eps0)
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.m = 0

    def update(self, accept_prob: float) -> None:
        self.m += 1
        w = 1.0 / (self.m + _DA_T0)
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_prob)
        self.log_eps = self.mu - math.sqrt(self.m) / _DA_GAMMA * self.h_bar
        eta = self.m ** (-_DA_KAPPA)
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    @property
    def eps_bar(self) -> float:
        return math.exp(self.log_eps_bar)


def _sanitize(value: float) -> float:
    return value if math.isfinite(value) else -math.inf


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi = a if a > b else b
    return hi + math.log1p(math.exp(-abs(a - b)))


class _Tree:
    """End states, momentum sum and proposal of one trajectory subtree.

    ``sharp_*`` caches the velocity (inverse mass times momentum) at each
    end for the U-turn checks.
    """

    __slots__ = (
        "theta_minus", "r_minus", "grad_minus", "sharp_minus",
        "theta_plus", "r_plus", "grad_plus", "sharp_plus",
        "r_sum", "theta", "logp", "grad", "lsw",
        "divergent", "turned",
    )

    def __init__(self, theta, r, grad, sharp, logp, lsw, divergent):
        self.theta_minus = theta
        self.r_minus = r
        self.grad_minus = grad
        self.sharp_minus = sharp
        self.theta_plus = theta
        self.r_plus = r
        self.grad_plus = grad
        self.sharp_plus = sharp
        self.r_sum = r
        self.theta = theta
        self.logp = logp
        self.grad = grad
        self.lsw = lsw
        self.divergent = divergent
        self.turned = False


@numba.njit(cache=True, fastmath=False)
def _uturn_checks(
    r_sum, sharp_lm, sharp_lp, sharp_rm, sharp_rp, r_sum_left, r_minus_right,
    r_sum_right, r_plus_left,
):
    """Generalized U-turn: full-tree check plus the two seam checks.

    All arguments are momenta/velocities of the (spatially) left and right
    subtrees being merged; returns True when the merged trajectory stops
    progressing.
    """
    n = r_sum.shape[0]
    full_m = 0.0
    full_p = 0.0
    s1_m = 0.0
    s1_r = 0.0
    s2_l = 0.0
    s2_p = 0.0
    for i in range(n):
        seam1 = r_sum_left[i] + r_minus_right[i]
        seam2 = r_sum_right[i] + r_plus_left[i]
        full_m += r_sum[i] * sharp_lm[i]
        full_p += r_sum[i] * sharp_rp[i]
        s1_m += seam1 * sharp_lm[i]
        s1_r += seam1 * sharp_rm[i]
        s2_l += seam2 * sharp_lp[i]
        s2_p += seam2 * sharp_rp[i]
    return (
        full_m <= 0.0 or full_p <= 0.0
        or s1_m <= 0.0 or s1_r <= 0.0
        or s2_l <= 0.0 or s2_p <= 0.0
    )


def _merge_turned(left: _Tree, right: _Tree, r_sum) -> bool:
    return bool(
        _uturn_checks(
            r_sum,
            left.sharp_minus, left.sharp_plus,
            right.sharp_minus, right.sharp_plus,
            left.r_sum, right.r_minus,
            right.r_sum, left.r_plus,
        )
    )


def _default_leaf_kernel(posterior):
    """One leapfrog step plus the leaf-level energy bookkeeping.

    Returns (theta1, r1, logp1, grad1, sharp1, d_h) where sharp1 is the
    velocity at the new point and d_h the Hamiltonian error relative to
    the transition origin. Model-specific fused (compiled) kernels with
    the same signature can replace this default.
    """

    def leaf(theta, r, grad, eps, mass_inv, h0):
        r_half = r + (0.5 * eps) * grad
        theta1 = theta + eps * (mass_inv * r_half)
        logp1, grad1 = posterior(theta1)
        logp1 = _sanitize(logp1)
        grad1 = np.asarray(grad1, dtype=float)
        r1 = r_half + (0.5 * eps) * grad1
        sharp1 = mass_inv * r1
        if math.isfinite(logp1):
            d_h = (-logp1 + 0.5 * float(r1 @ sharp1)) - h0
        else:
            d_h = math.inf
        return theta1, r1, logp1, grad1, sharp1, d_h

    return leaf


class _ChainState:
    """One chain's sampler state plus adaptation bookkeeping."""

    def __init__(self, posterior, leaf, dim, rng, max_treedepth):
        self.posterior = posterior
        self.leaf = leaf
        self.dim = dim
        self.rng = rng
        self.max_treedepth = max_treedepth
        self.mass_inv = np.ones(dim)
        self.r_std = np.ones(dim)
        self.eps = 1.0
        self.theta = None
        self.logp = None
        self.grad = None
        self.accept_stat = 0.0
        self.sum_alpha = 0.0
        self.n_alpha = 0

    def set_mass(self, mass_inv: np.ndarray) -> None:
        self.mass_inv = mass_inv
        self.r_std = 1.0 / np.sqrt(mass_inv)

    def init_point(self, init_sd: float) -> None:
        for _ in range(_INIT_ATTEMPTS):
            theta = self.rng.normal(0.0, init_sd, self.dim)
            logp, grad = self.posterior(theta)
            logp = _sanitize(logp)
            if math.isfinite(logp) and np.all(np.isfinite(grad)):
                self.theta, self.logp, self.grad = theta, logp, np.asarray(grad, dtype=float)
                return
        raise InitializationFailure(
            f"no finite log density found in {_INIT_ATTEMPTS} initialization attempts"
        )

    def _kinetic(self, r) -> float:
        return 0.5 * float(r @ (self.mass_inv * r))

    def find_reasonable_epsilon(self) -> float:
        """Heuristic initial step size: bisect the accept-probability 0.5
        crossing by doubling/halving (Hoffman & Gelman, Algorithm 4)."""
        eps = 1.0
        r0 = self.rng.standard_normal(self.dim) * self.r_std
        h0 = -self.logp + self._kinetic(r0)
        d_h = self.leaf(self.theta, r0, self.grad, eps, self.mass_inv, h0)[5]
        log_accept = -d_h if math.isfinite(d_h) else -math.inf
        direction = 1.0 if log_accept > math.log(0.5) else -1.0
        for _ in range(60):
            if not direction * log_accept > -direction * math.log(2.0):
                break
            eps *= 2.0**direction
            if not 1e-10 < eps < 1e8:
                break
            d_h = self.leaf(self.theta, r0, self.grad, eps, self.mass_inv, h0)[5]
            log_accept = -d_h if math.isfinite(d_h) else -math.inf
        return min(max(eps, 1e-10), 1e8)

    def _build(self, theta, r, grad, v, depth, h0) -> _Tree:
        if depth == 0:
            theta1, r1, logp1, grad1, sharp1, d_h = self.leaf(
                theta, r, grad, v * self.eps, self.mass_inv, h0
            )
            divergent = not math.isfinite(d_h) or d_h > MAX_ENERGY_ERROR
            if d_h > 0.0:
                self.sum_alpha += math.exp(-d_h)
            elif math.isfinite(d_h):
                self.sum_alpha += 1.0
            self.n_alpha += 1
            lsw = -d_h if math.isfinite(d_h) else -math.inf
            return _Tree(theta1, r1, grad1, sharp1, logp1, lsw, divergent)

        first = self._build(theta, r, grad, v, depth - 1, h0)
        if first.divergent or first.turned:
            return first
        if v > 0:
            second = self._build(first.theta_plus, first.r_plus, first.grad_plus, v, depth - 1, h0)
        else:
            second = self._build(first.theta_minus, first.r_minus, first.grad_minus, v, depth - 1, h0)
        if second.divergent or second.turned:
            first.divergent = second.divergent
            first.turned = second.turned
            return first

        # Multinomial sampling between the two halves (unbiased inside a
        # subtree). The U-turn checks need the halves' original end states,
        # so they run before the ends are merged in global orientation.
        total = _logaddexp(first.lsw, second.lsw)
        if self.rng.random() < math.exp(second.lsw - total):
            first.theta, first.logp, first.grad = second.theta, second.logp, second.grad
        r_sum = first.r_sum + second.r_sum
        if v > 0:
            turned = _merge_turned(first, second, r_sum)
            first.theta_plus = second.theta_plus
            first.r_plus = second.r_plus
            first.grad_plus = second.grad_plus
            first.sharp_plus = second.sharp_plus
        else:
            turned = _merge_turned(second, first, r_sum)
            first.theta_minus = second.theta_minus
            first.r_minus = second.r_minus
            first.grad_minus = second.grad_minus
            first.sharp_minus = second.sharp_minus
        first.turned = turned
        first.r_sum = r_sum
        first.lsw = total
        return first

    def transition(self) -> tuple[bool, bool]:
        """One NUTS update of the chain state.

        Returns (divergent, treedepth_hit) for the transition.
        """
        rng = self.rng
        r0 = rng.standard_normal(self.dim) * self.r_std
        h0 = -self.logp + self._kinetic(r0)
        tree = _Tree(self.theta, r0, self.grad, self.mass_inv * r0, self.logp, 0.0, False)
        self.sum_alpha = 0.0
        self.n_alpha = 0
        divergent = False
        treedepth_hit = True
        for depth in range(self.max_treedepth):
            v = 1 if rng.random() < 0.5 else -1
            if v > 0:
                sub = self._build(tree.theta_plus, tree.r_plus, tree.grad_plus, v, depth, h0)
            else:
                sub = self._build(tree.theta_minus, tree.r_minus, tree.grad_minus, v, depth, h0)
            if sub.divergent or sub.turned:
                divergent = divergent or sub.divergent
                treedepth_hit = False
                break
            # Biased progressive sampling toward the new subtree.
            if rng.random() < math.exp(min(0.0, sub.lsw - tree.lsw)):
                tree.theta, tree.logp, tree.grad = sub.theta, sub.logp, sub.grad
            r_sum = tree.r_sum + sub.r_sum
            if v > 0:
                turned = _merge_turned(tree, sub, r_sum)
                tree.theta_plus = sub.theta_plus
                tree.r_plus = sub.r_plus
                tree.grad_plus = sub.grad_plus
                tree.sharp_plus = sub.sharp_plus
            else:
                turned = _merge_turned(sub, tree, r_sum)
                tree.theta_minus = sub.theta_minus
                tree.r_minus = sub.r_minus
                tree.grad_minus = sub.grad_minus
                tree.sharp_minus = sub.sharp_minus
            tree.r_sum = r_sum
            tree.lsw = _logaddexp(tree.lsw, sub.lsw)
            if turned:
                treedepth_hit = False
                break
        self.theta, self.logp, self.grad = tree.theta, tree.logp, tree.grad
        self.accept_stat = self.sum_alpha / self.n_alpha if self.n_alpha else 0.0
        return divergent, treedepth_hit


def _regularized_variance(samples: np.ndarray) -> np.ndarray:
    """Shrunk robust diagonal variance estimate.

    Scale comes from the interquartile range (normal-consistent), which
    keeps heavy posterior tails (e.g. weakly identified scale parameters
    under uniform priors) from inflating the metric and stretching
    trajectories; the Stan-style shrinkage toward a small constant guards
    tiny windows.
    """
    n = samples.shape[0]
    if n < 2:
        return np.ones(samples.shape[1])
    q25, q75 = np.quantile(samples, [0.25, 0.75], axis=0)
    sd = (q75 - q25) / 1.349
    var = sd * sd
    fallback = np.var(samples, axis=0, ddof=1)
    var = np.where(var > 0.0, var, fallback)
    var = (n / (n + 5.0)) * var + (5.0 / (n + 5.0)) * 1e-3
    return np.maximum(var, 1e-12)


def _estimation_windows(budget: int) -> list[int]:
    """Expanding window lengths (doubling from 25) that sum to ``budget``."""
    windows = []
    size = _FIRST_WINDOW
    remaining = budget
    while remaining > 0:
        if remaining < 2 * size or remaining < _FIRST_WINDOW:
            windows.append(remaining)
            break
        windows.append(size)
        remaining -= size
        size *= 2
    return windows


def _run_chain(posterior, leaf, dim, cfg: SamplerConfig, chain_idx: int, init_sd: float):
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([as_uint64(cfg.seed), chain_idx]))
    )
    state = _ChainState(posterior, leaf, dim, rng, cfg.max_treedepth)
    state.init_point(init_sd)
    n_div_warm = 0

    def run_window(n: int, da: _DualAveraging) -> np.ndarray:
        nonlocal n_div_warm
        window = np.empty((n, dim))
        for m in range(n):
            div, _ = state.transition()
            n_div_warm += div
            da.update(state.accept_stat)
            state.eps = da.eps
            window[m] = state.theta
        return window

    warmup = cfg.warmup
    if warmup == 0:
        state.eps = state.find_reasonable_epsilon()
    elif warmup < _MIN_WINDOWED_WARMUP:
        state.eps = state.find_reasonable_epsilon()
        da = _DualAveraging(state.eps, cfg.target_accept)
        run_window(warmup, da)
        state.eps = da.eps_bar
    else:
        half = warmup // 2
        # First half: expanding metric-estimation windows. Each window end
        # re-estimates the mass matrix and restarts step-size adaptation.
        state.eps = state.find_reasonable_epsilon()
        for size in _estimation_windows(half):
            da = _DualAveraging(state.eps, cfg.target_accept)
            window = run_window(size, da)
            state.set_mass(_regularized_variance(window))
            state.eps = state.find_reasonable_epsilon()
        # Second half: stable metric; its draws provide the final sampling
        # metric. A short terminal buffer then re-settles the step size
        # under that final metric.
        term = min(_TERM_BUFFER, (warmup - half) // 4)
        da = _DualAveraging(state.eps, cfg.target_accept)
        window = run_window(warmup - half - term, da)
        state.set_mass(_regularized_variance(window))
        state.eps = state.find_reasonable_epsilon()
        da = _DualAveraging(state.eps, cfg.target_accept)
        run_window(term, da)
        state.eps = da.eps_bar

    thetas = np.empty((cfg.draws, dim))
    divergent = np.zeros(cfg.draws, dtype=bool)
    treedepth = np.zeros(cfg.draws, dtype=bool)
    accept_sum = 0.0
    for m in range(cfg.draws):
        div, td = state.transition()
        divergent[m] = div
        treedepth[m] = td
        accept_sum += state.accept_stat
        thetas[m] = state.theta
    stats = {
        "step_size": state.eps,
        "accept_mean": accept_sum / cfg.draws,
        "n_divergent_warmup": int(n_div_warm),
        "mass_inv": state.mass_inv.copy(),
    }
    return thetas, divergent, treedepth, stats


def run_nuts(
    posterior,
    dim: int,
    cfg: SamplerConfig,
    *,
    transform=None,
    parameter_names: tuple[str, ...] | None = None,
    init_sd: float = 0.1,
    leaf_kernel=None,
) -> PosteriorDraws:
    """Sample ``posterior`` (a callable theta -> (logp, grad)) with NUTS.

    ``transform`` optionally maps each kept draw into a reporting space
    (e.g. unconstrained -> constrained); ``parameter_names`` labels the
    reported columns. ``leaf_kernel`` can supply a fused compiled
    implementation of the leapfrog leaf step (see _default_leaf_kernel);
    it must be numerically equivalent to ``posterior``. Fully
    deterministic given the config seed.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    leaf = leaf_kernel if leaf_kernel is not None else _default_leaf_kernel(posterior)
    chain_results = [
        _run_chain(posterior, leaf, dim, cfg, chain, init_sd) for chain in range(cfg.chains)
    ]

    if transform is not None:
        first = np.asarray(transform(chain_results[0][0][0]), dtype=float)
        out_dim = first.shape[0]
    else:
        out_dim = dim
    if parameter_names is None:
        parameter_names = tuple(f"theta_{i}" for i in range(out_dim))
    if len(parameter_names) != out_dim:
        raise ValueError("parameter_names length does not match output dimension")

    draws = np.empty((cfg.chains, cfg.draws, out_dim))
    div = np.empty((cfg.chains, cfg.draws), dtype=bool)
    td = np.empty((cfg.chains, cfg.draws), dtype=bool)
    stats = []
    for c, (thetas, divergent, treedepth, st) in enumerate(chain_results):
        if transform is not None:
            for m in range(cfg.draws):
                draws[c, m] = transform(thetas[m])
        else:
            draws[c] = thetas
        div[c] = divergent
        td[c] = treedepth
        stats.append(st)

    if bool(np.all(div)):
        raise AllChainsDiverged(
            "every post-warmup transition of every chain was divergent"
        )
    return PosteriorDraws(
        draws=draws,
        parameter_names=tuple(parameter_names),
        divergence_flags=div,
        treedepth_hits=td,
        seed=cfg.seed,
        config=cfg,
        chain_stats=tuple(stats),
    )
