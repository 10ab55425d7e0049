"""Model fitting: posterior assembly, NUTS execution, retry policy.

A fit samples the hierarchical comparison model for one PairData and
returns constrained-space draws plus diagnostics. When diagnostics fail,
:func:`fit_with_retry` climbs a deterministic ladder: target acceptance
0.8 -> 0.95 -> 0.99, with the warmup and draw budgets doubled on the final
rung. Every retry runs under a fresh sub-seed derived from the base seed,
so the whole procedure is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import _kernels
from .diagnostics import Diagnostics, compute_diagnostics
from .model import (
    ModelConfig,
    PackedModel,
    constrain_vector,
    log_posterior_and_grad_packed,
    pack_model,
)
from .results import PairData
from .sampler import PosteriorDraws, SamplerConfig, run_nuts
from .seeds import derive_seed

RETRY_TARGET_ACCEPTS = (0.95, 0.99)


def make_posterior(packed: PackedModel, prefer_jit: bool = True):
    """Callable (theta) -> (logp, grad) for the packed comparison model."""
    if prefer_jit:
        return _kernels.make_jit_posterior(packed)

    def posterior(theta):
        return log_posterior_and_grad_packed(theta, packed)

    return posterior


def make_leaf_kernel(packed: PackedModel, prefer_jit: bool = True):
    """Fused sampler leaf kernel, or None to use the sampler's default."""
    if prefer_jit:
        return _kernels.make_jit_leaf_kernel(packed)
    return None


@dataclass(frozen=True)
class FitResult:
    draws: PosteriorDraws
    diagnostics: Diagnostics
    attempts: int
    sampler_config: SamplerConfig


def fit_pair(
    pair: PairData,
    model_cfg: ModelConfig,
    sampler_cfg: SamplerConfig,
    *,
    prefer_jit: bool = True,
) -> tuple[PosteriorDraws, Diagnostics]:
    """Single NUTS fit of the comparison model, no retries."""
    packed = pack_model(pair, model_cfg)
    posterior = make_posterior(packed, prefer_jit=prefer_jit)
    draws = run_nuts(
        posterior,
        packed.dim,
        sampler_cfg,
        transform=lambda theta: constrain_vector(theta, packed),
        parameter_names=packed.parameter_names,
        leaf_kernel=make_leaf_kernel(packed, prefer_jit=prefer_jit),
    )
    return draws, compute_diagnostics(draws)


def fit_with_retry(
    pair: PairData,
    model_cfg: ModelConfig,
    base: SamplerConfig,
    *,
    prefer_jit: bool = True,
) -> tuple[PosteriorDraws, Diagnostics, int]:
    """Fit with the automatic retry ladder.

    Returns the first fit whose diagnostics pass, or the final rung's fit
    flagged failed (callers must surface the failure, never report it as a
    clean result). Attempt 1 runs under the base seed itself; retries
    derive sub-seeds.
    """
    configs = [base]
    final_rung = 1 + len(RETRY_TARGET_ACCEPTS)
    for rung, target in enumerate(RETRY_TARGET_ACCEPTS, start=2):
        cfg = replace(base, target_accept=target, seed=derive_seed(base.seed, "attempt", rung))
        if rung == final_rung:
            cfg = replace(cfg, warmup=2 * base.warmup, draws=2 * base.draws)
        configs.append(cfg)

    draws = diag = None
    attempts = 0
    for cfg in configs:
        attempts += 1
        draws, diag = fit_pair(pair, model_cfg, cfg, prefer_jit=prefer_jit)
        if diag.passed:
            break
    return draws, diag, attempts
