"""Bayesian hierarchical comparison of ML methods across datasets.

Fits a robust hierarchical model to fold-level cross-validation score
differences (equicorrelated folds, Student-t population of dataset
effects), samples it with NUTS, and reports ROPE-based win/equivalence/
loss probabilities per the argmax-region rule, with sampler diagnostics,
sensitivity sweeps, and deterministic missing-modality mask generation.
"""

__version__ = "0.1.0"

from .decisions import (  # noqa: F401
    DecisionSummary,
    RegionProbs,
    bound_violation,
    classify_draws,
    region_probabilities,
    student_t_cdf,
)
from .diagnostics import Diagnostics, compute_diagnostics  # noqa: F401
from .fitting import fit_pair, fit_with_retry  # noqa: F401
from .masks import MaskSet, MaskSpec, generate_masks, parse_masks, serialize_masks  # noqa: F401
from .model import (  # noqa: F401
    ModelConfig,
    ParameterVector,
    from_unconstrained,
    log_likelihood_dataset,
    log_population,
    log_posterior_and_grad,
    log_prior,
    to_unconstrained,
)
from .results import (  # noqa: F401
    FoldRecord,
    PairData,
    ResultTable,
    pairwise_differences,
    parse_results,
    population_scales,
)
from .sampler import PosteriorDraws, SamplerConfig, run_nuts  # noqa: F401
from .sensitivity import SensitivityReport, Variant, rope_sweep, variant_sweep  # noqa: F401
