"""Comparison reports: orchestration and md/csv/json rendering.

A compare run fits every requested method against the baseline (one model
fit per pair, exactly the per-pair procedure of the protocol), classifies
the posteriors at the configured ROPE half-width, and renders one table
row per method with the five reported quantities. Markdown and CSV carry
the table-precision numbers (probabilities to 2 decimals, effects to 3);
JSON carries full precision plus the complete config echo and the input
content hash for auditability. Failed fits are never rendered as clean
numbers: rows carry the diagnostics pass flag and an explicit failure
marker.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .decisions import DecisionSummary, classify_draws
from .diagnostics import Diagnostics
from .errors import HierbenchError, IoFailure
from .fitting import fit_with_retry
from .model import ModelConfig
from .results import ResultTable, pairwise_differences, parse_results, population_scales
from .sampler import PosteriorDraws, SamplerConfig
from .seeds import derive_seed
from .sensitivity import DEFAULT_EPSILONS, SensitivityReport, variant_sweep

COMPARE_COLUMNS = (
    "P(base>other)",
    "P(~)",
    "P(other>base)",
    "E[delta0]",
    "95% CI",
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved CLI/run configuration; defaults follow the protocol."""

    results_path: str
    baseline_method: str
    methods: tuple[str, ...] | None = None
    epsilon: float = 0.01
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    rho_rule: str = "1/K"
    bound_multiplier: float = 1000.0
    chains: int = 4
    warmup: int = 2000
    draws: int = 4000
    target_accept: float = 0.8
    max_treedepth: int = 10
    seed: int = 0
    output_dir: str = "."
    emit_raw_draws: bool = False
    include_timestamp: bool = True
    jobs: int = 1

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            rho_rule=self.rho_rule,
            epsilon=self.epsilon,
            bound_multiplier=self.bound_multiplier,
        )

    def sampler_config(self, seed: int | None = None) -> SamplerConfig:
        return SamplerConfig(
            chains=self.chains,
            warmup=self.warmup,
            draws=self.draws,
            target_accept=self.target_accept,
            max_treedepth=self.max_treedepth,
            seed=self.seed if seed is None else seed,
        )


@dataclass(frozen=True)
class MethodResult:
    """One comparison row: summary, diagnostics, and fit provenance."""

    method: str
    summary: DecisionSummary | None
    diagnostics: Diagnostics | None
    attempts: int
    n_datasets: int
    excluded: tuple[str, ...]
    rho_generalized: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.summary is not None

    @property
    def passed(self) -> bool:
        return self.ok and self.diagnostics is not None and self.diagnostics.passed


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    rows: tuple[MethodResult, ...]
    epsilon: float
    model_config: ModelConfig
    sampler_config: SamplerConfig
    tool_version: str
    input_sha256: str
    results_path: str = ""
    partial: bool = field(default=False)

    @property
    def all_passed(self) -> bool:
        return bool(self.rows) and all(row.passed for row in self.rows)


def _fit_one(
    table: ResultTable, baseline: str, method: str, run_cfg: RunConfig
) -> tuple[MethodResult, PosteriorDraws | None]:
    model_cfg = run_cfg.model_config()
    try:
        pair = pairwise_differences(table, baseline, method)
        pair = population_scales(pair, bound_multiplier=run_cfg.bound_multiplier)
        seed = derive_seed(run_cfg.seed, "compare", baseline, method)
        draws, diag, attempts = fit_with_retry(pair, model_cfg, run_cfg.sampler_config(seed))
        summary = classify_draws(draws, run_cfg.epsilon)
        k_values = {ds.n_folds for ds in pair.datasets}
        return (
            MethodResult(
                method=method,
                summary=summary,
                diagnostics=diag,
                attempts=attempts,
                n_datasets=pair.n_datasets,
                excluded=pair.excluded,
                rho_generalized=len(k_values) > 1,
            ),
            draws,
        )
    except HierbenchError as exc:
        return (
            MethodResult(
                method=method,
                summary=None,
                diagnostics=None,
                attempts=0,
                n_datasets=0,
                excluded=(),
                error=f"{type(exc).__name__}: {exc}",
            ),
            None,
        )


def run_compare(
    run_cfg: RunConfig,
) -> tuple[ComparisonReport, dict[str, PosteriorDraws]]:
    """Fit all methods against the baseline and assemble the report.

    Per-method fits are independent and keyed by (seed, baseline, method),
    so the row set never influences individual results and reruns are
    byte-reproducible.
    """
    raw = Path(run_cfg.results_path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    fmt = "json" if run_cfg.results_path.endswith(".json") else "csv"
    table = parse_results(raw, format=fmt)

    if run_cfg.baseline_method not in table.methods():
        raise HierbenchError(
            f"baseline method {run_cfg.baseline_method!r} not present in results"
        )
    if run_cfg.methods is not None:
        methods = list(run_cfg.methods)
    else:
        methods = [m for m in table.methods() if m != run_cfg.baseline_method]

    if run_cfg.jobs > 1 and len(methods) > 1:
        with ThreadPoolExecutor(max_workers=run_cfg.jobs) as pool:
            outcomes = list(
                pool.map(
                    lambda m: _fit_one(table, run_cfg.baseline_method, m, run_cfg),
                    methods,
                )
            )
    else:
        outcomes = [
            _fit_one(table, run_cfg.baseline_method, m, run_cfg) for m in methods
        ]

    rows = tuple(row for row, _ in outcomes)
    draws_by_method = {
        row.method: draws for (row, draws) in outcomes if draws is not None
    }
    report = ComparisonReport(
        baseline=run_cfg.baseline_method,
        rows=rows,
        epsilon=run_cfg.epsilon,
        model_config=run_cfg.model_config(),
        sampler_config=run_cfg.sampler_config(),
        tool_version=__version__,
        input_sha256=digest,
        results_path=run_cfg.results_path,
        partial=any(not row.passed for row in rows),
    )
    return report, draws_by_method


# ---------------------------------------------------------------------------
# Formatting helpers
# ---------------------------------------------------------------------------


def _prob(x: float) -> str:
    return f"{x:.2f}"


def _eff(x: float) -> str:
    return f"{x:.3f}"


def _ci(lo: float, hi: float) -> str:
    return f"[{_eff(lo)},{_eff(hi)}]"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _model_config_dict(cfg: ModelConfig) -> dict:
    return {
        "rho_rule": cfg.rho_rule,
        "rho": cfg.rho,
        "epsilon": cfg.epsilon,
        "bound_multiplier": cfg.bound_multiplier,
        "gamma_param": cfg.gamma_param,
    }


def _sampler_config_dict(cfg: SamplerConfig) -> dict:
    return {
        "chains": cfg.chains,
        "warmup": cfg.warmup,
        "draws": cfg.draws,
        "target_accept": cfg.target_accept,
        "max_treedepth": cfg.max_treedepth,
        "seed": cfg.seed,
    }


def _summary_json(s: DecisionSummary) -> dict:
    return {
        "p_base_better": s.p_base_better,
        "p_rope": s.p_rope,
        "p_other_better": s.p_other_better,
        "e_delta0": s.e_delta0,
        "ci_low": s.ci_low,
        "ci_high": s.ci_high,
        "p_bound_violation": s.p_bound_violation,
        "epsilon": s.epsilon,
        "n_draws": s.n_draws,
        "counts": {
            "base_better": s.n_base_better,
            "rope": s.n_rope,
            "other_better": s.n_other_better,
        },
    }


def _diagnostics_json(d: Diagnostics | None) -> dict | None:
    if d is None:
        return None
    return {
        "max_rhat": d.max_rhat,
        "min_ess_bulk": d.min_ess_bulk,
        "min_ess_tail": d.min_ess_tail,
        "n_divergent": d.n_divergent,
        "n_treedepth": d.n_treedepth,
        "key_parameters": list(d.key_parameters),
        "pass": d.passed,
    }


# ---------------------------------------------------------------------------
# Compare rendering
# ---------------------------------------------------------------------------


def render_compare_markdown(report: ComparisonReport, timestamp: str | None = None) -> str:
    lines = [
        f"# Comparison with {report.baseline}",
        "",
    ]
    if timestamp is not None:
        lines += [f"Generated: {timestamp}", ""]
    lines += [
        f"ROPE half-width: {report.epsilon:g}; rho rule: {report.model_config.rho_rule}; "
        f"prior bound multiplier: {report.model_config.bound_multiplier:g}",
        f"Sampler: {report.sampler_config.chains} chains, "
        f"{report.sampler_config.warmup} warmup + {report.sampler_config.draws} draws, "
        f"target accept {report.sampler_config.target_accept:g}, seed {report.sampler_config.seed}",
        f"Input sha256: {report.input_sha256}",
        "",
        "| Method | " + " | ".join(COMPARE_COLUMNS) + " | Status |",
        "|---|---|---|---|---|---|---|",
    ]
    for row in report.rows:
        if not row.ok:
            lines.append(
                f"| {row.method} | - | - | - | - | - | FAILED: {row.error} |"
            )
            continue
        s = row.summary
        status = "ok" if row.passed else "DIAGNOSTICS FAILED"
        if row.rho_generalized:
            status += "; rho per dataset (unequal K)"
        lines.append(
            f"| {row.method} | {_prob(s.p_base_better)} | {_prob(s.p_rope)} | "
            f"{_prob(s.p_other_better)} | {_eff(s.e_delta0)} | {_ci(s.ci_low, s.ci_high)} | {status} |"
        )
    lines.append("")
    return "\n".join(lines)


def render_compare_csv(report: ComparisonReport) -> str:
    lines = [
        "method,p_base_better,p_rope,p_other_better,e_delta0,ci_low,ci_high,"
        "p_bound_violation,max_rhat,min_ess_bulk,min_ess_tail,n_divergent,"
        "n_treedepth,attempts,pass,status"
    ]
    for row in report.rows:
        if not row.ok:
            lines.append(
                f"{row.method},,,,,,,,,,,,,{row.attempts},False,"
                f"\"{row.error}\""
            )
            continue
        s = row.summary
        d = row.diagnostics
        lines.append(
            ",".join(
                [
                    row.method,
                    _prob(s.p_base_better),
                    _prob(s.p_rope),
                    _prob(s.p_other_better),
                    _eff(s.e_delta0),
                    _eff(s.ci_low),
                    _eff(s.ci_high),
                    f"{s.p_bound_violation:.2e}",
                    f"{d.max_rhat:.3f}",
                    str(int(d.min_ess_bulk)),
                    str(int(d.min_ess_tail)),
                    str(d.n_divergent),
                    str(d.n_treedepth),
                    str(row.attempts),
                    str(row.passed),
                    "ok" if row.passed else "diagnostics_failed",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_compare_json(report: ComparisonReport) -> str:
    payload = {
        "tool": "hierbench",
        "version": report.tool_version,
        "kind": "compare",
        "baseline": report.baseline,
        "epsilon": report.epsilon,
        "input_sha256": report.input_sha256,
        "results_path": report.results_path,
        "model_config": _model_config_dict(report.model_config),
        "sampler_config": _sampler_config_dict(report.sampler_config),
        "partial": report.partial,
        "rows": [
            {
                "method": row.method,
                "summary": _summary_json(row.summary) if row.summary else None,
                "diagnostics": _diagnostics_json(row.diagnostics),
                "attempts": row.attempts,
                "n_datasets": row.n_datasets,
                "excluded_datasets": list(row.excluded),
                "rho_generalized": row.rho_generalized,
                "error": row.error,
            }
            for row in report.rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Diagnostics table (aggregated over a report's comparisons)
# ---------------------------------------------------------------------------


def diagnostics_summary(report: ComparisonReport) -> dict:
    """Aggregate per-method diagnostics into the one-line baseline record."""
    ok_rows = [r for r in report.rows if r.ok]
    if not ok_rows:
        return {
            "baseline": report.baseline,
            "n_comparisons": 0,
            "max_rhat": None,
            "min_ess_bulk": None,
            "min_ess_tail": None,
            "n_divergent": None,
            "n_treedepth": None,
            "max_p_bound_violation": None,
            "all_pass": False,
        }
    return {
        "baseline": report.baseline,
        "n_comparisons": len(ok_rows),
        "max_rhat": max(r.diagnostics.max_rhat for r in ok_rows),
        "min_ess_bulk": min(r.diagnostics.min_ess_bulk for r in ok_rows),
        "min_ess_tail": min(r.diagnostics.min_ess_tail for r in ok_rows),
        "n_divergent": sum(r.diagnostics.n_divergent for r in ok_rows),
        "n_treedepth": sum(r.diagnostics.n_treedepth for r in ok_rows),
        "max_p_bound_violation": max(r.summary.p_bound_violation for r in ok_rows),
        "all_pass": all(r.passed for r in report.rows),
    }


def diagnostics_summary_from_json(payload: dict) -> dict:
    """Same aggregation, but from a parsed compare.json payload."""
    rows = [
        r
        for r in payload.get("rows", [])
        if r.get("error") is None and r.get("summary") and r.get("diagnostics")
    ]
    if not rows:
        return {
            "baseline": payload.get("baseline", ""),
            "n_comparisons": 0,
            "max_rhat": None,
            "min_ess_bulk": None,
            "min_ess_tail": None,
            "n_divergent": None,
            "n_treedepth": None,
            "max_p_bound_violation": None,
            "all_pass": False,
        }
    return {
        "baseline": payload.get("baseline", ""),
        "n_comparisons": len(rows),
        "max_rhat": max(r["diagnostics"]["max_rhat"] for r in rows),
        "min_ess_bulk": min(r["diagnostics"]["min_ess_bulk"] for r in rows),
        "min_ess_tail": min(r["diagnostics"]["min_ess_tail"] for r in rows),
        "n_divergent": sum(r["diagnostics"]["n_divergent"] for r in rows),
        "n_treedepth": sum(r["diagnostics"]["n_treedepth"] for r in rows),
        "max_p_bound_violation": max(
            r["summary"]["p_bound_violation"] for r in rows
        ),
        "all_pass": all(r["diagnostics"]["pass"] for r in payload.get("rows", [])),
    }


def render_diagnostics_markdown(agg: dict, timestamp: str | None = None) -> str:
    lines = ["# Sampler diagnostics", ""]
    if timestamp is not None:
        lines += [f"Generated: {timestamp}", ""]
    lines += [
        "| Baseline | max R-hat | min ESS (bulk/tail) | div/td | max P(|delta_new|>1) |",
        "|---|---|---|---|---|",
    ]
    if agg["n_comparisons"] == 0:
        lines.append(f"| {agg['baseline']} | - | - | - | - |")
    else:
        lines.append(
            f"| {agg['baseline']} | {agg['max_rhat']:.3f} | "
            f"{int(agg['min_ess_bulk'])}/{int(agg['min_ess_tail'])} | "
            f"{agg['n_divergent']}/{agg['n_treedepth']} | "
            f"{agg['max_p_bound_violation']:.2e} |"
        )
    lines.append("")
    return "\n".join(lines)


def render_diagnostics_csv(agg: dict) -> str:
    header = (
        "baseline,n_comparisons,max_rhat,min_ess_bulk,min_ess_tail,"
        "n_divergent,n_treedepth,max_p_bound_violation,all_pass"
    )
    if agg["n_comparisons"] == 0:
        row = f"{agg['baseline']},0,,,,,,,False"
    else:
        row = ",".join(
            [
                agg["baseline"],
                str(agg["n_comparisons"]),
                f"{agg['max_rhat']:.3f}",
                str(int(agg["min_ess_bulk"])),
                str(int(agg["min_ess_tail"])),
                str(agg["n_divergent"]),
                str(agg["n_treedepth"]),
                f"{agg['max_p_bound_violation']:.2e}",
                str(agg["all_pass"]),
            ]
        )
    return header + "\n" + row + "\n"


# ---------------------------------------------------------------------------
# Sensitivity rendering
# ---------------------------------------------------------------------------


def render_sensitivity_markdown(
    report: SensitivityReport, timestamp: str | None = None
) -> str:
    lines = ["# Sensitivity analyses", ""]
    if timestamp is not None:
        lines += [f"Generated: {timestamp}", ""]
    for eps in report.epsilon_grid:
        lines += [
            f"## ROPE half-width {eps:g}",
            "",
            "| Comparison | " + " | ".join(COMPARE_COLUMNS) + " |",
            "|---|---|---|---|---|---|",
        ]
        for label, table in report.rope_tables.items():
            s = table[eps]
            lines.append(
                f"| {label} | {_prob(s.p_base_better)} | {_prob(s.p_rope)} | "
                f"{_prob(s.p_other_better)} | {_eff(s.e_delta0)} | {_ci(s.ci_low, s.ci_high)} |"
            )
        lines.append("")
    lines += [
        "## Variant sensitivity (max absolute changes vs default)",
        "",
        "| Metric | " + " | ".join(v.label() for v in report.variants) + " |",
        "|---|" + "---|" * len(report.variants),
    ]
    metric_rows = [
        ("max |dP| (win)", "max_dp_win"),
        ("max |dP| (rope)", "max_dp_rope"),
        ("max |dP| (loss)", "max_dp_loss"),
        ("max |dE[delta0]|", "max_de_delta0"),
    ]
    for label, attr in metric_rows:
        cells = [
            _eff(getattr(report.variant_deltas[v.label()], attr)) for v in report.variants
        ]
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)


def render_sensitivity_csv(report: SensitivityReport) -> str:
    lines = [
        "record,epsilon,comparison,variant,p_base_better,p_rope,p_other_better,"
        "e_delta0,ci_low,ci_high,max_dp_win,max_dp_rope,max_dp_loss,max_de_delta0"
    ]
    for eps in report.epsilon_grid:
        for label, table in report.rope_tables.items():
            s = table[eps]
            lines.append(
                f"rope,{eps:g},{label},,{_prob(s.p_base_better)},{_prob(s.p_rope)},"
                f"{_prob(s.p_other_better)},{_eff(s.e_delta0)},{_eff(s.ci_low)},"
                f"{_eff(s.ci_high)},,,,"
            )
    for variant in report.variants:
        d = report.variant_deltas[variant.label()]
        lines.append(
            f"variant_delta,,,{variant.label()},,,,,,,"
            f"{_eff(d.max_dp_win)},{_eff(d.max_dp_rope)},{_eff(d.max_dp_loss)},"
            f"{_eff(d.max_de_delta0)}"
        )
    return "\n".join(lines) + "\n"


def render_sensitivity_json(report: SensitivityReport) -> str:
    payload = {
        "tool": "hierbench",
        "version": __version__,
        "kind": "sensitivity",
        "epsilon_grid": list(report.epsilon_grid),
        "default_variant": {
            "rho_rule": report.default_variant.rho_rule,
            "bound_multiplier": report.default_variant.bound_multiplier,
        },
        "rope_tables": {
            label: {str(eps): _summary_json(s) for eps, s in table.items()}
            for label, table in report.rope_tables.items()
        },
        "default_diagnostics": {
            label: _diagnostics_json(d)
            for label, d in report.default_diagnostics.items()
        },
        "default_attempts": dict(report.default_attempts),
        "variants": [
            {"rho_rule": v.rho_rule, "bound_multiplier": v.bound_multiplier}
            for v in report.variants
        ],
        "variant_deltas": {
            label: {
                "max_dp_win": d.max_dp_win,
                "max_dp_rope": d.max_dp_rope,
                "max_dp_loss": d.max_dp_loss,
                "max_de_delta0": d.max_de_delta0,
            }
            for label, d in report.variant_deltas.items()
        },
        "variant_summaries": {
            vlabel: {label: _summary_json(s) for label, s in summaries.items()}
            for vlabel, summaries in report.variant_summaries.items()
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def run_sensitivity(run_cfg: RunConfig) -> SensitivityReport:
    """Variant and ROPE sweeps for all methods against the baseline."""
    raw = Path(run_cfg.results_path).read_bytes()
    fmt = "json" if run_cfg.results_path.endswith(".json") else "csv"
    table = parse_results(raw, format=fmt)
    if run_cfg.baseline_method not in table.methods():
        raise HierbenchError(
            f"baseline method {run_cfg.baseline_method!r} not present in results"
        )
    if run_cfg.methods is not None:
        methods = list(run_cfg.methods)
    else:
        methods = [m for m in table.methods() if m != run_cfg.baseline_method]
    pairs = [
        pairwise_differences(table, run_cfg.baseline_method, m) for m in methods
    ]
    pairs = [population_scales(p, run_cfg.bound_multiplier) for p in pairs]
    return variant_sweep(
        pairs,
        run_cfg.model_config(),
        run_cfg.sampler_config(),
        epsilons=run_cfg.epsilons,
    )


# ---------------------------------------------------------------------------
# Raw draw dump and file output
# ---------------------------------------------------------------------------


def render_draws_csv(draws: PosteriorDraws) -> str:
    lines = ["chain,draw," + ",".join(draws.parameter_names)]
    for c in range(draws.n_chains):
        for m in range(draws.n_draws):
            values = ",".join(repr(float(v)) for v in draws.draws[c, m])
            lines.append(f"{c},{m},{values}")
    return "\n".join(lines) + "\n"


def atomic_write(path: Path, data: bytes) -> None:
    """Write via temp file + rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def timestamp_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_compare_outputs(
    report: ComparisonReport,
    draws_by_method: dict[str, PosteriorDraws],
    output_dir: str,
    *,
    include_timestamp: bool = True,
    emit_raw_draws: bool = False,
) -> list[Path]:
    """Write compare.{md,csv,json} (and optional raw draws) atomically."""
    out = Path(output_dir)
    stamp = timestamp_now() if include_timestamp else None
    written = []
    for name, text in (
        ("compare.md", render_compare_markdown(report, stamp)),
        ("compare.csv", render_compare_csv(report)),
        ("compare.json", render_compare_json(report)),
    ):
        path = out / name
        atomic_write(path, text.encode("utf-8"))
        written.append(path)
    if emit_raw_draws:
        multiple = len(draws_by_method) > 1
        for method, draws in draws_by_method.items():
            name = f"draws_{_slug(method)}.csv" if multiple else "draws.csv"
            path = out / name
            atomic_write(path, render_draws_csv(draws).encode("utf-8"))
            written.append(path)
    return written


def write_sensitivity_outputs(
    report: SensitivityReport, output_dir: str, *, include_timestamp: bool = True
) -> list[Path]:
    out = Path(output_dir)
    stamp = timestamp_now() if include_timestamp else None
    written = []
    for name, text in (
        ("sensitivity.md", render_sensitivity_markdown(report, stamp)),
        ("sensitivity.csv", render_sensitivity_csv(report)),
        ("sensitivity.json", render_sensitivity_json(report)),
    ):
        path = out / name
        atomic_write(path, text.encode("utf-8"))
        written.append(path)
    return written


def write_diagnostics_outputs(
    agg: dict, output_dir: str, *, include_timestamp: bool = True
) -> list[Path]:
    out = Path(output_dir)
    stamp = timestamp_now() if include_timestamp else None
    written = []
    for name, text in (
        ("diagnostics.md", render_diagnostics_markdown(agg, stamp)),
        ("diagnostics.csv", render_diagnostics_csv(agg)),
    ):
        path = out / name
        atomic_write(path, text.encode("utf-8"))
        written.append(path)
    return written
