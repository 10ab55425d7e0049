"""Command line interface: compare, sensitivity, masks, diagnostics.

Exit codes: 0 on success, 2 when some fits failed diagnostics (partial
report written), 1 on hard errors (bad input, unknown baseline, empty
method list). A JSON config file can stand in for any flag; explicit
flags win over the config file, and HIERBENCH_SEED serves as the seed
fallback.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import HierbenchError
from .masks import MaskSpec, generate_masks, serialize_masks
from .report import (
    RunConfig,
    atomic_write,
    diagnostics_summary_from_json,
    run_compare,
    run_sensitivity,
    write_compare_outputs,
    write_diagnostics_outputs,
    write_sensitivity_outputs,
)
from .sensitivity import DEFAULT_EPSILONS

EXIT_OK = 0
EXIT_HARD_ERROR = 1
EXIT_PARTIAL = 2


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")
    if not isinstance(payload, dict):
        raise click.ClickException("config file must hold a JSON object")
    return payload


def _merged(ctx: click.Context, config: dict, name: str, value):
    """CLI flag if explicitly set, else config file entry, else default."""
    source = ctx.get_parameter_source(name)
    explicit = source in (
        click.core.ParameterSource.COMMANDLINE,
        click.core.ParameterSource.ENVIRONMENT,
    )
    if explicit or name not in config:
        return value
    return config[name]


def _parse_methods(raw) -> tuple[str, ...] | None:
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        return tuple(str(m) for m in raw)
    items = [m.strip() for m in str(raw).split(",") if m.strip()]
    return tuple(items)


def _parse_epsilons(raw) -> tuple[float, ...]:
    if raw is None:
        return DEFAULT_EPSILONS
    if isinstance(raw, (list, tuple)):
        return tuple(float(e) for e in raw)
    return tuple(float(e) for e in str(raw).split(",") if e.strip())


def _build_run_config(ctx, config, **kw) -> RunConfig:
    merged = {name: _merged(ctx, config, name, value) for name, value in kw.items()}
    merged["methods"] = _parse_methods(merged.get("methods"))
    if "epsilons" in merged:
        merged["epsilons"] = _parse_epsilons(merged.get("epsilons"))
    return RunConfig(**merged)


def _common_options(fn):
    opts = [
        click.option("--results", "results_path", required=True, help="Fold-level results file (csv or json)."),
        click.option("--baseline", "baseline_method", required=True, help="Baseline method id."),
        click.option("--methods", default=None, help="Comma-separated method allowlist (default: all others)."),
        click.option("--rho-rule", "rho_rule", type=click.Choice(["1/K", "1/(K-1)"]), default="1/K", show_default=True),
        click.option("--bound-multiplier", "bound_multiplier", type=float, default=1000.0, show_default=True),
        click.option("--chains", type=int, default=4, show_default=True),
        click.option("--warmup", type=int, default=2000, show_default=True),
        click.option("--draws", type=int, default=4000, show_default=True),
        click.option("--target-accept", "target_accept", type=float, default=0.8, show_default=True),
        click.option("--max-treedepth", "max_treedepth", type=int, default=10, show_default=True),
        click.option("--seed", type=int, default=0, envvar="HIERBENCH_SEED", show_default=True,
                     help="RNG seed (HIERBENCH_SEED as fallback)."),
        click.option("--output-dir", "output_dir", default=".", show_default=True),
        click.option("--no-timestamp", "include_timestamp", flag_value=False, default=True,
                     help="Suppress the timestamp line in markdown outputs."),
        click.option("--jobs", type=int, default=1, show_default=True, help="Parallel per-method fits."),
        click.option("--config", "config_path", default=None, help="JSON config file (flags override it)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="hierbench")
def main():
    """Statistical comparison of ML methods from cross-validation folds."""


@main.command()
@_common_options
@click.option("--epsilon", type=float, default=0.01, show_default=True, help="ROPE half-width.")
@click.option("--emit-raw-draws", "emit_raw_draws", is_flag=True, default=False,
              help="Also write the post-warmup draw matrices as CSV.")
@click.pass_context
def compare(ctx, config_path, **kw):
    """Compare every method against the baseline; write compare.{md,csv,json}."""
    config = _load_config(config_path)
    run_cfg = _build_run_config(ctx, config, **kw)
    try:
        report, draws = run_compare(run_cfg)
        write_compare_outputs(
            report,
            draws,
            run_cfg.output_dir,
            include_timestamp=run_cfg.include_timestamp,
            emit_raw_draws=run_cfg.emit_raw_draws,
        )
    except (HierbenchError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_HARD_ERROR)
    if not report.rows:
        click.echo("no methods to compare; header-only tables written", err=True)
        sys.exit(EXIT_HARD_ERROR)
    for row in report.rows:
        if row.ok:
            s = row.summary
            click.echo(
                f"{row.method}: P(base>other)={s.p_base_better:.2f} P(~)={s.p_rope:.2f} "
                f"P(other>base)={s.p_other_better:.2f} E[delta0]={s.e_delta0:.3f} "
                f"CI=[{s.ci_low:.3f},{s.ci_high:.3f}] attempts={row.attempts} "
                f"pass={row.passed}"
            )
        else:
            click.echo(f"{row.method}: FAILED ({row.error})")
    sys.exit(EXIT_OK if report.all_passed else EXIT_PARTIAL)


@main.command()
@_common_options
@click.option("--epsilon", type=float, default=0.01, show_default=True,
              help="ROPE half-width for the variant deltas.")
@click.option("--epsilons", default=None,
              help="Comma-separated ROPE sweep grid (default 0.005,0.01,0.02).")
@click.pass_context
def sensitivity(ctx, config_path, **kw):
    """ROPE and model-variant sensitivity sweeps; write sensitivity.{md,csv,json}."""
    config = _load_config(config_path)
    run_cfg = _build_run_config(ctx, config, **kw)
    try:
        report = run_sensitivity(run_cfg)
        write_sensitivity_outputs(
            report, run_cfg.output_dir, include_timestamp=run_cfg.include_timestamp
        )
    except (HierbenchError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_HARD_ERROR)
    for label, deltas in report.variant_deltas.items():
        click.echo(
            f"{label}: max|dP|win={deltas.max_dp_win:.3f} rope={deltas.max_dp_rope:.3f} "
            f"loss={deltas.max_dp_loss:.3f} max|dE|={deltas.max_de_delta0:.3f}"
        )
    all_pass = all(d.passed for d in report.default_diagnostics.values())
    sys.exit(EXIT_OK if all_pass else EXIT_PARTIAL)


@main.command()
@click.option("--n", "n_samples", type=int, required=True, help="Samples in the split.")
@click.option("--modalities", "n_modalities", type=int, required=True)
@click.option("--rate", type=float, required=True, help="Missing rate per missing-modality count.")
@click.option("--seed", type=int, default=0, envvar="HIERBENCH_SEED", show_default=True)
@click.option("--split", "split_id", default="", help="Split identifier (train/val/test).")
@click.option("--output-dir", "output_dir", default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]), default="csv",
              show_default=True)
def masks(n_samples, n_modalities, rate, seed, split_id, output_dir, fmt):
    """Generate a deterministic missing-modality mask file for one split."""
    try:
        spec = MaskSpec(
            n_samples=n_samples,
            n_modalities=n_modalities,
            rate=rate,
            seed=seed,
            split_id=split_id,
        )
        mask_set = generate_masks(spec)
        out = Path(output_dir)
        tag = split_id if split_id else "split"
        written = []
        if fmt in ("csv", "both"):
            path = out / f"masks_{tag}.csv"
            atomic_write(path, serialize_masks(mask_set, "csv"))
            written.append(path)
        if fmt in ("json", "both"):
            path = out / f"masks_{tag}.json"
            atomic_write(path, serialize_masks(mask_set, "json"))
            written.append(path)
    except (HierbenchError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_HARD_ERROR)
    for path in written:
        click.echo(str(path))
    sys.exit(EXIT_OK)


@main.command()
@click.option("--report", "report_path", required=True, help="A compare.json produced by `compare`.")
@click.option("--output-dir", "output_dir", default=".", show_default=True)
@click.option("--no-timestamp", "include_timestamp", flag_value=False, default=True)
def diagnostics(report_path, output_dir, include_timestamp):
    """Render the aggregated sampler-diagnostics table from a compare report."""
    try:
        payload = json.loads(Path(report_path).read_text(encoding="utf-8"))
        agg = diagnostics_summary_from_json(payload)
        write_diagnostics_outputs(agg, output_dir, include_timestamp=include_timestamp)
    except (HierbenchError, OSError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_HARD_ERROR)
    click.echo(
        f"{agg['baseline']}: comparisons={agg['n_comparisons']} "
        f"all_pass={agg['all_pass']}"
    )
    sys.exit(EXIT_OK if agg["all_pass"] else EXIT_PARTIAL)


if __name__ == "__main__":
    main()
