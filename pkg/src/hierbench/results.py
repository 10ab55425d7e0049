"""Fold-level result tables and pairwise comparison data.

Results arrive as flat records (dataset, method, fold, value) from CSV or
JSON. Comparisons are built on pairwise complete cases: a dataset enters a
comparison only when both methods have a full fold set there. The per-fold
differences feed the hierarchical model, and the population scale
statistics computed here define the upper bounds of the uniform scale
priors.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Union

import numpy as np

from .errors import (
    DuplicateRecord,
    InconsistentFoldSet,
    MalformedRow,
    NoCommonDatasets,
    UnknownMethod,
    ValueOutOfRange,
)

CSV_HEADER = ("dataset", "method", "fold", "value")
CSV_HEADER_WITH_METRIC = CSV_HEADER + ("metric",)

# Prior upper bounds must stay positive even for all-equal folds; a zero
# scale is replaced by this floor and flagged.
SCALE_FLOOR = 1e-6

DEFAULT_BOUND_MULTIPLIER = 1000.0


@dataclass(frozen=True)
class FoldRecord:
    """One cross-validation score: method on dataset, one fold."""

    dataset_id: str
    method_id: str
    fold_index: int
    value: float
    metric_name: str = ""

    def __post_init__(self):
        if self.fold_index < 0:
            raise MalformedRow(f"negative fold index {self.fold_index}")
        if not math.isfinite(self.value) or not 0.0 <= self.value <= 1.0:
            raise ValueOutOfRange(
                f"value {self.value!r} outside [0, 1] "
                f"({self.dataset_id}/{self.method_id}/fold {self.fold_index})"
            )


@dataclass(frozen=True)
class ResultTable:
    """Validated collection of fold records.

    Within a dataset every present method covers the identical fold set
    0..K-1; duplicates are rejected at construction.
    """

    records: tuple[FoldRecord, ...]
    folds_per_dataset: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[FoldRecord]) -> "ResultTable":
        records = tuple(records)
        seen: dict[tuple[str, str, int], FoldRecord] = {}
        folds: dict[str, dict[str, set[int]]] = {}
        for rec in records:
            key = (rec.dataset_id, rec.method_id, rec.fold_index)
            if key in seen:
                raise DuplicateRecord(
                    f"duplicate record for dataset={rec.dataset_id!r} "
                    f"method={rec.method_id!r} fold={rec.fold_index}"
                )
            seen[key] = rec
            folds.setdefault(rec.dataset_id, {}).setdefault(
                rec.method_id, set()
            ).add(rec.fold_index)

        folds_per_dataset: dict[str, int] = {}
        for dataset_id, per_method in folds.items():
            fold_sets = {frozenset(s) for s in per_method.values()}
            if len(fold_sets) != 1:
                raise InconsistentFoldSet(
                    f"dataset {dataset_id!r}: methods disagree on fold sets"
                )
            (fold_set,) = fold_sets
            k = len(fold_set)
            if fold_set != frozenset(range(k)):
                raise InconsistentFoldSet(
                    f"dataset {dataset_id!r}: fold indices are not 0..{k - 1}"
                )
            folds_per_dataset[dataset_id] = k
        return cls(records=records, folds_per_dataset=folds_per_dataset)

    def methods(self) -> tuple[str, ...]:
        """Method ids in first-appearance order."""
        out: list[str] = []
        for rec in self.records:
            if rec.method_id not in out:
                out.append(rec.method_id)
        return tuple(out)

    def datasets(self) -> tuple[str, ...]:
        return tuple(sorted(self.folds_per_dataset))

    def values(self, dataset_id: str, method_id: str) -> np.ndarray | None:
        """Fold-ordered score vector, or None if the pair is absent."""
        rows = {
            rec.fold_index: rec.value
            for rec in self.records
            if rec.dataset_id == dataset_id and rec.method_id == method_id
        }
        if not rows:
            return None
        k = self.folds_per_dataset[dataset_id]
        return np.array([rows[f] for f in range(k)], dtype=float)

    def metric_names(self, dataset_id: str) -> tuple[str, ...]:
        names = {
            rec.metric_name
            for rec in self.records
            if rec.dataset_id == dataset_id and rec.metric_name
        }
        return tuple(sorted(names))

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        has_metric = any(rec.metric_name for rec in self.records)
        writer.writerow(CSV_HEADER_WITH_METRIC if has_metric else CSV_HEADER)
        for rec in self.records:
            row = [rec.dataset_id, rec.method_id, rec.fold_index, repr(float(rec.value))]
            if has_metric:
                row.append(rec.metric_name)
            writer.writerow(row)
        return buf.getvalue().encode("utf-8")

    def to_json_bytes(self) -> bytes:
        rows = []
        for rec in self.records:
            row = {
                "dataset": rec.dataset_id,
                "method": rec.method_id,
                "fold": rec.fold_index,
                "value": rec.value,
            }
            if rec.metric_name:
                row["metric"] = rec.metric_name
            rows.append(row)
        return json.dumps(rows, indent=2).encode("utf-8")


@dataclass(frozen=True)
class PairDataset:
    """Fold-level differences of one dataset within a comparison."""

    dataset_id: str
    n_folds: int
    diffs: np.ndarray  # shape (n_folds,), method_i minus method_j
    metric_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "diffs", np.asarray(self.diffs, dtype=float))
        if self.diffs.shape != (self.n_folds,):
            raise ValueError("diffs shape does not match n_folds")


@dataclass(frozen=True)
class PairData:
    """Aligned fold-difference data for one comparison (i minus j).

    The scale fields are None until :func:`population_scales` fills them.
    ``excluded`` lists datasets dropped for missing either method or for
    having fewer than two folds.
    """

    method_i: str
    method_j: str
    datasets: tuple[PairDataset, ...]
    excluded: tuple[str, ...] = ()
    bound_multiplier: float | None = None
    s_xbar: float | None = None
    s0_bar: float | None = None
    s_d: np.ndarray | None = None
    sd_bar: np.ndarray | None = None
    degenerate_scale: bool = False
    degenerate_fields: tuple[str, ...] = ()

    @property
    def n_datasets(self) -> int:
        return len(self.datasets)

    @property
    def dataset_ids(self) -> tuple[str, ...]:
        return tuple(ds.dataset_id for ds in self.datasets)

    def label(self) -> str:
        return f"{self.method_i} vs {self.method_j}"


def _decode(stream: Union[bytes, str, IO[bytes]]) -> str:
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        try:
            return stream.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedRow(f"input is not valid UTF-8: {exc}") from None
    return stream


def _parse_csv(text: str) -> list[FoldRecord]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty input", line=1) from None
    header = tuple(h.strip() for h in header)
    if header not in (CSV_HEADER, CSV_HEADER_WITH_METRIC):
        raise MalformedRow(
            f"expected header {','.join(CSV_HEADER)}[,metric], got {','.join(header)}",
            line=1,
        )
    has_metric = header == CSV_HEADER_WITH_METRIC
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise MalformedRow(
                f"expected {len(header)} fields, got {len(row)}", line=lineno
            )
        dataset, method, fold_s, value_s = (c.strip() for c in row[:4])
        metric = row[4].strip() if has_metric else ""
        try:
            fold = int(fold_s)
        except ValueError:
            raise MalformedRow(f"fold {fold_s!r} is not an integer", line=lineno) from None
        try:
            value = float(value_s)
        except ValueError:
            raise MalformedRow(f"value {value_s!r} is not a number", line=lineno) from None
        if fold < 0:
            raise MalformedRow(f"negative fold index {fold}", line=lineno)
        records.append(
            FoldRecord(
                dataset_id=dataset,
                method_id=method,
                fold_index=fold,
                value=value,
                metric_name=metric,
            )
        )
    return records


def _parse_json(text: str) -> list[FoldRecord]:
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRow(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(rows, list):
        raise MalformedRow("top-level JSON value must be an array")
    records = []
    for idx, row in enumerate(rows):
        if not isinstance(row, dict):
            raise MalformedRow(f"entry {idx} is not an object")
        try:
            records.append(
                FoldRecord(
                    dataset_id=str(row["dataset"]),
                    method_id=str(row["method"]),
                    fold_index=int(row["fold"]),
                    value=float(row["value"]),
                    metric_name=str(row.get("metric", "")),
                )
            )
        except KeyError as exc:
            raise MalformedRow(f"entry {idx} missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise MalformedRow(f"entry {idx}: {exc}") from None
    return records


def parse_results(stream: Union[bytes, str, IO[bytes]], format: str = "csv") -> ResultTable:
    """Parse and validate fold-level results from CSV or JSON.

    Raises MalformedRow (with line number for CSV), DuplicateRecord,
    ValueOutOfRange, or InconsistentFoldSet.
    """
    text = _decode(stream)
    if format == "csv":
        records = _parse_csv(text)
    elif format == "json":
        records = _parse_json(text)
    else:
        raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")
    return ResultTable.from_records(records)


def pairwise_differences(table: ResultTable, method_i: str, method_j: str) -> PairData:
    """Fold-by-fold differences (i minus j) over pairwise complete cases.

    Datasets missing either method are silently excluded; datasets with a
    single fold cannot contribute a fold-difference spread and are excluded
    too, with their ids recorded in ``excluded``. Dataset order is
    lexicographic so parameter indices are reproducible.
    """
    methods = set(table.methods())
    for m in (method_i, method_j):
        if m not in methods:
            raise UnknownMethod(f"method {m!r} not present in the result table")

    kept = []
    excluded = []
    for dataset_id in table.datasets():
        vi = table.values(dataset_id, method_i)
        vj = table.values(dataset_id, method_j)
        if vi is None or vj is None:
            excluded.append(dataset_id)
            continue
        k = table.folds_per_dataset[dataset_id]
        if k < 2:
            excluded.append(dataset_id)
            continue
        metrics = table.metric_names(dataset_id)
        kept.append(
            PairDataset(
                dataset_id=dataset_id,
                n_folds=k,
                diffs=vi - vj,
                metric_name=metrics[0] if metrics else "",
            )
        )
    if not kept:
        raise NoCommonDatasets(
            f"no dataset has complete folds for both {method_i!r} and {method_j!r}"
        )
    return PairData(
        method_i=method_i,
        method_j=method_j,
        datasets=tuple(kept),
        excluded=tuple(excluded),
    )


def population_scales(
    pair: PairData, bound_multiplier: float = DEFAULT_BOUND_MULTIPLIER
) -> PairData:
    """Fill the population scale statistics and prior upper bounds.

    s_xbar is the sample SD (denominator D-1) of the per-dataset mean
    differences, s0_bar = bound_multiplier * s_xbar; per-dataset fold SDs
    get the same treatment. Zero scales (all-equal values, or a single
    dataset) are floored at SCALE_FLOOR and flagged as degenerate.
    """
    if bound_multiplier <= 0:
        raise ValueError("bound_multiplier must be positive")
    if not pair.datasets:
        raise NoCommonDatasets("pair has no datasets")

    xbars = np.array([float(np.mean(ds.diffs)) for ds in pair.datasets])
    degenerate: list[str] = []

    if len(xbars) >= 2:
        s_xbar = float(np.std(xbars, ddof=1))
    else:
        s_xbar = 0.0
    s0_bar = bound_multiplier * s_xbar
    if s0_bar <= 0.0:
        s0_bar = SCALE_FLOOR
        degenerate.append("s0_bar")

    s_d = np.array([float(np.std(ds.diffs, ddof=1)) for ds in pair.datasets])
    sd_bar = bound_multiplier * s_d
    for idx, ds in enumerate(pair.datasets):
        if sd_bar[idx] <= 0.0:
            sd_bar[idx] = SCALE_FLOOR
            degenerate.append(f"sd_bar[{ds.dataset_id}]")

    return replace(
        pair,
        bound_multiplier=float(bound_multiplier),
        s_xbar=s_xbar,
        s0_bar=float(s0_bar),
        s_d=s_d,
        sd_bar=sd_bar,
        degenerate_scale=bool(degenerate),
        degenerate_fields=tuple(degenerate),
    )
