"""Deterministic missing-modality masks, generated once per split.

Masks are sampled at the split level rather than per batch so that
training conditions stay identical across epochs and reruns. Rates are
defined per number of missing modalities: for rate r and M modalities,
exactly floor(r * n) samples miss exactly k modalities for each
k in 1..M-1, and the remainder keeps all modalities. No row ever loses
everything, because k never reaches M.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from .errors import InfeasibleSpec, MalformedRow
from .seeds import derive_seed


@dataclass(frozen=True)
class MaskSpec:
    """Parameters of one mask generation run."""

    n_samples: int
    n_modalities: int
    rate: float
    seed: int
    split_id: str = ""

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if self.n_modalities < 2:
            raise ValueError("n_modalities must be at least 2")
        if not 0.0 <= self.rate < 1.0:
            raise ValueError("rate must lie in [0, 1)")
        if self.rate * (self.n_modalities - 1) >= 1.0 + 1e-12:
            raise InfeasibleSpec(
                f"rate {self.rate} with {self.n_modalities} modalities exceeds the sample budget"
            )


@dataclass(frozen=True)
class MaskSet:
    """Binary availability matrix (1 = modality present) plus spec echo."""

    masks: np.ndarray  # (n_samples, n_modalities) int8
    spec: MaskSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "masks", np.asarray(self.masks, dtype=np.int8))

    @property
    def n_samples(self) -> int:
        return self.masks.shape[0]

    @property
    def n_modalities(self) -> int:
        return self.masks.shape[1]

    def count_missing(self, k: int) -> int:
        """Number of rows missing exactly k modalities."""
        zeros = self.n_modalities - self.masks.sum(axis=1)
        return int(np.sum(zeros == k))

    def __eq__(self, other):
        if not isinstance(other, MaskSet):
            return NotImplemented
        return np.array_equal(self.masks, other.masks) and self.spec == other.spec


def generate_masks(spec: MaskSpec) -> MaskSet:
    """Generate the availability matrix for one split, deterministically.

    Samples are shuffled once and sliced into the per-k groups, which makes
    the group counts exact by construction; within a group, the missing
    subset is drawn uniformly. The RNG stream is derived from (seed,
    split_id), so different splits of the same run differ while reruns
    do not.
    """
    n, m = spec.n_samples, spec.n_modalities
    group = math.floor(spec.rate * n)
    if (m - 1) * group > n:
        raise InfeasibleSpec(
            f"{m - 1} groups of {group} samples exceed n_samples={n}"
        )
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(derive_seed(spec.seed, "mask", spec.split_id)))
    )
    order = rng.permutation(n)
    masks = np.ones((n, m), dtype=np.int8)
    pos = 0
    for k in range(1, m):
        for row in order[pos : pos + group]:
            missing = rng.choice(m, size=k, replace=False)
            masks[row, missing] = 0
        pos += group
    return MaskSet(masks=masks, spec=spec)


def _modality_names(m: int) -> list[str]:
    return [f"modality_{j}" for j in range(m)]


def serialize_masks(mask_set: MaskSet, format: str = "csv") -> bytes:
    """Encode a MaskSet as CSV (matrix only) or JSON (matrix plus spec)."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sample"] + _modality_names(mask_set.n_modalities))
        for idx, row in enumerate(mask_set.masks):
            writer.writerow([idx] + [int(v) for v in row])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        spec = mask_set.spec
        payload = {
            "spec": None
            if spec is None
            else {
                "n_samples": spec.n_samples,
                "n_modalities": spec.n_modalities,
                "rate": spec.rate,
                "seed": spec.seed,
                "split_id": spec.split_id,
            },
            "modalities": _modality_names(mask_set.n_modalities),
            "masks": [[int(v) for v in row] for row in mask_set.masks],
        }
        return json.dumps(payload, indent=2).encode("utf-8")
    raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")


def parse_masks(stream: Union[bytes, str, IO[bytes]]) -> MaskSet:
    """Decode a mask file; the format is sniffed from the first byte.

    CSV files carry only the matrix, so the spec echo is None there; JSON
    round-trips the full spec.
    """
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    else:
        text = stream
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_masks_json(text)
    return _parse_masks_csv(text)


def _parse_masks_json(text: str) -> MaskSet:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRow(f"invalid mask JSON: {exc.msg}", line=exc.lineno) from None
    try:
        masks = np.asarray(payload["masks"], dtype=np.int8)
        spec_raw = payload.get("spec")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRow(f"invalid mask JSON payload: {exc}") from None
    spec = None
    if spec_raw is not None:
        spec = MaskSpec(
            n_samples=int(spec_raw["n_samples"]),
            n_modalities=int(spec_raw["n_modalities"]),
            rate=float(spec_raw["rate"]),
            seed=int(spec_raw["seed"]),
            split_id=str(spec_raw.get("split_id", "")),
        )
    if masks.ndim != 2 or not np.isin(masks, (0, 1)).all():
        raise MalformedRow("mask matrix must be binary and two-dimensional")
    return MaskSet(masks=masks, spec=spec)


def _parse_masks_csv(text: str) -> MaskSet:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty mask file", line=1) from None
    if not header or header[0].strip() != "sample" or len(header) < 3:
        raise MalformedRow("expected header sample,<modality_0>,...", line=1)
    m = len(header) - 1
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != m + 1:
            raise MalformedRow(f"expected {m + 1} fields, got {len(row)}", line=lineno)
        try:
            values = [int(v) for v in row[1:]]
        except ValueError:
            raise MalformedRow("mask entries must be integers", line=lineno) from None
        if any(v not in (0, 1) for v in values):
            raise MalformedRow("mask entries must be 0 or 1", line=lineno)
        rows.append(values)
    if not rows:
        raise MalformedRow("mask file has no rows")
    return MaskSet(masks=np.asarray(rows, dtype=np.int8), spec=None)
