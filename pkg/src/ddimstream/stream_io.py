"""Batch-stream CSV ingestion, trace persistence, and run configuration.

Stream format: UTF-8 CSV with header ``t,x_1,...,x_m``, one row per
observation, rows grouped by (nondecreasing) time index.  Traces are
schema-versioned JSON lines, one record per processed batch.  Annotations
(ground truth for evaluation) are a small JSON document.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataFormatError, SchemaVersionError

TRACE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class DataBatch:
    """One time step's observation matrix (n rows, m columns)."""

    t: int
    X: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if X.shape[0] < 1:
            raise DataFormatError(f"batch at t={self.t} is empty")
        if not np.all(np.isfinite(X)):
            raise DataFormatError(f"batch at t={self.t} contains non-finite values")
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


@dataclass
class Annotations:
    """Ground truth for a synthetic stream: true model index per step, sign
    times, and transition intervals (inclusive)."""

    true_k: list[int]
    sign_times: list[int]
    transitions: list[tuple[int, int]]

    def save(self, path) -> None:
        payload = {
            "true_k": list(map(int, self.true_k)),
            "sign_times": list(map(int, self.sign_times)),
            "transitions": [[int(a), int(b)] for a, b in self.transitions],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)

    @classmethod
    def load(cls, path) -> "Annotations":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            true_k=payload["true_k"],
            sign_times=payload["sign_times"],
            transitions=[tuple(iv) for iv in payload["transitions"]],
        )


def read_batch_stream(path) -> list[DataBatch]:
    """Parse a batch-stream CSV.  An empty file yields an empty stream."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if not header or header[0] != "t":
            raise DataFormatError("header must start with column 't'", line=1)
        m = len(header) - 1
        if m < 1:
            raise DataFormatError("header declares no data columns", line=1)

        batches: list[DataBatch] = []
        cur_t: int | None = None
        cur_rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != m + 1:
                raise DataFormatError(f"expected {m + 1} columns, found {len(row)}", line=lineno)
            try:
                t = int(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataFormatError(str(exc), line=lineno) from None
            if any(not math.isfinite(v) for v in values):
                raise DataFormatError("non-finite value", line=lineno)
            if cur_t is not None and t < cur_t:
                raise DataFormatError(f"time index decreased from {cur_t} to {t}", line=lineno)
            if cur_t is not None and t != cur_t:
                batches.append(DataBatch(t=cur_t, X=np.array(cur_rows)))
                cur_rows = []
            cur_t = t
            cur_rows.append(values)
        if cur_t is not None:
            batches.append(DataBatch(t=cur_t, X=np.array(cur_rows)))
        return batches


def write_batch_stream(batches: list[DataBatch], path) -> None:
    if batches:
        m = batches[0].m
    else:
        m = 1
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x_{j}" for j in range(1, m + 1)])
        for batch in batches:
            for row in batch.X:
                writer.writerow([batch.t] + [repr(float(v)) for v in row])


@dataclass
class TraceRecord:
    """Per-step record: Ddim value, posterior, SDMS estimate, detector scores
    and alarms, and the step's nuisance values."""

    t: int
    n: int
    ddim: float
    posterior: list[float]
    k_hat: int
    scores: dict[str, float]
    alarms: list[dict]
    gamma: float
    beta: float
    entropy: float
    assign_seed: int | None = None

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema_version"] = TRACE_SCHEMA_VERSION
        return d


def _decode_record(d: dict, lineno: int) -> TraceRecord:
    version = d.pop("schema_version", None)
    if version != TRACE_SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported trace schema version: {version!r}", line=lineno)
    return TraceRecord(**d)


def write_trace(records: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")


def read_trace(path) -> list[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(str(exc), line=lineno) from None
            records.append(_decode_record(d, lineno))
    return records


def trace_to_ddim_csv(records: list[TraceRecord], path) -> None:
    """Two-column (t, ddim) projection for plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "ddim"])
        for rec in records:
            writer.writerow([rec.t, repr(rec.ddim)])


def trace_to_scores_csv(records: list[TraceRecord], path) -> None:
    """(t, detector, score) projection."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "detector", "score"])
        for rec in records:
            for name, score in sorted(rec.scores.items()):
                writer.writerow([rec.t, name, repr(score)])


def trace_to_alarms_csv(records: list[TraceRecord], path) -> None:
    """(t, detector, score) rows for raised alarms only."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "detector", "score"])
        for rec in records:
            for alarm in rec.alarms:
                writer.writerow([alarm["t"], alarm["detector"], repr(alarm["score"])])


DEFAULT_DETECTORS = ("th", "diff", "sdms", "fs", "fsw_th", "fsw_diff", "se")


@dataclass
class RunConfig:
    """Everything needed to reproduce a run from a stream file."""

    family: str = "gmm"
    k_max: int = 5
    seed: int = 0
    detectors: tuple[str, ...] = DEFAULT_DETECTORS
    delta1: float = 0.1
    delta2: float = 0.1
    se_threshold: float = 0.5
    lam: float = 1.0
    a: float = 2.0
    b: float = 10.0
    em_restarts: int = 5
    em_tol: float = 1e-6
    em_max_iter: int = 300
    assign_mode: str = "sample"
    window: int | None = None       # AR coding window; None = batch size
    cache_path: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in ("gmm", "ar"):
            raise ConfigError(f"family must be 'gmm' or 'ar', got {self.family!r}")
        unknown = set(self.detectors) - set(DEFAULT_DETECTORS)
        if unknown:
            raise ConfigError(f"unknown detectors: {sorted(unknown)}")

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if "detectors" in payload:
            payload["detectors"] = tuple(payload["detectors"])
        return cls(**payload)
