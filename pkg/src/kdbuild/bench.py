"""Benchmark harness and scaling-model fits for the two builders.

Point sets come from a fixed splitmix64 stream so every (n, k, seed)
triple is reproducible bit for bit across platforms and runs.  Timings are
taken per build phase (sort, duplicate removal, tree construction) with the
median over repeats reported, and three models can be fitted:

* ``nlogn``       t = m * n * log2(n), one parameter, through the origin
* ``amdahl``      t = t_s + t_1 / q
* ``contention``  t = t_s + t_1 / q + m_c * (q - 1), whose minimum sits at
                  q* = sqrt(t_1 / m_c)

The r reported for ``nlogn`` is the Pearson correlation between t and
n log2 n; for the two thread models it is the correlation between observed
and fitted times.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .build_median import build_median_staged
from .build_presort import build_presort_staged
from .core import ContractViolationError, EmptyInputError, PointSet

ALGORITHMS = ("presort", "median")

CSV_HEADER = ("algorithm", "n", "k", "q", "sort_s", "dedup_s", "build_s", "total_s")

_MASK64 = (1 << 64) - 1


class InsufficientDataError(ValueError):
    """A fit was asked for with too few samples to determine the model."""


class DegenerateFitError(ValueError):
    """The samples cannot pin down the model (e.g. too few distinct q)."""


def generate_points(n: int, k: int, seed: int = 0) -> PointSet:
    """Deterministic pseudo-random point set of n k-tuples.

    Coordinates are 32-bit signed values drawn from a splitmix64 stream:
    the i-th draw (1-based, row-major) mixes seed + i * 0x9E3779B97F4A7C15
    through the standard finalizer (xor-shift 30, * 0xBF58476D1CE4E5B9,
    xor-shift 27, * 0x94D049BB133111EB, xor-shift 31) and keeps the low 32
    bits as a two's-complement value.  Any platform reproduces the same
    table for the same (n, k, seed).
    """
    if n <= 0:
        raise ContractViolationError(f"need at least one point, got n={n}")
    if k <= 0:
        raise ContractViolationError(f"need at least one dimension, got k={k}")
    out = np.empty((n, k), dtype=np.int64)
    masked = seed & _MASK64
    if masked >= 1 << 63:
        masked -= 1 << 64  # pass as signed; the kernel casts back to uint64
    K.fill_coords(out, masked)
    return PointSet._wrap(out)


@dataclass(frozen=True)
class TimingSample:
    """Median phase timings for one (algorithm, n, k, q) cell."""

    algorithm: str
    n: int
    k: int
    q: int
    sort_s: float
    dedup_s: float
    build_s: float
    total_s: float

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "k": self.k,
            "q": self.q,
            "sort_s": self.sort_s,
            "dedup_s": self.dedup_s,
            "build_s": self.build_s,
            "total_s": self.total_s,
        }


@dataclass(frozen=True)
class LineFit:
    """Ordinary least-squares line t = slope * x + intercept."""

    slope: float
    intercept: float
    r: float


@dataclass(frozen=True)
class FitResult:
    """A fitted scaling model: parameter dict, correlation, optional q*."""

    model: str
    params: dict[str, float]
    r: float
    q_star: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "params": {name: float(v) for name, v in self.params.items()},
            "r": float(self.r),
            "q_star": None if self.q_star is None else float(self.q_star),
        }


_BUILDERS = {"presort": build_presort_staged, "median": build_median_staged}


def _expand_algorithms(algorithm: str) -> tuple[str, ...]:
    if algorithm == "both":
        return ALGORITHMS
    if algorithm in ALGORITHMS:
        return (algorithm,)
    raise ContractViolationError(
        f"unknown algorithm {algorithm!r}; pick presort, median or both"
    )


def warm_up() -> None:
    """Compile every kernel (idempotent); call before timing anything."""
    K.warm()


def _measure_cell(
    algorithm: str, points: PointSet, q: int, repeats: int
) -> TimingSample:
    build = _BUILDERS[algorithm]
    sorts: list[float] = []
    dedups: list[float] = []
    builds: list[float] = []
    totals: list[float] = []
    for _ in range(repeats):
        outcome = build(points, threads=q)
        sorts.append(outcome.sort_seconds)
        dedups.append(outcome.dedup_seconds)
        builds.append(outcome.build_seconds)
        totals.append(outcome.total_seconds)
    return TimingSample(
        algorithm=algorithm,
        n=points.n,
        k=points.k,
        q=q,
        sort_s=statistics.median(sorts),
        dedup_s=statistics.median(dedups),
        build_s=statistics.median(builds),
        total_s=statistics.median(totals),
    )


def run_benchmark(
    algorithm: str,
    n_values: Sequence[int],
    k: int,
    q_values: Sequence[int] = (1,),
    repeats: int = 3,
    seed: int = 0,
    warmup: bool = True,
    progress=None,
) -> list[TimingSample]:
    """Measure builds over a grid of sizes and thread budgets.

    One sample per (algorithm, n, q) cell, phases medianed over `repeats`
    runs of the same deterministic point set (which depends on n, k and
    seed only — not on q, so thread budgets race on identical input).
    `progress`, if given, is called with each finished TimingSample.
    """
    algorithms = _expand_algorithms(algorithm)
    if repeats < 1:
        raise ContractViolationError(f"repeats must be >= 1, got {repeats}")
    if not n_values:
        raise ContractViolationError("need at least one n value")
    if any(q < 1 for q in q_values) or not q_values:
        raise ContractViolationError("thread budgets must all be >= 1")
    if warmup:
        warm_up()
    samples: list[TimingSample] = []
    for alg in algorithms:
        for n in n_values:
            points = generate_points(n, k, seed)
            for q in q_values:
                sample = _measure_cell(alg, points, q, repeats)
                samples.append(sample)
                if progress is not None:
                    progress(sample)
    return samples


def sweep_dimensions(
    n: int,
    k_values: Sequence[int],
    seed: int = 0,
    repeats: int = 3,
    algorithm: str = "both",
    warmup: bool = True,
    progress=None,
) -> tuple[list[TimingSample], dict[str, LineFit | None]]:
    """Time both builders at fixed n across dimensions, plus a line fit.

    Returns the samples and, per algorithm, the least-squares line of total
    time against k — or None in place of the fit when fewer than two
    distinct k values make a slope meaningless.  The interesting read-out
    is the slope ratio: per-level presort work grows with k while selection
    work does not.
    """
    algorithms = _expand_algorithms(algorithm)
    if not k_values:
        raise ContractViolationError("need at least one k value")
    if warmup:
        warm_up()
    samples: list[TimingSample] = []
    for alg in algorithms:
        for k in k_values:
            points = generate_points(n, k, seed)
            sample = _measure_cell(alg, points, 1, repeats)
            samples.append(sample)
            if progress is not None:
                progress(sample)
    fits: dict[str, LineFit | None] = {}
    for alg in algorithms:
        own = [s for s in samples if s.algorithm == alg]
        ks = np.array([s.k for s in own], dtype=np.float64)
        ts = np.array([s.total_s for s in own], dtype=np.float64)
        if len(set(ks.tolist())) < 2:
            fits[alg] = None
            continue
        slope, intercept = np.polyfit(ks, ts, 1)
        fits[alg] = LineFit(
            slope=float(slope), intercept=float(intercept), r=_pearson(ks, ts)
        )
    return samples, fits


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    sx = float(np.std(x))
    sy = float(np.std(y))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = float(np.corrcoef(x, y)[0, 1])
    return r if math.isfinite(r) else 0.0


def _single_algorithm(samples: Sequence[TimingSample], what: str) -> str:
    algs = {s.algorithm for s in samples}
    if len(algs) != 1:
        raise ContractViolationError(
            f"{what} needs samples from a single algorithm, got {sorted(algs)}"
        )
    return algs.pop()


def fit_nlogn(samples: Sequence[TimingSample]) -> FitResult:
    """Fit t = m * n * log2(n) through the origin over an n sweep.

    Needs at least three samples at three distinct n, all from one
    algorithm at one thread budget.  r is the Pearson correlation between
    the observed totals and n log2 n.
    """
    if len(samples) < 3:
        raise InsufficientDataError(
            f"nlogn fit needs at least 3 samples, got {len(samples)}"
        )
    _single_algorithm(samples, "nlogn fit")
    if len({s.q for s in samples}) != 1:
        raise ContractViolationError("nlogn fit needs samples at a single thread budget")
    if len({s.n for s in samples}) < 3:
        raise InsufficientDataError("nlogn fit needs at least 3 distinct n values")
    x = np.array([s.n * math.log2(s.n) for s in samples], dtype=np.float64)
    t = np.array([s.total_s for s in samples], dtype=np.float64)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise DegenerateFitError("all samples have n = 1; the model is undefined")
    m = float(np.dot(t, x)) / denom
    return FitResult(model="nlogn", params={"m": m}, r=_pearson(x, t))


def _q_design_fit(
    samples: Sequence[TimingSample],
    columns,
    names: tuple[str, ...],
    model: str,
    min_samples: int,
    min_distinct_q: int,
) -> tuple[dict[str, float], float]:
    if len(samples) < min_samples:
        raise InsufficientDataError(
            f"{model} fit needs at least {min_samples} samples, got {len(samples)}"
        )
    _single_algorithm(samples, f"{model} fit")
    if len({(s.n, s.k) for s in samples}) != 1:
        raise ContractViolationError(
            f"{model} fit needs samples at a single (n, k) point"
        )
    qs = np.array([s.q for s in samples], dtype=np.float64)
    if len(set(qs.tolist())) < min_distinct_q:
        raise DegenerateFitError(
            f"{model} fit needs at least {min_distinct_q} distinct thread budgets"
        )
    t = np.array([s.total_s for s in samples], dtype=np.float64)
    design = np.column_stack(columns(qs))
    coef, _, rank, _ = np.linalg.lstsq(design, t, rcond=None)
    if rank < design.shape[1]:
        raise DegenerateFitError(f"{model} design matrix is rank deficient")
    fitted = design @ coef
    params = {name: float(c) for name, c in zip(names, coef)}
    return params, _pearson(t, fitted)


def fit_amdahl(samples: Sequence[TimingSample]) -> FitResult:
    """Fit t = t_s + t_1 / q over a thread-budget sweep at fixed n."""
    params, r = _q_design_fit(
        samples,
        columns=lambda qs: (np.ones_like(qs), 1.0 / qs),
        names=("t_s", "t_1"),
        model="amdahl",
        min_samples=3,
        min_distinct_q=2,
    )
    return FitResult(model="amdahl", params=params, r=r)


def fit_contention(samples: Sequence[TimingSample]) -> FitResult:
    """Fit t = t_s + t_1 / q + m_c * (q - 1) over a thread-budget sweep.

    The linear term prices per-thread contention; when both t_1 and m_c
    come out positive the model's minimum q* = sqrt(t_1 / m_c) is reported,
    otherwise q_star is None.
    """
    params, r = _q_design_fit(
        samples,
        columns=lambda qs: (np.ones_like(qs), 1.0 / qs, qs - 1.0),
        names=("t_s", "t_1", "m_c"),
        model="contention",
        min_samples=4,
        min_distinct_q=3,
    )
    q_star = None
    if params["m_c"] > 0.0 and params["t_1"] > 0.0:
        q_star = math.sqrt(params["t_1"] / params["m_c"])
    return FitResult(model="contention", params=params, r=r, q_star=q_star)


MODEL_FITTERS = {
    "nlogn": fit_nlogn,
    "amdahl": fit_amdahl,
    "contention": fit_contention,
}


def write_samples(target, samples: Iterable[TimingSample]) -> None:
    """Write samples as CSV (header + one row per sample, repr floats)."""

    def emit(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow(
                [
                    s.algorithm,
                    s.n,
                    s.k,
                    s.q,
                    repr(s.sort_s),
                    repr(s.dedup_s),
                    repr(s.build_s),
                    repr(s.total_s),
                ]
            )

    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            emit(fh)
    else:
        emit(target)


def read_samples(source) -> list[TimingSample]:
    """Read a CSV written by write_samples; validates the exact header."""

    def parse(fh) -> list[TimingSample]:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractViolationError("sample CSV is empty") from None
        if tuple(header) != CSV_HEADER:
            raise ContractViolationError(
                f"unexpected CSV header {header!r}; expected {','.join(CSV_HEADER)}"
            )
        out: list[TimingSample] = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ContractViolationError(
                    f"CSV row {row_no} has {len(row)} fields, expected {len(CSV_HEADER)}"
                )
            try:
                out.append(
                    TimingSample(
                        algorithm=row[0],
                        n=int(row[1]),
                        k=int(row[2]),
                        q=int(row[3]),
                        sort_s=float(row[4]),
                        dedup_s=float(row[5]),
                        build_s=float(row[6]),
                        total_s=float(row[7]),
                    )
                )
            except ValueError as exc:
                raise ContractViolationError(f"CSV row {row_no}: {exc}") from None
        return out

    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", newline="") as fh:
            return parse(fh)
    return parse(source)


def save_points(target, points: PointSet) -> None:
    """Write a point set as text: one tuple per line, single-space separated."""

    def emit(fh) -> None:
        for row in points.coords:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")

    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w") as fh:
            emit(fh)
    else:
        emit(target)


def load_points(source) -> PointSet:
    """Read a point set written by save_points (k ints per line)."""

    def parse(fh) -> PointSet:
        rows: list[list[int]] = []
        width = -1
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split()
            try:
                row = [int(p) for p in parts]
            except ValueError:
                raise ContractViolationError(
                    f"line {line_no}: coordinates must be decimal integers"
                ) from None
            if width == -1:
                width = len(row)
            elif len(row) != width:
                raise ContractViolationError(
                    f"line {line_no}: expected {width} coordinates, got {len(row)}"
                )
            rows.append(row)
        if not rows:
            raise EmptyInputError("points file holds no tuples")
        return PointSet(rows)

    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r") as fh:
            return parse(fh)
    return parse(source)


def doubling_sizes(n_min: int, n_max: int) -> list[int]:
    """n_min, 2*n_min, 4*n_min, ... up to and including n_max if reached."""
    if n_min < 1 or n_max < n_min:
        raise ContractViolationError(
            f"size range [{n_min}, {n_max}] is not a valid sweep"
        )
    out = []
    n = n_min
    while n <= n_max:
        out.append(n)
        n *= 2
    return out
