"""Repeated train/test protocol and confusion-matrix metrics."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from sklearn.model_selection import train_test_split

from .const import (
    DEFAULT_C,
    DEFAULT_RUNS,
    DEFAULT_SEED,
    DEFAULT_TOL,
    DEFAULT_TRAIN_FRACTION,
    MAX_RUN_ATTEMPTS,
    SEIZURE_LABEL,
)
from .exceptions import DataError, StationPlotError
from .stats import FeatureTable, problem_classes
from .svm import KernelSpec, Scaler, SvmModel, standardize_fit, train_smo
from .utils import mean_std, run_rng

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature rows with targets +1 (positive class) and -1."""

    rows: NDArray[np.float64]
    targets: NDArray[np.int_]
    problem: str
    feature_names: tuple[str, ...] = ()
    source_ids: tuple[str, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        targets = np.asarray(self.targets, dtype=np.int_).ravel()
        if rows.shape[0] != targets.size:
            raise DataError(
                f"{rows.shape[0]} rows but {targets.size} targets", problem=self.problem
            )
        if not np.all(np.isin(targets, (-1, 1))):
            raise DataError("Targets must be +1 or -1", problem=self.problem)
        if np.unique(targets).size < 2:
            raise DataError("Dataset needs both classes", problem=self.problem)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.targets.size)

    def take(self, indices: ArrayLike) -> Partition:
        idx = np.asarray(indices, dtype=np.intp)
        return Partition(rows=self.rows[idx], targets=self.targets[idx], indices=idx)


@dataclass(frozen=True, eq=False)
class Partition:
    rows: NDArray[np.float64]
    targets: NDArray[np.int_]
    indices: NDArray[np.intp]


def build_dataset(
    table: FeatureTable,
    problem: str,
    features: Sequence[str] | None = None,
    positive: Sequence[str] = (SEIZURE_LABEL,),
) -> LabeledDataset:
    """Records of the problem's classes; positive-class tags map to +1."""
    negatives, positives = problem_classes(problem, table.labels, positive)
    names = tuple(features) if features is not None else table.feature_names
    keep = [r for r in table.records if r.label in negatives or r.label in positives]
    subset = FeatureTable(feature_names=table.feature_names, records=tuple(keep))
    return LabeledDataset(
        rows=subset.matrix(names),
        targets=np.array([1 if r.label in positives else -1 for r in keep]),
        problem=problem,
        feature_names=names,
        source_ids=tuple(r.source_id for r in keep),
        labels=tuple(r.label for r in keep),
    )


def _shuffle_split(
    members: NDArray[np.intp], train_fraction: float, rng: np.random.Generator
) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    n_train = int(np.floor(members.size * train_fraction + 0.5))
    n_train = min(max(n_train, 1), members.size - 1)
    train, test = train_test_split(
        members,
        train_size=n_train,
        shuffle=True,
        random_state=int(rng.integers(2**32 - 1)),
    )
    return train, test


def split(
    dataset: LabeledDataset,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    seed: int | Sequence[int] | np.random.Generator = DEFAULT_SEED,
    stratify: bool = True,
) -> tuple[Partition, Partition]:
    """Random train/test partition; stratified keeps floor(n*f + 0.5) per class."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    if stratify:
        train_parts = []
        test_parts = []
        for target in (-1, 1):
            members = np.flatnonzero(dataset.targets == target)
            if members.size < 2:
                raise DataError(
                    f"Class {target:+d} has {members.size} member(s), need at least 2",
                    problem=dataset.problem,
                )
            train, test = _shuffle_split(members, train_fraction, rng)
            train_parts.append(train)
            test_parts.append(test)
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        train, test = _shuffle_split(np.arange(len(dataset)), train_fraction, rng)
        train_idx = np.sort(train)
        test_idx = np.sort(test)

    return dataset.take(train_idx), dataset.take(test_idx)


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: Confusion) -> Confusion:
        return Confusion(
            self.tp + other.tp,
            self.tn + other.tn,
            self.fp + other.fp,
            self.fn + other.fn,
        )

    @classmethod
    def from_predictions(cls, targets: ArrayLike, predictions: ArrayLike) -> Confusion:
        t = np.asarray(targets)
        p = np.asarray(predictions)
        return cls(
            tp=int(np.sum((t == 1) & (p == 1))),
            tn=int(np.sum((t == -1) & (p == -1))),
            fp=int(np.sum((t == -1) & (p == 1))),
            fn=int(np.sum((t == 1) & (p == -1))),
        )


@dataclass(frozen=True)
class Metrics:
    """Percentages; ``None`` where the denominator is empty."""

    sensitivity: float | None
    specificity: float | None
    accuracy: float


def metrics(tp: int, tn: int, fp: int, fn: int) -> Metrics:
    if min(tp, tn, fp, fn) < 0:
        raise DataError("Confusion counts must be >= 0")
    total = tp + tn + fp + fn
    if total == 0:
        raise DataError("Confusion matrix is empty")
    return Metrics(
        sensitivity=100.0 * tp / (tp + fn) if tp + fn else None,
        specificity=100.0 * tn / (tn + fp) if tn + fp else None,
        accuracy=100.0 * (tp + tn) / total,
    )


@dataclass(frozen=True)
class RunOutcome:
    run: int
    attempt: int
    confusion: Confusion | None
    excluded: str | None = None

    @property
    def metrics(self) -> Metrics | None:
        if self.confusion is None:
            return None
        c = self.confusion
        return metrics(c.tp, c.tn, c.fp, c.fn)


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    std: float | None
    count: int

    def __str__(self) -> str:
        if self.mean is None or self.std is None:
            return "n/a"
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class KernelReport:
    kernel: KernelSpec
    accuracy: MetricSummary
    sensitivity: MetricSummary
    specificity: MetricSummary
    confusion: Confusion
    outcomes: tuple[RunOutcome, ...]

    @property
    def name(self) -> str:
        return self.kernel.name

    @property
    def excluded_runs(self) -> tuple[int, ...]:
        return tuple(o.run for o in self.outcomes if o.confusion is None)


@dataclass(frozen=True)
class EvalReport:
    problem: str
    runs: int
    seed: int
    train_fraction: float
    stratify: bool
    C: float
    feature_names: tuple[str, ...]
    kernels: tuple[KernelReport, ...]
    order: int | None = None
    models: dict[str, SvmModel] = field(default_factory=dict, compare=False, repr=False)

    def best_kernel(self) -> KernelReport | None:
        scored = [k for k in self.kernels if k.accuracy.mean is not None]
        if not scored:
            return None
        return max(scored, key=lambda k: k.accuracy.mean or 0.0)


def _summarize(values: list[float | None]) -> MetricSummary:
    present = [v for v in values if v is not None]
    if not present:
        return MetricSummary(None, None, 0)
    mean, std = mean_std(present)
    return MetricSummary(mean, std, len(present))


@dataclass(frozen=True)
class _Protocol:
    dataset: LabeledDataset
    kernels: tuple[KernelSpec, ...]
    C: float
    tol: float
    max_passes: int | None
    seed: int
    train_fraction: float
    stratify: bool


def _run_once(
    protocol: _Protocol, run: int
) -> tuple[list[RunOutcome], list[SvmModel | None]]:
    """One split per attempt shared by every kernel; failing kernels retry."""
    splits: dict[int, tuple[Partition, Partition, Scaler]] = {}

    def prepared(attempt: int) -> tuple[Partition, Partition, Scaler]:
        if attempt not in splits:
            train, test = split(
                protocol.dataset,
                protocol.train_fraction,
                run_rng(protocol.seed, run, attempt),
                protocol.stratify,
            )
            # scaler sees the training partition only
            scaler = standardize_fit(train.rows)
            splits[attempt] = (train, test, scaler)
        return splits[attempt]

    outcomes: list[RunOutcome] = []
    models: list[SvmModel | None] = []
    for k_index, kernel in enumerate(protocol.kernels):
        outcome = None
        model = None
        reason = ""
        for attempt in range(MAX_RUN_ATTEMPTS):
            try:
                train, test, scaler = prepared(attempt)
                candidate = train_smo(
                    scaler.apply(train.rows),
                    train.targets,
                    kernel,
                    C=protocol.C,
                    tol=protocol.tol,
                    max_passes=protocol.max_passes,
                    seed=run_rng(protocol.seed, run, attempt, k_index),
                    scaler=scaler,
                )
            except StationPlotError as err:
                reason = str(err)
                continue
            if not candidate.converged:
                reason = "SMO did not converge"
                continue
            predictions = candidate.predict_many(test.rows)
            outcome = RunOutcome(
                run, attempt, Confusion.from_predictions(test.targets, predictions)
            )
            model = candidate
            break
        if outcome is None:
            _LOGGER.warning(
                "Run %d excluded for %s kernel after %d attempts: %s",
                run,
                kernel.name,
                MAX_RUN_ATTEMPTS,
                reason,
            )
            outcome = RunOutcome(run, MAX_RUN_ATTEMPTS - 1, None, excluded=reason)
        outcomes.append(outcome)
        models.append(model)
    return outcomes, models


def run_experiment(
    dataset: LabeledDataset,
    kernels: Sequence[KernelSpec],
    C: float = DEFAULT_C,
    runs: int = DEFAULT_RUNS,
    seed: int = DEFAULT_SEED,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    stratify: bool = True,
    threads: int = 1,
    tol: float = DEFAULT_TOL,
    max_passes: int | None = None,
    order: int | None = None,
) -> EvalReport:
    """Repeat split, standardize, train and test ``runs`` times for each kernel."""
    if runs < 1:
        raise DataError(f"runs must be >= 1, got {runs}")
    if not kernels:
        raise DataError("At least one kernel is required")
    protocol = _Protocol(
        dataset=dataset,
        kernels=tuple(kernels),
        C=C,
        tol=tol,
        max_passes=max_passes,
        seed=seed,
        train_fraction=train_fraction,
        stratify=stratify,
    )
    # class-size problems surface here instead of as excluded runs
    split(dataset, train_fraction, run_rng(seed, 0, 0), stratify)

    _LOGGER.info(
        "Running %d x %d kernel evaluations on %s (%d rows, %d thread(s))",
        runs,
        len(protocol.kernels),
        dataset.problem,
        len(dataset),
        threads,
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _run_once(protocol, r), range(runs)))
    else:
        results = [_run_once(protocol, r) for r in range(runs)]

    reports = []
    final_models: dict[str, SvmModel] = {}
    for k_index, kernel in enumerate(protocol.kernels):
        outcomes = tuple(res[0][k_index] for res in results)
        per_run = [o.metrics for o in outcomes if o.metrics is not None]
        confusion = Confusion()
        for o in outcomes:
            if o.confusion is not None:
                confusion = confusion + o.confusion
        reports.append(
            KernelReport(
                kernel=kernel,
                accuracy=_summarize([m.accuracy for m in per_run]),
                sensitivity=_summarize([m.sensitivity for m in per_run]),
                specificity=_summarize([m.specificity for m in per_run]),
                confusion=confusion,
                outcomes=outcomes,
            )
        )
        for res in reversed(results):
            if res[1][k_index] is not None:
                final_models[kernel.name] = res[1][k_index]
                break

    return EvalReport(
        problem=dataset.problem,
        runs=runs,
        seed=seed,
        train_fraction=train_fraction,
        stratify=stratify,
        C=C,
        feature_names=dataset.feature_names,
        kernels=tuple(reports),
        order=order,
        models=final_models,
    )


def format_report_table(report: EvalReport) -> str:
    """Kernel x metric table of mean ± std percentages."""
    header = f"{'Kernel':<12}{'AC (%)':>18}{'SE (%)':>18}{'SP (%)':>18}"
    title = f"{report.problem}"
    if report.order is not None:
        title += f" (order {report.order})"
    lines = [title, header, "-" * len(header)]
    for k in report.kernels:
        lines.append(
            f"{k.name:<12}{str(k.accuracy):>18}{str(k.sensitivity):>18}"
            f"{str(k.specificity):>18}"
        )
        if k.excluded_runs:
            lines.append(f"  excluded runs: {len(k.excluded_runs)}")
    return "\n".join(lines) + "\n"
