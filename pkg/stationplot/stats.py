"""Group tests, box-plot summaries and feature ranking over CHG feature tables."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import rankdata

from .const import P_VALUE_FLOOR, PROBLEM_CLASSES, PROBLEM_CUSTOM, SEIZURE_LABEL
from .exceptions import DataError, NumericError
from .special import chi2_sf, f_sf

_LOGGER = logging.getLogger(__name__)

# Within-group sum of squares below this fraction of sum(x**2) counts as zero.
_ZERO_VARIANCE_REL = 1e-24


@dataclass(frozen=True)
class FeatureRecord:
    source_id: str
    label: str
    order: int
    values: Mapping[str, float]


@dataclass(frozen=True)
class FeatureTable:
    """One row of CHG features per record, columns in ``feature_names`` order."""

    feature_names: tuple[str, ...]
    records: tuple[FeatureRecord, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.records]

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(sorted({r.order for r in self.records}))

    def matrix(self, names: Sequence[str] | None = None) -> NDArray[np.float64]:
        names = tuple(names) if names is not None else self.feature_names
        if not self.records:
            return np.empty((0, len(names)), dtype=np.float64)
        return np.array(
            [[float(r.values[n]) for n in names] for r in self.records], dtype=np.float64
        )

    def for_order(self, order: int) -> FeatureTable:
        return FeatureTable(
            feature_names=self.feature_names,
            records=tuple(r for r in self.records if r.order == order),
        )

    def with_features(self, names: Sequence[str]) -> FeatureTable:
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise DataError(f"Unknown feature columns: {', '.join(missing)}")
        return FeatureTable(feature_names=tuple(names), records=self.records)


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    p_value_clamped: bool = False


@dataclass(frozen=True)
class KruskalResult:
    h_statistic: float
    df: int
    p_value: float
    tie_corrected: bool
    p_value_clamped: bool = False


@dataclass(frozen=True)
class BoxplotSummary:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...] = ()
    label: str = ""

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


@dataclass(frozen=True)
class FeatureRanking:
    name: str
    h_statistic: float
    p_value: float


@dataclass(frozen=True)
class SignificanceRow:
    feature: str
    anova: dict[str, AnovaResult] = field(default_factory=dict)
    kruskal: dict[str, KruskalResult] = field(default_factory=dict)


@dataclass(frozen=True)
class SignificanceTable:
    """Per-feature p-values for each classification problem."""

    problems: tuple[str, ...]
    rows: tuple[SignificanceRow, ...]


def _clamp_p(p_value: float, test: str) -> tuple[float, bool]:
    p_value = min(max(p_value, 0.0), 1.0)
    if p_value < P_VALUE_FLOOR:
        _LOGGER.warning(
            "%s p-value %.3g below floor, reporting %.0e", test, p_value, P_VALUE_FLOOR
        )
        return P_VALUE_FLOOR, True
    return p_value, False


def _as_groups(groups: Sequence[ArrayLike], min_size: int) -> list[NDArray[np.float64]]:
    arrays = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(arrays) < 2:
        raise DataError(f"Need at least 2 groups, got {len(arrays)}")
    for i, arr in enumerate(arrays):
        if arr.size < min_size:
            raise DataError(
                f"Group {i} has {arr.size} samples, need at least {min_size}", group=i
            )
        if not np.all(np.isfinite(arr)):
            raise DataError(f"Group {i} contains non-finite values", group=i)
    return arrays


def anova_oneway(groups: Sequence[ArrayLike]) -> AnovaResult:
    """Classic one-way ANOVA; ``p = 1 - F_cdf(F; k - 1, N - k)``."""
    arrays = _as_groups(groups, min_size=2)
    k = len(arrays)
    n_total = sum(a.size for a in arrays)
    grand_mean = float(np.mean(np.concatenate(arrays)))

    ss_between = 0.0
    ss_within = 0.0
    for arr in arrays:
        mean = float(np.mean(arr))
        ss_between += arr.size * (mean - grand_mean) ** 2
        ss_within += float(np.sum((arr - mean) ** 2))

    df_between = k - 1
    df_within = n_total - k
    scale = float(sum(np.sum(a * a) for a in arrays))
    zero = _ZERO_VARIANCE_REL * scale

    if ss_within <= zero:
        if ss_between <= zero:
            return AnovaResult(0.0, df_between, df_within, 1.0)
        raise NumericError(
            "Within-group variance is zero but group means differ",
            ss_between=ss_between,
            groups=k,
        )

    f_statistic = (ss_between / df_between) / (ss_within / df_within)
    p_value, clamped = _clamp_p(f_sf(f_statistic, df_between, df_within), "ANOVA")
    return AnovaResult(f_statistic, df_between, df_within, p_value, clamped)


def kruskal_wallis(groups: Sequence[ArrayLike]) -> KruskalResult:
    """Rank-sum H statistic with mid-ranks and the tie correction factor."""
    arrays = _as_groups(groups, min_size=1)
    k = len(arrays)
    pooled = np.concatenate(arrays)
    n_total = pooled.size
    ranks = rankdata(pooled)

    h_statistic = 0.0
    start = 0
    for arr in arrays:
        rank_sum = float(np.sum(ranks[start : start + arr.size]))
        h_statistic += rank_sum * rank_sum / arr.size
        start += arr.size
    h_statistic = 12.0 / (n_total * (n_total + 1)) * h_statistic - 3.0 * (n_total + 1)

    _, counts = np.unique(pooled, return_counts=True)
    ties = counts[counts > 1].astype(np.float64)
    tie_corrected = bool(ties.size)
    correction = 1.0 - float(np.sum(ties**3 - ties)) / (n_total**3 - n_total)
    if correction <= 0.0:
        # every value identical
        return KruskalResult(0.0, k - 1, 1.0, tie_corrected)

    h_statistic = max(h_statistic / correction, 0.0)
    p_value, clamped = _clamp_p(chi2_sf(h_statistic, k - 1), "Kruskal-Wallis")
    return KruskalResult(h_statistic, k - 1, p_value, tie_corrected, clamped)


def boxplot_summary(values: ArrayLike, label: str = "") -> BoxplotSummary:
    """Tukey box: whiskers reach the furthest data within 1.5 IQR of the box."""
    vals = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if vals.size == 0:
        raise DataError("Box plot needs at least one value")

    # linear interpolation between order statistics
    q1, median, q3 = (float(q) for q in np.quantile(vals, [0.25, 0.5, 0.75]))
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr

    inside = vals[(vals >= low_fence) & (vals <= high_fence)]
    outliers = vals[(vals < low_fence) | (vals > high_fence)]
    return BoxplotSummary(
        q1=q1,
        median=median,
        q3=q3,
        whisker_low=float(inside[0]),
        whisker_high=float(inside[-1]),
        outliers=tuple(float(v) for v in outliers),
        label=label,
    )


def _group_rows(labels: Sequence[str]) -> dict[str, NDArray[np.intp]]:
    tags = np.asarray(labels)
    return {tag: np.flatnonzero(tags == tag) for tag in sorted(set(labels))}


def rank_features(
    matrix: ArrayLike, labels: Sequence[str], names: Sequence[str]
) -> list[FeatureRanking]:
    """Features ordered by ascending Kruskal-Wallis p-value (stable on ties)."""
    data = np.asarray(matrix, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] != len(labels) or data.shape[1] != len(names):
        raise DataError(
            f"Feature matrix shape {data.shape} does not match "
            f"{len(labels)} labels and {len(names)} names"
        )
    groups = _group_rows(labels)
    if len(groups) < 2:
        raise DataError("Feature ranking needs at least 2 classes", classes=len(groups))

    rankings = []
    for j, name in enumerate(names):
        result = kruskal_wallis([data[idx, j] for idx in groups.values()])
        rankings.append(FeatureRanking(name, result.h_statistic, result.p_value))
    return sorted(rankings, key=lambda r: r.p_value)


def select_features(
    rankings: Sequence[FeatureRanking], threshold: float | None = None
) -> list[str]:
    """Names of features with p <= threshold; ``None`` keeps every ranked feature.

    At least the top-ranked feature is kept so a classifier always has input.
    """
    if threshold is None:
        return [r.name for r in rankings]
    selected = [r.name for r in rankings if r.p_value <= threshold]
    if not selected and rankings:
        _LOGGER.warning(
            "No feature reaches p <= %g, keeping top-ranked %s",
            threshold,
            rankings[0].name,
        )
        selected = [rankings[0].name]
    return selected


def problem_classes(
    problem: str,
    available: Sequence[str],
    positive: Sequence[str] = (SEIZURE_LABEL,),
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(negative tags, positive tags) of a named problem."""
    if problem == PROBLEM_CUSTOM:
        pos = tuple(sorted(t for t in set(available) if t in set(positive)))
        neg = tuple(sorted(t for t in set(available) if t not in set(positive)))
    elif problem in PROBLEM_CLASSES:
        neg, pos = PROBLEM_CLASSES[problem]
    else:
        raise DataError(f"Unknown problem {problem!r}")
    missing = [t for t in (*neg, *pos) if t not in set(available)]
    if missing or not neg or not pos:
        raise DataError(
            f"Problem {problem} needs classes {neg} vs {pos}; "
            f"available: {sorted(set(available))}",
            problem=problem,
        )
    return neg, pos


def problem_groups(
    table: FeatureTable,
    feature: str,
    problem: str,
    positive: Sequence[str] = (SEIZURE_LABEL,),
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    neg, pos = problem_classes(problem, table.labels, positive)
    column = table.matrix([feature])[:, 0]
    labels = np.asarray(table.labels)
    return column[np.isin(labels, neg)], column[np.isin(labels, pos)]


def significance_table(
    table: FeatureTable,
    problems: Sequence[str],
    positive: Sequence[str] = (SEIZURE_LABEL,),
) -> SignificanceTable:
    """ANOVA and Kruskal-Wallis p-values per feature, one column pair per problem."""
    rows = []
    for feature in table.feature_names:
        anova: dict[str, AnovaResult] = {}
        kruskal: dict[str, KruskalResult] = {}
        for problem in problems:
            negatives, positives = problem_groups(table, feature, problem, positive)
            anova[problem] = anova_oneway([negatives, positives])
            kruskal[problem] = kruskal_wallis([negatives, positives])
            _LOGGER.debug(
                "%s on %s: ANOVA p=%.3g, Kruskal-Wallis p=%.3g",
                feature,
                problem,
                anova[problem].p_value,
                kruskal[problem].p_value,
            )
        rows.append(SignificanceRow(feature, anova, kruskal))
    return SignificanceTable(problems=tuple(problems), rows=tuple(rows))
