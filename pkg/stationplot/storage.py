from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .embedding import PointCloud
from .evaluation import EvalReport, KernelReport, MetricSummary
from .exceptions import DataError
from .stats import FeatureRecord, FeatureTable, SignificanceTable
from .svm import KernelSpec, Scaler, SvmModel
from .utils import format_float

STORAGE_VERSION = 1

FEATURE_ID_COLUMNS = ("source_id", "label", "order")


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"Cannot read JSON document {path}: {err}", path=path) from err
    if not isinstance(raw, dict):
        raise DataError(f"{path} is not a JSON object", path=path)
    version = raw.get("version", STORAGE_VERSION)
    if version != STORAGE_VERSION:
        raise DataError(
            f"{path} has storage version {version}, expected {STORAGE_VERSION}",
            path=path,
        )
    return raw


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cloud_to_csv(cloud: PointCloud) -> str:
    header = ["x", "y", "z"][: cloud.dimension]
    rows = [[format_float(v) for v in point] for point in cloud.points]
    return _csv_text(header, rows)


def feature_table_to_csv(table: FeatureTable) -> str:
    header = [*FEATURE_ID_COLUMNS, *table.feature_names]
    rows = [
        [
            r.source_id,
            r.label,
            str(r.order),
            *(format_float(r.values[n]) for n in table.feature_names),
        ]
        for r in table.records
    ]
    return _csv_text(header, rows)


def feature_table_from_csv(path: str | Path) -> FeatureTable:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise DataError(f"Cannot read feature table {path}: {err}", path=path) from err
    if not rows or tuple(rows[0][:3]) != FEATURE_ID_COLUMNS:
        raise DataError(
            f"{path} is not a feature table (expected columns "
            f"{', '.join(FEATURE_ID_COLUMNS)})",
            path=path,
        )
    names = tuple(rows[0][3:])
    records = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(rows[0]):
            raise DataError(f"{path}: line {line_no} has {len(row)} fields", path=path)
        try:
            values = {n: float(v) for n, v in zip(names, row[3:], strict=True)}
            order = int(row[2])
        except ValueError as err:
            raise DataError(f"{path}: line {line_no}: {err}", path=path) from err
        records.append(FeatureRecord(row[0], row[1], order, values))
    return FeatureTable(feature_names=names, records=tuple(records))


def exclusions_to_json(exclusions: Sequence[dict[str, Any]]) -> dict[str, Any]:
    return {"version": STORAGE_VERSION, "excluded": list(exclusions)}


def significance_to_json(table: SignificanceTable) -> dict[str, Any]:
    return {
        "version": STORAGE_VERSION,
        "problems": list(table.problems),
        "features": [
            {
                "feature": row.feature,
                "anova": {
                    p: {
                        "f_statistic": r.f_statistic,
                        "df_between": r.df_between,
                        "df_within": r.df_within,
                        "p_value": r.p_value,
                        "p_value_clamped": r.p_value_clamped,
                    }
                    for p, r in row.anova.items()
                },
                "kruskal_wallis": {
                    p: {
                        "h_statistic": r.h_statistic,
                        "df": r.df,
                        "p_value": r.p_value,
                        "tie_corrected": r.tie_corrected,
                        "p_value_clamped": r.p_value_clamped,
                    }
                    for p, r in row.kruskal.items()
                },
            }
            for row in table.rows
        ],
    }


def significance_to_csv(table: SignificanceTable) -> str:
    header = ["feature"]
    for p in table.problems:
        header += [f"{p}_anova_p", f"{p}_kruskal_p"]
    rows = []
    for row in table.rows:
        cells = [row.feature]
        for p in table.problems:
            cells += [format_float(row.anova[p].p_value), format_float(row.kruskal[p].p_value)]
        rows.append(cells)
    return _csv_text(header, rows)


def kernel_to_json(spec: KernelSpec) -> dict[str, Any]:
    return {
        "name": spec.name,
        "kind": str(spec.kind),
        "degree": spec.degree,
        "sigma": spec.sigma,
        "coef0": spec.coef0,
    }


def kernel_from_json(raw: dict[str, Any]) -> KernelSpec:
    return KernelSpec(
        kind=raw["kind"],
        degree=int(raw["degree"]),
        sigma=float(raw["sigma"]),
        coef0=float(raw["coef0"]),
    )


def model_to_json(model: SvmModel) -> dict[str, Any]:
    return {
        "version": STORAGE_VERSION,
        "kernel": kernel_to_json(model.kernel),
        "scaler": {
            "mean": model.scaler.mean.tolist(),
            "scale": model.scaler.scale.tolist(),
            "constant": model.scaler.constant.tolist(),
        },
        "support_vectors": model.support_vectors.tolist(),
        "alphas": model.alphas.tolist(),
        "labels": model.labels.astype(int).tolist(),
        "bias": model.bias,
        "C": model.C,
        "converged": model.converged,
        "iterations": model.iterations,
    }


def model_from_json(raw: dict[str, Any]) -> SvmModel:
    try:
        scaler = Scaler(
            mean=np.asarray(raw["scaler"]["mean"], dtype=np.float64),
            scale=np.asarray(raw["scaler"]["scale"], dtype=np.float64),
            constant=np.asarray(raw["scaler"]["constant"], dtype=bool),
        )
        support = np.asarray(raw["support_vectors"], dtype=np.float64)
        return SvmModel(
            support_vectors=support.reshape(-1, scaler.dimension),
            alphas=np.asarray(raw["alphas"], dtype=np.float64),
            labels=np.asarray(raw["labels"], dtype=np.float64),
            bias=float(raw["bias"]),
            kernel=kernel_from_json(raw["kernel"]),
            scaler=scaler,
            C=float(raw["C"]),
            converged=bool(raw.get("converged", True)),
            iterations=int(raw.get("iterations", 0)),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise DataError(f"Malformed model document: {err}") from err


def _summary_to_json(summary: MetricSummary) -> dict[str, Any]:
    return {"mean": summary.mean, "std": summary.std, "count": summary.count}


def _kernel_report_to_json(k: KernelReport) -> dict[str, Any]:
    return {
        "kernel": kernel_to_json(k.kernel),
        "accuracy": _summary_to_json(k.accuracy),
        "sensitivity": _summary_to_json(k.sensitivity),
        "specificity": _summary_to_json(k.specificity),
        "confusion": {
            "tp": k.confusion.tp,
            "tn": k.confusion.tn,
            "fp": k.confusion.fp,
            "fn": k.confusion.fn,
        },
        "excluded_runs": list(k.excluded_runs),
        "runs": [
            {
                "run": o.run,
                "attempt": o.attempt,
                "confusion": None
                if o.confusion is None
                else [o.confusion.tp, o.confusion.tn, o.confusion.fp, o.confusion.fn],
                "excluded": o.excluded,
            }
            for o in k.outcomes
        ],
    }


def report_to_json(report: EvalReport) -> dict[str, Any]:
    return {
        "version": STORAGE_VERSION,
        "problem": report.problem,
        "order": report.order,
        "runs": report.runs,
        "seed": report.seed,
        "train_fraction": report.train_fraction,
        "stratify": report.stratify,
        "C": report.C,
        "features": list(report.feature_names),
        "kernels": [_kernel_report_to_json(k) for k in report.kernels],
    }
