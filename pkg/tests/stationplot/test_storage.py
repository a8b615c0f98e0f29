from __future__ import annotations

import json

import numpy as np
import pytest

from stationplot.embedding import PointCloud
from stationplot.evaluation import LabeledDataset, run_experiment
from stationplot.exceptions import DataError
from stationplot.stats import FeatureRecord, FeatureTable, significance_table
from stationplot.storage import (
    STORAGE_VERSION,
    cloud_to_csv,
    dumps,
    exclusions_to_json,
    feature_table_from_csv,
    feature_table_to_csv,
    model_from_json,
    model_to_json,
    read_json,
    report_to_json,
    significance_to_csv,
    significance_to_json,
    write_json,
)
from stationplot.svm import KernelSpec, standardize_fit, train_smo


def small_table() -> FeatureTable:
    records = (
        FeatureRecord("Z001", "A", 1, {"area": 0.1, "circularity": 0.75}),
        FeatureRecord("Z002", "A", 1, {"area": 1 / 3, "circularity": 0.8}),
        FeatureRecord("Z003", "A", 1, {"area": 0.2, "circularity": 0.7}),
        FeatureRecord("S001", "E", 1, {"area": 12.5, "circularity": 0.6}),
        FeatureRecord("S002", "E", 1, {"area": 14.0, "circularity": 0.65}),
        FeatureRecord("S003", "E", 1, {"area": 11.0, "circularity": 0.55}),
    )
    return FeatureTable(feature_names=("area", "circularity"), records=records)


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_cloud_csv_header_and_precision():
    cloud = PointCloud(dimension=3, points=[[0.1, 2.0, -3.0]], order=1)

    text = cloud_to_csv(cloud)

    assert text.splitlines()[0] == "x,y,z"
    assert [float(v) for v in text.splitlines()[1].split(",")] == [0.1, 2.0, -3.0]


def test_feature_table_csv_reload(tmp_path):
    table = small_table()
    path = tmp_path / "features.csv"
    path.write_text(feature_table_to_csv(table), encoding="utf-8")

    loaded = feature_table_from_csv(path)

    assert path.read_text(encoding="utf-8").splitlines()[0] == "source_id,label,order,area,circularity"
    assert loaded.feature_names == table.feature_names
    assert loaded.records == table.records


def test_feature_table_from_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(DataError):
        feature_table_from_csv(path)

    path.write_text("source_id,label,order,area\nZ001,A,1,abc\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 2"):
        feature_table_from_csv(path)

    with pytest.raises(DataError):
        feature_table_from_csv(tmp_path / "missing.csv")


def test_read_json_checks_version(tmp_path):
    path = tmp_path / "doc.json"
    write_json(path, {"version": STORAGE_VERSION + 1})
    with pytest.raises(DataError, match="storage version"):
        read_json(path)

    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(DataError):
        read_json(path)

    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(DataError):
        read_json(path)


def test_significance_documents():
    result = significance_table(small_table(), ["a-vs-e"])

    doc = significance_to_json(result)
    text = significance_to_csv(result)

    assert doc["problems"] == ["a-vs-e"]
    area = doc["features"][0]
    assert area["feature"] == "area"
    assert set(area["anova"]["a-vs-e"]) >= {"f_statistic", "p_value", "p_value_clamped"}
    assert area["kruskal_wallis"]["a-vs-e"]["df"] == 1
    assert text.splitlines()[0] == "feature,a-vs-e_anova_p,a-vs-e_kruskal_p"
    assert len(text.splitlines()) == 3


def test_saved_model_predicts_like_the_original(tmp_path):
    rng = np.random.default_rng(0)
    rows = np.vstack([rng.normal(0, 1, (20, 2)), rng.normal(2, 1, (20, 2))]) * [1.0, 50.0]
    labels = np.r_[-np.ones(20), np.ones(20)]
    scaler = standardize_fit(rows)
    model = train_smo(scaler.apply(rows), labels, KernelSpec.from_name("rbf", sigma=1.5), scaler=scaler)
    path = tmp_path / "model.json"

    write_json(path, model_to_json(model))
    restored = model_from_json(read_json(path))

    queries = rng.normal(1, 2, (15, 2)) * [1.0, 50.0]
    np.testing.assert_allclose(restored.decision_values(queries), model.decision_values(queries))
    assert restored.kernel == model.kernel
    assert restored.C == model.C


def test_model_from_json_rejects_malformed_document():
    with pytest.raises(DataError):
        model_from_json({"version": STORAGE_VERSION, "kernel": {"kind": "linear"}})


def test_report_document():
    rng = np.random.default_rng(1)
    data = LabeledDataset(
        rows=np.vstack([rng.normal(0, 1, (12, 2)), rng.normal(6, 1, (12, 2))]),
        targets=np.r_[-np.ones(12, dtype=int), np.ones(12, dtype=int)],
        problem="a-vs-e",
        feature_names=("area", "perimeter"),
    )
    report = run_experiment(data, [KernelSpec()], runs=2, seed=0, order=2)

    doc = json.loads(dumps(report_to_json(report)))

    assert doc["version"] == STORAGE_VERSION
    assert (doc["problem"], doc["order"], doc["runs"]) == ("a-vs-e", 2, 2)
    assert doc["features"] == ["area", "perimeter"]
    kernel = doc["kernels"][0]
    assert kernel["kernel"]["name"] == "linear"
    assert kernel["accuracy"]["count"] == 2
    assert [r["run"] for r in kernel["runs"]] == [0, 1]
    assert len(kernel["runs"][0]["confusion"]) == 4


def test_exclusions_document():
    doc = exclusions_to_json([{"source_id": "Z001", "reason": "collinear"}])

    assert doc == {"version": STORAGE_VERSION, "excluded": [{"source_id": "Z001", "reason": "collinear"}]}
