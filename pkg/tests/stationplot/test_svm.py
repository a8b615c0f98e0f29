from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from stationplot.const import MAX_PASSES_PER_ROW
from stationplot.exceptions import ConfigValidationError, DataError, TrainingError
from stationplot.svm import (
    KernelKind,
    KernelSpec,
    Scaler,
    SvmModel,
    decision_value,
    kernel_eval,
    kernel_matrix,
    predict,
    standardize_apply,
    standardize_fit,
    train_smo,
)

XOR_ROWS = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_LABELS = np.array([-1, -1, 1, 1])


def blobs(seed: int, n: int = 40, gap: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    neg = rng.normal(0.0, 1.0, size=(n, 2))
    pos = rng.normal(gap, 1.0, size=(n, 2))
    return np.vstack([neg, pos]), np.r_[-np.ones(n), np.ones(n)]


def test_kernel_values():
    assert kernel_eval(KernelSpec(), [1, 2], [3, 4]) == 11.0
    assert kernel_eval(KernelSpec.from_name("quadratic"), [1, 0], [1, 0]) == 4.0
    assert kernel_eval(KernelSpec.from_name("rbf", sigma=2.0), [1, 1], [1, 1]) == 1.0
    assert kernel_eval(KernelSpec.from_name("rbf", sigma=1.0), [0, 0], [1, 1]) == pytest.approx(
        math.exp(-1.0)
    )


@pytest.mark.parametrize("name", ["linear", "quadratic", "polynomial", "rbf"])
def test_kernel_matrix_agrees_with_pairwise(name):
    spec = KernelSpec.from_name(name, degree=3, sigma=1.5)
    rng = np.random.default_rng(1)
    left, right = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))

    gram = kernel_matrix(spec, left, right)

    expected = [[kernel_eval(spec, u, v) for v in right] for u in left]
    np.testing.assert_allclose(gram, expected, rtol=1e-12)


def test_kernel_dimension_mismatch():
    with pytest.raises(TrainingError):
        kernel_eval(KernelSpec(), [1, 2], [1, 2, 3])
    with pytest.raises(TrainingError):
        kernel_matrix(KernelSpec(), [[1, 2]], [[1, 2, 3]])


def test_kernel_spec_presets_and_validation():
    assert KernelSpec.from_name("quadratic").name == "quadratic"
    assert KernelSpec.from_name("polynomial", degree=4).name == "polynomial"
    assert KernelSpec.from_name("rbf").kind is KernelKind.RBF
    assert KernelSpec(kind="linear").name == "linear"
    with pytest.raises(ConfigValidationError, match="valid kinds"):
        KernelSpec.from_name("sigmoid")
    with pytest.raises(ConfigValidationError):
        KernelSpec(KernelKind.POLYNOMIAL, degree=1)
    with pytest.raises(ConfigValidationError):
        KernelSpec(KernelKind.RBF, sigma=0.0)


def test_standardize():
    scaler = standardize_fit([[0.0], [2.0]])

    np.testing.assert_allclose(standardize_apply(scaler, [[0.0], [2.0]]), [[-1.0], [1.0]])
    np.testing.assert_allclose(scaler.apply([[1.0]]), [[0.0]])


def test_standardize_constant_column(caplog):
    with caplog.at_level(logging.WARNING):
        scaler = standardize_fit([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])

    assert scaler.constant.tolist() == [False, True]
    assert scaler.apply([[3.0, 9.0]])[0, 1] == 0.0
    assert "Zero-variance" in caplog.text


def test_standardize_needs_two_rows():
    with pytest.raises(DataError):
        standardize_fit([[1.0, 2.0]])


def test_scaler_dimension_mismatch():
    with pytest.raises(TrainingError):
        Scaler.identity(2).apply([[1.0, 2.0, 3.0]])


def test_xor_with_rbf_is_separated():
    model = train_smo(XOR_ROWS, XOR_LABELS, KernelSpec.from_name("rbf", sigma=2.0), C=1.0)

    assert model.converged
    assert model.predict_many(XOR_ROWS).tolist() == XOR_LABELS.tolist()
    assert np.all((model.alphas > 0) & (model.alphas <= 1.0))


def test_linear_kernel_separates_blobs():
    rows, labels = blobs(0)

    model = train_smo(rows, labels, KernelSpec(), C=1.0)

    assert model.converged
    assert np.mean(model.predict_many(rows) == labels) == 1.0


def test_linear_decision_matches_explicit_weights():
    rows, labels = blobs(2, gap=2.5)
    scaler = standardize_fit(rows)
    model = train_smo(scaler.apply(rows), labels, KernelSpec(), scaler=scaler)

    weights = (model.alphas * model.labels) @ model.support_vectors
    expected = scaler.apply(rows) @ weights + model.bias

    np.testing.assert_allclose(model.decision_values(rows), expected, rtol=0, atol=1e-9)


@pytest.mark.parametrize("name", ["linear", "quadratic", "rbf"])
def test_solution_satisfies_kkt(name):
    rows, labels = blobs(3, gap=2.0)
    C = 1.0

    model = train_smo(rows, labels, KernelSpec.from_name(name), C=C, tol=1e-3)

    assert model.converged
    assert np.all(model.alphas >= 0) and np.all(model.alphas <= C)
    assert float(np.dot(model.alphas, model.labels)) == pytest.approx(0.0, abs=1e-8)
    margins = labels * model.decision_values(rows)
    free = (model.alphas > 0) & (model.alphas < C)
    if free.any():
        free_margins = model.labels[free] * model.decision_values(model.support_vectors[free])
        np.testing.assert_allclose(free_margins, 1.0, atol=1e-2)
    support = {tuple(v) for v in model.support_vectors}
    idle = np.array([tuple(r) not in support for r in rows])
    assert np.all(margins[idle] >= 1.0 - 1e-2)


def test_objective_never_decreases():
    rows, labels = blobs(5, gap=2.0)

    model = train_smo(rows, labels, KernelSpec.from_name("rbf"), C=2.0)

    history = np.asarray(model.objective_history)
    assert history[0] == 0.0
    assert np.all(np.diff(history) >= -1e-9)
    assert len(history) == model.iterations + 1


def test_training_is_independent_of_row_order():
    rows, labels = blobs(6, gap=2.0)
    perm = np.random.default_rng(0).permutation(labels.size)
    queries = np.random.default_rng(1).normal(1.0, 2.0, size=(25, 2))

    first = train_smo(rows, labels, KernelSpec.from_name("rbf"), seed=4)
    second = train_smo(rows[perm], labels[perm], KernelSpec.from_name("rbf"), seed=4)

    np.testing.assert_array_equal(first.decision_values(queries), second.decision_values(queries))


def test_step_cap_counts_sweeps(caplog):
    rows, labels = blobs(7, n=100, gap=0.5)

    with caplog.at_level(logging.WARNING):
        model = train_smo(
            rows, labels, KernelSpec.from_name("rbf"), tol=1e-8, max_passes=1
        )

    assert not model.converged
    assert model.iterations == labels.size
    assert "without meeting KKT" in caplog.text


@pytest.mark.parametrize(
    ("rows", "labels", "C"),
    [
        ([[0.0, 1.0]], [1], 1.0),
        ([[0.0], [1.0]], [1, 1], 1.0),
        ([[0.0], [1.0]], [0, 1], 1.0),
        ([[0.0], [1.0]], [-1, 1], 0.0),
        ([[0.0], [1.0], [2.0]], [-1, 1], 1.0),
    ],
)
def test_training_input_errors(rows, labels, C):
    with pytest.raises(TrainingError):
        train_smo(rows, labels, KernelSpec(), C=C)


def test_scaler_travels_with_model():
    raw = np.array([[10.0, 100.0], [12.0, 140.0], [30.0, 300.0], [32.0, 320.0]])
    labels = np.array([-1, -1, 1, 1])
    scaler = standardize_fit(raw)

    model = train_smo(scaler.apply(raw), labels, KernelSpec(), scaler=scaler)

    assert predict(model, [11.0, 120.0]) == -1
    assert predict(model, [31.0, 310.0]) == 1


def test_zero_decision_value_is_positive():
    model = SvmModel(
        support_vectors=np.empty((0, 1)),
        alphas=np.empty(0),
        labels=np.empty(0),
        bias=0.0,
        kernel=KernelSpec(),
        scaler=Scaler.identity(1),
    )

    assert decision_value(model, [3.0]) == 0.0
    assert predict(model, [3.0]) == 1
    assert model.predict_many([[1.0], [2.0]]).tolist() == [1, 1]


@pytest.mark.parametrize("name", ["linear", "quadratic", "polynomial", "rbf"])
def test_predictions_ignore_row_permutations(name):
    rows, labels = blobs(8, gap=1.5)
    scaler = standardize_fit(rows)
    queries = np.random.default_rng(2).normal(0.75, 1.5, size=(30, 2))
    spec = KernelSpec.from_name(name)

    reference = train_smo(scaler.apply(rows), labels, spec, scaler=scaler).predict_many(queries)

    for k in range(5):
        perm = np.random.default_rng(100 + k).permutation(labels.size)
        model = train_smo(scaler.apply(rows[perm]), labels[perm], spec, scaler=scaler)
        np.testing.assert_array_equal(model.predict_many(queries), reference)


@pytest.mark.parametrize("name", ["linear", "quadratic", "polynomial", "rbf"])
def test_heavy_tailed_overlap_converges_under_default_cap(name):
    rng = np.random.default_rng(11)
    neg = rng.lognormal(0.0, 1.0, size=(175, 3))
    pos = rng.lognormal(0.3, 1.0, size=(175, 3))
    rows = np.vstack([neg, pos])
    labels = np.r_[-np.ones(175), np.ones(175)]
    scaler = standardize_fit(rows)

    model = train_smo(scaler.apply(rows), labels, KernelSpec.from_name(name), scaler=scaler)

    assert model.converged
    assert model.iterations < MAX_PASSES_PER_ROW * labels.size**2
    assert np.all(np.diff(model.objective_history) >= -1e-9)


def test_max_passes_must_be_positive():
    rows, labels = blobs(9)

    with pytest.raises(TrainingError):
        train_smo(rows, labels, KernelSpec(), max_passes=0)
