from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stationplot.exceptions import SignalTooShortError
from stationplot.timeseries import (
    DetrendMode,
    detrend,
    detrend_values,
    difference,
    difference_values,
    fit_trend,
)
from tests.conftest import make_signal


def test_linear_detrend_removes_a_line():
    residuals, model = detrend_values([1, 2, 3, 4], DetrendMode.LINEAR)

    np.testing.assert_allclose(residuals, 0.0, atol=1e-12)
    assert model.slope == pytest.approx(1.0)
    assert model.intercept == pytest.approx(1.0)


def test_mean_detrend():
    residuals, model = detrend_values([1, 2, 4], "mean")

    np.testing.assert_allclose(residuals, [-4 / 3, -1 / 3, 5 / 3])
    assert model.mode is DetrendMode.MEAN
    assert model.slope == 0.0


def test_no_detrend_returns_copy():
    values = np.array([3.0, 1.0])

    residuals, _ = detrend_values(values, DetrendMode.NONE)
    residuals[0] = 99.0

    assert values[0] == 3.0


def test_linear_detrend_needs_two_samples():
    with pytest.raises(SignalTooShortError):
        fit_trend([1.0], DetrendMode.LINEAR)


def test_unknown_detrend_mode():
    with pytest.raises(ValueError):
        fit_trend([1.0, 2.0], "quadratic")


def test_detrend_signal_keeps_metadata():
    signal = make_signal([2, 4, 6], label="D", source_id="F001")

    out, model = detrend(signal, "linear")

    assert out.label == "D"
    assert out.source_id == "F001"
    np.testing.assert_allclose(out.samples + model.trend(3), signal.samples)


def test_first_difference():
    assert difference_values([1, 4, 2, 8], 1).tolist() == [3.0, -2.0, 6.0]


def test_second_difference_of_squares_is_constant():
    assert difference_values([0, 1, 4, 9, 16], 2).tolist() == [2.0, 2.0, 2.0]


def test_order_zero_is_a_copy():
    values = np.array([5.0, 6.0])

    out = difference_values(values, 0)
    out[0] = 0.0

    assert values.tolist() == [5.0, 6.0]


def test_difference_too_short():
    with pytest.raises(SignalTooShortError):
        difference_values([1, 2], 2)


def test_negative_order():
    with pytest.raises(ValueError):
        difference_values([1, 2, 3], -1)


def test_difference_signal():
    out = difference(make_signal([1, 3, 6]), 1)

    assert out.samples.tolist() == [2.0, 3.0]


@given(
    st.lists(
        st.integers(min_value=-2048, max_value=2047), min_size=6, max_size=60
    ),
    st.integers(min_value=0, max_value=4),
)
def test_difference_length_and_recurrence(values, order):
    out = difference_values(values, order)

    assert out.size == len(values) - order
    if order >= 1:
        np.testing.assert_array_equal(
            out, np.diff(difference_values(values, order - 1))
        )


@given(st.lists(st.integers(min_value=-2048, max_value=2047), min_size=3, max_size=60))
def test_linear_detrend_residuals_are_orthogonal_to_time(values):
    residuals, _ = detrend_values(values, DetrendMode.LINEAR)
    t = np.arange(len(values), dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(values)))) * len(values) ** 2

    assert abs(residuals.sum()) <= 1e-9 * scale
    assert abs(np.dot(residuals, t)) <= 1e-9 * scale


@given(
    st.lists(st.integers(min_value=-2048, max_value=2047), min_size=10, max_size=60),
    st.integers(min_value=0, max_value=3),
    st.integers(min_value=0, max_value=3),
)
def test_difference_orders_compose(values, a, b):
    np.testing.assert_array_equal(
        difference_values(difference_values(values, a), b), difference_values(values, a + b)
    )


@given(
    st.lists(st.integers(min_value=-2048, max_value=2047), min_size=8, max_size=8),
    st.lists(st.integers(min_value=-2048, max_value=2047), min_size=8, max_size=8),
    st.floats(min_value=-10, max_value=10),
    st.floats(min_value=-10, max_value=10),
    st.integers(min_value=1, max_value=4),
)
def test_difference_is_linear(x, y, alpha, beta, order):
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)

    combined = difference_values(alpha * x + beta * y, order)
    separate = alpha * difference_values(x, order) + beta * difference_values(y, order)

    np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-7)


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_difference_annihilates_lower_degree_polynomials(degree):
    rng = np.random.default_rng(degree)
    coefs = rng.integers(-5, 6, size=degree + 1)
    t = np.arange(-20, 21)
    values = np.polyval(coefs, t).astype(np.float64)

    assert np.all(difference_values(values, degree + 1) == 0.0)
    if coefs[0] != 0:
        assert np.all(difference_values(values, degree) == coefs[0] * math.factorial(degree))


def test_difference_matches_binomial_sum():
    rng = np.random.default_rng(500)
    for _ in range(500):
        order = int(rng.integers(0, 6))
        values = rng.integers(-2048, 2048, size=int(rng.integers(order + 1, 40)))
        weights = np.array(
            [(-1) ** (order - j) * math.comb(order, j) for j in range(order + 1)],
            dtype=np.float64,
        )
        expected = np.array(
            [weights @ values[i : i + order + 1] for i in range(values.size - order)]
        )

        np.testing.assert_array_equal(difference_values(values, order), expected)
