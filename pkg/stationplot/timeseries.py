"""Trend removal and successive differencing."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import SignalTooShortError
from .ingest import Signal


class DetrendMode(StrEnum):
    NONE = "none"
    MEAN = "mean"
    LINEAR = "linear"


@dataclass(frozen=True)
class DetrendModel:
    """Fitted trend ``intercept + slope * i`` over sample index ``i``."""

    mode: DetrendMode
    intercept: float
    slope: float = 0.0

    def trend(self, length: int) -> NDArray[np.float64]:
        return self.intercept + self.slope * np.arange(length, dtype=np.float64)


def fit_trend(values: ArrayLike, mode: DetrendMode | str) -> DetrendModel:
    x = np.asarray(values, dtype=np.float64)
    mode = DetrendMode(mode)
    if mode is DetrendMode.NONE:
        return DetrendModel(mode=mode, intercept=0.0)
    if mode is DetrendMode.MEAN:
        if x.size < 1:
            raise SignalTooShortError("Mean detrending needs at least 1 sample")
        return DetrendModel(mode=mode, intercept=float(np.mean(x)))

    if x.size < 2:
        raise SignalTooShortError("Linear detrending needs at least 2 samples")
    # Centred least squares.
    t = np.arange(x.size, dtype=np.float64)
    t_mean = t.mean()
    x_mean = x.mean()
    tc = t - t_mean
    slope = float(np.dot(tc, x - x_mean) / np.dot(tc, tc))
    return DetrendModel(mode=mode, intercept=float(x_mean - slope * t_mean), slope=slope)


def detrend_values(
    values: ArrayLike, mode: DetrendMode | str
) -> tuple[NDArray[np.float64], DetrendModel]:
    x = np.asarray(values, dtype=np.float64)
    model = fit_trend(x, mode)
    if model.mode is DetrendMode.NONE:
        return x.copy(), model
    return x - model.trend(x.size), model


def detrend(signal: Signal, mode: DetrendMode | str) -> tuple[Signal, DetrendModel]:
    """Subtract the least-squares mean or line; the fit is returned alongside."""
    residuals, model = detrend_values(signal.samples, mode)
    return signal.with_samples(residuals), model


def difference_values(values: ArrayLike, order: int) -> NDArray[np.float64]:
    """Apply the first-difference recurrence ``order`` times.

    Output index ``i`` belongs to input time ``i + order``.
    """
    if order < 0:
        raise ValueError(f"Differencing order must be >= 0, got {order}")
    x = np.asarray(values, dtype=np.float64)
    if x.size <= order:
        raise SignalTooShortError(
            f"Signal of length {x.size} is too short for differencing order {order}",
            length=x.size,
            order=order,
        )
    if order == 0:
        return x.copy()
    return np.diff(x, n=order)


def difference(signal: Signal, order: int) -> Signal:
    return signal.with_samples(difference_values(signal.samples, order))
