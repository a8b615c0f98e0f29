from collections.abc import Sequence

import numpy as np


def run_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for (master seed, run, attempt, ...)."""
    return np.random.default_rng([seed, *keys])


def format_float(value: float) -> str:
    # 17 significant digits round-trip every double
    return format(float(value), ".17g")


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation; a single value has std 0."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))
