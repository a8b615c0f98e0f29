from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .const import DEFAULT_DIMENSION, DEFAULT_ORDER
from .exceptions import DataError, SignalTooShortError
from .ingest import Signal
from .timeseries import DetrendMode, detrend_values, difference_values

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingConfig:
    """Differencing order ``n``, plot dimension and optional trend removal.

    ``secondary_order`` replaces the second axis order ``n + 1`` of a 2D plot
    (mixed-order plot of Δⁿ against Δᵐ).
    """

    base_order: int = DEFAULT_ORDER
    dimension: int = DEFAULT_DIMENSION
    detrend_mode: DetrendMode = DetrendMode.NONE
    secondary_order: int | None = None

    def __post_init__(self) -> None:
        if self.base_order < 0:
            raise ValueError(f"base_order must be >= 0, got {self.base_order}")
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.secondary_order is not None:
            if self.dimension != 2:
                raise ValueError("secondary_order applies to 2D plots only")
            if self.secondary_order < 0 or self.secondary_order == self.base_order:
                raise ValueError(
                    f"secondary_order must be >= 0 and differ from {self.base_order}"
                )
        object.__setattr__(self, "detrend_mode", DetrendMode(self.detrend_mode))

    @property
    def orders(self) -> tuple[int, ...]:
        n = self.base_order
        if self.dimension == 3:
            return (n, n + 1, n + 2)
        return (n, n + 1 if self.secondary_order is None else self.secondary_order)

    def point_count(self, length: int) -> int:
        return length - max(self.orders)


@dataclass(frozen=True, eq=False)
class PointCloud:
    dimension: int
    points: NDArray[np.float64]
    order: int
    source_id: str = ""
    label: str = ""

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != self.dimension:
            raise DataError(
                f"Expected an (k, {self.dimension}) point array, got {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise DataError("Point cloud has non-finite coordinates", source=self.source_id)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def project(self, axes: tuple[int, int]) -> PointCloud:
        return PointCloud(
            dimension=2,
            points=self.points[:, list(axes)],
            order=self.order,
            source_id=self.source_id,
            label=self.label,
        )


def stack_orders(values: NDArray[np.float64], orders: tuple[int, ...]) -> NDArray[np.float64]:
    """Columns Δᵏx for each order k, all anchored at the same latest sample."""
    top = max(orders)
    if values.size <= top:
        raise SignalTooShortError(
            f"Signal of length {values.size} is too short for orders {orders}",
            length=values.size,
            order=top,
        )
    columns = [difference_values(values, k)[top - k :] for k in orders]
    return np.column_stack(columns)


def _embed(signal: Signal, config: EmbeddingConfig) -> PointCloud:
    values, _ = detrend_values(signal.samples, config.detrend_mode)
    points = stack_orders(values, config.orders)
    _LOGGER.debug(
        "Embedded %s at order %d (%dD): %d points",
        signal.source_id,
        config.base_order,
        config.dimension,
        points.shape[0],
    )
    return PointCloud(
        dimension=config.dimension,
        points=points,
        order=config.base_order,
        source_id=signal.source_id,
        label=signal.label,
    )


def stationplot2d(signal: Signal, config: EmbeddingConfig | None = None) -> PointCloud:
    """Points (Δⁿx(t), Δⁿ⁺¹x(t)); N - (n + 1) of them."""
    config = config or EmbeddingConfig()
    if config.dimension != 2:
        config = EmbeddingConfig(
            base_order=config.base_order,
            dimension=2,
            detrend_mode=config.detrend_mode,
        )
    return _embed(signal, config)


def stationplot3d(signal: Signal, config: EmbeddingConfig | None = None) -> PointCloud:
    """Points (Δⁿx(t), Δⁿ⁺¹x(t), Δⁿ⁺²x(t)); N - (n + 2) of them."""
    config = config or EmbeddingConfig(dimension=3)
    if config.dimension != 3:
        config = EmbeddingConfig(
            base_order=config.base_order,
            dimension=3,
            detrend_mode=config.detrend_mode,
        )
    return _embed(signal, config)


def stationplot(signal: Signal, config: EmbeddingConfig) -> PointCloud:
    if config.dimension == 3:
        return stationplot3d(signal, config)
    return stationplot2d(signal, config)
