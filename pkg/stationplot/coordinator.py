from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, TypeVar

from .config import PipelineConfig
from .const import DOMAIN, FEATURES_3D
from .embedding import EmbeddingConfig, PointCloud, stationplot, stationplot3d
from .exceptions import DataError
from .geometry import chg_features
from .ingest import Signal, label_signals, load_set, preprocess
from .stats import FeatureRecord, FeatureTable

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")
_R = TypeVar("_R")


@dataclass(frozen=True)
class FeatureExtraction:
    """Feature rows plus the records that could not be measured."""

    table: FeatureTable
    exclusions: tuple[dict[str, Any], ...] = field(default=())


def record_features(
    signal: Signal,
    embedding: EmbeddingConfig,
    feature_names: Sequence[str],
) -> FeatureRecord:
    """Embed one record and measure its hull; raises DataError when degenerate."""
    cloud = stationplot(signal, embedding)
    values = chg_features(cloud).as_dict()
    if any(name in FEATURES_3D for name in feature_names) and embedding.dimension == 2:
        solid = stationplot3d(
            signal,
            EmbeddingConfig(
                base_order=embedding.base_order,
                dimension=3,
                detrend_mode=embedding.detrend_mode,
            ),
        )
        values.update(chg_features(solid).as_dict())
    row = {name: values[name] for name in feature_names}
    bad = sorted(name for name, v in row.items() if not math.isfinite(v))
    if bad:
        raise DataError(
            f"Non-finite {', '.join(bad)} for {signal.source_id}",
            source=signal.source_id,
        )
    return FeatureRecord(
        source_id=signal.source_id,
        label=signal.label,
        order=embedding.base_order,
        values=row,
    )


class PipelineCoordinator:
    """Per-record loading, embedding and feature extraction on a worker pool.

    Results are always returned in record order (class tag, then filename),
    whatever the number of threads.
    """

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self._executor = ThreadPoolExecutor(
            max_workers=config.threads, thread_name_prefix=DOMAIN
        )
        self._signals: list[Signal] | None = None

    async def __aenter__(self) -> PipelineCoordinator:
        return self

    async def __aexit__(self, *exc_info: object) -> None:
        await self.async_shutdown()

    async def async_shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    async def _async_map(self, func: Callable[[_T], _R], items: Sequence[_T]) -> list[_R]:
        loop = asyncio.get_running_loop()
        futures = [loop.run_in_executor(self._executor, func, item) for item in items]
        return list(await asyncio.gather(*futures))

    async def async_load_signals(self) -> list[Signal]:
        """Read every class directory and apply the optional band-pass filter."""
        if self._signals is not None:
            return self._signals
        labels = sorted(self.config.data)
        sets = await self._async_map(
            lambda label: load_set(self.config.data[label], label, self.config.sample_rate),
            labels,
        )
        signals = label_signals(dict(zip(labels, sets, strict=True)))
        if self.config.bandpass is not None:
            spec = self.config.bandpass
            signals = await self._async_map(lambda s: preprocess(s, spec), signals)
        _LOGGER.info("Loaded %d records from %d classes", len(signals), len(labels))
        self._signals = signals
        return signals

    async def async_embed(self, order: int) -> list[PointCloud | DataError]:
        """StationPlot of every record; failures come back as the DataError raised."""
        signals = await self.async_load_signals()
        embedding = self.config.embedding_config(order)

        def job(signal: Signal) -> PointCloud | DataError:
            try:
                return stationplot(signal, embedding)
            except DataError as err:
                return err

        return await self._async_map(job, signals)

    async def async_extract_features(self, order: int) -> FeatureExtraction:
        signals = await self.async_load_signals()
        embedding = self.config.embedding_config(order)
        names = self.config.feature_names

        def job(signal: Signal) -> FeatureRecord | DataError:
            try:
                return record_features(signal, embedding, names)
            except DataError as err:
                return err

        results = await self._async_map(job, signals)
        records: list[FeatureRecord] = []
        exclusions: list[dict[str, Any]] = []
        for signal, result in zip(signals, results, strict=True):
            if isinstance(result, FeatureRecord):
                records.append(result)
                continue
            _LOGGER.warning(
                "Excluding %s (class %s) at order %d: %s",
                signal.source_id,
                signal.label,
                order,
                result,
            )
            exclusions.append(
                {
                    "source_id": signal.source_id,
                    "label": signal.label,
                    "order": order,
                    "error": type(result).__name__,
                    "reason": str(result),
                }
            )
        _LOGGER.info(
            "Order %d: %d feature rows, %d excluded", order, len(records), len(exclusions)
        )
        return FeatureExtraction(
            table=FeatureTable(feature_names=names, records=tuple(records)),
            exclusions=tuple(exclusions),
        )
