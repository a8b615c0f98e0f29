"""StationPlot: difference-order embeddings, convex hull features and SVM evaluation."""

from .embedding import EmbeddingConfig, PointCloud, stationplot, stationplot2d, stationplot3d
from .exceptions import (
    ConfigValidationError,
    DataError,
    DegenerateGeometryError,
    NumericError,
    SignalTooShortError,
    StationPlotError,
    TrainingError,
)
from .geometry import chg_features, quickhull2d, quickhull3d
from .ingest import Signal, load_bonn_record, load_set

__all__ = [
    "ConfigValidationError",
    "DataError",
    "DegenerateGeometryError",
    "EmbeddingConfig",
    "NumericError",
    "PointCloud",
    "Signal",
    "SignalTooShortError",
    "StationPlotError",
    "TrainingError",
    "chg_features",
    "load_bonn_record",
    "load_set",
    "quickhull2d",
    "quickhull3d",
    "stationplot",
    "stationplot2d",
    "stationplot3d",
]
