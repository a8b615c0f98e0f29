from __future__ import annotations

import os
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from stationplot.const import BONN_SAMPLE_RATE, ENV_BONN_DIR
from stationplot.ingest import Signal


def make_signal(values, label: str = "A", source_id: str = "rec") -> Signal:
    return Signal(
        samples=np.asarray(values, dtype=np.float64),
        sample_rate=BONN_SAMPLE_RATE,
        label=label,
        source_id=source_id,
    )


def write_record(path: Path, values) -> Path:
    """Write integers one per line, the way the Bonn archive stores them."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(str(int(v)) for v in values) + "\n", encoding="ascii")
    return path


def white_noise(rng: np.random.Generator, length: int) -> np.ndarray:
    return np.round(rng.normal(0.0, 1.0, length) * 100.0)


def random_walk(rng: np.random.Generator, length: int) -> np.ndarray:
    return np.round(np.cumsum(rng.normal(0.0, 1.0, length)) * 100.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def record_factory(tmp_path: Path) -> Callable[..., Path]:
    def _make(name: str, values, folder: str = "records") -> Path:
        return write_record(tmp_path / folder / name, values)

    return _make


@pytest.fixture
def synthetic_archive(tmp_path: Path) -> Path:
    """Two-class archive: A holds white noise, E holds random walks (12 records each)."""
    gen = np.random.default_rng(7)
    root = tmp_path / "archive"
    for i in range(12):
        write_record(root / "A" / f"Z{i:03d}.txt", white_noise(gen, 512))
        write_record(root / "E" / f"S{i:03d}.txt", random_walk(gen, 512))
    return root


@pytest.fixture(scope="session")
def bonn_dir() -> Path:
    root = os.environ.get(ENV_BONN_DIR)
    if not root or not Path(root).is_dir():
        pytest.skip(f"Bonn archive not available; set {ENV_BONN_DIR} to run")
    return Path(root)
