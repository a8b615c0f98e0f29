from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import butter, sosfilt, sosfiltfilt

from .const import (
    BONN_RECORD_LENGTH,
    BONN_SAMPLE_RATE,
    BONN_SET_DIRECTORIES,
    DEFAULT_FILTER_ORDER,
    DEFAULT_HIGH_CUT,
    DEFAULT_LOW_CUT,
)
from .exceptions import ConfigValidationError, DataError

_LOGGER = logging.getLogger(__name__)


def _frozen_array(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled, labeled real-valued record."""

    samples: NDArray[np.float64]
    sample_rate: float
    label: str
    source_id: str = ""

    def __post_init__(self) -> None:
        samples = _frozen_array(self.samples)
        if samples.ndim != 1:
            raise DataError("Signal samples must be one-dimensional", source=self.source_id)
        if samples.size == 0:
            raise DataError("Signal has no samples", source=self.source_id)
        if not np.all(np.isfinite(samples)):
            raise DataError("Signal contains non-finite samples", source=self.source_id)
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise DataError(
                f"Sample rate must be positive, got {self.sample_rate}",
                source=self.source_id,
            )
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    def with_samples(self, samples: ArrayLike) -> Signal:
        return replace(self, samples=samples)


@dataclass(frozen=True)
class BandpassSpec:
    low_cut: float = DEFAULT_LOW_CUT
    high_cut: float = DEFAULT_HIGH_CUT
    filter_order: int = DEFAULT_FILTER_ORDER
    zero_phase: bool = True

    def validate(self, sample_rate: float) -> None:
        nyquist = sample_rate / 2.0
        if not 0 < self.low_cut < self.high_cut < nyquist:
            raise ConfigValidationError(
                "Band-pass corners must satisfy 0 < low_cut < high_cut < sample_rate/2",
                {
                    "bandpass": (
                        f"low_cut={self.low_cut}, high_cut={self.high_cut}, "
                        f"nyquist={nyquist}"
                    )
                },
            )
        if self.filter_order < 1:
            raise ConfigValidationError(
                "Filter order must be a positive integer",
                {"bandpass.order": str(self.filter_order)},
            )


def _parse_amplitude(text: str, path: Path, line_no: int) -> float:
    try:
        return float(int(text))
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError as err:
        raise DataError(
            f"{path}: line {line_no} is not numeric: {text!r}",
            path=path,
            line=line_no,
        ) from err
    if not math.isfinite(value):
        raise DataError(f"{path}: line {line_no} is not finite", path=path, line=line_no)
    return value


def load_bonn_record(path: str | Path, label: str) -> Signal:
    """Read one Bonn ASCII record (one amplitude per line)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as err:
        raise DataError(f"Cannot read record {path}: {err}", path=path) from err

    samples: list[float] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        samples.append(_parse_amplitude(stripped, path, line_no))

    if not samples:
        raise DataError(f"Record {path} is empty", path=path)
    if len(samples) != BONN_RECORD_LENGTH:
        _LOGGER.warning(
            "Record %s has %d samples, expected %d",
            path.name,
            len(samples),
            BONN_RECORD_LENGTH,
        )
    return Signal(
        samples=np.asarray(samples),
        sample_rate=BONN_SAMPLE_RATE,
        label=label,
        source_id=path.stem,
    )


def dump_bonn_record(signal: Signal, path: str | Path) -> None:
    """Write a signal back in Bonn format: integers, LF, single trailing newline."""
    lines = [str(int(round(v))) for v in signal.samples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_csv(
    path: str | Path,
    label: str,
    column: str | int | None = None,
    sample_rate: float = BONN_SAMPLE_RATE,
) -> Signal:
    """Read one numeric column of a CSV file; a header row is optional."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as err:
        raise DataError(f"Cannot read CSV {path}: {err}", path=path) from err
    if not rows:
        raise DataError(f"CSV {path} is empty", path=path)

    header: list[str] | None = None
    first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        header = [c.strip() for c in first]
        rows = rows[1:]

    if column is None:
        index = 0
    elif isinstance(column, int):
        index = column
    elif header is not None and column in header:
        index = header.index(column)
    else:
        raise DataError(f"CSV {path} has no column {column!r}", path=path)

    start_line = 2 if header is not None else 1
    samples: list[float] = []
    for line_no, row in enumerate(rows, start=start_line):
        if index >= len(row):
            raise DataError(
                f"{path}: line {line_no} has no column {index}", path=path, line=line_no
            )
        samples.append(_parse_amplitude(row[index].strip(), path, line_no))

    if not samples:
        raise DataError(f"CSV {path} has no samples", path=path)
    return Signal(
        samples=np.asarray(samples),
        sample_rate=sample_rate,
        label=label,
        source_id=path.stem,
    )


def resolve_set_directory(root: str | Path, label: str) -> Path:
    """Find the folder of a Bonn set by letter (A-E) or archive name (Z,O,N,F,S)."""
    root = Path(root)
    candidates = [label, label.lower()]
    archive = BONN_SET_DIRECTORIES.get(label.upper())
    if archive:
        candidates += [archive, archive.lower()]
    for name in candidates:
        if (root / name).is_dir():
            return root / name
    raise DataError(f"No directory for set {label} under {root}", path=root)


def load_set(
    directory: str | Path,
    label: str,
    sample_rate: float = BONN_SAMPLE_RATE,
) -> list[Signal]:
    """Load every record in a directory, sorted by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"Data directory {directory} does not exist", path=directory)

    files = sorted(
        p for p in directory.iterdir() if p.is_file() and not p.name.startswith(".")
    )
    if not files:
        raise DataError(f"Data directory {directory} is empty", path=directory)

    signals: list[Signal] = []
    for file in files:
        try:
            if file.suffix.lower() == ".csv":
                signals.append(load_csv(file, label, sample_rate=sample_rate))
            else:
                signals.append(load_bonn_record(file, label))
        except DataError as err:
            raise DataError(f"Failed to load {file.name}: {err}", path=file) from err

    _LOGGER.debug("Loaded %d records for class %s from %s", len(signals), label, directory)
    return signals


def design_bandpass(spec: BandpassSpec, sample_rate: float) -> NDArray[np.float64]:
    """Butterworth band-pass as second-order sections (bilinear transform)."""
    spec.validate(sample_rate)
    return np.asarray(
        butter(
            spec.filter_order,
            [spec.low_cut, spec.high_cut],
            btype="bandpass",
            fs=sample_rate,
            output="sos",
        )
    )


def bandpass(signal: Signal, spec: BandpassSpec) -> Signal:
    """Filter a signal; zero-phase mode runs forward then backward."""
    sos = design_bandpass(spec, signal.sample_rate)
    x = signal.samples
    if spec.zero_phase:
        # Reflect-pad by 3x the filter order, clipped for very short records.
        padlen = min(3 * spec.filter_order, x.size - 1)
        y = sosfiltfilt(sos, x, padtype="even" if padlen > 0 else None, padlen=padlen)
    else:
        y = sosfilt(sos, x)
    return signal.with_samples(np.asarray(y, dtype=np.float64))


def preprocess(signal: Signal, spec: BandpassSpec | None) -> Signal:
    if spec is None:
        return signal
    return bandpass(signal, spec)


def label_signals(sets: dict[str, Sequence[Signal]]) -> list[Signal]:
    """Flatten class -> records into one list ordered by class tag then filename."""
    out: list[Signal] = []
    for label in sorted(sets):
        out.extend(sets[label])
    return out
