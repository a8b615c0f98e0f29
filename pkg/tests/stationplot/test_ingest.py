from __future__ import annotations

import numpy as np
import pytest
import scipy.signal

from stationplot.const import BONN_SAMPLE_RATE
from stationplot.exceptions import ConfigValidationError, DataError
from stationplot.ingest import (
    BandpassSpec,
    Signal,
    bandpass,
    dump_bonn_record,
    label_signals,
    load_bonn_record,
    load_csv,
    load_set,
    preprocess,
    resolve_set_directory,
)
from tests.conftest import make_signal, write_record


def test_load_bonn_record_reads_integers(tmp_path):
    path = tmp_path / "Z001.txt"
    path.write_text("12\n-5\n3", encoding="ascii")

    signal = load_bonn_record(path, "A")

    assert signal.samples.tolist() == [12.0, -5.0, 3.0]
    assert signal.sample_rate == BONN_SAMPLE_RATE
    assert signal.label == "A"
    assert signal.source_id == "Z001"


def test_load_bonn_record_skips_blank_lines_and_crlf(tmp_path):
    path = tmp_path / "Z002.txt"
    path.write_bytes(b"1\r\n\r\n2\r\n3\r\n")

    assert load_bonn_record(path, "A").samples.tolist() == [1.0, 2.0, 3.0]


def test_load_bonn_record_rejects_non_numeric_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1\nabc\n3\n", encoding="ascii")

    with pytest.raises(DataError) as excinfo:
        load_bonn_record(path, "A")
    assert excinfo.value.details["line"] == 2


def test_load_bonn_record_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("\n\n", encoding="ascii")

    with pytest.raises(DataError):
        load_bonn_record(path, "A")


def test_load_bonn_record_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_bonn_record(tmp_path / "nope.txt", "A")


def test_dump_bonn_record_writes_reloadable_text(tmp_path):
    signal = make_signal([4, -7, 0, 12])
    path = tmp_path / "out.txt"

    dump_bonn_record(signal, path)

    assert path.read_text(encoding="ascii") == "4\n-7\n0\n12\n"
    assert load_bonn_record(path, "A").samples.tolist() == [4.0, -7.0, 0.0, 12.0]


def test_signal_rejects_non_finite_samples():
    with pytest.raises(DataError):
        make_signal([1.0, float("nan"), 2.0])


def test_signal_samples_are_read_only():
    signal = make_signal([1, 2, 3])
    with pytest.raises(ValueError):
        signal.samples[0] = 5.0


def test_load_csv_by_header_name(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("time,eeg\n0,5\n1,6\n2,-1\n", encoding="utf-8")

    signal = load_csv(path, "B", column="eeg", sample_rate=256.0)

    assert signal.samples.tolist() == [5.0, 6.0, -1.0]
    assert signal.sample_rate == 256.0


def test_load_csv_without_header_uses_first_column(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("1.5,9\n2.5,9\n", encoding="utf-8")

    assert load_csv(path, "B").samples.tolist() == [1.5, 2.5]


def test_load_csv_unknown_column(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("a\n1\n", encoding="utf-8")

    with pytest.raises(DataError):
        load_csv(path, "B", column="eeg")


def test_resolve_set_directory_accepts_archive_names(tmp_path):
    (tmp_path / "S").mkdir()
    (tmp_path / "a").mkdir()

    assert resolve_set_directory(tmp_path, "E") == tmp_path / "S"
    assert resolve_set_directory(tmp_path, "A") == tmp_path / "a"
    with pytest.raises(DataError):
        resolve_set_directory(tmp_path, "C")


def test_load_set_is_sorted_by_filename(tmp_path):
    folder = tmp_path / "A"
    write_record(folder / "Z010.txt", [3, 3])
    write_record(folder / "Z002.txt", [2, 2])
    write_record(folder / "Z001.txt", [1, 1])
    (folder / ".hidden").write_text("junk", encoding="ascii")

    signals = load_set(folder, "A")

    assert [s.source_id for s in signals] == ["Z001", "Z002", "Z010"]


def test_load_set_names_failing_file(tmp_path):
    folder = tmp_path / "A"
    write_record(folder / "Z001.txt", [1, 2])
    (folder / "Z002.txt").write_text("oops\n", encoding="ascii")

    with pytest.raises(DataError, match="Z002.txt"):
        load_set(folder, "A")


def test_load_set_missing_or_empty_directory(tmp_path):
    with pytest.raises(DataError):
        load_set(tmp_path / "missing", "A")
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError):
        load_set(tmp_path / "empty", "A")


def test_label_signals_orders_by_class_tag():
    sets = {
        "E": [make_signal([1, 2], "E", "S001")],
        "A": [make_signal([1, 2], "A", "Z001"), make_signal([1, 2], "A", "Z002")],
    }

    flat = label_signals(sets)

    assert [(s.label, s.source_id) for s in flat] == [
        ("A", "Z001"),
        ("A", "Z002"),
        ("E", "S001"),
    ]


def _central(values: np.ndarray) -> np.ndarray:
    quarter = values.size // 4
    return values[quarter : values.size - quarter]


def test_bandpass_removes_dc():
    signal = make_signal(np.full(4097, 5.0))

    filtered = bandpass(signal, BandpassSpec())

    assert np.max(np.abs(_central(filtered.samples))) < 0.25


def test_bandpass_keeps_passband_sine():
    t = np.arange(4097) / BONN_SAMPLE_RATE
    signal = make_signal(np.sin(2 * np.pi * 10.0 * t))

    filtered = bandpass(signal, BandpassSpec())

    peak = np.max(np.abs(_central(filtered.samples)))
    assert peak == pytest.approx(1.0, rel=0.05)


def test_bandpass_causal_mode_preserves_length():
    signal = make_signal(np.random.default_rng(1).normal(size=500))

    filtered = bandpass(signal, BandpassSpec(zero_phase=False))

    assert len(filtered) == 500
    assert filtered.label == signal.label


@pytest.mark.parametrize(
    "spec",
    [
        BandpassSpec(low_cut=0.0),
        BandpassSpec(low_cut=40.0, high_cut=10.0),
        BandpassSpec(high_cut=BONN_SAMPLE_RATE),
        BandpassSpec(filter_order=0),
    ],
)
def test_bandpass_rejects_invalid_corners(spec):
    with pytest.raises(ConfigValidationError):
        bandpass(make_signal(np.zeros(100)), spec)


def test_preprocess_without_filter_is_identity():
    signal = make_signal([1, 2, 3])

    assert preprocess(signal, None) is signal


def test_with_samples_keeps_metadata():
    signal = Signal(np.arange(4.0), 100.0, "C", "N001")

    other = signal.with_samples([9.0])

    assert (other.label, other.source_id, other.sample_rate) == ("C", "N001", 100.0)
    assert other.samples.tolist() == [9.0]


@pytest.mark.parametrize("seed", range(5))
def test_bonn_record_round_trips_byte_for_byte(tmp_path, seed):
    rng = np.random.default_rng(seed)
    source = write_record(tmp_path / "in.txt", rng.integers(-2048, 2048, size=4097))
    copy = tmp_path / "out.txt"

    dump_bonn_record(load_bonn_record(source, "A"), copy)

    assert copy.read_bytes() == source.read_bytes()


@pytest.mark.parametrize("zero_phase", [True, False])
def test_bandpass_is_linear(zero_phase):
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=2048), rng.normal(size=2048)
    spec = BandpassSpec(zero_phase=zero_phase)

    combined = bandpass(make_signal(2.5 * x - 0.75 * y), spec).samples
    separate = 2.5 * bandpass(make_signal(x), spec).samples - 0.75 * bandpass(
        make_signal(y), spec
    ).samples

    np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-9)


def test_zero_phase_output_is_not_delayed():
    x = np.random.default_rng(4).normal(size=4097)

    y = bandpass(make_signal(x), BandpassSpec()).samples

    xcorr = scipy.signal.correlate(y, x, mode="full")
    lags = scipy.signal.correlation_lags(y.size, x.size, mode="full")
    assert lags[np.argmax(xcorr)] == 0
