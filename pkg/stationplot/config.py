"""Pipeline configuration: JSON document plus overrides, validated with voluptuous."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    BONN_SAMPLE_RATE,
    BONN_SET_DIRECTORIES,
    DEFAULT_C,
    DEFAULT_COEF0,
    DEFAULT_DEGREE,
    DEFAULT_DIMENSION,
    DEFAULT_FILTER_ORDER,
    DEFAULT_HIGH_CUT,
    DEFAULT_LOW_CUT,
    DEFAULT_ORDER,
    DEFAULT_RUNS,
    DEFAULT_SEED,
    DEFAULT_SIGMA,
    DEFAULT_TOL,
    DEFAULT_TRAIN_FRACTION,
    FEATURES_2D,
    FEATURES_3D,
    KERNEL_NAMES,
    PROBLEM_CLASSES,
    PROBLEM_CUSTOM,
    SEIZURE_LABEL,
)
from .embedding import EmbeddingConfig
from .exceptions import ConfigValidationError, DataError
from .ingest import BandpassSpec, resolve_set_directory
from .svm import KernelSpec
from .timeseries import DetrendMode

_LOGGER = logging.getLogger(__name__)

CONF_DATA = "data"
CONF_ORDERS = "orders"
CONF_SECONDARY_ORDER = "secondary_order"
CONF_DIMENSION = "dimension"
CONF_DETREND = "detrend"
CONF_BANDPASS = "bandpass"
CONF_FEATURES = "features"
CONF_INCLUDE_3D = "include_3d"
CONF_KERNELS = "kernels"
CONF_SIGMA = "sigma"
CONF_DEGREE = "degree"
CONF_COEF0 = "coef0"
CONF_C = "C"
CONF_TOL = "tol"
CONF_MAX_PASSES = "max_passes"
CONF_RUNS = "runs"
CONF_TRAIN_FRACTION = "train_fraction"
CONF_STRATIFY = "stratify"
CONF_SEED = "seed"
CONF_PROBLEMS = "problems"
CONF_POSITIVE = "positive"
CONF_SELECTION_THRESHOLD = "selection_threshold"
CONF_THREADS = "threads"
CONF_OUTPUT_DIR = "output_dir"
CONF_SAMPLE_RATE = "sample_rate"

DEFAULT_OUTPUT_DIR = "stationplot-output"

_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
_KERNEL_NAME = vol.In(KERNEL_NAMES, msg=f"valid kinds: {', '.join(KERNEL_NAMES)}")
_PROBLEM_NAME = vol.In(
    [*PROBLEM_CLASSES, PROBLEM_CUSTOM],
    msg=f"valid problems: {', '.join([*PROBLEM_CLASSES, PROBLEM_CUSTOM])}",
)

BANDPASS_SCHEMA = vol.Schema(
    {
        vol.Optional("enabled", default=False): bool,
        vol.Optional("low_cut", default=DEFAULT_LOW_CUT): _POSITIVE_FLOAT,
        vol.Optional("high_cut", default=DEFAULT_HIGH_CUT): _POSITIVE_FLOAT,
        vol.Optional("order", default=DEFAULT_FILTER_ORDER): vol.All(int, vol.Range(min=1)),
        vol.Optional("zero_phase", default=True): bool,
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_DATA, default=None): vol.Any(
            None, vol.IsDir(), {str: vol.IsDir()}
        ),
        vol.Optional(CONF_ORDERS, default=[DEFAULT_ORDER]): vol.All(
            [vol.All(int, vol.Range(min=0))], vol.Length(min=1)
        ),
        vol.Optional(CONF_SECONDARY_ORDER, default=None): vol.Any(
            None, vol.All(int, vol.Range(min=0))
        ),
        vol.Optional(CONF_DIMENSION, default=DEFAULT_DIMENSION): vol.In([2, 3]),
        vol.Optional(CONF_DETREND, default=str(DetrendMode.NONE)): vol.In(
            [str(m) for m in DetrendMode]
        ),
        vol.Optional(CONF_BANDPASS, default={}): BANDPASS_SCHEMA,
        vol.Optional(CONF_FEATURES, default=list(FEATURES_2D)): vol.All(
            [vol.In(FEATURES_2D)], vol.Length(min=1)
        ),
        vol.Optional(CONF_INCLUDE_3D, default=False): bool,
        vol.Optional(CONF_KERNELS, default=list(KERNEL_NAMES)): vol.All(
            [_KERNEL_NAME], vol.Length(min=1)
        ),
        vol.Optional(CONF_SIGMA, default=DEFAULT_SIGMA): _POSITIVE_FLOAT,
        vol.Optional(CONF_DEGREE, default=DEFAULT_DEGREE): vol.All(int, vol.Range(min=2)),
        vol.Optional(CONF_COEF0, default=DEFAULT_COEF0): vol.Coerce(float),
        vol.Optional(CONF_C, default=DEFAULT_C): _POSITIVE_FLOAT,
        vol.Optional(CONF_TOL, default=DEFAULT_TOL): _POSITIVE_FLOAT,
        vol.Optional(CONF_MAX_PASSES, default=None): vol.Any(
            None, vol.All(int, vol.Range(min=1))
        ),
        vol.Optional(CONF_RUNS, default=DEFAULT_RUNS): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_TRAIN_FRACTION, default=DEFAULT_TRAIN_FRACTION): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, min_included=False, max_included=False)
        ),
        vol.Optional(CONF_STRATIFY, default=True): bool,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_PROBLEMS, default=None): vol.Any(
            None, vol.All([_PROBLEM_NAME], vol.Length(min=1))
        ),
        vol.Optional(CONF_POSITIVE, default=[SEIZURE_LABEL]): vol.All(
            [str], vol.Length(min=1)
        ),
        vol.Optional(CONF_SELECTION_THRESHOLD, default=None): vol.Any(
            None, vol.All(vol.Coerce(float), vol.Range(min=0, max=1))
        ),
        vol.Optional(CONF_THREADS, default=1): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_OUTPUT_DIR, default=DEFAULT_OUTPUT_DIR): str,
        vol.Optional(CONF_SAMPLE_RATE, default=BONN_SAMPLE_RATE): _POSITIVE_FLOAT,
    }
)


@dataclass(frozen=True)
class PipelineConfig:
    data: Mapping[str, Path]
    orders: tuple[int, ...] = (DEFAULT_ORDER,)
    secondary_order: int | None = None
    dimension: int = DEFAULT_DIMENSION
    detrend: DetrendMode = DetrendMode.NONE
    bandpass: BandpassSpec | None = None
    features: tuple[str, ...] = FEATURES_2D
    include_3d: bool = False
    kernels: tuple[str, ...] = KERNEL_NAMES
    sigma: float = DEFAULT_SIGMA
    degree: int = DEFAULT_DEGREE
    coef0: float = DEFAULT_COEF0
    C: float = DEFAULT_C
    tol: float = DEFAULT_TOL
    max_passes: int | None = None
    runs: int = DEFAULT_RUNS
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    stratify: bool = True
    seed: int = DEFAULT_SEED
    problems: tuple[str, ...] = ()
    positive: tuple[str, ...] = (SEIZURE_LABEL,)
    selection_threshold: float | None = None
    threads: int = 1
    output_dir: Path = field(default_factory=lambda: Path(DEFAULT_OUTPUT_DIR))
    sample_rate: float = BONN_SAMPLE_RATE

    @property
    def feature_names(self) -> tuple[str, ...]:
        if self.include_3d:
            return (*self.features, *FEATURES_3D)
        return self.features

    def embedding_config(self, order: int) -> EmbeddingConfig:
        return EmbeddingConfig(
            base_order=order,
            dimension=self.dimension,
            detrend_mode=self.detrend,
            secondary_order=self.secondary_order,
        )

    def kernel_specs(self) -> list[KernelSpec]:
        return [
            KernelSpec.from_name(name, degree=self.degree, sigma=self.sigma, coef0=self.coef0)
            for name in self.kernels
        ]


def _error_path(err: vol.Invalid) -> str:
    return ".".join(str(p) for p in err.path) or "<root>"


def _error_message(err: vol.Invalid, raw: Mapping[str, Any]) -> str:
    value: Any = raw
    for key in err.path:
        try:
            value = value[key]
        except (KeyError, IndexError, TypeError):
            return err.msg
    if isinstance(value, str | int | float):
        return f"{err.msg}: {value!r}"
    return err.msg


def _resolve_data(data: str | Mapping[str, str]) -> dict[str, Path]:
    if isinstance(data, Mapping):
        return {label: Path(path) for label, path in sorted(data.items())}
    resolved: dict[str, Path] = {}
    for label in BONN_SET_DIRECTORIES:
        try:
            resolved[label] = resolve_set_directory(data, label)
        except DataError:
            continue
    if not resolved:
        raise ConfigValidationError(
            f"No class directories found under {data}",
            {CONF_DATA: f"expected set folders A-E or Z,O,N,F,S in {data}"},
        )
    return resolved


def resolve_problems(config: PipelineConfig, labels: Iterable[str]) -> tuple[str, ...]:
    """Configured problems checked against the available class tags.

    With no explicit list, every named problem whose classes are all present
    is used, falling back to the custom positive-vs-rest problem.
    """
    available = set(labels)
    positive = set(config.positive)
    if config.problems:
        problems = config.problems
    else:
        problems = tuple(
            name
            for name, (neg, pos) in PROBLEM_CLASSES.items()
            if set(neg) | set(pos) <= available
        ) or (PROBLEM_CUSTOM,)

    for problem in problems:
        if problem == PROBLEM_CUSTOM:
            if not positive & available or not available - positive:
                raise ConfigValidationError(
                    "Custom problem needs positive and negative classes",
                    {CONF_POSITIVE: f"{sorted(positive)} vs classes {sorted(available)}"},
                )
            continue
        neg, pos = PROBLEM_CLASSES[problem]
        missing = sorted((set(neg) | set(pos)) - available)
        if missing:
            raise ConfigValidationError(
                f"Problem {problem} needs data for classes {', '.join(missing)}",
                {CONF_PROBLEMS: f"{problem}: missing {', '.join(missing)}"},
            )
    return tuple(problems)


def validate_config(raw: Mapping[str, Any]) -> PipelineConfig:
    """Check a raw mapping against the schema and build a PipelineConfig."""
    try:
        conf = CONFIG_SCHEMA(dict(raw))
    except vol.MultipleInvalid as err:
        errors = {_error_path(e): _error_message(e, raw) for e in err.errors}
        raise ConfigValidationError(
            "Invalid configuration: "
            + "; ".join(f"{k}: {v}" for k, v in sorted(errors.items())),
            errors,
        ) from err

    data = _resolve_data(conf[CONF_DATA]) if conf[CONF_DATA] is not None else {}
    bandpass = None
    bp = conf[CONF_BANDPASS]
    if bp["enabled"]:
        bandpass = BandpassSpec(
            low_cut=bp["low_cut"],
            high_cut=bp["high_cut"],
            filter_order=bp["order"],
            zero_phase=bp["zero_phase"],
        )
        bandpass.validate(conf[CONF_SAMPLE_RATE])

    for order in conf[CONF_ORDERS]:
        try:
            EmbeddingConfig(
                base_order=order,
                dimension=conf[CONF_DIMENSION],
                secondary_order=conf[CONF_SECONDARY_ORDER],
            )
        except ValueError as err:
            raise ConfigValidationError(
                str(err), {CONF_SECONDARY_ORDER: str(err)}
            ) from err

    config = PipelineConfig(
        data=data,
        orders=tuple(sorted(set(conf[CONF_ORDERS]))),
        secondary_order=conf[CONF_SECONDARY_ORDER],
        dimension=conf[CONF_DIMENSION],
        detrend=DetrendMode(conf[CONF_DETREND]),
        bandpass=bandpass,
        features=tuple(conf[CONF_FEATURES]),
        include_3d=conf[CONF_INCLUDE_3D],
        kernels=tuple(conf[CONF_KERNELS]),
        sigma=conf[CONF_SIGMA],
        degree=conf[CONF_DEGREE],
        coef0=conf[CONF_COEF0],
        C=conf[CONF_C],
        tol=conf[CONF_TOL],
        max_passes=conf[CONF_MAX_PASSES],
        runs=conf[CONF_RUNS],
        train_fraction=conf[CONF_TRAIN_FRACTION],
        stratify=conf[CONF_STRATIFY],
        seed=conf[CONF_SEED],
        problems=tuple(conf[CONF_PROBLEMS] or ()),
        positive=tuple(conf[CONF_POSITIVE]),
        selection_threshold=conf[CONF_SELECTION_THRESHOLD],
        threads=conf[CONF_THREADS],
        output_dir=Path(conf[CONF_OUTPUT_DIR]),
        sample_rate=conf[CONF_SAMPLE_RATE],
    )
    if data:
        resolve_problems(config, data)
    return config


def load_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> PipelineConfig:
    """Defaults, then the JSON file, then ``overrides`` (``None`` values skipped)."""
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except OSError as err:
            raise ConfigValidationError(
                f"Cannot read config {path}: {err}", {"config": str(path)}
            ) from err
        except json.JSONDecodeError as err:
            raise ConfigValidationError(
                f"Config {path} is not valid JSON: {err}", {"config": str(path)}
            ) from err
        if not isinstance(loaded, dict):
            raise ConfigValidationError(
                f"Config {path} must hold a JSON object", {"config": str(path)}
            )
        raw.update(loaded)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == CONF_BANDPASS and isinstance(value, Mapping):
            raw[key] = {**raw.get(key, {}), **value}
        else:
            raw[key] = value

    config = validate_config(raw)
    _LOGGER.debug("Loaded configuration: %s", config)
    return config
