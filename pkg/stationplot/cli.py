"""Command-line front end: ``stationplot <command> [options]``."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

import numpy as np

from .config import (
    CONF_BANDPASS,
    CONF_DATA,
    CONF_DETREND,
    CONF_DIMENSION,
    CONF_INCLUDE_3D,
    CONF_KERNELS,
    CONF_ORDERS,
    CONF_OUTPUT_DIR,
    CONF_PROBLEMS,
    CONF_RUNS,
    CONF_SEED,
    CONF_STRATIFY,
    CONF_THREADS,
    PipelineConfig,
    load_config,
    resolve_problems,
)
from .const import (
    DIR_EMBEDDINGS,
    DIR_FEATURES,
    DIR_FIGURES,
    DIR_REPORTS,
    DIR_STATS,
    EXIT_OK,
    FEATURE_TITLES,
    KERNEL_NAMES,
    PROBLEM_CLASSES,
    PROBLEM_CUSTOM,
)
from .coordinator import FeatureExtraction, PipelineCoordinator
from .embedding import PointCloud
from .evaluation import EvalReport, build_dataset, format_report_table, run_experiment
from .exceptions import ConfigValidationError, DataError, StationPlotError
from .geometry import quickhull2d
from .plot import PROJECTIONS, render_boxplot, render_stationplot
from .stats import (
    FeatureTable,
    SignificanceTable,
    boxplot_summary,
    rank_features,
    select_features,
    significance_table,
)
from .storage import (
    STORAGE_VERSION,
    cloud_to_csv,
    exclusions_to_json,
    feature_table_from_csv,
    feature_table_to_csv,
    model_from_json,
    model_to_json,
    read_json,
    report_to_json,
    significance_to_csv,
    significance_to_json,
    write_json,
)
from .utils import format_float

_LOGGER = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise ConfigValidationError(f"{self.prog}: {message}", {"arguments": message})


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, doc: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(path, doc)


def features_path(config: PipelineConfig, order: int) -> Path:
    return config.output_dir / DIR_FEATURES / f"features_order{order}.csv"


def _require_data(config: PipelineConfig) -> None:
    if not config.data:
        raise ConfigValidationError(
            "No data directories configured", {CONF_DATA: "required for this command"}
        )


def _hull_overlays(cloud: PointCloud) -> list[Any]:
    views = [(0, 1)] if cloud.dimension == 2 else list(PROJECTIONS)
    hulls = []
    for axes in views:
        try:
            hulls.append(quickhull2d(cloud.points[:, list(axes)]))
        except DataError:
            hulls.append(None)
    return hulls


async def _async_embed(config: PipelineConfig, plot: bool, csv: bool = True) -> None:
    _require_data(config)
    async with PipelineCoordinator(config) as coordinator:
        signals = await coordinator.async_load_signals()
        for order in config.orders:
            clouds = await coordinator.async_embed(order)
            exclusions = []
            for signal, cloud in zip(signals, clouds, strict=True):
                stem = f"{signal.label}_{signal.source_id}"
                if isinstance(cloud, DataError):
                    exclusions.append(
                        {"source_id": signal.source_id, "label": signal.label,
                         "order": order, "reason": str(cloud)}
                    )
                    continue
                if csv:
                    _write_text(
                        config.output_dir / DIR_EMBEDDINGS / f"order{order}" / f"{stem}.csv",
                        cloud_to_csv(cloud),
                    )
                if plot:
                    svg = render_stationplot(
                        cloud,
                        _hull_overlays(cloud),
                        title=f"{signal.source_id} ({signal.label}), order {order}",
                    )
                    _write_text(
                        config.output_dir / DIR_FIGURES / f"order{order}" / f"{stem}.svg",
                        svg,
                    )
            if exclusions:
                _write_json(
                    config.output_dir / DIR_EMBEDDINGS / f"order{order}" / "exclusions.json",
                    exclusions_to_json(exclusions),
                )


def cmd_embed(config: PipelineConfig, args: argparse.Namespace) -> int:
    asyncio.run(_async_embed(config, plot=args.plot))
    return EXIT_OK


def cmd_plot(config: PipelineConfig, args: argparse.Namespace) -> int:
    asyncio.run(_async_embed(config, plot=True, csv=False))
    return EXIT_OK


async def _async_features(config: PipelineConfig) -> dict[int, FeatureExtraction]:
    _require_data(config)
    out: dict[int, FeatureExtraction] = {}
    async with PipelineCoordinator(config) as coordinator:
        for order in config.orders:
            extraction = await coordinator.async_extract_features(order)
            _write_text(features_path(config, order), feature_table_to_csv(extraction.table))
            _write_json(
                config.output_dir / DIR_FEATURES / f"exclusions_order{order}.json",
                exclusions_to_json(list(extraction.exclusions)),
            )
            out[order] = extraction
    return out


def cmd_features(config: PipelineConfig, args: argparse.Namespace) -> int:
    asyncio.run(_async_features(config))
    return EXIT_OK


def _load_tables(
    config: PipelineConfig, features_csv: str | None
) -> dict[int, FeatureTable]:
    if features_csv is not None:
        table = feature_table_from_csv(features_csv)
        return {order: table.for_order(order) for order in table.orders}
    return {order: feature_table_from_csv(features_path(config, order)) for order in config.orders}


def run_stats(config: PipelineConfig, table: FeatureTable, order: int) -> SignificanceTable:
    if len(set(table.labels)) < 2:
        raise DataError("Statistics need at least 2 classes", order=order)
    problems = resolve_problems(config, table.labels)
    significance = significance_table(table, problems, config.positive)
    stats_dir = config.output_dir / DIR_STATS
    _write_text(stats_dir / f"significance_order{order}.csv", significance_to_csv(significance))
    _write_json(stats_dir / f"significance_order{order}.json", significance_to_json(significance))

    ranking_doc: dict[str, Any] = {"version": STORAGE_VERSION, "order": order, "problems": {}}
    for problem in problems:
        dataset = build_dataset(table, problem, positive=config.positive)
        rankings = rank_features(
            dataset.rows, [str(t) for t in dataset.targets], dataset.feature_names
        )
        ranking_doc["problems"][problem] = [
            {"feature": r.name, "h_statistic": r.h_statistic, "p_value": r.p_value}
            for r in rankings
        ]
    _write_json(stats_dir / f"ranking_order{order}.json", ranking_doc)

    labels = sorted(set(table.labels))
    tags = np.asarray(table.labels)
    for name in table.feature_names:
        column = table.matrix([name])[:, 0]
        summaries = [boxplot_summary(column[tags == label], label=label) for label in labels]
        _write_text(
            config.output_dir / DIR_FIGURES / f"boxplot_{name}_order{order}.svg",
            render_boxplot(summaries, title=f"{FEATURE_TITLES[name]}, order {order}"),
        )
    return significance


def cmd_stats(config: PipelineConfig, args: argparse.Namespace) -> int:
    for order, table in _load_tables(config, args.features_csv).items():
        run_stats(config, table, order)
    return EXIT_OK


def run_classification(
    config: PipelineConfig, table: FeatureTable, order: int, save_models: bool = False
) -> dict[str, EvalReport]:
    reports: dict[str, EvalReport] = {}
    for problem in resolve_problems(config, table.labels):
        dataset = build_dataset(table, problem, positive=config.positive)
        names = list(dataset.feature_names)
        if config.selection_threshold is not None:
            rankings = rank_features(dataset.rows, [str(t) for t in dataset.targets], names)
            names = select_features(rankings, config.selection_threshold)
            dataset = build_dataset(table, problem, features=names, positive=config.positive)
        report = run_experiment(
            dataset,
            config.kernel_specs(),
            C=config.C,
            runs=config.runs,
            seed=config.seed,
            train_fraction=config.train_fraction,
            stratify=config.stratify,
            threads=config.threads,
            tol=config.tol,
            max_passes=config.max_passes,
            order=order,
        )
        reports_dir = config.output_dir / DIR_REPORTS
        _write_json(reports_dir / f"{problem}_order{order}.json", report_to_json(report))
        _write_text(reports_dir / f"{problem}_order{order}.txt", format_report_table(report))
        if save_models:
            for kernel_name, model in sorted(report.models.items()):
                doc = model_to_json(model)
                doc["features"] = list(report.feature_names)
                doc["problem"] = problem
                doc["order"] = order
                _write_json(
                    reports_dir / "models" / f"{problem}_order{order}_{kernel_name}.json", doc
                )
        reports[problem] = report
    return reports


def cmd_classify(config: PipelineConfig, args: argparse.Namespace) -> int:
    for order, table in _load_tables(config, args.features_csv).items():
        for report in run_classification(config, table, order, args.save_models).values():
            sys.stdout.write(format_report_table(report))
    return EXIT_OK


def summarize(reports: dict[int, dict[str, EvalReport]]) -> dict[str, Any]:
    """Best order per problem by the mean accuracy of its best kernel."""
    problems: dict[str, Any] = {}
    for order in sorted(reports):
        for problem, report in reports[order].items():
            entry = problems.setdefault(
                problem, {"orders": {}, "best_order": None, "best_kernel": None, "accuracy": None}
            )
            entry["orders"][str(order)] = {
                k.name: k.accuracy.mean for k in report.kernels
            }
            best = report.best_kernel()
            if best is None or best.accuracy.mean is None:
                continue
            if entry["accuracy"] is None or best.accuracy.mean > entry["accuracy"]:
                entry.update(
                    best_order=order, best_kernel=best.name, accuracy=best.accuracy.mean
                )
    return {"version": STORAGE_VERSION, "problems": problems}


def cmd_pipeline(config: PipelineConfig, args: argparse.Namespace) -> int:
    extractions = asyncio.run(_async_features(config))
    reports: dict[int, dict[str, EvalReport]] = {}
    for order, extraction in extractions.items():
        run_stats(config, extraction.table, order)
        reports[order] = run_classification(config, extraction.table, order, args.save_models)
    summary = summarize(reports)
    _write_json(config.output_dir / DIR_REPORTS / "summary.json", summary)
    for problem, entry in summary["problems"].items():
        _LOGGER.info(
            "%s: best order %s with %s kernel (%s%% accuracy)",
            problem,
            entry["best_order"],
            entry["best_kernel"],
            entry["accuracy"],
        )
    return EXIT_OK


def cmd_predict(config: PipelineConfig, args: argparse.Namespace) -> int:
    doc = read_json(args.model)
    model = model_from_json(doc)
    table = feature_table_from_csv(args.features_csv)
    names = doc.get("features") or list(table.feature_names)
    table = table.with_features(names)
    decisions = model.decision_values(table.matrix())
    lines = ["source_id,label,order,decision_value,prediction"]
    for record, value in zip(table.records, decisions, strict=True):
        lines.append(
            f"{record.source_id},{record.label},{record.order},"
            f"{format_float(value)},{1 if value >= 0 else -1}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument(
        "--data",
        action="append",
        metavar="DIR|LABEL=DIR",
        help="Bonn root folder, or one class directory per LABEL=DIR (repeatable)",
    )
    parser.add_argument("--output-dir", help="output root (default: stationplot-output)")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--orders", type=int, nargs="+", help="differencing orders n")
    parser.add_argument("--dimension", type=int, choices=(2, 3))
    parser.add_argument("--detrend", choices=("none", "mean", "linear"))
    parser.add_argument("--bandpass", action="store_true", default=None,
                        help="enable the band-pass filter")
    parser.add_argument("--include-3d", action="store_true", default=None,
                        help="add hull volume and surface area features")
    parser.add_argument(
        "--problem", choices=[*sorted(PROBLEM_CLASSES), PROBLEM_CUSTOM], action="append"
    )
    parser.add_argument("--kernels", nargs="+", metavar="KERNEL",
                        help=f"any of {', '.join(KERNEL_NAMES)}")
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-stratify", action="store_true", default=None,
                        help="plain random splits")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="stationplot",
        description="StationPlot embedding, hull features and seizure classification",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    embed = commands.add_parser("embed", help="write StationPlot point clouds")
    embed.add_argument("--plot", action="store_true", help="also render SVG figures")
    embed.set_defaults(handler=cmd_embed)

    commands.add_parser("features", help="write CHG feature tables").set_defaults(
        handler=cmd_features
    )

    stats = commands.add_parser("stats", help="p-values, rankings and box plots")
    stats.add_argument("--features-csv", help="feature table (default: output layout)")
    stats.set_defaults(handler=cmd_stats)

    classify = commands.add_parser("classify", help="repeated SVM evaluation")
    classify.add_argument("--features-csv", help="feature table (default: output layout)")
    classify.add_argument("--save-models", action="store_true")
    classify.set_defaults(handler=cmd_classify)

    commands.add_parser("plot", help="render StationPlot figures").set_defaults(
        handler=cmd_plot
    )

    pipeline = commands.add_parser("pipeline", help="features, stats and classify")
    pipeline.add_argument("--save-models", action="store_true")
    pipeline.set_defaults(handler=cmd_pipeline)

    predict = commands.add_parser("predict", help="score a feature table with a saved model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--features-csv", required=True)
    predict.add_argument("--out", help="CSV destination (default: stdout)")
    predict.set_defaults(handler=cmd_predict)

    for sub in commands.choices.values():
        _add_common(sub)
    return parser


def _data_override(values: Sequence[str] | None) -> str | dict[str, str] | None:
    if not values:
        return None
    if len(values) == 1 and "=" not in values[0]:
        return values[0]
    out: dict[str, str] = {}
    for item in values:
        label, sep, path = item.partition("=")
        if not sep or not label:
            raise ConfigValidationError(
                f"Expected LABEL=DIR, got {item!r}", {CONF_DATA: item}
            )
        out[label] = path
    return out


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides: dict[str, Any] = {
        CONF_DATA: _data_override(args.data),
        CONF_OUTPUT_DIR: args.output_dir,
        CONF_THREADS: args.threads,
        CONF_ORDERS: args.orders,
        CONF_DIMENSION: args.dimension,
        CONF_DETREND: args.detrend,
        CONF_BANDPASS: {"enabled": True} if args.bandpass else None,
        CONF_INCLUDE_3D: args.include_3d,
        CONF_PROBLEMS: args.problem,
        CONF_KERNELS: args.kernels,
        CONF_RUNS: args.runs,
        CONF_SEED: args.seed,
        CONF_STRATIFY: False if args.no_stratify else None,
    }
    return load_config(args.config, overrides)


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose, args.quiet)
        config = config_from_args(args)
        return int(args.handler(config, args))
    except StationPlotError as err:
        return _fail(err)
    except OSError as err:
        return _fail(DataError(str(err), path=getattr(err, "filename", None)))


def _fail(err: StationPlotError) -> int:
    sys.stderr.write(json.dumps(err.as_diagnostics(), sort_keys=True) + "\n")
    return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
