# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""The `qgsa` command-line tool.

```text
qgsa fit --input sales.csv --alpha 0.9 --out fit/ --plot
qgsa predict --surface fit/surface.csv --day 3 --hour 5 5.5
qgsa simulate --dist poisson --mean 5 --out sales.csv
qgsa bench --out bench/
```

Every setting can also be read from a flat `key=value` file given with `--config`.
Command-line flags override the file, which overrides the built-in defaults.
Sales files use the `date`, `hour` and `qty` columns unless `--col-date`,
`--col-hour` or `--col-qty` name others.

Exit codes: 0 on success (possibly with warnings), 2 on usage or configuration
errors, 3 on data errors (including unreadable inputs) and 4 on numerical failures.
"""

import argparse
import asyncio
import dataclasses
import logging
import pathlib
import sys
from collections.abc import Callable, Mapping, Sequence
from typing import Any, NamedTuple

from . import _bench
from ._config import load_config_file, merge_settings
from ._exceptions import ConfigError, DataError, NumericalError
from ._svg import write_day_plots
from .gsa import GsaParams
from .minnorm import BundleMode
from .panel import (
    CsvSchema,
    Distribution,
    SalesPanel,
    SyntheticSpec,
    build_panel,
    generate_synthetic,
    panel_to_records,
    parse_csv,
    seasonal_profile,
    write_records_csv,
)
from .qam import (
    InitMode,
    QamConfig,
    qam_fit,
    qam_predict,
    read_surface_csv,
    write_surface_csv,
)
from .smoother import GroupKey, SmootherSpec

_logger = logging.getLogger(__name__)

EXIT_OK = 0
"""Success, possibly with warnings."""

EXIT_USAGE = 2
"""Invalid command line or configuration."""

EXIT_DATA = 3
"""Invalid or unreadable input data."""

EXIT_NUMERICAL = 4
"""A numerical procedure failed."""


class _Setting(NamedTuple):
    default: Any
    kind: type[Any]
    help: str


_FIT_SETTINGS: Mapping[str, _Setting] = {
    "input": _Setting(None, str, "the sales CSV file"),
    "out": _Setting("qgsa-fit", str, "the output directory"),
    "alpha": _Setting(0.9, float, "the quantile level"),
    "span": _Setting(0.75, float, "the LOESS span"),
    "degree": _Setting(1, int, "the LOESS degree (0, 1 or 2)"),
    "group": _Setting(
        "day", str, "how day classes are smoothed (day, pooled, additive)"
    ),
    "mode": _Setting("avg", str, "how gradient bundles are reduced (qp, avg)"),
    "m": _Setting(None, int, "the number of sampled points per iteration"),
    "seed": _Setting(0, int, "the random seed"),
    "max_iter": _Setting(10_000, int, "the maximum number of iterations"),
    "eps0": _Setting(0.1, float, "the initial sampling radius, relative to the IQR"),
    "tau0": _Setting(1e-2, float, "the initial stationarity tolerance"),
    "init": _Setting("global", str, "the starting point (global, per-day)"),
    "resmooth": _Setting(False, bool, "smooth the iterate after every step"),
    "hours": _Setting(None, int, "the number of hours per day (default: the largest)"),
    "opening_hour": _Setting(6, int, "the wall-clock hour mapped to hour index 1"),
    "col_date": _Setting("date", str, "the name of the date column"),
    "col_hour": _Setting("hour", str, "the name of the hour column"),
    "col_qty": _Setting("qty", str, "the name of the quantity column"),
    "plot": _Setting(False, bool, "write one SVG plot per day class"),
}

_PREDICT_SETTINGS: Mapping[str, _Setting] = {
    "surface": _Setting(None, str, "the surface CSV file written by fit"),
    "day": _Setting(None, int, "the day class"),
}

_SIMULATE_SETTINGS: Mapping[str, _Setting] = {
    "out": _Setting("sales.csv", str, "the CSV file to write"),
    "hours": _Setting(17, int, "the number of hours per day"),
    "replicates": _Setting(20, int, "the number of weeks simulated"),
    "mean": _Setting(10.0, float, "the base level of the sales"),
    "amplitude": _Setting(0.0, float, "the amplitude of the intraday sine wave"),
    "day_shift": _Setting(0.0, float, "the level increment between day classes"),
    "sd": _Setting(1.0, float, "the standard deviation of the sales"),
    "dist": _Setting("normal", str, "the distribution (normal, lognormal, poisson)"),
    "seed": _Setting(0, int, "the random seed"),
    "opening_hour": _Setting(6, int, "the wall-clock hour of hour index 1"),
    "col_date": _Setting("date", str, "the name of the date column"),
    "col_hour": _Setting("hour", str, "the name of the hour column"),
    "col_qty": _Setting("qty", str, "the name of the quantity column"),
}

_BENCH_SETTINGS: Mapping[str, _Setting] = {
    "out": _Setting("qgsa-bench", str, "the output directory"),
    "seed": _Setting(0, int, "the random seed"),
    "qam_days": _Setting(753, int, "the number of days of the surface fit benchmark"),
    "qam_hours": _Setting(18, int, "the number of hours of the surface fit benchmark"),
    "skip_qam": _Setting(False, bool, "skip the surface fit benchmark"),
}

_SETTINGS: Mapping[str, Mapping[str, _Setting]] = {
    "fit": _FIT_SETTINGS,
    "predict": _PREDICT_SETTINGS,
    "simulate": _SIMULATE_SETTINGS,
    "bench": _BENCH_SETTINGS,
}


_FIT_METADATA_KEYS = (
    "span",
    "degree",
    "group",
    "mode",
    "m",
    "seed",
    "max_iter",
    "eps0",
    "tau0",
    "init",
    "resmooth",
)
"""The settings written to the metadata line of a fitted surface."""

@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A resolved command invocation."""

    command: str
    """The command to run."""

    settings: Mapping[str, Any]
    """The resolved value of every setting of the command."""

    query_hours: tuple[float, ...] = ()
    """The hours to predict, for the `predict` command."""

    def path(self, key: str) -> pathlib.Path:
        """Return a path setting.

        Args:
            key: The setting name.

        Returns:
            The path.

        Raises:
            ConfigError: If the setting is not set.
        """
        value = self.settings.get(key)
        if value is None:
            raise ConfigError(f"{self.command}: --{key.replace('_', '-')} is required")
        return pathlib.Path(value)

    def schema(self) -> CsvSchema:
        """Return the CSV schema of the sales files.

        Returns:
            The schema.

        Raises:
            ConfigError: If the schema settings are invalid.
        """
        try:
            return CsvSchema(
                date=self.settings.get("col_date", "date"),
                hour=self.settings.get("col_hour", "hour"),
                quantity=self.settings.get("col_qty", "qty"),
                opening_hour=self.settings["opening_hour"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def qam_config(self) -> QamConfig:
        """Return the fit configuration.

        Returns:
            The fit configuration.

        Raises:
            ConfigError: If the fit settings are invalid.
        """
        s = self.settings
        try:
            return QamConfig(
                alpha=s["alpha"],
                gsa=GsaParams(
                    m=s["m"],
                    eps0=s["eps0"],
                    tau0=s["tau0"],
                    max_iter=s["max_iter"],
                    seed=s["seed"],
                    bundle_mode=BundleMode(s["mode"]),
                ),
                smoother=SmootherSpec(
                    span=s["span"],
                    degree=s["degree"],
                    group_key=GroupKey(s["group"]),
                    resmooth_iterate=s["resmooth"],
                ),
                init=InitMode(s["init"]),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid fit configuration: {exc}") from exc

    def synthetic_spec(self) -> SyntheticSpec:
        """Return the simulation parameters.

        Returns:
            The simulation parameters, always with 7 day classes.

        Raises:
            ConfigError: If the simulation settings are invalid.
        """
        s = self.settings
        sd = s["sd"]
        try:
            return SyntheticSpec(
                T=s["hours"],
                J=7,
                replicates=s["replicates"],
                mean_fn=seasonal_profile(
                    s["mean"], s["amplitude"], s["day_shift"], T=s["hours"]
                ),
                sd_fn=lambda _t, _j: sd,
                distribution=Distribution.parse(s["dist"]),
                seed=s["seed"],
            )
        except ValueError as exc:
            raise ConfigError(f"invalid simulation configuration: {exc}") from exc


def _option(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    """Return the command-line parser.

    Returns:
        The parser.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="a key=value configuration file")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="the minimum level of the log messages written to stderr",
    )
    parser = argparse.ArgumentParser(
        prog="qgsa",
        description="Fit quantile surfaces of intraday sales by gradient sampling.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "fit": "fit a quantile surface to a sales CSV file",
        "predict": "predict quantiles from a fitted surface",
        "simulate": "write a synthetic sales CSV file",
        "bench": "run the benchmark suite",
    }
    for command, settings in _SETTINGS.items():
        subparser = commands.add_parser(
            command, parents=[common], help=descriptions[command]
        )
        for name, setting in settings.items():
            if setting.kind is bool:
                subparser.add_argument(
                    _option(name),
                    dest=name,
                    action=argparse.BooleanOptionalAction,
                    default=None,
                    help=setting.help,
                )
            else:
                subparser.add_argument(
                    _option(name), dest=name, type=setting.kind, help=setting.help
                )
        if command == "predict":
            subparser.add_argument(
                "--hour",
                dest="query_hours",
                type=float,
                nargs="+",
                help="the hour indices to predict",
            )
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Resolve the settings of a parsed command line.

    Args:
        args: The parsed command line.

    Returns:
        The resolved invocation.

    Raises:
        ConfigError: If the configuration file or a setting is invalid.
    """
    settings = _SETTINGS[args.command]
    file_values = load_config_file(args.config) if args.config else {}
    known = {name for table in _SETTINGS.values() for name in table}
    resolved = merge_settings(
        {name: getattr(args, name, None) for name in settings},
        file_values,
        {name: setting.default for name, setting in settings.items()},
        {name: setting.kind for name, setting in settings.items()},
        known,
    )
    return RunConfig(
        command=args.command,
        settings=resolved,
        query_hours=tuple(getattr(args, "query_hours", None) or ()),
    )


def _fit_metadata(config: RunConfig) -> dict[str, object]:
    return {key: config.settings[key] for key in _FIT_METADATA_KEYS}


def cmd_fit(config: RunConfig) -> int:
    """Fit a surface and write `surface.csv`, `fit_log.csv` and optional plots.

    Args:
        config: The invocation.

    Returns:
        The exit status.

    Raises:
        DataError: If the sales file is empty.
    """
    qam_config = config.qam_config()
    input_path = config.path("input")
    out = config.path("out")
    with open(input_path, "rb") as stream:
        records = parse_csv(stream, config.schema())
    if not records:
        raise DataError(f"{input_path} has no sales records")
    hours = config.settings["hours"] or max(record.hour for record in records)
    panel = build_panel(records, hours)

    surface = qam_fit(panel, qam_config)

    out.mkdir(parents=True, exist_ok=True)
    write_surface_csv(surface, out / "surface.csv", _fit_metadata(config))
    if surface.fit_log is not None:
        surface.fit_log.write_csv(out / "fit_log.csv")
    if config.settings["plot"]:
        write_day_plots(panel, surface, out)
    if not surface.converged:
        _logger.warning(
            "BEST-EFFORT FIT: no convergence within %d iterations, the surface is the "
            "best one found",
            qam_config.gsa.max_iter,
        )
    print(f"Wrote the {qam_config.alpha:g}-quantile surface of {panel} to {out}")
    return EXIT_OK


def cmd_predict(config: RunConfig) -> int:
    """Print the predicted quantiles of a day class at some hours.

    Args:
        config: The invocation.

    Returns:
        The exit status.

    Raises:
        ConfigError: If the day or the hours are missing.
    """
    day = config.settings["day"]
    if day is None:
        raise ConfigError("predict: --day is required")
    if not config.query_hours:
        raise ConfigError("predict: --hour is required")
    surface = read_surface_csv(config.path("surface"))
    print("day,hour,q_hat")
    for hour in config.query_hours:
        print(f"{day},{hour:g},{qam_predict(surface, hour, day)!r}")
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    """Write a synthetic sales CSV file.

    Negative draws are clipped to 0, as sales can't be negative.

    Args:
        config: The invocation.

    Returns:
        The exit status.

    Raises:
        ConfigError: If the simulated moments are not valid for the distribution.
    """
    spec = config.synthetic_spec()
    out = config.path("out")
    try:
        panel = generate_synthetic(spec)
    except ValueError as exc:
        raise ConfigError(f"invalid simulation configuration: {exc}") from exc
    clipped = SalesPanel(
        panel.T,
        panel.J,
        {
            key: [max(value, 0.0) for value in values]
            for key, values in panel.cells.items()
        },
    )
    records = panel_to_records(clipped)
    if out.parent != pathlib.Path():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out, config.schema())
    print(f"Wrote {len(records)} sales records to {out}")
    return EXIT_OK


def cmd_bench(config: RunConfig) -> int:
    """Run the benchmark suite and write `bench.csv` and `bench.md`.

    Args:
        config: The invocation.

    Returns:
        The exit status.
    """
    s = config.settings
    tasks = _bench.gsa_tasks(s["seed"])
    if not s["skip_qam"]:
        tasks.append(_bench.qam_task(s["qam_days"], s["qam_hours"], s["seed"]))
    max_workers = _bench.thread_limit()
    results = asyncio.run(_bench.run_benchmarks(tasks, max_workers))
    _bench.write_report(results, config.path("out"))
    print(_bench.to_markdown(results), end="")
    return EXIT_OK


COMMANDS: Mapping[str, Callable[[RunConfig], int]] = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}
"""The implementation of every command."""


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command-line tool.

    Args:
        argv: The arguments, `sys.argv[1:]` if not given.

    Returns:
        The exit status.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _configure_logging(args.log_level)

    try:
        config = build_run_config(args)
        return COMMANDS[config.command](config)
    except ConfigError as error:
        _logger.error("Configuration error: %s", error)
        return EXIT_USAGE
    except (DataError, OSError) as error:
        _logger.error("Data error: %s", error)
        return EXIT_DATA
    except NumericalError as error:
        _logger.error("Numerical failure: %s", error)
        return EXIT_NUMERICAL
