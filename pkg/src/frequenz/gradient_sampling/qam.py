# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Quantile additive models of intraday sales.

# Model

The `α`-quantile of the sales at hour `t` of a day of class `j` is modelled as
`q_α(t; j) = β₀ + h_j(t)`, with a smooth curve `h_j` per day class.

# Fitting

[`qam_fit()`][frequenz.gradient_sampling.qam.qam_fit] minimizes the summed pinball loss
of the panel over the vector of per-observation quantiles `q`, starting from a
constant. Every iteration:

1. samples `m` points uniformly in the ball of radius `ε` around `q` and reduces the
   bundle of pinball gradients at `q` and at those points (by averaging, by default);
2. reduces `ε` and the tolerance `τ` if the reduced gradient `ĝ` has `‖ĝ‖ ≤ τ`;
3. otherwise smooths `ĝ` with LOESS against the hour, day class by day class, and
   uses the normalized, negated result as the direction `d`;
4. backtracks `t = 1, 1/2, ...` until `f(q + t·d) < f(q) - β·t·‖ĝ‖` and moves to
   `q + t·d`, or reduces `ε` and `τ` if no step is accepted.

Since the starting point is constant per cell and the directions are smoothed per
cell, all replicates of a cell always share the same fitted value.

```python
from frequenz.gradient_sampling.panel import SyntheticSpec, generate_synthetic
from frequenz.gradient_sampling.qam import QamConfig, qam_fit, qam_predict

panel = generate_synthetic(SyntheticSpec(T=8, J=2, replicates=30, seed=3))
surface = qam_fit(panel, QamConfig(alpha=0.9))
print(qam_predict(surface, 4.5, 2))
```

# Persistence

Surfaces are written to and read from CSV with
[`write_surface_csv()`][frequenz.gradient_sampling.qam.write_surface_csv] and
[`read_surface_csv()`][frequenz.gradient_sampling.qam.read_surface_csv]. Values are
written with their shortest exact representation, so a surface read back predicts
exactly the same values.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import os
from collections.abc import Mapping
from enum import Enum
from types import MappingProxyType
from typing import IO

import numpy as np
import pandas as pd

from ._exceptions import DataError, DayClassNotFoundError, RowError, SchemaError
from ._generic import CellKey, FloatArray
from .gsa import GsaParams, IterationLog, Objective, descend
from .loss import PinballLoss, panel_loss
from .minnorm import BundleMode
from .oracle import empirical_quantile
from .panel import SalesPanel
from .smoother import GroupSmoother, SmootherSpec

_logger = logging.getLogger(__name__)

SURFACE_COLUMNS = ("day", "hour", "alpha", "q_hat")
"""The columns of a surface CSV file."""

META_PREFIX = "# meta:"
"""The prefix of the metadata line of a surface CSV file."""


class InitMode(Enum):
    """How the fitter's starting point is chosen."""

    GLOBAL = "global"
    """The empirical quantile of all the observations."""

    PER_DAY = "per-day"
    """The empirical quantile of the observations of each day class."""


@dataclasses.dataclass(frozen=True)
class QamConfig:
    """The parameters of a quantile additive model fit."""

    alpha: float = 0.9
    """The quantile level, in `(0, 1)`."""

    gsa: GsaParams = GsaParams(bundle_mode=BundleMode.AVG)
    """The descent parameters."""

    smoother: SmootherSpec = SmootherSpec()
    """The smoother applied to the descent directions."""

    init: InitMode = InitMode.GLOBAL
    """How the starting point is chosen."""

    scale_eps: bool = True
    """Whether `eps0` and `eps_min` are relative to the interquartile range of the data.

    When the interquartile range is 0 they are used as they are.
    """

    report_decomposition: bool = True
    """Whether the fitted surface is decomposed into a level and centered curves."""

    def __post_init__(self) -> None:
        """Validate the configuration.

        Raises:
            ValueError: If `alpha` is outside `(0, 1)`.
        """
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), not {self.alpha}")
        object.__setattr__(self, "init", InitMode(self.init))


@dataclasses.dataclass(frozen=True, eq=False)
class Decomposition:
    """A surface split into a level, per-day offsets and centered curves.

    `grid(t, j) = beta0 + offsets[j] + curves[j][t]`, and every curve sums to 0 over
    its observed hours.
    """

    beta0: float
    """The mean of all the grid values."""

    offsets: Mapping[int, float]
    """The mean of the grid values of each day class, minus `beta0`."""

    curves: Mapping[int, Mapping[int, float]]
    """The grid values of each day class minus their mean, by hour."""

    def reconstruct(self, t: int, j: int) -> float:
        """Return the grid value rebuilt from the decomposition.

        Args:
            t: The hour index.
            j: The day class.

        Returns:
            `beta0 + offsets[j] + curves[j][t]`.
        """
        return self.beta0 + self.offsets[j] + self.curves[j][t]


@dataclasses.dataclass(frozen=True, eq=False)
class QuantileSurface:
    """A fitted quantile surface."""

    alpha: float
    """The quantile level."""

    grid: Mapping[CellKey, float]
    """The fitted quantile of every observed `(hour, day class)` cell."""

    obs_vector: FloatArray | None = None
    """The fitted value of every observation, if the surface was fitted here."""

    fit_log: IterationLog | None = None
    """The log of the fit, if the surface was fitted here."""

    decomposition: Decomposition | None = None
    """The decomposition of the grid, if requested."""

    @property
    def converged(self) -> bool:
        """Whether the fit converged (surfaces read from files count as converged)."""
        return self.fit_log is None or self.fit_log.converged

    @property
    def day_classes(self) -> tuple[int, ...]:
        """The fitted day classes, sorted."""
        return tuple(sorted({j for _, j in self.grid}))

    def hours(self, j: int) -> tuple[int, ...]:
        """Return the fitted hours of a day class.

        Args:
            j: The day class.

        Returns:
            The hours, sorted.
        """
        return tuple(sorted(t for t, day in self.grid if day == j))


def init_surface(panel: SalesPanel, config: QamConfig) -> FloatArray:
    """Return the constant starting point of a fit.

    Args:
        panel: The observed sales.
        config: The fit configuration.

    Returns:
        The starting value of every observation, in the panel's flat order.

    Raises:
        DataError: If the panel is empty.
    """
    if panel.n == 0:
        raise DataError("can't fit a panel without observations")
    if config.init is InitMode.GLOBAL:
        return np.full(panel.n, empirical_quantile(panel.values, config.alpha))
    start = np.empty(panel.n)
    for j in panel.day_classes:
        members = panel.days == j
        start[members] = empirical_quantile(panel.values[members], config.alpha)
    return start


def _eps_scale(panel: SalesPanel, config: QamConfig) -> float:
    if not config.scale_eps:
        return 1.0
    q75, q25 = np.percentile(panel.values, [75.0, 25.0])
    iqr = float(q75 - q25)
    return iqr if iqr > 0.0 else 1.0


def _cell_values(panel: SalesPanel, vector: FloatArray) -> dict[CellKey, float]:
    return {(t, j): float(vector[panel.position(t, j, 1)]) for t, j in panel.cell_keys}


def qam_fit(
    panel: SalesPanel, config: QamConfig = QamConfig()
) -> QuantileSurface:
    """Fit a quantile additive model to a panel.

    A fit that doesn't converge within `config.gsa.max_iter` iterations still
    returns the best surface found; it is flagged in its log.

    Args:
        panel: The observed sales.
        config: The fit configuration.

    Returns:
        The surface with the lowest pinball loss visited.
    """
    start = init_surface(panel, config)
    params = config.gsa
    loss = PinballLoss(config.alpha, panel)
    objective = Objective(
        dim=panel.n, evaluate=loss, grad=loss.grad, grad_many=loss.grad
    )
    smoother = GroupSmoother(panel, config.smoother)
    log = IterationLog(warnings=list(smoother.warnings))

    scale = _eps_scale(panel, config)
    _logger.info(
        "Fitting the %g-quantile of %s with m=%d and eps0=%g",
        config.alpha,
        panel,
        params.sample_size(panel.n),
        params.eps0 * scale,
    )
    best, log = descend(
        objective,
        start,
        params,
        eps_scale=scale,
        direction=smoother,
        project=smoother if config.smoother.resmooth_iterate else None,
        log=log,
    )
    best.flags.writeable = False
    grid = _cell_values(panel, best)
    surface = QuantileSurface(
        alpha=config.alpha,
        grid=MappingProxyType(grid),
        obs_vector=best,
        fit_log=log,
    )
    if config.report_decomposition:
        surface = dataclasses.replace(surface, decomposition=decompose(surface))
    return surface


def decompose(surface: QuantileSurface) -> Decomposition:
    """Split the grid of a surface into a level, day offsets and centered curves.

    Args:
        surface: The surface to decompose.

    Returns:
        The decomposition.
    """
    beta0 = float(np.mean(list(surface.grid.values()))) if surface.grid else 0.0
    offsets: dict[int, float] = {}
    curves: dict[int, Mapping[int, float]] = {}
    for j in surface.day_classes:
        hours = surface.hours(j)
        day_mean = float(np.mean([surface.grid[(t, j)] for t in hours]))
        offsets[j] = day_mean - beta0
        curves[j] = MappingProxyType(
            {t: surface.grid[(t, j)] - day_mean for t in hours}
        )
    return Decomposition(
        beta0=beta0, offsets=MappingProxyType(offsets), curves=MappingProxyType(curves)
    )


def qam_predict(surface: QuantileSurface, t: float, j: int) -> float:
    """Predict the quantile at an hour of a day class.

    Fitted hours are looked up, hours between fitted hours are interpolated linearly
    and hours outside the fitted range get the nearest fitted value, with a warning.

    Args:
        surface: The fitted surface.
        t: The hour index, possibly fractional.
        j: The day class.

    Returns:
        The predicted quantile.

    Raises:
        DayClassNotFoundError: If the day class was not fitted.
    """
    if float(t).is_integer() and (value := surface.grid.get((int(t), j))) is not None:
        return value
    hours = surface.hours(j)
    if not hours:
        raise DayClassNotFoundError(j)
    values = [surface.grid[(hour, j)] for hour in hours]
    if t < hours[0] or t > hours[-1]:
        _logger.warning(
            "Hour %g is outside the fitted hours [%d, %d] of day class %d, "
            "using the nearest fitted value",
            t,
            hours[0],
            hours[-1],
            j,
        )
        return values[0] if t < hours[0] else values[-1]
    return float(np.interp(t, hours, values))


def coverage(surface: QuantileSurface, panel: SalesPanel) -> dict[CellKey, float]:
    """Return the fraction of the observations strictly below the surface, per cell.

    Args:
        surface: The fitted surface.
        panel: The observations, usually the ones the surface was fitted to.

    Returns:
        The fraction of every cell of the panel that is also in the surface grid.
    """
    return {
        key: float(np.mean(np.array(values) < surface.grid[key]))
        for key, values in panel.cells.items()
        if key in surface.grid
    }


def surface_loss(surface: QuantileSurface, panel: SalesPanel) -> float:
    """Return the pinball loss of a surface on a panel.

    Args:
        surface: The fitted surface.
        panel: The observations.

    Returns:
        The summed pinball loss, using the surface's quantile level.

    Raises:
        DataError: If a cell of the panel is not in the surface grid.
    """
    missing = [key for key in panel.cell_keys if key not in surface.grid]
    if missing:
        raise DataError(f"the surface has no value for cell {missing[0]}")
    per_cell = np.array([surface.grid[key] for key in panel.cell_keys])
    return panel_loss(surface.alpha, per_cell[panel.cell_ids], panel)


def _format_float(value: float) -> str:
    return repr(float(value))


def write_surface_csv(
    surface: QuantileSurface,
    target: str | os.PathLike[str] | IO[str],
    meta: Mapping[str, object] | None = None,
) -> None:
    """Write a surface as CSV.

    The first line is `# meta:` followed by `key=value` pairs (the quantile level and
    the given metadata), then come the `day,hour,alpha,q_hat` columns, sorted by day
    class and hour.

    Args:
        surface: The surface to write.
        target: The path or text stream to write to.
        meta: Extra metadata, written in the given order.
    """
    pairs = {"alpha": _format_float(surface.alpha), **(meta or {})}
    header = " ".join(f"{key}={value}" for key, value in pairs.items())
    keys = sorted(surface.grid, key=lambda key: (key[1], key[0]))
    frame = pd.DataFrame(
        {
            "day": [str(j) for _, j in keys],
            "hour": [str(t) for t, _ in keys],
            "alpha": [_format_float(surface.alpha)] * len(keys),
            "q_hat": [_format_float(surface.grid[key]) for key in keys],
        },
        columns=list(SURFACE_COLUMNS),
        dtype=str,
    )
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as stream:
            _write_surface_stream(stream, header, frame)
    else:
        _write_surface_stream(target, header, frame)


def _write_surface_stream(stream: IO[str], header: str, frame: pd.DataFrame) -> None:
    stream.write(f"{META_PREFIX} {header}\n")
    frame.to_csv(stream, index=False, lineterminator="\n")


def read_surface_csv(source: str | os.PathLike[str] | IO[str]) -> QuantileSurface:
    """Read a surface written by `write_surface_csv()`.

    Args:
        source: The path or text stream to read from.

    Returns:
        The surface, without observation vector nor fit log.

    Raises:
        SchemaError: If the columns are not the expected ones.
        RowError: If a row can't be parsed.
        DataError: If the file mixes quantile levels.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as stream:
            text = stream.read()
    else:
        text = source.read()
    lines = text.splitlines(keepends=True)
    body = "".join(lines[1:]) if lines and lines[0].startswith(META_PREFIX) else text
    try:
        frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise SchemaError("the surface file has no header row") from exc
    for column in SURFACE_COLUMNS:
        if column not in frame.columns:
            raise SchemaError(f"the surface file has no column {column!r}", column)

    offset = 3 if body is not text else 2
    grid: dict[CellKey, float] = {}
    levels: set[float] = set()
    for index, raw in enumerate(frame[list(SURFACE_COLUMNS)].to_numpy(dtype=object)):
        row = dict(zip(SURFACE_COLUMNS, raw))
        try:
            j, t = int(row["day"]), int(row["hour"])
            levels.add(float(row["alpha"]))
            grid[(t, j)] = float(row["q_hat"])
        except ValueError as exc:
            raise RowError(f"invalid surface row: {exc}", index + offset, row) from exc
    if len(levels) > 1:
        raise DataError(f"the surface file mixes quantile levels {sorted(levels)}")
    if not levels:
        raise DataError("the surface file has no rows")
    surface = QuantileSurface(alpha=levels.pop(), grid=MappingProxyType(grid))
    return dataclasses.replace(surface, decomposition=decompose(surface))

