# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Frequenz Gradient Sampling.

This package fits quantile surfaces of intraday sales by minimizing the non-smooth
pinball loss with a gradient sampling descent, smoothing every search direction with
local regression.

Data:

* [SalesPanel][frequenz.gradient_sampling.panel.SalesPanel]: Sales grouped by hour
  of the day and day class.

* [parse_csv][frequenz.gradient_sampling.panel.parse_csv] and
  [build_panel][frequenz.gradient_sampling.panel.build_panel]: Read sales records
  from CSV and group them into a panel.

* [generate_synthetic][frequenz.gradient_sampling.panel.generate_synthetic]:
  Simulate a panel from known per-cell distributions.

Optimization:

* [PinballLoss][frequenz.gradient_sampling.loss.PinballLoss]: The quantile loss of a
  panel and its gradient.

* [min_norm_point][frequenz.gradient_sampling.minnorm.min_norm_point]: The
  minimum-norm element of the convex hull of a gradient bundle.

* [gsa_minimize][frequenz.gradient_sampling.gsa.gsa_minimize]: Minimize a
  non-smooth function by gradient sampling.

Quantile surfaces:

* [qam_fit][frequenz.gradient_sampling.qam.qam_fit]: Fit a smooth quantile surface
  to a panel.

* [qam_predict][frequenz.gradient_sampling.qam.qam_predict]: Predict a quantile at
  any hour of a fitted day class.

Exception classes:

* [Error][frequenz.gradient_sampling.Error]: Base class for all errors in this
  library.

* [DataError][frequenz.gradient_sampling.DataError]: Invalid input data.

* [NumericalError][frequenz.gradient_sampling.NumericalError]: A numerical
  procedure failed.

* [ConfigError][frequenz.gradient_sampling.ConfigError]: Invalid configuration.
"""

from ._exceptions import (
    ConfigError,
    DataError,
    DayClassNotFoundError,
    Error,
    MinNormError,
    NumericalError,
    PanelError,
    RowError,
    SchemaError,
    UnsupportedDistributionError,
)
from .gsa import GsaParams, IterationLog, Objective, gsa_minimize, subgradient_minimize
from .loss import PinballLoss, panel_grad, panel_loss, rho, rho_grad
from .minnorm import BundleMode, GradientBundle, MinNormResult, min_norm_point
from .panel import (
    CsvSchema,
    Distribution,
    SalesPanel,
    SalesRecord,
    SyntheticSpec,
    build_panel,
    generate_synthetic,
    parse_csv,
)
from .qam import (
    InitMode,
    QamConfig,
    QuantileSurface,
    qam_fit,
    qam_predict,
    read_surface_csv,
    write_surface_csv,
)
from .smoother import GroupKey, GroupSmoother, SmootherSpec, loess_fit

__all__ = [
    "BundleMode",
    "ConfigError",
    "CsvSchema",
    "DataError",
    "DayClassNotFoundError",
    "Distribution",
    "Error",
    "GradientBundle",
    "GroupKey",
    "GroupSmoother",
    "GsaParams",
    "InitMode",
    "IterationLog",
    "MinNormError",
    "MinNormResult",
    "NumericalError",
    "Objective",
    "PanelError",
    "PinballLoss",
    "QamConfig",
    "QuantileSurface",
    "RowError",
    "SalesPanel",
    "SalesRecord",
    "SchemaError",
    "SmootherSpec",
    "SyntheticSpec",
    "UnsupportedDistributionError",
    "build_panel",
    "generate_synthetic",
    "gsa_minimize",
    "loess_fit",
    "min_norm_point",
    "panel_grad",
    "panel_loss",
    "parse_csv",
    "qam_fit",
    "qam_predict",
    "read_surface_csv",
    "rho",
    "rho_grad",
    "subgradient_minimize",
    "write_surface_csv",
]
