# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""The pinball (check) loss and its gradient.

The pinball loss `ρ_α(q, y)` weights under-predictions (`y > q`) by `α` and
over-predictions (`y ≤ q`) by `1 - α`. Its population minimizer is the `α`-quantile of
`y`, so minimizing the summed loss over a panel fits a quantile surface.

```python
from frequenz.gradient_sampling.loss import rho, rho_grad

assert rho(0.9, 3.0, 5.0) == 0.9 * 2.0
assert rho_grad(0.9, 3.0, 5.0) == -0.9
assert rho_grad(0.9, 5.0, 5.0) == 1.0 - 0.9  # ties pick the right derivative
```
"""

import dataclasses

import numpy as np
import numpy.typing as npt

from ._generic import FloatArray
from .panel import SalesPanel


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), not {alpha}")


def rho(alpha: float, q: float, y: float) -> float:
    """Return the pinball loss of a prediction.

    Args:
        alpha: The quantile level, in `(0, 1)`.
        q: The predicted quantile.
        y: The observed value.

    Returns:
        `α·(y - q)` if `y > q`, else `(1 - α)·(q - y)`.

    Raises:
        ValueError: If `alpha` is outside `(0, 1)`.
    """
    _check_alpha(alpha)
    if y > q:
        return alpha * (y - q)
    return (1.0 - alpha) * (q - y)


def rho_grad(alpha: float, q: float, y: float) -> float:
    """Return the derivative of the pinball loss with respect to the prediction.

    At the kink `q == y` the right derivative `1 - α` is returned. Any value in
    `[-α, 1 - α]` is a valid subgradient there.

    Args:
        alpha: The quantile level, in `(0, 1)`.
        q: The predicted quantile.
        y: The observed value.

    Returns:
        `-α` if `y > q`, else `1 - α`.

    Raises:
        ValueError: If `alpha` is outside `(0, 1)`.
    """
    _check_alpha(alpha)
    return -alpha if y > q else 1.0 - alpha


def _check_dimension(q: npt.ArrayLike, panel: SalesPanel) -> FloatArray:
    array = np.asarray(q, dtype=np.float64)
    if array.shape[-1:] != (panel.n,):
        raise ValueError(
            f"q has shape {array.shape} but the panel has {panel.n} observations"
        )
    return array


def panel_loss(alpha: float, q: npt.ArrayLike, panel: SalesPanel) -> float:
    """Return the summed pinball loss of a prediction over a whole panel.

    Args:
        alpha: The quantile level, in `(0, 1)`.
        q: The prediction of every observation, in the panel's flat order.
        panel: The observed sales.

    Returns:
        The sum of the per-observation losses.

    Raises:
        ValueError: If `alpha` is outside `(0, 1)` or `q` doesn't have one entry per
            observation.
    """
    _check_alpha(alpha)
    prediction = _check_dimension(q, panel)
    if prediction.ndim != 1:
        raise ValueError(
            f"q must be a vector, not an array of shape {prediction.shape}"
        )
    residual = panel.values - prediction
    weighted = np.where(residual > 0, alpha * residual, (alpha - 1.0) * residual)
    return float(np.sum(weighted))


def panel_grad(alpha: float, q: npt.ArrayLike, panel: SalesPanel) -> FloatArray:
    """Return the gradient of `panel_loss()` with respect to the prediction.

    Several predictions can be differentiated at once by stacking them as the rows
    of a 2-dimensional array.

    Args:
        alpha: The quantile level, in `(0, 1)`.
        q: The prediction of every observation, in the panel's flat order, or
            a stack of such predictions.
        panel: The observed sales.

    Returns:
        The coordinatewise `rho_grad()`, with the same shape as `q`.

    Raises:
        ValueError: If `alpha` is outside `(0, 1)` or `q` doesn't have one entry per
            observation.
    """
    _check_alpha(alpha)
    prediction = _check_dimension(q, panel)
    return np.where(panel.values > prediction, -alpha, 1.0 - alpha)


@dataclasses.dataclass(frozen=True)
class PinballLoss:
    """The pinball loss of a panel at a fixed quantile level.

    This bundles `panel_loss()` and `panel_grad()` as an objective of the flat
    prediction vector.
    """

    alpha: float
    """The quantile level."""

    panel: SalesPanel
    """The observed sales."""

    def __post_init__(self) -> None:
        """Validate the quantile level.

        Raises:
            ValueError: If `alpha` is outside `(0, 1)`.
        """
        _check_alpha(self.alpha)

    @property
    def dim(self) -> int:
        """The number of observations."""
        return self.panel.n

    def __call__(self, q: npt.ArrayLike) -> float:
        """Return the loss of a prediction.

        Args:
            q: The prediction, in the panel's flat order.

        Returns:
            The summed pinball loss.
        """
        return panel_loss(self.alpha, q, self.panel)

    def grad(self, q: npt.ArrayLike) -> FloatArray:
        """Return the gradient of the loss.

        Args:
            q: The prediction, or a stack of predictions.

        Returns:
            The gradient, with the same shape as `q`.
        """
        return panel_grad(self.alpha, q, self.panel)
