# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""The point of minimum norm in the convex hull of a gradient bundle.

Gradient sampling descends along the negated point of minimum norm in the convex hull
of the gradients sampled around the current iterate.
[`min_norm_point()`][frequenz.gradient_sampling.minnorm.min_norm_point] computes it
exactly with Wolfe's active-set method on the simplex of convex weights:

```python
import numpy as np
from frequenz.gradient_sampling.minnorm import GradientBundle, min_norm_point

result = min_norm_point(GradientBundle(np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, 3.0]])))
assert np.allclose(result.point, [0.0, 1.0])
```

For large bundles in high dimension the exact point is often replaced by the plain
[`average_point()`][frequenz.gradient_sampling.minnorm.average_point]. Which of the two
is used is decided by a [`BundleReducer`][frequenz.gradient_sampling.minnorm.BundleReducer],
usually obtained from a [`BundleMode`][frequenz.gradient_sampling.minnorm.BundleMode]:

```python
from frequenz.gradient_sampling.minnorm import BundleMode

reducer = BundleMode.QP.reducer()
assert reducer.reduce(GradientBundle(np.array([[2.0, 0.0], [1.0, 0.0]]))).norm == 1.0
```
"""

from __future__ import annotations

import abc
import dataclasses
import logging
from enum import Enum

import numpy as np
from typing_extensions import override

from ._exceptions import MinNormError
from ._generic import FloatArray

_logger = logging.getLogger(__name__)

_WEIGHT_EPSILON = 1e-14
"""Convex weights at or below this value are dropped from the active set."""


@dataclasses.dataclass(frozen=True, eq=False)
class GradientBundle:
    """Gradients sampled around a point.

    The gradient at the point itself is conventionally the first row.
    """

    points: FloatArray
    """The gradients, one per row."""

    def __post_init__(self) -> None:
        """Validate and freeze the gradients.

        Raises:
            ValueError: If the bundle is empty or the gradients don't share a
                dimension.
        """
        try:
            points = np.array(self.points, dtype=np.float64)
        except ValueError as exc:
            raise ValueError("all bundle points must have the same dimension") from exc
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] == 0:
            raise ValueError(
                f"a bundle needs at least one non-empty point, got shape {points.shape}"
            )
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        """The number of gradients."""
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        """The dimension of the gradients."""
        return int(self.points.shape[1])

    def __repr__(self) -> str:
        """Return a string representation of this bundle."""
        return f"{type(self).__name__}(size={self.size!r}, dim={self.dim!r})"


@dataclasses.dataclass(frozen=True, eq=False)
class MinNormResult:
    """A convex combination of the points of a bundle."""

    weights: FloatArray
    """The convex weights, one per bundle point."""

    point: FloatArray
    """The weighted combination of the bundle points."""

    norm: float
    """The Euclidean norm of `point`."""

    is_fallback: bool = False
    """Whether the exact minimum could not be computed and the average was used."""


def _affine_minimizer(gram: FloatArray) -> FloatArray:
    """Return the weights of the minimum-norm point of the affine hull.

    Args:
        gram: The Gram matrix of the affinely independent points.

    Returns:
        The affine weights (they sum to 1 but may be negative).

    Raises:
        LinAlgError: If the points are affinely dependent.
    """
    size = len(gram)
    system = np.zeros((size + 1, size + 1))
    system[:size, :size] = gram
    system[:size, size] = 1.0
    system[size, :size] = 1.0
    rhs = np.zeros(size + 1)
    rhs[size] = 1.0
    return np.linalg.solve(system, rhs)[:size]


def min_norm_point(
    bundle: GradientBundle, tol: float = 1e-10, max_iter: int = 1_000
) -> MinNormResult:
    """Return the point of minimum norm in the convex hull of a bundle.

    The result satisfies Wolfe's optimality criterion: `pᵀz ≥ ‖p‖² - tol·s` for every
    bundle point `z`, where `s` is `max(1, max ‖z‖²)`.

    Args:
        bundle: The points spanning the hull.
        tol: The tolerance of the optimality criterion.
        max_iter: The maximum number of points added to the active set.

    Returns:
        The minimum-norm point and its convex weights.

    Raises:
        ValueError: If `tol` is not positive.
        MinNormError: If the iterations are exhausted or the computation breaks down.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, not {tol}")
    points = bundle.points
    gram = points @ points.T
    if not np.all(np.isfinite(gram)):
        raise MinNormError("the bundle has non-finite entries", bundle.size)
    threshold = tol * max(1.0, float(np.max(np.diag(gram))))

    active = np.array([int(np.argmin(np.diag(gram)))])
    weights = np.ones(1)
    minor_steps = 0
    for _ in range(max_iter):
        products = gram[:, active] @ weights
        squared_norm = float(weights @ products[active])
        candidate = int(np.argmin(products))
        if products[candidate] >= squared_norm - threshold:
            break
        if candidate in active:
            raise MinNormError("the active set stalled", bundle.size)
        active = np.append(active, candidate)
        weights = np.append(weights, 0.0)

        while True:
            minor_steps += 1
            if minor_steps > 10 * max_iter:
                raise MinNormError("too many active set updates", bundle.size)
            try:
                affine = _affine_minimizer(gram[np.ix_(active, active)])
            except np.linalg.LinAlgError as exc:
                raise MinNormError("the Gram matrix is singular", bundle.size) from exc
            if not np.all(np.isfinite(affine)):
                raise MinNormError("the Gram matrix is ill-conditioned", bundle.size)
            if np.all(affine > 0.0):
                weights = affine
                break
            # Move towards the affine minimizer until a weight hits zero.
            decrease = weights - affine
            blocking = (affine <= 0.0) & (decrease > 0.0)
            theta = (
                min(1.0, float(np.min(weights[blocking] / decrease[blocking])))
                if blocking.any()
                else 1.0
            )
            weights = weights + theta * (affine - weights)
            keep = weights > _WEIGHT_EPSILON
            if keep.all():
                keep[int(np.argmin(weights))] = False
            active = active[keep]
            weights = weights[keep] / weights[keep].sum()
    else:
        raise MinNormError(f"no solution after {max_iter} iterations", bundle.size)

    full_weights = np.zeros(bundle.size)
    full_weights[active] = weights
    point = full_weights @ points
    return MinNormResult(
        weights=full_weights, point=point, norm=float(np.linalg.norm(point))
    )


def average_point(bundle: GradientBundle) -> FloatArray:
    """Return the arithmetic mean of the points of a bundle.

    Args:
        bundle: The points to average.

    Returns:
        The mean point, which lies in the convex hull of the bundle.
    """
    return bundle.points.mean(axis=0)


class BundleReducer(abc.ABC):
    """A policy to reduce a gradient bundle to a single descent reference.

    To implement a custom policy you need to subclass
    [`BundleReducer`][frequenz.gradient_sampling.minnorm.BundleReducer] and implement the
    [`reduce`][frequenz.gradient_sampling.minnorm.BundleReducer.reduce] method.
    """

    @abc.abstractmethod
    def reduce(self, bundle: GradientBundle) -> MinNormResult:
        """Reduce a bundle to a point of its convex hull.

        Args:
            bundle: The bundle to reduce.

        Returns:
            The chosen point and its convex weights.
        """

    def __repr__(self) -> str:
        """Return a string representation of this policy."""
        return f"{type(self).__name__}()"


class AverageReducer(BundleReducer):
    """A policy that uses the average of the bundle."""

    @override
    def reduce(self, bundle: GradientBundle) -> MinNormResult:
        """Return the average of the bundle.

        Args:
            bundle: The bundle to reduce.

        Returns:
            The average, with uniform weights.
        """
        point = average_point(bundle)
        return MinNormResult(
            weights=np.full(bundle.size, 1.0 / bundle.size),
            point=point,
            norm=float(np.linalg.norm(point)),
        )


class MinNormReducer(BundleReducer):
    """A policy that uses the minimum-norm point, or the average if it fails."""

    def __init__(self, tol: float = 1e-10, max_iter: int = 1_000) -> None:
        """Initialize this policy.

        Args:
            tol: The tolerance of Wolfe's optimality criterion.
            max_iter: The maximum number of active set additions.

        Raises:
            ValueError: If `tol` or `max_iter` are not positive.
        """
        if tol <= 0:
            raise ValueError(f"tol must be positive, not {tol}")
        if max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, not {max_iter}")
        self._tol: float = tol
        self._max_iter: int = max_iter

    @override
    def reduce(self, bundle: GradientBundle) -> MinNormResult:
        """Return the minimum-norm point of the bundle.

        If it can't be computed, a warning is logged and the average is returned
        instead, flagged as a fallback.

        Args:
            bundle: The bundle to reduce.

        Returns:
            The minimum-norm point, or the average.
        """
        try:
            return min_norm_point(bundle, self._tol, self._max_iter)
        except MinNormError as error:
            _logger.warning("Falling back to the bundle average: %s", error)
            average = AverageReducer().reduce(bundle)
            return dataclasses.replace(average, is_fallback=True)

    @override
    def __repr__(self) -> str:
        """Return a string representation of this policy."""
        return f"{type(self).__name__}(tol={self._tol!r}, max_iter={self._max_iter!r})"


class BundleMode(Enum):
    """How gradient bundles are reduced."""

    QP = "qp"
    """Use the minimum-norm point, falling back to the average on failure."""

    AVG = "avg"
    """Use the average."""

    def reducer(self) -> BundleReducer:
        """Return the policy implementing this mode.

        Returns:
            A new policy object.
        """
        if self is BundleMode.QP:
            return MinNormReducer()
        return AverageReducer()

