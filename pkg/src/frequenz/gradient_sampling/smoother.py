# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""LOESS scatter-plot smoothing of panel vectors.

# LOESS

[`loess_fit()`][frequenz.gradient_sampling.smoother.loess_fit] fits, at every
covariate value, a polynomial of degree 0, 1 or 2 by weighted least squares. The
weights are tricube weights `(1 - |u|³)³` of the distance to the fitted point, scaled
by the bandwidth `h`: the distance to the `⌊span·n⌋`-th nearest observation, where
replicated covariate values count once per observation.

```python
import numpy as np
from frequenz.gradient_sampling.smoother import SmootherSpec, loess_fit

x = np.repeat(np.arange(1.0, 11.0), 3)
fitted = loess_fit(x, 2.0 * x + 1.0, SmootherSpec(span=0.5, degree=1))
assert np.allclose(fitted, 2.0 * x + 1.0)
```

With fixed covariates LOESS is a linear operator of the response, so the operator of a
panel is computed once by a [`GroupSmoother`][frequenz.gradient_sampling.smoother.GroupSmoother]
and applied as often as needed.

# Groups

Panel vectors are smoothed against the hour index. The
[`GroupKey`][frequenz.gradient_sampling.smoother.GroupKey] decides how day classes
share information:

* [`DAY`][frequenz.gradient_sampling.smoother.GroupKey.DAY]: one independent curve per
  day class, the interaction model `β₀ + h_j(t)`.
* [`POOLED`][frequenz.gradient_sampling.smoother.GroupKey.POOLED]: one curve shared by
  all day classes, `β₀ + h(t)`.
* [`ADDITIVE`][frequenz.gradient_sampling.smoother.GroupKey.ADDITIVE]: a constant per
  day class plus one pooled curve of the within-day residuals, `β_j + h(t)`.
"""

import dataclasses
import logging
import math
from enum import Enum

import numpy as np
import numpy.typing as npt

from ._generic import FloatArray, IntArray
from .panel import SalesPanel

_logger = logging.getLogger(__name__)


class GroupKey(Enum):
    """How the observations of a panel are grouped for smoothing."""

    DAY = "day"
    """Smooth every day class independently."""

    POOLED = "pooled"
    """Smooth all observations together."""

    ADDITIVE = "additive"
    """Keep the mean of every day class and smooth the residuals together."""


@dataclasses.dataclass(frozen=True)
class SmootherSpec:
    """The parameters of the LOESS smoother."""

    span: float = 0.75
    """The fraction of the observations in each local neighborhood, in `(0, 1]`."""

    degree: int = 1
    """The degree of the local polynomials, 0, 1 or 2."""

    group_key: GroupKey = GroupKey.DAY
    """How the observations of a panel are grouped."""

    resmooth_iterate: bool = False
    """Whether the fitter smooths the updated iterate too, not only the direction."""

    def __post_init__(self) -> None:
        """Validate the parameters.

        Raises:
            ValueError: If the span or the degree are out of range.
        """
        if not 0.0 < self.span <= 1.0:
            raise ValueError(f"span must be in (0, 1], not {self.span}")
        if self.degree not in (0, 1, 2):
            raise ValueError(f"degree must be 0, 1 or 2, not {self.degree}")
        object.__setattr__(self, "group_key", GroupKey(self.group_key))


def _tricube(u: FloatArray) -> FloatArray:
    return np.where(u < 1.0, (1.0 - np.minimum(u, 1.0) ** 3) ** 3, 0.0)


def _bandwidth(
    distances: FloatArray, counts: IntArray, neighbors: int, degree: int
) -> tuple[float, bool]:
    """Return the bandwidth for one fitted point.

    Args:
        distances: The distance to every distinct covariate value.
        counts: The number of observations at every distinct covariate value.
        neighbors: The number of observations in the neighborhood.
        degree: The local polynomial degree.

    Returns:
        The bandwidth and whether it had to be widened so that at least
            `degree + 1` distinct values get a positive weight.
    """
    order = np.argsort(distances, kind="stable")
    sorted_distances = distances[order]
    reached = np.searchsorted(np.cumsum(counts[order]), neighbors)
    h = float(sorted_distances[min(int(reached), len(order) - 1)])
    if np.count_nonzero(distances < h) >= degree + 1:
        return h, False
    distinct = np.unique(sorted_distances)
    if len(distinct) > degree + 1:
        return float(distinct[degree + 1]), True
    return 2.0 * float(distinct[-1]), True


def _loess_operator(
    x: FloatArray, counts: IntArray, span: float, degree: int
) -> tuple[FloatArray, list[str]]:
    """Return the LOESS operator over distinct covariate values.

    Row `a` of the operator maps the per-value sums of the response to the fitted
    value at `x[a]`.

    Args:
        x: The distinct covariate values.
        counts: The number of observations at every value.
        span: The fraction of the observations in each neighborhood.
        degree: The local polynomial degree.

    Returns:
        The operator and the warnings raised while building it.
    """
    total = int(counts.sum())
    if len(x) < degree + 1:
        message = (
            f"only {len(x)} distinct covariate values for a degree {degree} fit, "
            "using the mean"
        )
        return np.full((len(x), len(x)), 1.0 / total), [message]
    if len(x) == 1:
        return np.full((1, 1), 1.0 / total), []

    neighbors = max(math.floor(span * total + 1e-10), 1)
    operator = np.empty((len(x), len(x)))
    widened: list[float] = []
    powers = np.arange(degree + 1)
    for a, center in enumerate(x):
        distances = np.abs(x - center)
        h, was_widened = _bandwidth(distances, counts, neighbors, degree)
        if was_widened:
            widened.append(float(center))
        kernel = _tricube(distances / h)
        design = ((x - center) / h)[:, np.newaxis] ** powers
        gram = design.T @ (design * (kernel * counts)[:, np.newaxis])
        rhs = design.T * kernel
        try:
            coefficients = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            coefficients = np.linalg.lstsq(gram, rhs, rcond=None)[0]
        operator[a] = coefficients[0]

    warnings: list[str] = []
    if widened:
        warnings.append(
            f"neighborhood widened to fit degree {degree} at {len(widened)} "
            f"covariate value(s), first at {widened[0]:g}"
        )
    return operator, warnings


@dataclasses.dataclass(frozen=True)
class _Group:
    positions: IntArray
    """The flat positions of the observations of the group."""

    inverse: IntArray
    """The index of the distinct covariate value of each observation."""

    operator: FloatArray
    """The LOESS operator over the distinct covariate values."""

    def apply(self, values: FloatArray) -> FloatArray:
        sums = np.bincount(
            self.inverse, weights=values[self.positions], minlength=len(self.operator)
        )
        return (self.operator @ sums)[self.inverse]


def _build_group(
    x: FloatArray, positions: IntArray, spec: SmootherSpec, label: str
) -> tuple[_Group, list[str]]:
    distinct, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    operator, warnings = _loess_operator(distinct, counts, spec.span, spec.degree)
    messages = [f"{label}: {warning}" for warning in warnings]
    for message in messages:
        _logger.warning("LOESS %s", message)
    return _Group(positions, inverse.astype(np.int64), operator), messages


def loess_fit(x: npt.ArrayLike, z: npt.ArrayLike, spec: SmootherSpec) -> FloatArray:
    """Smooth a response against a covariate.

    Neighborhoods that would leave fewer than `degree + 1` distinct covariate values
    with a positive weight are widened to the smallest size that doesn't, and
    covariates with fewer than `degree + 1` distinct values are smoothed to their
    mean. Both cases are logged as warnings.

    Args:
        x: The covariate, values may repeat.
        z: The response, with the same length as `x`.
        spec: The smoother parameters (the grouping is ignored).

    Returns:
        The fitted value at every observation, in input order.

    Raises:
        ValueError: If `x` and `z` are empty or don't have the same length.
    """
    covariate = np.asarray(x, dtype=np.float64)
    response = np.asarray(z, dtype=np.float64)
    if covariate.ndim != 1 or covariate.shape != response.shape:
        raise ValueError(
            f"x and z must be vectors of equal length, not {covariate.shape} "
            f"and {response.shape}"
        )
    if len(covariate) == 0:
        raise ValueError("can't smooth an empty vector")
    group, _ = _build_group(
        covariate, np.arange(len(covariate), dtype=np.int64), spec, "loess_fit"
    )
    return group.apply(response)


class GroupSmoother:
    """The LOESS smoother of a panel, precomputed.

    The operator of every group is computed once, when the smoother is created, so
    applying it is a handful of small matrix products.

    Example:
        ```python
        import numpy as np
        from frequenz.gradient_sampling.panel import SyntheticSpec, generate_synthetic
        from frequenz.gradient_sampling.smoother import GroupSmoother, SmootherSpec

        panel = generate_synthetic(SyntheticSpec(T=10, J=2, replicates=3))
        smooth = GroupSmoother(panel, SmootherSpec(span=0.5))
        smoothed = smooth(panel.values)
        assert smoothed.shape == (panel.n,)
        ```
    """

    def __init__(self, panel: SalesPanel, spec: SmootherSpec) -> None:
        """Initialize this smoother.

        Args:
            panel: The panel whose vectors will be smoothed.
            spec: The smoother parameters.
        """
        self._spec: SmootherSpec = spec
        self._n: int = panel.n
        self._days: IntArray = panel.days
        self._groups: list[_Group] = []
        self._day_positions: dict[int, IntArray] = {}

        warnings: list[str] = []
        hours = panel.hours.astype(np.float64)
        if spec.group_key is GroupKey.DAY:
            for j in panel.day_classes:
                positions = np.flatnonzero(panel.days == j)
                group, messages = _build_group(
                    hours[positions], positions, spec, f"day class {j}"
                )
                self._groups.append(group)
                warnings.extend(messages)
        else:
            group, messages = _build_group(
                hours, np.arange(panel.n, dtype=np.int64), spec, "pooled hours"
            )
            self._groups.append(group)
            warnings.extend(messages)
            if spec.group_key is GroupKey.ADDITIVE:
                self._day_positions = {
                    j: np.flatnonzero(panel.days == j) for j in panel.day_classes
                }

        self._warnings: tuple[str, ...] = tuple(warnings)

    @property
    def spec(self) -> SmootherSpec:
        """The smoother parameters."""
        return self._spec

    @property
    def warnings(self) -> tuple[str, ...]:
        """The warnings raised while building the operators."""
        return self._warnings

    def __call__(self, values: npt.ArrayLike) -> FloatArray:
        """Smooth a panel vector.

        Args:
            values: One value per observation, in the panel's flat order.

        Returns:
            The smoothed vector, in the panel's flat order. Observations of the same
                cell get identical values.

        Raises:
            ValueError: If `values` doesn't have one entry per observation.
        """
        vector = np.asarray(values, dtype=np.float64)
        if vector.shape != (self._n,):
            raise ValueError(
                f"values has shape {vector.shape} but the panel has {self._n} "
                "observations"
            )

        offsets = np.zeros(self._n)
        if self._spec.group_key is GroupKey.ADDITIVE:
            for positions in self._day_positions.values():
                offsets[positions] = vector[positions].mean()
            vector = vector - offsets

        smoothed = np.empty(self._n)
        for group in self._groups:
            smoothed[group.positions] = group.apply(vector)
        return smoothed + offsets

    def __repr__(self) -> str:
        """Return a string representation of this smoother."""
        return f"{type(self).__name__}(spec={self._spec!r}, n={self._n!r})"


def smooth_by_group(
    values: npt.ArrayLike, panel: SalesPanel, spec: SmootherSpec
) -> FloatArray:
    """Smooth a panel vector against the hour index, group by group.

    This builds a [`GroupSmoother`][frequenz.gradient_sampling.smoother.GroupSmoother]
    and applies it once. Build the smoother directly to smooth many vectors.

    Args:
        values: One value per observation, in the panel's flat order.
        panel: The panel the values belong to.
        spec: The smoother parameters.

    Returns:
        The smoothed vector, in the panel's flat order.
    """
    return GroupSmoother(panel, spec)(values)
