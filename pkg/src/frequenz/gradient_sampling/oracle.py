# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Brute-force references and benchmark problems.

These are slow but simple implementations, independent from the optimizers, used to
check them:

* [`empirical_quantile()`][frequenz.gradient_sampling.oracle.empirical_quantile]: the
  left-continuous inverse of the empirical distribution function.
* [`simplex_grid_min_norm()`][frequenz.gradient_sampling.oracle.simplex_grid_min_norm]:
  the minimum-norm point of a small bundle by exhaustive search over a grid of convex
  weights.
* [`fd_gradient()`][frequenz.gradient_sampling.oracle.fd_gradient]: central finite
  differences.

The benchmark problems have known minima:

```python
import numpy as np
from frequenz.gradient_sampling.oracle import nonsmooth_rosenbrock

benchmark = nonsmooth_rosenbrock()
assert benchmark.objective.evaluate(benchmark.minimizer) == benchmark.minimum == 0.0
```
"""

import dataclasses
import functools
import itertools
import math
from collections.abc import Iterable

import numpy as np
import numpy.typing as npt

from ._generic import FloatArray, ScalarFunction
from .gsa import Objective
from .minnorm import GradientBundle
from .panel import SalesPanel

MAX_GRID_BUNDLE_SIZE = 6
"""The largest bundle `simplex_grid_min_norm()` accepts."""

MAX_GRID_NODES = 50_000_000
"""The largest number of weight vectors `simplex_grid_min_norm()` evaluates."""


def empirical_quantile(values: Iterable[float], alpha: float) -> float:
    """Return the smallest order statistic `y_(k)` with `k/n ≥ alpha`.

    Args:
        values: The sample.
        alpha: The quantile level, in `(0, 1]`.

    Returns:
        The empirical quantile.

    Raises:
        ValueError: If the sample is empty or `alpha` is out of range.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], not {alpha}")
    ordered = np.sort(np.fromiter(values, dtype=np.float64))
    n = len(ordered)
    if n == 0:
        raise ValueError("the empirical quantile of an empty sample is undefined")
    k = max(math.ceil(alpha * n), 1)
    # alpha * n can round up past an integer.
    if k > 1 and (k - 1) / n >= alpha:
        k -= 1
    return float(ordered[k - 1])


def cell_quantiles(panel: SalesPanel, alpha: float) -> FloatArray:
    """Return the empirical quantile of every cell, for every observation.

    Args:
        panel: The panel.
        alpha: The quantile level.

    Returns:
        The empirical quantile of the cell of each observation, in the panel's flat
            order.
    """
    per_cell = np.array(
        [empirical_quantile(panel.cells[key], alpha) for key in panel.cell_keys]
    )
    return per_cell[panel.cell_ids]


@functools.lru_cache(maxsize=8)
def _simplex_grid(parts: int, divisions: int) -> FloatArray:
    """Return all the convex weights with denominators `divisions`.

    Args:
        parts: The number of weights.
        divisions: The number of grid steps along each edge.

    Returns:
        The weights, one vector per row.
    """
    if parts == 1:
        return np.ones((1, 1))
    # Stars and bars: every choice of bar positions is one composition.
    bars = np.array(
        list(itertools.combinations(range(divisions + parts - 1), parts - 1)),
        dtype=np.int64,
    )
    padded = np.hstack(
        [
            np.full((len(bars), 1), -1),
            bars,
            np.full((len(bars), 1), divisions + parts - 1),
        ]
    )
    grid = (np.diff(padded, axis=1) - 1) / divisions
    grid.flags.writeable = False
    return grid


def simplex_grid_min_norm(bundle: GradientBundle, resolution: float) -> FloatArray:
    """Search a grid of convex weights for the combination of minimum norm.

    Every point of the convex hull of `k` points in dimension `n` is a convex
    combination of at most `n + 1` of them, so only subsets of that size are gridded.

    Args:
        bundle: At most 6 points.
        resolution: The grid step of every weight, in `(0, 1]`.

    Returns:
        The combination of minimum norm found.

    Raises:
        ValueError: If the bundle has too many points, the resolution is out of range
            or the grid would be too large.
    """
    if bundle.size > MAX_GRID_BUNDLE_SIZE:
        raise ValueError(
            f"at most {MAX_GRID_BUNDLE_SIZE} points can be searched, not {bundle.size}"
        )
    if not 0.0 < resolution <= 1.0:
        raise ValueError(f"resolution must be in (0, 1], not {resolution}")
    divisions = max(round(1.0 / resolution), 1)
    parts = min(bundle.size, bundle.dim + 1)
    subsets = list(itertools.combinations(range(bundle.size), parts))
    nodes = math.comb(divisions + parts - 1, parts - 1) * len(subsets)
    if nodes > MAX_GRID_NODES:
        raise ValueError(
            f"the grid would have {nodes} nodes, more than {MAX_GRID_NODES}"
        )

    grid = _simplex_grid(parts, divisions)
    best_point = bundle.points[0]
    best_norm = math.inf
    for subset in subsets:
        combinations = grid @ bundle.points[list(subset)]
        norms = np.einsum("ij,ij->i", combinations, combinations)
        index = int(np.argmin(norms))
        if norms[index] < best_norm:
            best_norm = float(norms[index])
            best_point = combinations[index]
    return np.array(best_point)


def fd_gradient(
    obj: Objective | ScalarFunction, x: npt.ArrayLike, step: float = 1e-6
) -> FloatArray:
    """Approximate a gradient with central finite differences.

    Args:
        obj: The objective, or a plain function.
        x: The point.
        step: The difference step, keep it well away from kinks.

    Returns:
        `(f(x + step·e_i) - f(x - step·e_i)) / (2·step)` for every coordinate `i`.

    Raises:
        ValueError: If `step` is not positive.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, not {step}")
    evaluate = obj.evaluate if isinstance(obj, Objective) else obj
    point = np.array(x, dtype=np.float64)
    gradient = np.empty(len(point))
    for i in range(len(point)):
        offset = np.zeros(len(point))
        offset[i] = step
        gradient[i] = (evaluate(point + offset) - evaluate(point - offset)) / (2 * step)
    return gradient


@dataclasses.dataclass(frozen=True, eq=False)
class BenchmarkObjective:
    """A test problem with a known minimum."""

    name: str
    """A short identifier."""

    objective: Objective
    """The function and its gradient."""

    minimizer: FloatArray
    """A point where the minimum is attained."""

    minimum: float
    """The minimum value."""

    nonsmooth_set: str
    """Where the function is not differentiable."""


def _sign(values: FloatArray) -> FloatArray:
    return np.where(values >= 0.0, 1.0, -1.0)


def abs_sum_objective() -> BenchmarkObjective:
    """Return `f(x) = |x₁| + 10|x₂|`, minimal at the origin.

    Returns:
        The benchmark.
    """

    def evaluate(x: FloatArray) -> float:
        return float(abs(x[0]) + 10.0 * abs(x[1]))

    def grad_many(points: FloatArray) -> FloatArray:
        return np.column_stack([_sign(points[:, 0]), 10.0 * _sign(points[:, 1])])

    return BenchmarkObjective(
        name="abs_sum",
        objective=Objective(
            dim=2,
            evaluate=evaluate,
            grad=lambda x: grad_many(np.atleast_2d(x))[0],
            grad_many=grad_many,
        ),
        minimizer=np.zeros(2),
        minimum=0.0,
        nonsmooth_set="the coordinate axes x₁ = 0 and x₂ = 0",
    )


def nonsmooth_rosenbrock() -> BenchmarkObjective:
    """Return `f(x) = 10|x₂ - x₁²| + (1 - x₁)²`, minimal at `(1, 1)`.

    Returns:
        The benchmark.
    """

    def evaluate(x: FloatArray) -> float:
        return float(10.0 * abs(x[1] - x[0] ** 2) + (1.0 - x[0]) ** 2)

    def grad_many(points: FloatArray) -> FloatArray:
        x1, x2 = points[:, 0], points[:, 1]
        side = _sign(x2 - x1**2)
        return np.column_stack([-20.0 * side * x1 - 2.0 * (1.0 - x1), 10.0 * side])

    return BenchmarkObjective(
        name="nonsmooth_rosenbrock",
        objective=Objective(
            dim=2,
            evaluate=evaluate,
            grad=lambda x: grad_many(np.atleast_2d(x))[0],
            grad_many=grad_many,
        ),
        minimizer=np.ones(2),
        minimum=0.0,
        nonsmooth_set="the parabola x₂ = x₁²",
    )


def smooth_quadratic(center: npt.ArrayLike = (1.0, -2.0)) -> BenchmarkObjective:
    """Return `f(x) = ‖x - c‖²`, minimal at `c`.

    Args:
        center: The minimizer `c`.

    Returns:
        The benchmark.
    """
    c = np.array(center, dtype=np.float64)
    c.flags.writeable = False

    def evaluate(x: FloatArray) -> float:
        return float(np.sum((x - c) ** 2))

    def grad_many(points: FloatArray) -> FloatArray:
        return 2.0 * (points - c)

    return BenchmarkObjective(
        name="smooth_quadratic",
        objective=Objective(
            dim=len(c),
            evaluate=evaluate,
            grad=lambda x: 2.0 * (np.asarray(x, dtype=np.float64) - c),
            grad_many=grad_many,
        ),
        minimizer=c,
        minimum=0.0,
        nonsmooth_set="nowhere",
    )


BENCHMARKS = (abs_sum_objective, nonsmooth_rosenbrock, smooth_quadratic)
"""The factories of all benchmark problems."""
