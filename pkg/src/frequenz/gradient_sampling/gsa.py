# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Gradient sampling descent for locally Lipschitz objectives.

# Gradient sampling

At every iteration [`gsa_minimize()`][frequenz.gradient_sampling.gsa.gsa_minimize]
evaluates the gradient at the current point `x` and at `m` points drawn uniformly
from the ball of radius `ε` around it. The bundle of gradients is reduced to a point `g`
of its convex hull (the point of minimum norm, or the average), which approximates
the smallest `ε`-subgradient.

* If `‖g‖ ≤ τ`, `x` is considered `ε`-stationary: `ε` and `τ` are multiplied by `mu`
  and `lambda_` and the gradients are sampled again.
* Otherwise `x` moves along `d = -g/‖g‖` with a step chosen by
  [`line_search()`][frequenz.gradient_sampling.gsa.line_search]. If no step passes the
  sufficient decrease test, `ε` and `τ` are reduced as if `x` was stationary.

The descent stops when both `ε` and `τ` reach their minimum, or after `max_iter`
iterations. The best point ever visited is returned, with an
[`IterationLog`][frequenz.gradient_sampling.gsa.IterationLog] of the run.

```python
import numpy as np
from frequenz.gradient_sampling.gsa import GsaParams, gsa_minimize
from frequenz.gradient_sampling.oracle import abs_sum_objective

benchmark = abs_sum_objective()
x_best, log = gsa_minimize(benchmark.objective, np.array([3.0, 3.0]), GsaParams(seed=1))
assert benchmark.objective.evaluate(x_best) <= log.records[0].f
```

# Subgradient descent

[`subgradient_minimize()`][frequenz.gradient_sampling.gsa.subgradient_minimize]
implements the classic normalized subgradient method with diminishing steps. It is
not a descent method, its log shows the objective going up and down.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
from collections.abc import Callable
from enum import Enum
from typing import IO

import numpy as np
import numpy.typing as npt
import pandas as pd

from ._generic import FloatArray, GradientFunction, ScalarFunction
from .minnorm import BundleMode, BundleReducer, GradientBundle, MinNormResult

_logger = logging.getLogger(__name__)

MAX_HALVINGS = 30
"""The line search tries the steps `1, 1/2, ..., 2**-MAX_HALVINGS`."""


@dataclasses.dataclass(frozen=True)
class GsaParams:  # pylint: disable=too-many-instance-attributes
    """The parameters of gradient sampling descent."""

    m: int | None = None
    """The number of sampled points per iteration.

    If `None`, `min(dim + 1, 100)` is used in `qp` mode and 20 in `avg` mode.
    """

    beta: float = 1e-4
    """The sufficient decrease parameter of the line search, in `(0, 1)`."""

    mu: float = 0.5
    """The reduction factor of the sampling radius, in `(0, 1)`."""

    lambda_: float = 0.5
    """The reduction factor of the stationarity tolerance, in `(0, 1)`."""

    eps0: float = 0.1
    """The initial sampling radius."""

    tau0: float = 1e-2
    """The initial stationarity tolerance."""

    eps_min: float = 1e-6
    """The sampling radius at which the descent may stop."""

    tau_min: float = 1e-6
    """The stationarity tolerance at which the descent may stop."""

    max_iter: int = 10_000
    """The maximum number of iterations."""

    seed: int = 0
    """The seed of the random generator."""

    bundle_mode: BundleMode = BundleMode.QP
    """How gradient bundles are reduced."""

    def __post_init__(self) -> None:
        """Validate the parameters.

        Raises:
            ValueError: If a parameter is out of range.
        """
        for name in ("beta", "mu", "lambda_"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), not {value}")
        if not self.eps0 > self.eps_min > 0.0:
            raise ValueError(
                f"eps0 > eps_min > 0 is required, got {self.eps0} and {self.eps_min}"
            )
        if not self.tau0 > self.tau_min > 0.0:
            raise ValueError(
                f"tau0 > tau_min > 0 is required, got {self.tau0} and {self.tau_min}"
            )
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be at least 1, not {self.m}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be non-negative, not {self.max_iter}")
        object.__setattr__(self, "bundle_mode", BundleMode(self.bundle_mode))

    def sample_size(self, dim: int) -> int:
        """Return the number of sampled points for a problem dimension.

        Args:
            dim: The problem dimension.

        Returns:
            The configured `m`, or the default of the bundle mode.
        """
        if self.m is not None:
            return self.m
        if self.bundle_mode is BundleMode.QP:
            return min(dim + 1, 100)
        return 20


@dataclasses.dataclass(frozen=True)
class Objective:
    """A function to minimize and its gradient.

    The gradient only needs to be defined almost everywhere. Both functions must be
    deterministic.
    """

    dim: int
    """The dimension of the domain."""

    evaluate: ScalarFunction
    """The function."""

    grad: GradientFunction
    """The gradient of the function."""

    grad_many: Callable[[FloatArray], FloatArray] | None = None
    """The gradients at the rows of a matrix, when faster than one by one."""

    def gradients(self, points: FloatArray) -> FloatArray:
        """Return the gradients at several points.

        Args:
            points: The points, one per row.

        Returns:
            The gradients, one per row, in the same order.
        """
        if self.grad_many is not None:
            return self.grad_many(points)
        return np.array([self.grad(point) for point in points], dtype=np.float64)


class StepKind(Enum):
    """What happened in an iteration."""

    STEP = "step"
    """The point moved along the descent direction."""

    SHRINK = "shrink"
    """The point was stationary, the sampling radius and tolerance were reduced."""

    NULL_STEP = "null_step"
    """The line search failed, the sampling radius and tolerance were reduced."""

    SUBGRADIENT = "subgradient"
    """The point moved along a normalized subgradient with a fixed step."""


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    """The state of one iteration."""

    iteration: int
    """The 0-based iteration number."""

    event: StepKind
    """What happened."""

    f: float
    """The objective at the start of the iteration."""

    gnorm: float
    """The norm of the approximate subgradient."""

    eps: float
    """The sampling radius."""

    tau: float
    """The stationarity tolerance."""

    step: float
    """The accepted step, 0 if the point didn't move."""

    best_f: float
    """The lowest objective value seen so far, including this iteration's result."""


@dataclasses.dataclass
class IterationLog:
    """What happened during a descent."""

    records: list[IterationRecord] = dataclasses.field(default_factory=list)
    """One record per iteration."""

    warnings: list[str] = dataclasses.field(default_factory=list)
    """Warnings raised during the descent."""

    converged: bool = False
    """Whether the sampling radius and tolerance reached their minimum."""

    @property
    def best_f(self) -> float:
        """The lowest objective value seen, `nan` if there are no records."""
        return self.records[-1].best_f if self.records else math.nan

    def to_frame(self) -> pd.DataFrame:
        """Return the records as a data frame.

        Returns:
            One row per record, with the event as its string value.
        """
        columns = [field.name for field in dataclasses.fields(IterationRecord)]
        rows = [
            {**dataclasses.asdict(record), "event": record.event.value}
            for record in self.records
        ]
        return pd.DataFrame(rows, columns=columns)

    def write_csv(self, target: str | os.PathLike[str] | IO[str]) -> None:
        """Write the records as CSV.

        Args:
            target: The path or text stream to write to.
        """
        self.to_frame().to_csv(target, index=False, lineterminator="\n")


def sample_unit_ball(n: int, m: int, rng: np.random.Generator) -> FloatArray:
    """Draw points uniformly from the closed unit ball.

    Args:
        n: The dimension.
        m: The number of points.
        rng: The random generator.

    Returns:
        The points, one per row.

    Raises:
        ValueError: If `n` or `m` are not positive.
    """
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be positive, not {n} and {m}")
    directions = rng.standard_normal((m, n))
    norms = np.linalg.norm(directions, axis=1)
    norms[norms == 0.0] = 1.0
    radii = rng.random(m) ** (1.0 / n)
    return directions * (radii / norms)[:, np.newaxis]


def _sample_bundle(
    gradients: Callable[[FloatArray], FloatArray],
    x: FloatArray,
    eps: float,
    m: int,
    rng: np.random.Generator,
) -> GradientBundle:
    points = np.vstack([x, x + eps * sample_unit_ball(len(x), m, rng)])
    return GradientBundle(gradients(points))


def approximate_subgradient(  # pylint: disable=too-many-arguments
    obj: Objective,
    x: npt.ArrayLike,
    eps: float,
    params: GsaParams,
    rng: np.random.Generator,
    reducer: BundleReducer | None = None,
) -> tuple[FloatArray, GradientBundle]:
    """Approximate the smallest `ε`-subgradient at a point.

    Args:
        obj: The objective.
        x: The point.
        eps: The sampling radius.
        params: The descent parameters (`m` and `bundle_mode` are used).
        rng: The random generator.
        reducer: The bundle reduction policy, the one of `params.bundle_mode` if
            not given.

    Returns:
        The approximate subgradient and the bundle of `m + 1` gradients it was
            computed from (the first one is the gradient at `x`).

    Raises:
        ValueError: If `eps` is not positive.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, not {eps}")
    point = np.asarray(x, dtype=np.float64)
    if reducer is None:
        reducer = params.bundle_mode.reducer()
    bundle = _sample_bundle(obj.gradients, point, eps, params.sample_size(obj.dim), rng)
    return reducer.reduce(bundle).point, bundle


def line_search(  # pylint: disable=too-many-arguments
    obj: Objective,
    x: npt.ArrayLike,
    d: npt.ArrayLike,
    gnorm: float,
    beta: float,
    *,
    fx: float | None = None,
) -> float:
    """Find the largest halving step with sufficient decrease.

    The steps `t = 1, 1/2, ..., 2**-30` are tried in turn until
    `f(x + t·d) < f(x) - beta·t·gnorm`.

    Args:
        obj: The objective.
        x: The current point.
        d: The unit descent direction.
        gnorm: The norm of the approximate subgradient.
        beta: The sufficient decrease parameter.
        fx: `f(x)`, if already known.

    Returns:
        The accepted step, or 0 if no step passed the test (a null step).
    """
    point = np.asarray(x, dtype=np.float64)
    direction = np.asarray(d, dtype=np.float64)
    f0 = obj.evaluate(point) if fx is None else fx
    t = 1.0
    for _ in range(MAX_HALVINGS + 1):
        if obj.evaluate(point + t * direction) < f0 - beta * t * gnorm:
            return t
        t /= 2.0
    return 0.0


class _Descent:
    """The bookkeeping shared by the descent loops."""

    def __init__(self, evaluate: ScalarFunction, x0: FloatArray, log: IterationLog):
        self.evaluate = evaluate
        self.x = x0
        self.fx = float(evaluate(x0))
        self.best_x = x0.copy()
        self.best_f = self.fx
        self.log = log

    def move(self, x: FloatArray, fx: float | None = None) -> None:
        self.x = x
        self.fx = float(self.evaluate(x)) if fx is None else fx
        if self.fx < self.best_f:
            self.best_x = x.copy()
            self.best_f = self.fx

    def record(  # pylint: disable=too-many-arguments
        self,
        iteration: int,
        event: StepKind,
        f: float,
        gnorm: float,
        eps: float,
        tau: float,
        step: float,
    ) -> None:
        self.log.records.append(
            IterationRecord(
                iteration=iteration,
                event=event,
                f=f,
                gnorm=gnorm,
                eps=eps,
                tau=tau,
                step=step,
                best_f=self.best_f,
            )
        )


def gsa_minimize(
    obj: Objective, x0: npt.ArrayLike, params: GsaParams = GsaParams()
) -> tuple[FloatArray, IterationLog]:
    """Minimize a locally Lipschitz function by gradient sampling.

    Args:
        obj: The objective.
        x0: The starting point.
        params: The descent parameters.

    Returns:
        The best point visited and the log of the descent. The log says whether the
            descent converged; if it didn't, the best point is still returned.

    Raises:
        ValueError: If `x0` doesn't have `obj.dim` coordinates.
    """
    start = np.array(x0, dtype=np.float64)
    if start.shape != (obj.dim,):
        raise ValueError(f"x0 has shape {start.shape}, expected ({obj.dim},)")
    _logger.info(
        "Starting gradient sampling in dimension %d with m=%d",
        obj.dim,
        params.sample_size(obj.dim),
    )
    return descend(obj, start, params)


def descend(  # pylint: disable=too-many-arguments,too-many-locals
    obj: Objective,
    x0: FloatArray,
    params: GsaParams,
    *,
    eps_scale: float = 1.0,
    direction: Callable[[FloatArray], FloatArray] | None = None,
    project: Callable[[FloatArray], FloatArray] | None = None,
    log: IterationLog | None = None,
) -> tuple[FloatArray, IterationLog]:
    """Run the gradient sampling loop.

    This is the loop of `gsa_minimize()`, with hooks to constrain the iterates.

    Args:
        obj: The objective.
        x0: The starting point, with `obj.dim` coordinates.
        params: The descent parameters.
        eps_scale: The factor applied to `eps0` and `eps_min`.
        direction: A map applied to the approximate subgradient before it is
            normalized into the search direction. A zero result is a null step.
        project: A map applied to every accepted iterate.
        log: The log to append to, a new one if not given.

    Returns:
        The best point visited and the log of the descent.
    """
    if log is None:
        log = IterationLog()
    rng = np.random.default_rng(params.seed)
    reducer = params.bundle_mode.reducer()
    m = params.sample_size(obj.dim)
    eps, tau = params.eps0 * eps_scale, params.tau0
    eps_min = params.eps_min * eps_scale
    state = _Descent(obj.evaluate, x0, log)

    for iteration in range(params.max_iter):
        if eps <= eps_min and tau <= params.tau_min:
            break
        bundle = _sample_bundle(obj.gradients, state.x, eps, m, rng)
        result = _reduce(reducer, bundle, log)
        f = state.fx
        if result.norm <= tau:
            state.record(iteration, StepKind.SHRINK, f, result.norm, eps, tau, 0.0)
            eps, tau = _shrink(eps, tau, params)
            continue
        t = 0.0
        if direction is None:
            d = -result.point / result.norm
            t = line_search(obj, state.x, d, result.norm, params.beta, fx=f)
        else:
            d = -direction(result.point)
            dnorm = float(np.linalg.norm(d))
            if dnorm > 0.0:
                d = d / dnorm
                t = line_search(obj, state.x, d, result.norm, params.beta, fx=f)
        if t == 0.0:
            state.record(iteration, StepKind.NULL_STEP, f, result.norm, eps, tau, 0.0)
            eps, tau = _shrink(eps, tau, params)
            continue
        moved = state.x + t * d
        state.move(moved if project is None else project(moved))
        state.record(iteration, StepKind.STEP, f, result.norm, eps, tau, t)

    log.converged = eps <= eps_min and tau <= params.tau_min
    _finish(log, state, params.max_iter)
    return state.best_x, log


def _reduce(
    reducer: BundleReducer, bundle: GradientBundle, log: IterationLog
) -> MinNormResult:
    result = reducer.reduce(bundle)
    if result.is_fallback:
        log.warnings.append(
            f"iteration {len(log.records)}: minimum-norm point failed, used the average"
        )
    return result


def _shrink(eps: float, tau: float, params: GsaParams) -> tuple[float, float]:
    _logger.debug(
        "Shrinking eps to %g and tau to %g", eps * params.mu, tau * params.lambda_
    )
    return eps * params.mu, tau * params.lambda_


def _finish(log: IterationLog, state: _Descent, max_iter: int) -> None:
    if not log.converged:
        message = (
            f"no convergence after {max_iter} iterations, "
            f"returning the best point (f={state.best_f:g})"
        )
        log.warnings.append(message)
        _logger.warning("Best-effort result: %s", message)
    _logger.info(
        "Descent finished after %d iterations, best f=%g",
        len(log.records),
        state.best_f,
    )


def subgradient_minimize(
    obj: Objective,
    x0: npt.ArrayLike,
    step0: float = 1.0,
    max_iter: int = 1_000,
) -> tuple[FloatArray, IterationLog]:
    """Minimize a function with the normalized subgradient method.

    Iteration `k` moves to `x - s_k·g/‖g‖` with `s_k = step0/√(k + 1)`, where `g` is
    the gradient at `x`. The method stops early only at a point with a zero gradient.

    Args:
        obj: The objective.
        x0: The starting point.
        step0: The first step length.
        max_iter: The number of iterations.

    Returns:
        The best point visited and the log. Records hold the objective at every
            iterate, which is not monotone in general.

    Raises:
        ValueError: If `step0` is not positive or `x0` has the wrong shape.
    """
    if step0 <= 0:
        raise ValueError(f"step0 must be positive, not {step0}")
    start = np.array(x0, dtype=np.float64)
    if start.shape != (obj.dim,):
        raise ValueError(f"x0 has shape {start.shape}, expected ({obj.dim},)")
    log = IterationLog()
    state = _Descent(obj.evaluate, start, log)

    for iteration in range(max_iter):
        g = np.asarray(obj.grad(state.x), dtype=np.float64)
        gnorm = float(np.linalg.norm(g))
        f = state.fx
        if gnorm == 0.0:
            log.converged = True
            break
        step = step0 / math.sqrt(iteration + 1)
        state.move(state.x - step * g / gnorm)
        state.record(
            iteration, StepKind.SUBGRADIENT, f, gnorm, math.nan, math.nan, step
        )

    if not log.converged:
        _logger.info("Subgradient descent stopped after %d iterations", max_iter)
    return state.best_x, log
