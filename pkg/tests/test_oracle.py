# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Tests for the brute-force references and benchmark problems."""

from collections.abc import Callable

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from frequenz.gradient_sampling.minnorm import GradientBundle
from frequenz.gradient_sampling.oracle import (
    BENCHMARKS,
    BenchmarkObjective,
    cell_quantiles,
    empirical_quantile,
    fd_gradient,
    simplex_grid_min_norm,
)
from frequenz.gradient_sampling.panel import SalesPanel


def test_empirical_quantile() -> None:
    """Test the smallest order statistic reaching the level."""
    assert empirical_quantile([3.0, 1.0, 2.0], 0.5) == 2.0
    assert empirical_quantile([3.0, 1.0, 2.0], 1.0) == 3.0
    assert empirical_quantile([3.0, 1.0, 2.0], 0.01) == 1.0
    assert empirical_quantile([4.0], 0.9) == 4.0
    # 0.07 * 100 is slightly above 7 in floating point.
    assert empirical_quantile(np.arange(1.0, 101.0), 0.07) == 7.0


def test_empirical_quantile_errors() -> None:
    """Test empty samples and levels out of range."""
    with pytest.raises(ValueError, match="empty"):
        empirical_quantile([], 0.5)
    with pytest.raises(ValueError, match="alpha"):
        empirical_quantile([1.0], 0.0)
    with pytest.raises(ValueError, match="alpha"):
        empirical_quantile([1.0], 1.5)


@hypothesis.given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
    alpha=st.floats(min_value=0.01, max_value=1.0),
)
def test_empirical_quantile_definition(values: list[float], alpha: float) -> None:
    """Test that the quantile is a sample value with enough mass below it."""
    quantile = empirical_quantile(values, alpha)
    assert quantile in values
    below = sum(value <= quantile for value in values)
    strictly_below = sum(value < quantile for value in values)
    assert below / len(values) >= alpha - 1e-12
    assert strictly_below / len(values) < alpha + 1e-12


@hypothesis.given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
    alpha=st.floats(min_value=0.01, max_value=1.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_empirical_quantile_ignores_order(
    values: list[float], alpha: float, seed: int
) -> None:
    """Test that shuffling the sample does not change the quantile."""
    shuffled = np.random.default_rng(seed).permutation(values)
    assert empirical_quantile(shuffled, alpha) == empirical_quantile(values, alpha)


@hypothesis.given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
    alphas=st.tuples(
        st.floats(min_value=0.01, max_value=1.0),
        st.floats(min_value=0.01, max_value=1.0),
    ),
)
def test_empirical_quantile_is_monotone(
    values: list[float], alphas: tuple[float, float]
) -> None:
    """Test that a higher level never gives a lower quantile."""
    low, high = sorted(alphas)
    assert empirical_quantile(values, low) <= empirical_quantile(values, high)


def test_cell_quantiles() -> None:
    """Test that every observation gets the quantile of its cell."""
    panel = SalesPanel(
        3, 2, {(1, 1): [2.0, 1.0], (3, 1): [5.0], (2, 2): [9.0, 7.0, 8.0]}
    )
    assert cell_quantiles(panel, 0.5).tolist() == [1.0, 1.0, 5.0, 8.0, 8.0, 8.0]
    assert cell_quantiles(panel, 0.9).tolist() == [2.0, 2.0, 5.0, 9.0, 9.0, 9.0]


def test_simplex_grid_min_norm_examples() -> None:
    """Test bundles whose minimum-norm point lies on the grid."""
    triangle = GradientBundle(np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, 3.0]]))
    assert np.allclose(simplex_grid_min_norm(triangle, 0.5), [0.0, 1.0])
    single = GradientBundle(np.array([[3.0, 4.0]]))
    assert simplex_grid_min_norm(single, 0.1).tolist() == [3.0, 4.0]
    segment = GradientBundle(np.array([[2.0], [-2.0], [5.0]]))
    assert simplex_grid_min_norm(segment, 0.25).tolist() == [0.0]


def test_simplex_grid_min_norm_errors() -> None:
    """Test oversized bundles, grids and invalid resolutions."""
    triangle = GradientBundle(np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, 3.0]]))
    with pytest.raises(ValueError, match="at most 6"):
        simplex_grid_min_norm(GradientBundle(np.ones((7, 2))), 0.5)
    with pytest.raises(ValueError, match="resolution"):
        simplex_grid_min_norm(triangle, 0.0)
    with pytest.raises(ValueError, match="nodes"):
        simplex_grid_min_norm(GradientBundle(np.eye(6)), 1e-4)


def test_fd_gradient() -> None:
    """Test central differences of plain functions and objectives."""
    gradient = fd_gradient(lambda x: float(x @ x), [1.0, -2.0])
    assert gradient == pytest.approx([2.0, -4.0], abs=1e-6)
    with pytest.raises(ValueError, match="step"):
        fd_gradient(lambda x: 0.0, [1.0], step=0.0)


@pytest.mark.parametrize("factory", BENCHMARKS)
def test_benchmarks(factory: Callable[[], BenchmarkObjective]) -> None:
    """Test the minima and gradients of the benchmark problems."""
    benchmark = factory()
    objective = benchmark.objective
    assert objective.dim == len(benchmark.minimizer)
    assert objective.evaluate(benchmark.minimizer) == benchmark.minimum
    assert benchmark.nonsmooth_set

    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.uniform(-2.0, 2.0, objective.dim)
        assert np.allclose(
            objective.grad(x), fd_gradient(objective, x, 1e-7), atol=1e-4
        )
        assert np.array_equal(objective.gradients(x[np.newaxis])[0], objective.grad(x))
        assert objective.evaluate(x) >= benchmark.minimum
