# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Tests for the minimum-norm point of gradient bundles."""

import logging

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from frequenz.gradient_sampling import MinNormError
from frequenz.gradient_sampling.minnorm import (
    AverageReducer,
    BundleMode,
    GradientBundle,
    MinNormReducer,
    MinNormResult,
    average_point,
    min_norm_point,
)
from frequenz.gradient_sampling.oracle import simplex_grid_min_norm

_TRIANGLE = np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, 3.0]])


def _assert_wolfe_certificate(
    bundle: GradientBundle, result: MinNormResult, tol: float = 1e-10
) -> None:
    points = bundle.points
    assert np.all(result.weights >= 0.0)
    assert result.weights.sum() == pytest.approx(1.0)
    assert np.allclose(result.weights @ points, result.point)
    assert result.norm == pytest.approx(np.linalg.norm(result.point))
    scale = max(1.0, float(np.max(np.sum(points**2, axis=1))))
    slack = points @ result.point - result.norm**2
    assert np.all(slack >= -tol * scale - 1e-12)


def test_bundle_validation() -> None:
    """Test that malformed bundles are rejected."""
    bundle = GradientBundle(_TRIANGLE)
    assert bundle.size == 3
    assert bundle.dim == 2
    assert repr(bundle) == "GradientBundle(size=3, dim=2)"
    with pytest.raises(ValueError):
        bundle.points[0, 0] = 7.0
    with pytest.raises(ValueError):
        GradientBundle(np.empty((0, 2)))
    with pytest.raises(ValueError):
        GradientBundle(np.zeros(3))
    with pytest.raises(ValueError, match="same dimension"):
        GradientBundle([[1.0, 2.0], [3.0]])  # type: ignore[arg-type]


def test_min_norm_point_examples() -> None:
    """Test bundles with known minimum-norm points."""
    result = min_norm_point(GradientBundle(_TRIANGLE))
    assert np.allclose(result.point, [0.0, 1.0])
    assert np.allclose(result.weights, [0.5, 0.5, 0.0])
    assert not result.is_fallback

    single = min_norm_point(GradientBundle(np.array([[3.0, -4.0]])))
    assert single.norm == pytest.approx(5.0)
    assert single.weights.tolist() == [1.0]

    vertex = min_norm_point(
        GradientBundle(np.array([[2.0, 1.0], [1.0, 0.5], [3.0, 0.0]]))
    )
    assert np.allclose(vertex.point, [1.0, 0.5])


def test_min_norm_point_origin_in_hull() -> None:
    """Test that the origin is found when the hull contains it."""
    bundle = GradientBundle(
        np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    )
    result = min_norm_point(bundle)
    assert result.norm < 1e-9
    _assert_wolfe_certificate(bundle, result)


def test_min_norm_point_duplicates() -> None:
    """Test bundles with repeated points."""
    bundle = GradientBundle(np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 0.0], [2.0, 0.0]]))
    result = min_norm_point(bundle)
    assert np.allclose(result.point, [1.0, 1.0])
    _assert_wolfe_certificate(bundle, result)


def test_min_norm_point_errors() -> None:
    """Test invalid inputs and exhausted iterations."""
    with pytest.raises(ValueError, match="tol"):
        min_norm_point(GradientBundle(_TRIANGLE), tol=0.0)
    with pytest.raises(MinNormError, match="non-finite") as error:
        min_norm_point(GradientBundle(np.array([[1.0, np.inf], [0.0, 1.0]])))
    assert error.value.bundle_size == 2
    with pytest.raises(MinNormError, match="no solution after 1 iterations"):
        min_norm_point(GradientBundle(_TRIANGLE), max_iter=1)


@hypothesis.settings(max_examples=100)
@hypothesis.given(seed=st.integers(0, 2**32 - 1), size=st.integers(1, 5))
def test_min_norm_point_matches_grid(seed: int, size: int) -> None:
    """Test the exact solver against a grid search on small planar bundles."""
    bundle = GradientBundle(np.random.default_rng(seed).uniform(-1.0, 1.0, (size, 2)))
    result = min_norm_point(bundle)
    _assert_wolfe_certificate(bundle, result)
    grid_norm = float(np.linalg.norm(simplex_grid_min_norm(bundle, 1e-2)))
    assert result.norm <= grid_norm + 1e-9
    assert grid_norm - result.norm < 0.05


@hypothesis.settings(max_examples=50)
@hypothesis.given(
    seed=st.integers(0, 2**32 - 1),
    size=st.integers(1, 40),
    dim=st.integers(1, 60),
    shift=st.floats(-2.0, 2.0),
)
def test_min_norm_point_certificate(
    seed: int, size: int, dim: int, shift: float
) -> None:
    """Test the optimality certificate on larger bundles."""
    points = np.random.default_rng(seed).normal(shift, 1.0, (size, dim))
    bundle = GradientBundle(points)
    result = min_norm_point(bundle)
    _assert_wolfe_certificate(bundle, result)
    assert result.norm <= np.linalg.norm(average_point(bundle)) + 1e-9
    assert result.norm <= np.min(np.linalg.norm(points, axis=1)) + 1e-9


@hypothesis.settings(max_examples=50)
@hypothesis.given(
    seed=st.integers(0, 2**32 - 1),
    size=st.integers(1, 4),
    shift=st.floats(-2.0, 2.0),
)
def test_min_norm_point_is_order_free(seed: int, size: int, shift: float) -> None:
    """Test that shuffling the bundle permutes the weights only."""
    rng = np.random.default_rng(seed)
    points = rng.normal(shift, 1.0, (size, 5))
    order = rng.permutation(size)
    result = min_norm_point(GradientBundle(points))
    shuffled = min_norm_point(GradientBundle(points[order]))
    assert np.allclose(shuffled.point, result.point, atol=1e-9)
    assert shuffled.norm == pytest.approx(result.norm, abs=1e-9)
    assert np.allclose(shuffled.weights, result.weights[order], atol=1e-6)


def test_average_reducer() -> None:
    """Test the averaging policy."""
    result = AverageReducer().reduce(GradientBundle(_TRIANGLE))
    assert np.allclose(result.point, [0.0, 5.0 / 3.0])
    assert np.allclose(result.weights, 1.0 / 3.0)
    assert result.norm == pytest.approx(5.0 / 3.0)
    assert not result.is_fallback


def test_min_norm_reducer_falls_back(caplog: pytest.LogCaptureFixture) -> None:
    """Test that the exact policy falls back to the average on failure."""
    with caplog.at_level(logging.WARNING):
        result = MinNormReducer(max_iter=1).reduce(GradientBundle(_TRIANGLE))
    assert result.is_fallback
    assert np.allclose(result.point, [0.0, 5.0 / 3.0])
    assert "Falling back to the bundle average" in caplog.text


def test_min_norm_reducer_validation() -> None:
    """Test invalid policy parameters."""
    with pytest.raises(ValueError, match="tol"):
        MinNormReducer(tol=-1.0)
    with pytest.raises(ValueError, match="max_iter"):
        MinNormReducer(max_iter=0)
    assert repr(MinNormReducer()) == "MinNormReducer(tol=1e-10, max_iter=1000)"
    assert repr(AverageReducer()) == "AverageReducer()"


def test_bundle_mode() -> None:
    """Test the policies of the bundle modes."""
    assert isinstance(BundleMode("qp").reducer(), MinNormReducer)
    assert isinstance(BundleMode.AVG.reducer(), AverageReducer)
    with pytest.raises(ValueError):
        BundleMode("lp")
