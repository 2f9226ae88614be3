# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Tests for quantile additive models."""

import io
import logging
import pathlib
from types import MappingProxyType

import numpy as np
import pytest
from pytest_mock import MockerFixture

from frequenz.gradient_sampling import (
    DataError,
    DayClassNotFoundError,
    RowError,
    SchemaError,
)
from frequenz.gradient_sampling.gsa import GsaParams, StepKind
from frequenz.gradient_sampling.loss import PinballLoss, panel_loss
from frequenz.gradient_sampling.minnorm import BundleMode
from frequenz.gradient_sampling.panel import (
    Distribution,
    SalesPanel,
    SyntheticSpec,
    generate_synthetic,
    seasonal_profile,
)
from frequenz.gradient_sampling.qam import (
    InitMode,
    QamConfig,
    QuantileSurface,
    coverage,
    decompose,
    init_surface,
    qam_fit,
    qam_predict,
    read_surface_csv,
    surface_loss,
    write_surface_csv,
)
from frequenz.gradient_sampling.smoother import SmootherSpec

_FAST = GsaParams(bundle_mode=BundleMode.AVG, max_iter=300, seed=3)


def _hand_surface() -> QuantileSurface:
    grid = {(1, 1): 1.0, (2, 1): 3.0, (4, 1): 7.0, (1, 2): 10.0}
    return QuantileSurface(alpha=0.9, grid=MappingProxyType(grid))


def _synthetic(seed: int = 1) -> SalesPanel:
    spec = SyntheticSpec(
        T=8,
        J=2,
        replicates=30,
        mean_fn=seasonal_profile(10.0, 3.0, 1.0, T=8),
        seed=seed,
    )
    return generate_synthetic(spec)


def test_config_validation() -> None:
    """Test the quantile level and the parsing of the init mode."""
    assert QamConfig(init="per-day").init is InitMode.PER_DAY  # type: ignore[arg-type]
    assert QamConfig().gsa.bundle_mode is BundleMode.AVG
    for alpha in (0.0, 1.0, 1.2):
        with pytest.raises(ValueError, match="alpha"):
            QamConfig(alpha=alpha)
    with pytest.raises(ValueError):
        QamConfig(init="median")  # type: ignore[arg-type]


def test_init_surface() -> None:
    """Test the global and per-day starting points."""
    panel = SalesPanel(2, 2, {(1, 1): [1.0, 2.0], (2, 1): [3.0], (1, 2): [10.0, 20.0]})
    assert init_surface(panel, QamConfig(alpha=0.5)).tolist() == [3.0] * 5
    per_day = init_surface(panel, QamConfig(alpha=0.5, init=InitMode.PER_DAY))
    assert per_day.tolist() == [2.0, 2.0, 2.0, 10.0, 10.0]


def test_fit_empty_panel() -> None:
    """Test that a panel without observations can't be fitted."""
    with pytest.raises(DataError, match="without observations"):
        qam_fit(SalesPanel(3, 1, {}))


def test_fit_constant_panel() -> None:
    """Test that a constant panel is fitted exactly without moving."""
    panel = SalesPanel(4, 1, {(t, 1): [5.0, 5.0, 5.0] for t in range(1, 5)})
    surface = qam_fit(panel)
    assert surface.converged
    assert surface.fit_log is not None
    assert surface.fit_log.records
    assert all(
        record.event is not StepKind.STEP for record in surface.fit_log.records
    )
    assert surface.fit_log.best_f == 0.0
    assert set(surface.grid.values()) == {5.0}
    assert surface_loss(surface, panel) == 0.0


def test_fit_descends_and_shares_cell_values() -> None:
    """Test the fit of a small synthetic panel."""
    panel = _synthetic()
    config = QamConfig(alpha=0.9, gsa=_FAST)
    surface = qam_fit(panel, config)
    assert surface.fit_log is not None
    assert surface.obs_vector is not None
    start_loss = panel_loss(0.9, init_surface(panel, config), panel)
    assert surface.fit_log.best_f < start_loss
    assert surface_loss(surface, panel) == pytest.approx(
        surface.fit_log.best_f, rel=1e-9
    )
    for cell, key in enumerate(panel.cell_keys):
        members = surface.obs_vector[panel.cell_ids == cell]
        assert np.all(members == surface.grid[key])
    assert set(surface.grid) == set(panel.cell_keys)
    with pytest.raises(ValueError):
        surface.obs_vector[0] = 0.0


def test_fit_evaluates_cell_constant_points(mocker: MockerFixture) -> None:
    """Test that every point the fit evaluates is constant on every cell."""
    panel = _synthetic()
    spy = mocker.spy(PinballLoss, "__call__")
    qam_fit(panel, QamConfig(gsa=_FAST))
    assert spy.call_count > 1
    cells = [panel.cell_ids == cell for cell in range(len(panel.cell_keys))]
    for call in spy.call_args_list:
        q = np.asarray(call.args[-1])
        assert all(np.ptp(q[cell]) == 0.0 for cell in cells)


def test_fit_is_location_equivariant() -> None:
    """Test that shifting the sales shifts the fitted surface."""
    spec = SyntheticSpec(
        T=8,
        J=2,
        replicates=30,
        mean_fn=seasonal_profile(10.0, 3.0, 1.0, T=8),
        distribution=Distribution.POISSON,
        seed=5,
    )
    panel = generate_synthetic(spec)
    cells = {key: [y + 100.0 for y in values] for key, values in panel.cells.items()}
    shifted = SalesPanel(panel.T, panel.J, cells)
    config = QamConfig(gsa=GsaParams(bundle_mode=BundleMode.AVG, max_iter=200))
    surface = qam_fit(panel, config)
    moved = qam_fit(shifted, config)
    assert set(moved.grid) == set(surface.grid)
    for key, value in surface.grid.items():
        assert moved.grid[key] == pytest.approx(value + 100.0, abs=1e-3)


def test_fit_is_deterministic() -> None:
    """Test that the same configuration gives the same surface."""
    panel = _synthetic(seed=4)
    config = QamConfig(gsa=GsaParams(bundle_mode=BundleMode.AVG, max_iter=50))
    first, second = qam_fit(panel, config), qam_fit(panel, config)
    assert first.obs_vector is not None and second.obs_vector is not None
    assert np.array_equal(first.obs_vector, second.obs_vector)
    assert dict(first.grid) == dict(second.grid)


def test_fit_best_effort_and_warnings() -> None:
    """Test that smoother warnings and exhausted iterations are logged."""
    panel = SalesPanel(
        3,
        2,
        {
            (1, 1): [1.0, 2.0],
            (2, 1): [3.0, 4.0],
            (1, 2): [1.0, 5.0],
            (2, 2): [2.0, 6.0],
            (3, 2): [3.0, 9.0],
        },
    )
    config = QamConfig(
        gsa=GsaParams(bundle_mode=BundleMode.AVG, max_iter=2),
        smoother=SmootherSpec(degree=2),
    )
    surface = qam_fit(panel, config)
    assert not surface.converged
    assert surface.fit_log is not None
    assert surface.fit_log.warnings[0].startswith("day class 1:")
    assert "no convergence after 2 iterations" in surface.fit_log.warnings[-1]


def test_fit_without_decomposition() -> None:
    """Test that the decomposition can be skipped."""
    panel = _synthetic()
    config = QamConfig(gsa=_FAST, report_decomposition=False)
    assert qam_fit(panel, config).decomposition is None


def test_decompose() -> None:
    """Test that a decomposition rebuilds the grid with centered curves."""
    surface = _hand_surface()
    decomposition = decompose(surface)
    assert decomposition.beta0 == pytest.approx(5.25)
    assert decomposition.offsets[1] == pytest.approx(11.0 / 3.0 - 5.25)
    assert decomposition.offsets[2] == pytest.approx(4.75)
    assert dict(decomposition.curves[2]) == {1: 0.0}
    for curve in decomposition.curves.values():
        assert sum(curve.values()) == pytest.approx(0.0, abs=1e-12)
    for (t, j), value in surface.grid.items():
        assert decomposition.reconstruct(t, j) == pytest.approx(value)


def test_predict(caplog: pytest.LogCaptureFixture) -> None:
    """Test lookups, interpolation and extrapolation."""
    surface = _hand_surface()
    assert qam_predict(surface, 2, 1) == 3.0
    assert qam_predict(surface, 1.0, 2) == 10.0
    assert qam_predict(surface, 1.5, 1) == pytest.approx(2.0)
    assert qam_predict(surface, 3, 1) == pytest.approx(5.0)
    assert not caplog.records

    with caplog.at_level(logging.WARNING):
        assert qam_predict(surface, 0.5, 1) == 1.0
        assert qam_predict(surface, 9, 1) == 7.0
    assert len(caplog.records) == 2
    assert "outside the fitted hours [1, 4] of day class 1" in caplog.text

    with pytest.raises(DayClassNotFoundError) as error:
        qam_predict(surface, 1, 3)
    assert error.value.day == 3


def test_surface_properties() -> None:
    """Test the hours, day classes and convergence of hand-made surfaces."""
    surface = _hand_surface()
    assert surface.day_classes == (1, 2)
    assert surface.hours(1) == (1, 2, 4)
    assert surface.hours(5) == ()
    assert surface.converged


def test_coverage_and_loss() -> None:
    """Test the per-cell coverage and the loss of a surface on a panel."""
    surface = _hand_surface()
    panel = SalesPanel(
        4, 3, {(1, 1): [0.0, 1.0, 2.0, 3.0], (2, 1): [3.0], (1, 3): [1.0]}
    )
    assert coverage(surface, panel) == {(1, 1): 0.25, (2, 1): 0.0}
    with pytest.raises(DataError, match=r"\(1, 3\)"):
        surface_loss(surface, panel)
    covered = SalesPanel(4, 1, {(1, 1): [0.0, 3.0]})
    assert surface_loss(surface, covered) == pytest.approx(0.1 + 1.8)


def test_surface_csv_round_trip(tmp_path: pathlib.Path) -> None:
    """Test that surfaces read back exactly."""
    grid = {(1, 1): 0.1 + 0.2, (2, 1): 1e-17, (1, 2): 12345.678901234567}
    surface = QuantileSurface(alpha=0.9, grid=MappingProxyType(grid))
    buffer = io.StringIO()
    write_surface_csv(surface, buffer, {"span": 0.75, "mode": "avg"})
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "# meta: alpha=0.9 span=0.75 mode=avg"
    assert lines[1] == "day,hour,alpha,q_hat"
    assert lines[2] == "1,1,0.9,0.30000000000000004"
    assert [line.split(",")[:2] for line in lines[2:]] == [
        ["1", "1"],
        ["1", "2"],
        ["2", "1"],
    ]

    back = read_surface_csv(io.StringIO(buffer.getvalue()))
    assert back.alpha == 0.9
    assert dict(back.grid) == grid
    assert back.decomposition is not None
    assert back.fit_log is None

    path = tmp_path / "surface.csv"
    write_surface_csv(surface, path)
    assert path.read_text(encoding="utf-8").startswith("# meta: alpha=0.9\n")
    assert dict(read_surface_csv(path).grid) == grid
    assert dict(read_surface_csv(str(path)).grid) == grid


def test_read_surface_without_meta() -> None:
    """Test that the metadata line is optional."""
    surface = read_surface_csv(io.StringIO("day,hour,alpha,q_hat\n2,3,0.5,1.5\n"))
    assert surface.alpha == 0.5
    assert dict(surface.grid) == {(3, 2): 1.5}


def test_read_surface_errors() -> None:
    """Test malformed surface files."""
    with pytest.raises(SchemaError):
        read_surface_csv(io.StringIO(""))
    with pytest.raises(SchemaError, match="'q_hat'") as schema_error:
        read_surface_csv(io.StringIO("day,hour,alpha\n1,1,0.9\n"))
    assert schema_error.value.column == "q_hat"
    with pytest.raises(RowError) as row_error:
        read_surface_csv(
            io.StringIO("# meta: alpha=0.9\nday,hour,alpha,q_hat\n1,x,0.9,2.0\n")
        )
    assert row_error.value.line_number == 3
    with pytest.raises(DataError, match="mixes"):
        read_surface_csv(
            io.StringIO("day,hour,alpha,q_hat\n1,1,0.9,2.0\n1,2,0.5,2.0\n")
        )
    with pytest.raises(DataError, match="no rows"):
        read_surface_csv(io.StringIO("day,hour,alpha,q_hat\n"))
