# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Tests for the command-line tool."""

import logging
import pathlib

import pytest
from pytest_mock import MockerFixture

from frequenz.gradient_sampling import NumericalError, _bench
from frequenz.gradient_sampling.cli import (
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    build_run_config,
    main,
)
from frequenz.gradient_sampling.qam import read_surface_csv


def _simulate(directory: pathlib.Path, *extra: str) -> pathlib.Path:
    sales = directory / "data" / "sales.csv"
    status = main(
        [
            "simulate",
            "--out",
            str(sales),
            "--hours",
            "4",
            "--replicates",
            "3",
            "--amplitude",
            "2",
            "--seed",
            "1",
            *extra,
        ]
    )
    assert status == EXIT_OK
    return sales


def _fit(sales: pathlib.Path, out: pathlib.Path, *extra: str) -> int:
    return main(
        ["fit", "--input", str(sales), "--out", str(out), "--max-iter", "100", *extra]
    )


def test_simulate(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test writing a synthetic sales file."""
    sales = _simulate(tmp_path)
    lines = sales.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "date,hour,qty"
    assert len(lines) == 1 + 4 * 7 * 3
    assert lines[1].startswith("2012-11-05,6,")
    assert f"Wrote 84 sales records to {sales}" in capsys.readouterr().out


def test_fit_and_predict(
    tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Test the round trip from simulated sales to predictions."""
    sales = _simulate(tmp_path)
    out = tmp_path / "fit"
    assert _fit(sales, out, "--plot") == EXIT_OK
    assert "0.9-quantile surface of SalesPanel(4x7, n=84)" in capsys.readouterr().out

    surface_lines = (out / "surface.csv").read_text(encoding="utf-8").splitlines()
    assert surface_lines[0] == (
        "# meta: alpha=0.9 span=0.75 degree=1 group=day mode=avg m=None seed=0 "
        "max_iter=100 eps0=0.1 tau0=0.01 init=global resmooth=False"
    )
    assert len(surface_lines) == 2 + 4 * 7
    log_lines = (out / "fit_log.csv").read_text(encoding="utf-8").splitlines()
    assert log_lines[0] == "iteration,event,f,gnorm,eps,tau,step,best_f"
    assert sorted(path.name for path in out.glob("*.svg")) == [
        f"day_{j}.svg" for j in range(1, 8)
    ]

    surface = read_surface_csv(out / "surface.csv")
    status = main(
        ["predict", "--surface", str(out / "surface.csv"), "--day", "3"]
        + ["--hour", "2", "2.5"]
    )
    assert status == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "day,hour,q_hat"
    assert lines[1] == f"3,2,{surface.grid[(2, 3)]!r}"
    expected = (surface.grid[(2, 3)] + surface.grid[(3, 3)]) / 2.0
    assert float(lines[2].split(",")[2]) == pytest.approx(expected)


def test_fit_is_reproducible(tmp_path: pathlib.Path) -> None:
    """Test that the same inputs give byte-identical outputs."""
    sales = _simulate(tmp_path)
    assert _fit(sales, tmp_path / "first") == EXIT_OK
    assert _fit(sales, tmp_path / "second") == EXIT_OK
    for name in ("surface.csv", "fit_log.csv"):
        first = (tmp_path / "first" / name).read_bytes()
        assert first == (tmp_path / "second" / name).read_bytes()


def test_fit_best_effort_warning(
    tmp_path: pathlib.Path, caplog: pytest.LogCaptureFixture
) -> None:
    """Test that a fit out of iterations still succeeds, with a warning."""
    sales = _simulate(tmp_path)
    with caplog.at_level(logging.WARNING):
        status = _fit(sales, tmp_path / "short", "--max-iter", "3")
    assert status == EXIT_OK
    assert "BEST-EFFORT FIT" in caplog.text
    assert (tmp_path / "short" / "surface.csv").exists()


def test_config_file_precedence(tmp_path: pathlib.Path) -> None:
    """Test that flags override the file, which overrides the defaults."""
    sales = _simulate(tmp_path)
    config = tmp_path / "fit.conf"
    config.write_text("alpha = 0.5\nspan = 0.9\nmax-iter = 7\n", encoding="utf-8")
    out = tmp_path / "fit"
    status = main(
        ["fit", "--config", str(config), "--alpha", "0.8"]
        + ["--input", str(sales), "--out", str(out)]
    )
    assert status == EXIT_OK
    meta = (out / "surface.csv").read_text(encoding="utf-8").splitlines()[0]
    assert meta.startswith("# meta: alpha=0.8 span=0.9 ")
    assert " max_iter=7 " in meta


def test_renamed_columns(tmp_path: pathlib.Path) -> None:
    """Test sales files with custom column names."""
    columns = ["--col-date", "d", "--col-hour", "h"]
    sales = _simulate(tmp_path, *columns, "--col-qty", "q")
    assert sales.read_text(encoding="utf-8").startswith("d,h,q\n")

    assert _fit(sales, tmp_path / "default") == EXIT_DATA
    assert _fit(sales, tmp_path / "flags", *columns, "--col-qty", "q") == EXIT_OK
    assert (tmp_path / "flags" / "surface.csv").exists()

    config = tmp_path / "fit.conf"
    config.write_text("col_qty = q\n", encoding="utf-8")
    status = _fit(sales, tmp_path / "file", *columns, "--config", str(config))
    assert status == EXIT_OK


def test_build_run_config() -> None:
    """Test the resolution of a parsed command line."""
    args = build_parser().parse_args(
        ["predict", "--surface", "s.csv", "--day", "2", "--hour", "1", "3.5"]
    )
    config = build_run_config(args)
    assert config.command == "predict"
    assert config.settings == {"surface": "s.csv", "day": 2}
    assert config.query_hours == (1.0, 3.5)
    assert config.path("surface") == pathlib.Path("s.csv")

    args = build_parser().parse_args(["fit", "--no-plot", "--mode", "qp"])
    config = build_run_config(args)
    assert config.settings["plot"] is False
    assert config.settings["mode"] == "qp"
    assert config.qam_config().gsa.bundle_mode.value == "qp"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fit", "--alpha", "high"],
        ["fit"],
        ["fit", "--input", "sales.csv", "--alpha", "1.5"],
        ["fit", "--input", "sales.csv", "--group", "weekly"],
        ["predict", "--surface", "surface.csv"],
        ["simulate", "--dist", "lognormal", "--mean", "0"],
        ["simulate", "--replicates", "0"],
    ],
)
def test_usage_errors(argv: list[str], tmp_path: pathlib.Path) -> None:
    """Test invalid command lines and settings."""
    if argv[:1] == ["simulate"]:
        argv = [*argv, "--out", str(tmp_path / "sales.csv")]
    assert main(argv) == EXIT_USAGE


def test_config_file_errors(tmp_path: pathlib.Path) -> None:
    """Test unknown keys and unreadable configuration files."""
    config = tmp_path / "fit.conf"
    config.write_text("spam = 1\n", encoding="utf-8")
    assert main(["fit", "--config", str(config)]) == EXIT_USAGE
    assert main(["fit", "--config", str(tmp_path / "missing.conf")]) == EXIT_USAGE


def test_data_errors(tmp_path: pathlib.Path) -> None:
    """Test missing and invalid input data."""
    out = str(tmp_path / "fit")
    assert _fit(tmp_path / "missing.csv", tmp_path / "fit") == EXIT_DATA

    bad = tmp_path / "bad.csv"
    bad.write_text("date,hour,qty\n2012-11-05,6,-3\n", encoding="utf-8")
    assert main(["fit", "--input", str(bad), "--out", out]) == EXIT_DATA

    empty = tmp_path / "empty.csv"
    empty.write_text("date,hour,qty\n", encoding="utf-8")
    assert main(["fit", "--input", str(empty), "--out", out]) == EXIT_DATA

    simulated = tmp_path / "sales.csv"
    assert main(["simulate", "--dist", "gamma", "--out", str(simulated)]) == EXIT_DATA
    assert not simulated.exists()


def test_predict_unknown_day(tmp_path: pathlib.Path) -> None:
    """Test predicting a day class that was not fitted."""
    surface = tmp_path / "surface.csv"
    surface.write_text("day,hour,alpha,q_hat\n1,1,0.9,2.0\n", encoding="utf-8")
    argv = ["predict", "--surface", str(surface), "--day", "5", "--hour", "1"]
    assert main(argv) == EXIT_DATA


def test_numerical_errors(tmp_path: pathlib.Path, mocker: MockerFixture) -> None:
    """Test that numerical failures have their own exit status."""
    sales = _simulate(tmp_path)
    mocker.patch(
        "frequenz.gradient_sampling.cli.qam_fit",
        side_effect=NumericalError("the descent diverged"),
    )
    assert _fit(sales, tmp_path / "fit") == EXIT_NUMERICAL


def test_bench(
    tmp_path: pathlib.Path,
    capsys: pytest.CaptureFixture[str],
    mocker: MockerFixture,
) -> None:
    """Test that the benchmark report is written and printed."""
    quick = [
        task
        for task in _bench.gsa_tasks()
        if task.name == "smooth_quadratic" and task.mode == "qp"
    ]
    mocker.patch("frequenz.gradient_sampling._bench.gsa_tasks", return_value=quick)
    out = tmp_path / "bench"
    assert main(["bench", "--skip-qam", "--out", str(out)]) == EXIT_OK
    assert (out / "bench.csv").read_text(encoding="utf-8").startswith(
        "task,mode,f_final,iterations,converged,wall_seconds\n"
    )
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 3
    assert printed[2].startswith("| smooth_quadratic | qp |")
