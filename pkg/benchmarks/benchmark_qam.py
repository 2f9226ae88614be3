# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Benchmark for quantile surface fits of different panel sizes."""

import csv
import sys
import timeit
from typing import Any

from frequenz.gradient_sampling.gsa import GsaParams
from frequenz.gradient_sampling.minnorm import BundleMode
from frequenz.gradient_sampling.panel import (
    SyntheticSpec,
    generate_synthetic,
    seasonal_profile,
)
from frequenz.gradient_sampling.qam import QamConfig, qam_fit


# pylint: disable=too-many-arguments
def run_one(
    hours: int,
    replicates: int,
    alpha: float,
    mode: BundleMode,
    max_iter: int,
    seed: int = 0,
) -> dict[str, Any]:
    """Fit one simulated weekly panel and time it.

    Args:
        hours: The number of hours per day.
        replicates: The number of weeks simulated.
        alpha: The quantile level.
        mode: How gradient bundles are reduced.
        max_iter: The maximum number of descent iterations.
        seed: The seed of the simulation and of the fit.

    Returns:
        The benchmark row.
    """
    panel = generate_synthetic(
        SyntheticSpec(
            T=hours,
            J=7,
            replicates=replicates,
            mean_fn=seasonal_profile(10.0, 2.0, 0.5, T=hours),
            seed=seed,
        )
    )
    config = QamConfig(
        alpha=alpha,
        gsa=GsaParams(bundle_mode=mode, max_iter=max_iter, seed=seed),
    )
    start = timeit.default_timer()
    surface = qam_fit(panel, config)
    runtime = timeit.default_timer() - start
    log = surface.fit_log
    assert log is not None
    return {
        "hours": hours,
        "replicates": replicates,
        "observations": panel.n,
        "alpha": alpha,
        "mode": mode.value,
        "iterations": len(log.records),
        "converged": log.converged,
        "loss": f"{log.best_f:.6g}",
        "runtime": f"{runtime:.3f}",
    }


def run() -> None:
    """Run all benchmarks."""
    out = csv.DictWriter(
        sys.stdout,
        [
            "hours",
            "replicates",
            "observations",
            "alpha",
            "mode",
            "iterations",
            "converged",
            "loss",
            "runtime",
        ],
        lineterminator="\n",
    )
    out.writeheader()
    out.writerow(run_one(10, 20, 0.9, BundleMode.AVG, 2_000))
    out.writerow(run_one(18, 20, 0.9, BundleMode.AVG, 2_000))
    out.writerow(run_one(18, 108, 0.9, BundleMode.AVG, 10_000))
    out.writerow(run_one(18, 108, 0.5, BundleMode.AVG, 10_000))
    out.writerow(run_one(10, 20, 0.9, BundleMode.QP, 500))


if __name__ == "__main__":
    run()
