"""Figure rendering for benchmark output.

Every function takes explicit data and a target path and writes one PNG;
render_run_report batches the standard set for a finished benchmark next
to its CSV files.  Rendering is file-only, nothing is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

DEG = np.pi / 180.0

STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "lines.linewidth": 1.4,
}


def _changepoint_lines(ax, changepoints) -> None:
    for cp in changepoints:
        ax.axvline(cp, color="0.75", lw=0.8, zorder=0)


def rmse_figure(metrics, label: str, path, changepoints=()) -> Path:
    """Per-step positional RMS error of one filter."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _changepoint_lines(ax, changepoints)
        ax.plot(metrics.t, metrics.rmse_pos, label=label)
        ax.set_xlabel("time step")
        ax.set_ylabel("position RMS error [m]")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def relative_rmse_figure(metrics, label: str, path, changepoints=()) -> Path:
    """Reference RMS over subject RMS; above one favours the subject."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _changepoint_lines(ax, changepoints)
        ax.plot(metrics.t, metrics.rel_rmse, label=label)
        ax.axhline(1.0, color="0.4", lw=0.8, ls="--")
        ax.set_xlabel("time step")
        ax.set_ylabel("relative RMS error")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def turn_rate_figure(omega_true, omega_est, path, changepoints=()) -> Path:
    """Estimated vs true turn rate of a single run, in deg/s."""
    t = np.arange(1, len(omega_true) + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _changepoint_lines(ax, changepoints)
        ax.plot(t, np.asarray(omega_true) / DEG, color="0.2", ls="--", label="true")
        ax.plot(t[: len(omega_est)], np.asarray(omega_est) / DEG, label="estimate")
        ax.set_xlabel("time step")
        ax.set_ylabel("turn rate [deg/s]")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def trajectory_figure(x_true, y_true, x_est, y_est, sensor, path) -> Path:
    """Truth and estimated track of a single run, in kilometres."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 5.5))
        ax.plot(np.asarray(x_true) / 1e3, np.asarray(y_true) / 1e3, color="0.2", ls="--",
                label="true")
        ax.plot(np.asarray(x_est) / 1e3, np.asarray(y_est) / 1e3, label="estimate")
        ax.plot(sensor.x / 1e3, sensor.y / 1e3, "^", color="tab:red", ms=8, label="sensor")
        ax.set_xlabel("x [km]")
        ax.set_ylabel("y [km]")
        ax.set_aspect("equal")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def beta_sweep_figure(results: dict, path, changepoints=()) -> Path:
    """Turn-rate RMS error per step for each changepoint prior."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _changepoint_lines(ax, changepoints)
        for beta, bench in sorted(results.items()):
            ax.plot(bench.metrics.t, bench.metrics.rmse_omega / DEG, label=f"beta={beta:g}")
        ax.set_xlabel("time step")
        ax.set_ylabel("turn rate RMS error [deg/s]")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_run_report(result, out_dir, stem: str | None = None) -> list[Path]:
    """Write the standard figure set for one benchmark result.

    Produces the positional RMS series, the first run's turn-rate track
    and trajectory, and the relative series when the result carries one.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or result.spec.kind
    cps = result.spec.scenario.changepoints()
    first = result.runs[0]
    paths = [
        rmse_figure(result.metrics, result.spec.kind, out_dir / f"{stem}-rmse.png", cps),
        turn_rate_figure(
            first.omega_true, first.omega_est, out_dir / f"{stem}-turn-rate.png", cps
        ),
        trajectory_figure(
            first.x_true, first.y_true, first.x_est, first.y_est,
            result.spec.scenario.sensor, out_dir / f"{stem}-trajectory.png",
        ),
    ]
    if result.metrics.rel_rmse is not None:
        paths.append(
            relative_rmse_figure(
                result.metrics, result.spec.kind, out_dir / f"{stem}-relative.png", cps
            )
        )
    return paths
