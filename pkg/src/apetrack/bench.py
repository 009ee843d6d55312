"""Monte Carlo benchmark harness: repeated runs, metrics and CSV output.

Each run simulates a fresh truth track and filters its observation record.
Truth and filter randomness come from separate streams keyed by
(seed, run index), so a run is reproducible in isolation and every filter
kind sees the same truth tracks for a given seed, which makes cross-filter
comparisons paired.

A run is flagged collapsed when its positional error exceeds 5 km for ten
consecutive steps or the filter degenerates outright; collapsed runs keep
whatever estimates they produced and the per-step error statistics simply
average over the runs still alive.

Runs execute in parallel across processes when the run count warrants it;
the APE_THREADS environment variable caps the worker count (0 means one
worker per CPU).  Results are identical either way because nothing is
shared between runs.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConfigError, FilterError, SuffStats
from .imm import build_model_bank, run_imm_iter
from .scenario import ScenarioConfig, simulate
from .smc_filters import ApeConfig, FilterInit, run_filter_iter
from .stochastics import RngStream

log = logging.getLogger(__name__)

COLLAPSE_DISTANCE = 5000.0  # metres
COLLAPSE_STEPS = 10

SMC_KINDS = ("apf", "lw", "pl", "ape")
IMM_KINDS = ("imm20", "imm60", "imm45")
UNKNOWN_SETS = ("omega", "omega-eta2", "omega-eta2-r")

RAW_COLUMNS = (
    "t", "run", "filter", "x_true", "y_true", "x_est", "y_est",
    "omega_true", "omega_est", "eta2_est", "sigma_r2_est", "sigma_b2_est",
    "collapsed",
)
AGG_COLUMNS = ("t", "filter", "rmse_pos", "rmse_omega", "rel_rmse")


@dataclass(frozen=True)
class RunSpec:
    """One benchmark configuration: a scenario, a filter and its knobs.

    unknowns selects which parameters the adaptive filter treats as
    unknown; it applies to kind 'ape' ('lw' is always turn-rate only,
    'pl' always learns the variances, 'apf' and the IMM banks ignore it).
    """

    scenario: ScenarioConfig
    kind: str
    n_particles: int = 1000
    n_runs: int = 25
    seed: int = 0
    beta: float = 0.05
    h2: float = 0.01
    unknowns: str = "omega"

    def __post_init__(self) -> None:
        if self.kind not in SMC_KINDS + IMM_KINDS:
            raise ConfigError(f"unknown filter kind {self.kind!r}")
        if self.unknowns not in UNKNOWN_SETS:
            raise ConfigError(f"unknowns must be one of {UNKNOWN_SETS}, got {self.unknowns!r}")
        if self.n_particles < 1 or self.n_runs < 1:
            raise ConfigError("particle and run counts must be at least 1")

    def filter_config(self) -> ApeConfig:
        return ApeConfig(
            n_particles=self.n_particles,
            beta=self.beta,
            h2=self.h2,
            omega_prior=self.scenario.omega_prior,
            estimate_eta2=(self.kind == "pl" or self.unknowns != "omega"),
            estimate_obs_noise=(self.kind == "pl" or self.unknowns == "omega-eta2-r"),
        )

    def filter_init(self) -> FilterInit:
        sc = self.scenario
        return FilterInit(
            state_mean=np.asarray(sc.initial_state, dtype=float),
            state_cov=np.asarray(sc.init_state_cov, dtype=float),
            s0=sc.s0,
            eta2=sc.eta2_true,
            sigma_r2=sc.sigma_r2_true,
            sigma_b2=sc.sigma_b2_true,
        )


@dataclass
class RunResult:
    """Estimate record of one Monte Carlo run, truncated if the filter died."""

    run: int
    x_true: np.ndarray
    y_true: np.ndarray
    omega_true: np.ndarray
    x_est: np.ndarray
    y_est: np.ndarray
    omega_est: np.ndarray
    eta2_est: np.ndarray
    sigma_r2_est: np.ndarray
    sigma_b2_est: np.ndarray
    collapsed: bool
    collapse_step: int | None  # 1-based step where the collapse began

    @property
    def n_steps(self) -> int:
        return len(self.x_est)

    def position_error(self) -> np.ndarray:
        return np.hypot(self.x_est - self.x_true, self.y_est - self.y_true)


def _collapse_onset(error: np.ndarray) -> int | None:
    """1-based first step of the first sustained large-error window."""
    exceed = error > COLLAPSE_DISTANCE
    if len(exceed) >= COLLAPSE_STEPS:
        window = np.convolve(exceed.astype(int), np.ones(COLLAPSE_STEPS, dtype=int), "valid")
        hits = np.nonzero(window == COLLAPSE_STEPS)[0]
        if hits.size:
            return int(hits[0]) + 1
    return None


def run_one(spec: RunSpec, run_idx: int) -> RunResult:
    """Simulate truth for run run_idx and filter it once."""
    truth_rng = RngStream(spec.seed, 2 * run_idx)
    filter_rng = RngStream(spec.seed, 2 * run_idx + 1)
    truth = simulate(spec.scenario, truth_rng)

    series: list[tuple[float, float, float, float, float, float]] = []
    failed_at: int | None = None
    try:
        if spec.kind in SMC_KINDS:
            steps = run_filter_iter(
                spec.kind,
                truth.observations,
                spec.scenario.model(),
                spec.filter_config(),
                spec.filter_init(),
                filter_rng,
                true_omega=truth.omega,
            )
            for res in steps:
                s, p = res.state_estimate, res.param_estimate
                series.append((s.x, s.y, p.omega, p.eta2, p.sigma_r2, p.sigma_b2))
        else:
            sc = spec.scenario
            bank = build_model_bank(
                spec.kind, sc.ct_config, sc.sensor, sc.sigma_r2_true, sc.sigma_b2_true
            )
            steps = run_imm_iter(
                truth.observations, bank, np.asarray(sc.initial_state, float),
                np.asarray(sc.init_state_cov, float),
            )
            for res in steps:
                m = res.belief.mean
                series.append(
                    (m[0], m[2], res.omega_est, res.eta2_est, res.sigma_r2_est, res.sigma_b2_est)
                )
    except FilterError as err:
        failed_at = len(series) + 1
        log.warning("run %d (%s) degenerated at step %d: %s", run_idx, spec.kind, failed_at, err)

    k = len(series)
    cols = np.array(series, dtype=float).reshape(k, 6)
    result = RunResult(
        run=run_idx,
        x_true=truth.states[:k, 0].copy(),
        y_true=truth.states[:k, 2].copy(),
        omega_true=truth.omega[:k].copy(),
        x_est=cols[:, 0],
        y_est=cols[:, 1],
        omega_est=cols[:, 2],
        eta2_est=cols[:, 3],
        sigma_r2_est=cols[:, 4],
        sigma_b2_est=cols[:, 5],
        collapsed=False,
        collapse_step=None,
    )
    onset = _collapse_onset(result.position_error())
    if onset is None:
        onset = failed_at
    if onset is not None:
        result.collapsed = True
        result.collapse_step = onset
    return result


@dataclass
class MetricSeries:
    """Per-step error statistics over the surviving runs."""

    t: np.ndarray
    rmse_pos: np.ndarray
    rmse_omega: np.ndarray
    rel_rmse: np.ndarray | None = None

    @property
    def avg_rmse_pos(self) -> float:
        return float(np.nanmean(self.rmse_pos))

    @property
    def avg_rmse_omega(self) -> float:
        return float(np.nanmean(self.rmse_omega))


def _padded(runs: list[RunResult], attr: str, horizon: int) -> np.ndarray:
    out = np.full((len(runs), horizon), np.nan)
    for i, r in enumerate(runs):
        out[i, : r.n_steps] = getattr(r, attr)
    return out


def compute_metrics(runs: list[RunResult], horizon: int) -> MetricSeries:
    sq_pos = (_padded(runs, "x_est", horizon) - _padded(runs, "x_true", horizon)) ** 2
    sq_pos += (_padded(runs, "y_est", horizon) - _padded(runs, "y_true", horizon)) ** 2
    sq_om = (_padded(runs, "omega_est", horizon) - _padded(runs, "omega_true", horizon)) ** 2
    with np.errstate(invalid="ignore"):
        rmse_pos = np.sqrt(np.nanmean(sq_pos, axis=0))
        rmse_omega = np.sqrt(np.nanmean(sq_om, axis=0))
    return MetricSeries(t=np.arange(1, horizon + 1), rmse_pos=rmse_pos, rmse_omega=rmse_omega)


@dataclass
class BenchResult:
    spec: RunSpec
    runs: list[RunResult]
    metrics: MetricSeries

    @property
    def collapse_rate(self) -> float:
        return sum(r.collapsed for r in self.runs) / len(self.runs)

    @property
    def collapse_steps(self) -> list[int]:
        return [r.collapse_step for r in self.runs if r.collapse_step is not None]

    def per_run_rms(self) -> np.ndarray:
        """Positional RMS over steps, one value per run (collapsed included)."""
        return np.array([float(np.sqrt(np.mean(r.position_error() ** 2))) for r in self.runs])

    def all_collapsed(self) -> bool:
        return all(r.collapsed for r in self.runs)


def resolve_workers(n_runs: int, workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get("APE_THREADS", "0")
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError(f"APE_THREADS must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ConfigError("worker count cannot be negative")
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_runs))


def _task(args) -> RunResult:
    spec, idx = args
    return run_one(spec, idx)


def run_monte_carlo(
    spec: RunSpec,
    out: str | Path | None = None,
    reference: "BenchResult | None" = None,
    workers: int | None = None,
) -> BenchResult:
    """Execute spec.n_runs independent runs and aggregate their metrics.

    When out is given, the per-run record lands there as CSV and the
    aggregate series next to it under the same stem with an '-agg' suffix.
    reference supplies the filter whose per-step RMS forms the numerator
    of the relative-error series.
    """
    n_workers = resolve_workers(spec.n_runs, workers)
    tasks = [(spec, i) for i in range(spec.n_runs)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            runs = list(pool.map(_task, tasks))
    else:
        runs = [_task(t) for t in tasks]

    metrics = compute_metrics(runs, spec.scenario.horizon)
    if reference is not None:
        with np.errstate(invalid="ignore", divide="ignore"):
            metrics.rel_rmse = reference.metrics.rmse_pos / metrics.rmse_pos
    result = BenchResult(spec=spec, runs=runs, metrics=metrics)

    n_collapsed = sum(r.collapsed for r in runs)
    if n_collapsed:
        log.warning("%s: %d of %d runs collapsed", spec.kind, n_collapsed, len(runs))
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_raw_csv(out, result)
        write_aggregate_csv(aggregate_path(out), result)
    return result


def aggregate_path(raw_path: Path) -> Path:
    return raw_path.with_name(raw_path.stem + "-agg" + (raw_path.suffix or ".csv"))


def _fmt(value: float) -> str:
    return repr(float(value))


def write_raw_csv(path: Path, result: BenchResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_COLUMNS)
        for r in result.runs:
            for j in range(r.n_steps):
                t = j + 1
                flagged = r.collapse_step is not None and t >= r.collapse_step
                writer.writerow(
                    [
                        t, r.run, result.spec.kind,
                        _fmt(r.x_true[j]), _fmt(r.y_true[j]),
                        _fmt(r.x_est[j]), _fmt(r.y_est[j]),
                        _fmt(r.omega_true[j]), _fmt(r.omega_est[j]),
                        _fmt(r.eta2_est[j]), _fmt(r.sigma_r2_est[j]), _fmt(r.sigma_b2_est[j]),
                        int(flagged),
                    ]
                )


def write_aggregate_csv(path: Path, result: BenchResult) -> None:
    m = result.metrics
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_COLUMNS)
        for i, t in enumerate(m.t):
            rel = "" if m.rel_rmse is None else _fmt(m.rel_rmse[i])
            writer.writerow(
                [int(t), result.spec.kind, _fmt(m.rmse_pos[i]), _fmt(m.rmse_omega[i]), rel]
            )


def metrics_from_raw_csv(path: str | Path, horizon: int) -> MetricSeries:
    """Recompute the per-step metrics from a raw per-run CSV file."""
    per_run: dict[int, list[tuple[float, ...]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            per_run.setdefault(int(row["run"]), []).append(
                (
                    float(row["x_true"]), float(row["y_true"]),
                    float(row["x_est"]), float(row["y_est"]),
                    float(row["omega_true"]), float(row["omega_est"]),
                )
            )
    sq_pos = np.full((len(per_run), horizon), np.nan)
    sq_om = np.full((len(per_run), horizon), np.nan)
    for i, run in enumerate(sorted(per_run)):
        rows = np.array(per_run[run])
        k = len(rows)
        sq_pos[i, :k] = (rows[:, 2] - rows[:, 0]) ** 2 + (rows[:, 3] - rows[:, 1]) ** 2
        sq_om[i, :k] = (rows[:, 5] - rows[:, 4]) ** 2
    with np.errstate(invalid="ignore"):
        return MetricSeries(
            t=np.arange(1, horizon + 1),
            rmse_pos=np.sqrt(np.nanmean(sq_pos, axis=0)),
            rmse_omega=np.sqrt(np.nanmean(sq_om, axis=0)),
        )


def beta_sweep(
    base: RunSpec,
    betas,
    out: str | Path | None = None,
    workers: int | None = None,
) -> dict[float, BenchResult]:
    """Rerun a benchmark configuration across changepoint priors.

    Writes one CSV row per (beta, t) when out is given.
    """
    betas = [float(b) for b in betas]
    if not betas:
        raise ConfigError("need at least one beta value")
    results = {}
    for beta in betas:
        spec = RunSpec(
            scenario=base.scenario,
            kind=base.kind,
            n_particles=base.n_particles,
            n_runs=base.n_runs,
            seed=base.seed,
            beta=beta,
            h2=base.h2,
            unknowns=base.unknowns,
        )
        results[beta] = run_monte_carlo(spec, workers=workers)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("t", "beta", "rmse_omega"))
            for beta in betas:
                m = results[beta].metrics
                for i, t in enumerate(m.t):
                    writer.writerow([int(t), _fmt(beta), _fmt(m.rmse_omega[i])])
    return results
