"""Benchmark scenario definition, truth simulation and config files.

A scenario fixes everything a benchmark run needs: the horizon and
sampling period, the true initial state, the sensor position, a piecewise
constant turn-rate schedule, the true noise variances, the sufficient
statistic priors and the turn-rate prior interval handed to the filters.

Config files are JSON.  Angular quantities are stored in degrees under
keys carrying an explicit _deg (or _deg2 for variances) suffix and are
converted to radians on load; everything else is SI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConfigError, SuffStats
from .stochastics import RngStream
from .tracking_models import (
    CtConfig,
    CoordinatedTurnModel,
    Observation,
    SensorPose,
    observe_mean,
    propagate,
    wrap_angle,
)

DEG = np.pi / 180.0


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete benchmark definition; see the module docstring."""

    horizon: int
    dt: float
    initial_state: tuple[float, float, float, float]
    sensor: SensorPose
    omega_schedule: tuple[tuple[int, float], ...]  # (first step governed, rad/s)
    eta2_true: float
    sigma_r2_true: float
    sigma_b2_true: float
    s0: SuffStats
    omega_prior: tuple[float, float]  # rad/s
    init_state_cov: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if min(self.eta2_true, self.sigma_r2_true, self.sigma_b2_true) <= 0:
            raise ConfigError("true variances must be positive")
        starts = [s for s, _ in self.omega_schedule]
        if not starts or starts[0] != 1:
            raise ConfigError("the turn-rate schedule must start at step 1")
        if starts != sorted(starts) or len(set(starts)) != len(starts):
            raise ConfigError("schedule steps must be strictly increasing")
        if starts[-1] > self.horizon:
            raise ConfigError("schedule extends past the horizon")
        lo, hi = self.omega_prior
        if lo > hi:
            raise ConfigError("omega_prior must satisfy lo <= hi")
        cov = np.asarray(self.init_state_cov, dtype=float)
        if cov.shape != (4, 4):
            raise ConfigError("init_state_cov must be 4x4")

    @property
    def ct_config(self) -> CtConfig:
        return CtConfig(dt=self.dt)

    def model(self) -> CoordinatedTurnModel:
        return CoordinatedTurnModel(self.ct_config, self.sensor)

    def omega_series(self) -> np.ndarray:
        """Turn rate per step (index t-1), governing the transition into t."""
        series = np.empty(self.horizon)
        for start, value in self.omega_schedule:
            series[start - 1 :] = value
        return series

    def changepoints(self) -> tuple[int, ...]:
        """Steps at which a new turn rate takes effect (the first excluded)."""
        return tuple(s for s, _ in self.omega_schedule[1:])


def benchmark_scenario() -> ScenarioConfig:
    """The 400-step abrupt-maneuver benchmark used throughout the package.

    A target starts 35 km from a fixed sensor at 300 m/s and alternates
    between straight segments and turns of up to 8.6 deg/s.  Range is
    observed to 50 m and bearing to 1 degree (one sigma).
    """
    omega_deg = (0.0, 3.0, 0.0, 5.6, 0.0, 8.6, 0.0, -7.25, 0.0, 7.25)
    starts = (1, 60, 120, 150, 214, 240, 272, 300, 338, 360)
    return ScenarioConfig(
        horizon=400,
        dt=1.0,
        initial_state=(30_000.0, 300.0, 30_000.0, 0.0),
        sensor=SensorPose(55_000.0, 55_000.0),
        omega_schedule=tuple((s, w * DEG) for s, w in zip(starts, omega_deg)),
        eta2_true=2.0,
        sigma_r2_true=50.0**2,
        sigma_b2_true=DEG**2,
        s0=SuffStats(9.0, 15.0, 4.0, 5000.0, 4.0, 0.0025),
        omega_prior=(-20.0 * DEG, 20.0 * DEG),
        init_state_cov=tuple(
            tuple(row) for row in np.diag([100.0**2, 10.0**2, 100.0**2, 10.0**2])
        ),
    )


@dataclass(frozen=True)
class GroundTruth:
    states: np.ndarray  # (horizon, 4)
    omega: np.ndarray  # (horizon,), rate governing the transition into each step
    observations: tuple[Observation, ...]


def simulate(cfg: ScenarioConfig, rng: RngStream, process_noise: bool = True) -> GroundTruth:
    """Draw one truth track and its observation record.

    process_noise=False gives the noise-free trajectory (observations stay
    noisy), which is occasionally handy when debugging a filter.
    """
    ct = cfg.ct_config
    omega = cfg.omega_series()
    states = np.empty((cfg.horizon, 4))
    states[0] = cfg.initial_state
    eta2 = cfg.eta2_true if process_noise else 0.0
    for t in range(1, cfg.horizon):
        states[t] = propagate(states[t - 1][None, :], omega[t], eta2, ct, rng)[0]

    ranges, bearings = observe_mean(states, cfg.sensor)
    ranges = ranges + rng.gaussian(0.0, cfg.sigma_r2_true, size=cfg.horizon)
    bearings = wrap_angle(bearings + rng.gaussian(0.0, cfg.sigma_b2_true, size=cfg.horizon))
    obs = tuple(Observation(float(r), float(b)) for r, b in zip(ranges, bearings))
    return GroundTruth(states=states, omega=omega, observations=obs)


# --- config files ---------------------------------------------------------


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "horizon": cfg.horizon,
        "dt": cfg.dt,
        "initial_state": list(cfg.initial_state),
        "sensor": [cfg.sensor.x, cfg.sensor.y],
        "omega_schedule": [
            {"start": s, "omega_deg": w / DEG} for s, w in cfg.omega_schedule
        ],
        "eta2_true": cfg.eta2_true,
        "sigma_r2_true": cfg.sigma_r2_true,
        "sigma_b2_true_deg2": cfg.sigma_b2_true / DEG**2,
        "s0": list(cfg.s0.as_array()),
        "omega_prior_deg": [cfg.omega_prior[0] / DEG, cfg.omega_prior[1] / DEG],
        "init_state_cov": [list(row) for row in cfg.init_state_cov],
    }


def scenario_from_dict(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig(
            horizon=int(data["horizon"]),
            dt=float(data["dt"]),
            initial_state=tuple(float(v) for v in data["initial_state"]),
            sensor=SensorPose(*(float(v) for v in data["sensor"])),
            omega_schedule=tuple(
                (int(e["start"]), float(e["omega_deg"]) * DEG)
                for e in data["omega_schedule"]
            ),
            eta2_true=float(data["eta2_true"]),
            sigma_r2_true=float(data["sigma_r2_true"]),
            sigma_b2_true=float(data["sigma_b2_true_deg2"]) * DEG**2,
            s0=SuffStats(*(float(v) for v in data["s0"])),
            omega_prior=tuple(float(v) * DEG for v in data["omega_prior_deg"]),
            init_state_cov=tuple(tuple(float(v) for v in row) for row in data["init_state_cov"]),
        )
    except (KeyError, TypeError, IndexError) as err:
        raise ConfigError(f"malformed scenario config: {err!r}") from err


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True) + "\n")


def load_scenario(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"scenario file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"scenario file is not valid JSON: {err}") from err
    return scenario_from_dict(data)
