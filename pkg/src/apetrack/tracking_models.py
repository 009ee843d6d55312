"""Coordinated-turn dynamics and range-bearing measurements.

The motion model is the standard constant-speed coordinated turn on the
state (x, vx, y, vy):

    x_t = F(omega) x_{t-1} + G nu_t,      nu_t ~ N(0, eta2 * I_2)

where F rotates the velocity sub-vector by omega*dt and advances the
position along the resulting arc, and G spreads the two acceleration-like
noise components onto position and velocity.  At omega = 0 the model
collapses to constant velocity; near zero the trigonometric coefficients
are replaced by their series expansions to keep the map continuous.

A fixed sensor reports range and bearing,

    y_t = ( ||p_t - s|| , atan2(y - s_y, x - s_x) ) + noise

with independent Gaussian errors of variance sigma_r2 and sigma_b2.
Bearings live on (-pi, pi] and every bearing difference is wrapped before
it is squared.

Each variance carries a conjugate inverse-gamma posterior that the filters
track through per-particle sufficient statistics; the update rules live
here next to the model they belong to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SingularGeometry
from .stochastics import RngStream

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class CtConfig:
    """Timing and numerics of the coordinated-turn transition."""

    dt: float = 1.0
    omega_epsilon: float = 1e-6  # below this |omega|, use the series form

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class SensorPose:
    x: float
    y: float


@dataclass(frozen=True)
class Observation:
    range: float
    bearing: float  # rad, in (-pi, pi]


def wrap_angle(theta):
    """Wrap angle(s) to (-pi, pi]."""
    return theta - 2.0 * np.pi * np.ceil((np.asarray(theta, dtype=float) - np.pi) / (2.0 * np.pi))


def _ct_coeffs(omega, cfg: CtConfig):
    """Coefficients (sin(w dt)/w, (1 - cos(w dt))/w, cos(w dt), sin(w dt)).

    Vectorised over omega.  For |omega| below cfg.omega_epsilon the first
    two are evaluated by second-order series in (omega * dt), which agrees
    with the exact form to well below 1e-12 at the switch point.
    """
    omega = np.asarray(omega, dtype=float)
    dt = cfg.dt
    theta = omega * dt
    small = np.abs(omega) < cfg.omega_epsilon
    # guard the divisions; the masked lanes are overwritten by the series
    safe = np.where(small, 1.0, omega)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    s_c = np.where(small, dt * (1.0 - theta**2 / 6.0), sin_t / safe)
    c_c = np.where(small, omega * dt**2 / 2.0 * (1.0 - theta**2 / 12.0), (1.0 - cos_t) / safe)
    return s_c, c_c, cos_t, sin_t


def ct_matrix(omega: float, cfg: CtConfig) -> np.ndarray:
    """The 4x4 coordinated-turn transition matrix for a single turn rate."""
    s_c, c_c, cos_t, sin_t = (float(v) for v in _ct_coeffs(omega, cfg))
    return np.array(
        [
            [1.0, s_c, 0.0, -c_c],
            [0.0, cos_t, 0.0, -sin_t],
            [0.0, c_c, 1.0, s_c],
            [0.0, sin_t, 0.0, cos_t],
        ]
    )


def ct_apply(states: np.ndarray, omega, cfg: CtConfig) -> np.ndarray:
    """Noise-free transition applied row-wise; omega may vary per row."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    s_c, c_c, cos_t, sin_t = _ct_coeffs(omega, cfg)
    x, vx, y, vy = states.T
    out = np.empty_like(states)
    out[:, 0] = x + vx * s_c - vy * c_c
    out[:, 1] = vx * cos_t - vy * sin_t
    out[:, 2] = y + vx * c_c + vy * s_c
    out[:, 3] = vx * sin_t + vy * cos_t
    return out


def noise_gain(cfg: CtConfig) -> np.ndarray:
    """The 4x2 matrix mapping the two noise components into the state."""
    dt = cfg.dt
    return np.array([[dt / 2.0, 0.0], [dt, 0.0], [0.0, dt / 2.0], [0.0, dt]])


def noise_diag(cfg: CtConfig) -> np.ndarray:
    """diag(G G^T): per-component variance scale of the process noise."""
    dt = cfg.dt
    return np.array([dt**2 / 4.0, dt**2, dt**2 / 4.0, dt**2])


def propagate(states: np.ndarray, omega, eta2, cfg: CtConfig, rng: RngStream) -> np.ndarray:
    """One stochastic transition; omega and eta2 broadcast per row."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = states.shape[0]
    mean = ct_apply(states, omega, cfg)
    std = np.sqrt(np.broadcast_to(np.asarray(eta2, dtype=float), (n,)))
    nu = rng.generator.standard_normal((n, 2)) * std[:, None]
    return mean + nu @ noise_gain(cfg).T


def observe_mean(states: np.ndarray, sensor: SensorPose) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free (range, bearing) of each state row as seen from sensor."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    dx = states[:, 0] - sensor.x
    dy = states[:, 2] - sensor.y
    rng_ = np.hypot(dx, dy)
    if np.any(rng_ == 0.0):
        raise SingularGeometry("target coincides with the sensor")
    return rng_, np.arctan2(dy, dx)


def log_likelihood(
    y: Observation,
    states: np.ndarray,
    sigma_r2,
    sigma_b2,
    sensor: SensorPose,
) -> np.ndarray:
    """Log measurement density of y at each state row.

    sigma_r2 and sigma_b2 broadcast per row, so per-particle variance
    hypotheses are evaluated in one call.
    """
    pred_r, pred_b = observe_mean(states, sensor)
    sigma_r2 = np.broadcast_to(np.asarray(sigma_r2, dtype=float), pred_r.shape)
    sigma_b2 = np.broadcast_to(np.asarray(sigma_b2, dtype=float), pred_b.shape)
    dr = y.range - pred_r
    db = wrap_angle(y.bearing - pred_b)
    return -0.5 * (
        2.0 * LOG_2PI
        + np.log(sigma_r2)
        + np.log(sigma_b2)
        + dr**2 / sigma_r2
        + db**2 / sigma_b2
    )


# --- conjugate sufficient statistics ------------------------------------
#
# suffstats columns: (a, b) process noise, (c, d) range, (e, f) bearing.
# Each pair parameterises an inverse-gamma IG(count/2, sum/2).


def update_suffstats_system(
    stats: np.ndarray, x_prev: np.ndarray, x_new: np.ndarray, omega, cfg: CtConfig
) -> np.ndarray:
    """Fold one transition residual into (a, b), row-wise.

    The residual is taken against the noise-free transition under each
    row's own omega and scored in the metric of the noise gain, so a unit
    of b corresponds to a unit of squared noise.
    """
    stats = np.atleast_2d(np.asarray(stats, dtype=float)).copy()
    r = np.atleast_2d(x_new) - ct_apply(x_prev, omega, cfg)
    stats[:, 0] += 4.0
    stats[:, 1] += r**2 @ (1.0 / noise_diag(cfg))
    return stats


def update_suffstats_obs(
    stats: np.ndarray, y: Observation, states: np.ndarray, sensor: SensorPose
) -> np.ndarray:
    """Fold one observation residual into (c, d) and (e, f), row-wise."""
    stats = np.atleast_2d(np.asarray(stats, dtype=float)).copy()
    pred_r, pred_b = observe_mean(states, sensor)
    stats[:, 2] += 1.0
    stats[:, 3] += (y.range - pred_r) ** 2
    stats[:, 4] += 1.0
    stats[:, 5] += wrap_angle(y.bearing - pred_b) ** 2
    return stats


def sample_params_from_suffstats(
    stats: np.ndarray, rng: RngStream
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (eta2, sigma_r2, sigma_b2) from each row's conjugate posterior."""
    stats = np.atleast_2d(np.asarray(stats, dtype=float))
    eta2 = rng.inverse_gamma(stats[:, 0] / 2.0, stats[:, 1] / 2.0)
    sigma_r2 = rng.inverse_gamma(stats[:, 2] / 2.0, stats[:, 3] / 2.0)
    sigma_b2 = rng.inverse_gamma(stats[:, 4] / 2.0, stats[:, 5] / 2.0)
    return np.atleast_1d(eta2), np.atleast_1d(sigma_r2), np.atleast_1d(sigma_b2)


class CoordinatedTurnModel:
    """The dynamics/measurement bundle the particle filters operate on.

    Any object with the same five methods can be swapped in (the test
    suite substitutes a linear-Gaussian model to compare against closed
    forms); this is the production instance.
    """

    def __init__(self, cfg: CtConfig, sensor: SensorPose):
        self.cfg = cfg
        self.sensor = sensor

    def state_mean(self, states: np.ndarray, omega) -> np.ndarray:
        return ct_apply(states, omega, self.cfg)

    def sample_states(self, states: np.ndarray, omega, eta2, rng: RngStream) -> np.ndarray:
        return propagate(states, omega, eta2, self.cfg, rng)

    def log_likelihood(self, y: Observation, states: np.ndarray, sigma_r2, sigma_b2) -> np.ndarray:
        return log_likelihood(y, states, sigma_r2, sigma_b2, self.sensor)

    def update_suffstats(
        self,
        stats: np.ndarray,
        x_prev: np.ndarray | None,
        x_new: np.ndarray,
        omega,
        y: Observation,
    ) -> np.ndarray:
        """System update (skipped when x_prev is None) then observation update."""
        if x_prev is not None:
            stats = update_suffstats_system(stats, x_prev, x_new, omega, self.cfg)
        return update_suffstats_obs(stats, y, x_new, self.sensor)

    def sample_params(self, stats: np.ndarray, rng: RngStream):
        return sample_params_from_suffstats(stats, rng)
