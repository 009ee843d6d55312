"""Shared builders for the test suites.

Most tests want a scenario far smaller than the 400-step benchmark and a
particle cloud they can hand-inspect; these helpers build both with
every knob overridable.
"""

import numpy as np

from apetrack.core import ParticleCloud, SuffStats
from apetrack.scenario import ScenarioConfig
from apetrack.stochastics import RngStream
from apetrack.tracking_models import SensorPose

DEG = np.pi / 180.0

DEFAULT_S0 = SuffStats(9.0, 15.0, 4.0, 5000.0, 4.0, 0.0025)


def small_scenario(horizon=20, omega_schedule=((1, 0.0),), **overrides):
    """A short tracking scenario with benchmark-like noise levels."""
    fields = dict(
        horizon=horizon,
        dt=1.0,
        initial_state=(9000.0, 120.0, 7000.0, 80.0),
        sensor=SensorPose(0.0, 0.0),
        omega_schedule=tuple(omega_schedule),
        eta2_true=2.0,
        sigma_r2_true=50.0**2,
        sigma_b2_true=DEG**2,
        s0=DEFAULT_S0,
        omega_prior=(-0.349, 0.349),
        init_state_cov=tuple(
            tuple(row) for row in np.diag([100.0**2, 10.0**2, 100.0**2, 10.0**2])
        ),
    )
    fields.update(overrides)
    return ScenarioConfig(**fields)


def make_cloud(
    n,
    rng=None,
    center=(9000.0, 120.0, 7000.0, 80.0),
    spread=50.0,
    omega=0.0,
    eta2=2.0,
    sigma_r2=2500.0,
    sigma_b2=DEG**2,
    weights=None,
):
    """Gaussian cloud around center with identical parameters per particle."""
    rng = rng or RngStream(123)
    states = np.asarray(center, dtype=float) + spread * rng.generator.standard_normal((n, 4))
    stats = np.tile(DEFAULT_S0.as_array(), (n, 1))
    return ParticleCloud(
        states,
        np.full(n, float(omega)),
        np.full(n, float(eta2)),
        np.full(n, float(sigma_r2)),
        np.full(n, float(sigma_b2)),
        stats,
        weights,
    )
