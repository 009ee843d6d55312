"""Scenario configuration, truth simulation and JSON round trips."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from apetrack.core import ConfigError
from apetrack.scenario import (
    GroundTruth,
    benchmark_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    simulate,
)
from apetrack.stochastics import RngStream
from apetrack.tracking_models import observe_mean

from helpers import DEG, small_scenario


# --- the built-in benchmark -----------------------------------------------------


def test_benchmark_shape_and_schedule():
    sc = benchmark_scenario()
    assert sc.horizon == 400
    assert sc.dt == 1.0
    assert len(sc.omega_schedule) == 10
    assert sc.changepoints() == (60, 120, 150, 214, 240, 272, 300, 338, 360)

    series = sc.omega_series()
    assert series.shape == (400,)
    # straight until the first changepoint, then 3 deg/s from step 60 on
    assert np.all(series[:59] == 0.0)
    assert series[59] == pytest.approx(3.0 * DEG)
    # the fourth segment turns at 5.6 deg/s ~ 0.09774 rad/s
    assert series[149] == pytest.approx(5.6 * DEG)
    assert series[149] == pytest.approx(0.09774, abs=5e-6)
    assert series[-1] == pytest.approx(7.25 * DEG)

    # ten segments averaging 40 steps motivate a 1/40 changepoint rate
    segment_lengths = np.diff([s for s, _ in sc.omega_schedule] + [sc.horizon + 1])
    assert segment_lengths.sum() == 400
    assert segment_lengths.mean() == pytest.approx(40.0)


def test_benchmark_start_is_thirtyfive_kilometres_out():
    sc = benchmark_scenario()
    ranges, _ = observe_mean(np.asarray(sc.initial_state), sc.sensor)
    assert ranges[0] == pytest.approx(25_000.0 * np.sqrt(2.0), rel=1e-12)


def test_omega_series_switches_at_the_listed_step():
    sc = small_scenario(horizon=4, omega_schedule=((1, 0.0), (3, 0.5)))
    assert_array_equal(sc.omega_series(), [0.0, 0.0, 0.5, 0.5])
    assert sc.changepoints() == (3,)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        small_scenario(omega_schedule=((2, 0.0),))
    with pytest.raises(ConfigError):
        small_scenario(omega_schedule=())
    with pytest.raises(ConfigError):
        small_scenario(omega_schedule=((1, 0.0), (10, 0.1), (5, 0.2)))
    with pytest.raises(ConfigError):
        small_scenario(omega_schedule=((1, 0.0), (1, 0.1)))
    with pytest.raises(ConfigError):
        small_scenario(horizon=5, omega_schedule=((1, 0.0), (9, 0.1)))
    with pytest.raises(ConfigError):
        small_scenario(eta2_true=0.0)
    with pytest.raises(ConfigError):
        small_scenario(init_state_cov=((1.0, 0.0), (0.0, 1.0)))


# --- simulation -------------------------------------------------------------------


def test_noise_free_zero_rate_runs_straight():
    sc = small_scenario(horizon=12)
    truth = simulate(sc, RngStream(3), process_noise=False)
    assert isinstance(truth, GroundTruth)
    t = np.arange(12)
    assert_allclose(truth.states[:, 0], 9000.0 + 120.0 * t, rtol=1e-12)
    assert_allclose(truth.states[:, 2], 7000.0 + 80.0 * t, rtol=1e-12)
    assert_array_equal(truth.states[:, 1], np.full(12, 120.0))
    assert_array_equal(truth.omega, np.zeros(12))
    # observations still carry measurement noise
    ranges, _ = observe_mean(truth.states, sc.sensor)
    measured = np.array([o.range for o in truth.observations])
    assert not np.array_equal(measured, ranges)


def test_process_noise_bends_the_track():
    sc = small_scenario(horizon=12)
    noisy = simulate(sc, RngStream(3), process_noise=True)
    clean = simulate(sc, RngStream(3), process_noise=False)
    assert not np.array_equal(noisy.states, clean.states)


def test_simulation_is_reproducible_per_stream():
    sc = small_scenario(horizon=12)
    a = simulate(sc, RngStream(3, 1))
    b = simulate(sc, RngStream(3, 1))
    c = simulate(sc, RngStream(3, 2))
    assert_array_equal(a.states, b.states)
    assert a.observations == b.observations
    assert not np.array_equal(a.states, c.states)


def test_measurement_noise_has_the_configured_scale():
    # a long noise-free-dynamics track isolates the measurement noise;
    # with n = 1e5 the standard error of the range std is about 0.11 m,
    # so the 1% band sits at more than four standard errors
    sc = small_scenario(horizon=100_000)
    truth = simulate(sc, RngStream(6), process_noise=False)
    ranges, bearings = observe_mean(truth.states, sc.sensor)
    range_noise = np.array([o.range for o in truth.observations]) - ranges
    bearing_noise = np.array([o.bearing for o in truth.observations]) - bearings
    assert range_noise.std() == pytest.approx(50.0, rel=0.01)
    assert bearing_noise.std() == pytest.approx(DEG, rel=0.01)


# --- serialisation ------------------------------------------------------------------


def test_dict_round_trip_preserves_everything():
    sc = benchmark_scenario()
    data = scenario_to_dict(sc)
    # angles are stored in degrees
    assert data["omega_schedule"][1] == {"start": 60, "omega_deg": pytest.approx(3.0)}
    assert data["sigma_b2_true_deg2"] == pytest.approx(1.0)
    assert data["omega_prior_deg"] == [pytest.approx(-20.0), pytest.approx(20.0)]

    back = scenario_from_dict(data)
    assert back.horizon == sc.horizon
    assert back.initial_state == sc.initial_state
    assert back.sensor == sc.sensor
    assert back.s0 == sc.s0
    assert_allclose(
        [w for _, w in back.omega_schedule], [w for _, w in sc.omega_schedule], rtol=1e-12
    )
    assert back.sigma_b2_true == pytest.approx(sc.sigma_b2_true, rel=1e-12)
    assert_allclose(np.asarray(back.init_state_cov), np.asarray(sc.init_state_cov))


def test_file_round_trip(tmp_path):
    path = tmp_path / "scenario.json"
    save_scenario(benchmark_scenario(), path)
    loaded = load_scenario(path)
    assert loaded.horizon == 400
    assert loaded.changepoints() == benchmark_scenario().changepoints()
    # second save of the loaded config is byte-identical
    path2 = tmp_path / "again.json"
    save_scenario(loaded, path2)
    assert path.read_text() == path2.read_text()


def test_load_errors_become_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(bad)
    truncated = tmp_path / "truncated.json"
    truncated.write_text('{"horizon": 10}')
    with pytest.raises(ConfigError):
        load_scenario(truncated)
