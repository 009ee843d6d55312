"""Weight arithmetic and the particle container."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from apetrack.core import (
    ConfigError,
    DegenerateWeights,
    ParamVector,
    ParticleCloud,
    StateVector,
    SuffStats,
    effective_sample_size,
    normalize_log_weights,
    weighted_param_mean,
    weighted_state_mean,
)

from helpers import make_cloud


# --- normalize_log_weights ------------------------------------------------


def test_equal_logs_normalize_to_uniform():
    assert_allclose(normalize_log_weights(np.zeros(4)), np.full(4, 0.25), rtol=1e-14)


def test_minus_inf_entries_get_zero_weight():
    w = normalize_log_weights(np.array([0.0, -np.inf]))
    assert_array_equal(w, [1.0, 0.0])


def test_normalization_is_shift_invariant():
    # max-subtraction must make the result independent of the overall offset
    expected = np.array([0.25, 0.75])
    for c in (-1000.0, 0.0, 700.0):
        w = normalize_log_weights(np.array([c, c + np.log(3.0)]))
        assert_allclose(w, expected, rtol=1e-12)


def test_huge_equal_logs_do_not_overflow():
    assert_allclose(normalize_log_weights(np.array([1000.0, 1000.0])), [0.5, 0.5])


def test_empty_weight_vector_rejected():
    with pytest.raises(ValueError):
        normalize_log_weights(np.array([]))


def test_all_minus_inf_is_degenerate():
    with pytest.raises(DegenerateWeights):
        normalize_log_weights(np.full(3, -np.inf))


# --- effective sample size ------------------------------------------------


def test_ess_of_uniform_weights_is_n():
    assert effective_sample_size(np.full(8, 1.0 / 8.0)) == pytest.approx(8.0)


def test_ess_of_point_mass_is_one():
    assert effective_sample_size(np.array([1.0, 0.0, 0.0, 0.0])) == pytest.approx(1.0)


def test_ess_of_two_equal_survivors_is_two():
    assert effective_sample_size(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(2.0)


def test_ess_demands_normalized_weights():
    with pytest.raises(ValueError):
        effective_sample_size(np.array([0.5, 0.6]))


# --- small value types ----------------------------------------------------


def test_state_vector_array_round_trip():
    s = StateVector(1.0, 2.0, 3.0, 4.0)
    assert_array_equal(s.as_array(), [1.0, 2.0, 3.0, 4.0])
    assert StateVector.from_array(s.as_array()) == s
    assert s.position == (1.0, 3.0)


def test_state_vector_speed_is_velocity_norm():
    assert StateVector(0.0, 3.0, 0.0, 4.0).speed == pytest.approx(5.0)


def test_param_vector_rejects_nonpositive_variances():
    with pytest.raises(ConfigError):
        ParamVector(omega=0.0, eta2=0.0, sigma_r2=1.0, sigma_b2=1.0)
    with pytest.raises(ConfigError):
        ParamVector(omega=0.0, eta2=1.0, sigma_r2=-2.0, sigma_b2=1.0)
    # any sign of turn rate is legal
    ParamVector(omega=-0.3, eta2=1.0, sigma_r2=1.0, sigma_b2=1.0)


def test_suffstats_array_round_trip():
    s = SuffStats(9.0, 15.0, 4.0, 5000.0, 4.0, 0.0025)
    assert SuffStats.from_array(s.as_array()) == s


# --- ParticleCloud --------------------------------------------------------


def test_cloud_defaults_to_uniform_weights():
    cloud = make_cloud(5)
    assert cloud.n == 5
    assert_allclose(cloud.weights, np.full(5, 0.2))
    assert cloud.ess() == pytest.approx(5.0)


def test_cloud_normalizes_supplied_weights():
    cloud = make_cloud(4, weights=np.array([2.0, 2.0, 0.0, 0.0]))
    assert_allclose(cloud.weights, [0.5, 0.5, 0.0, 0.0])


def test_cloud_rejects_negative_weights():
    with pytest.raises(ValueError):
        make_cloud(3, weights=np.array([0.5, 0.6, -0.1]))


def test_cloud_zero_weight_sum_is_degenerate():
    with pytest.raises(DegenerateWeights):
        make_cloud(3, weights=np.zeros(3))


def test_cloud_shape_validation():
    good = make_cloud(4)
    with pytest.raises(ValueError):
        ParticleCloud(
            good.states[:, :3],
            good.omega,
            good.eta2,
            good.sigma_r2,
            good.sigma_b2,
            good.suffstats,
        )
    with pytest.raises(ValueError):
        ParticleCloud(
            good.states,
            good.omega[:2],
            good.eta2,
            good.sigma_r2,
            good.sigma_b2,
            good.suffstats,
        )
    with pytest.raises(ValueError):
        ParticleCloud(
            good.states,
            good.omega,
            good.eta2,
            good.sigma_r2,
            good.sigma_b2,
            good.suffstats[:, :5],
        )


def test_cloud_select_gathers_rows_and_resets_weights():
    cloud = make_cloud(4, weights=np.array([0.7, 0.1, 0.1, 0.1]))
    picked = cloud.select(np.array([0, 0, 3, 3]))
    assert picked.n == 4
    assert_array_equal(picked.states[0], cloud.states[0])
    assert_array_equal(picked.states[2], cloud.states[3])
    assert_allclose(picked.weights, np.full(4, 0.25))


def test_cloud_particle_accessor_returns_typed_views():
    cloud = make_cloud(3, omega=0.1, eta2=2.0)
    state, params, stats = cloud.particle(1)
    assert isinstance(state, StateVector)
    assert isinstance(params, ParamVector)
    assert isinstance(stats, SuffStats)
    assert_array_equal(state.as_array(), cloud.states[1])
    assert params.omega == pytest.approx(0.1)
    assert params.eta2 == pytest.approx(2.0)


# --- weighted means -------------------------------------------------------


def test_weighted_state_mean_is_convex_combination():
    cloud = make_cloud(2, weights=np.array([0.25, 0.75]))
    mean = weighted_state_mean(cloud)
    expected = 0.25 * cloud.states[0] + 0.75 * cloud.states[1]
    assert_allclose(mean.as_array(), expected, rtol=1e-12)


def test_weighted_param_mean_with_point_mass_recovers_particle():
    cloud = make_cloud(3, weights=np.array([0.0, 1.0, 0.0]))
    cloud.omega[1] = 0.2
    params = weighted_param_mean(cloud)
    assert params.omega == pytest.approx(0.2)
    assert params.eta2 == pytest.approx(float(cloud.eta2[1]))
