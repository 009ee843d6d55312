"""Random streams, distribution samplers and systematic resampling."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats as sps

from apetrack.stochastics import (
    RngStream,
    inverse_gamma_logpdf,
    sample_gaussian,
    sample_inverse_gamma,
    sample_uniform,
    systematic_resample,
)


# --- stream identity --------------------------------------------------------


def test_same_key_reproduces_the_sequence():
    a = RngStream(42, 3).uniform(size=100)
    b = RngStream(42, 3).uniform(size=100)
    assert_array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(42, 0).uniform(size=100)
    b = RngStream(42, 1).uniform(size=100)
    assert not np.array_equal(a, b)


def test_substream_matches_direct_construction():
    direct = RngStream(9, 4).uniform(size=10)
    via_parent = RngStream(9, 0).substream(4).uniform(size=10)
    assert_array_equal(direct, via_parent)


def test_substream_leaves_parent_untouched():
    parent = RngStream(9, 0)
    parent.substream(4).uniform(size=1000)
    fresh = RngStream(9, 0)
    assert parent.uniform() == fresh.uniform()


# --- uniform ----------------------------------------------------------------


def test_uniform_respects_bounds():
    draws = RngStream(1).uniform(-2.0, 5.0, size=10_000)
    assert draws.min() >= -2.0
    assert draws.max() < 5.0


def test_uniform_rejects_empty_interval():
    r = RngStream(1)
    with pytest.raises(ValueError):
        r.uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        r.uniform(2.0, 1.0)


# --- gaussian ---------------------------------------------------------------


def test_gaussian_zero_variance_returns_mean_exactly():
    assert RngStream(1).gaussian(3.25, 0.0) == 3.25


def test_gaussian_rejects_negative_variance():
    with pytest.raises(ValueError):
        RngStream(1).gaussian(0.0, -1.0)


def test_gaussian_moments():
    draws = RngStream(5).gaussian(0.0, 1.0, size=1_000_000)
    # standard error of the mean is 1e-3 and of the variance about 1.4e-3,
    # so 0.01 leaves a wide margin
    assert abs(draws.mean()) < 0.01
    assert abs(draws.var() - 1.0) < 0.01


def test_gaussian_is_an_exact_location_scale_family():
    # mean + sqrt(var) * z with the same underlying normals, so shifting
    # the mean shifts every draw bit-exactly
    shifted = RngStream(11).gaussian(10.0, 4.0, size=50)
    centered = RngStream(11).gaussian(0.0, 4.0, size=50)
    assert_array_equal(shifted, 10.0 + centered)


def test_gaussian_broadcasts_per_element_variances():
    mean = np.array([1.0, 2.0, 3.0])
    var = np.array([0.0, 1.0, 0.0])
    out = RngStream(2).gaussian(mean, var)
    assert out.shape == (3,)
    assert out[0] == 1.0
    assert out[2] == 3.0
    assert out[1] != 2.0


# --- inverse gamma ----------------------------------------------------------


def test_inverse_gamma_mean_with_finite_variance():
    draws = RngStream(3).inverse_gamma(4.5, 7.5, size=1_000_000)
    assert draws.mean() == pytest.approx(7.5 / 3.5, rel=0.01)


def test_inverse_gamma_mean_with_heavy_tail():
    # shape 2 has infinite variance, so the sample mean converges slowly;
    # the pinned seed keeps this deterministic and 5% gives honest room
    draws = RngStream(3).inverse_gamma(2.0, 2500.0, size=1_000_000)
    assert draws.mean() == pytest.approx(2500.0, rel=0.05)


@pytest.mark.parametrize("shape,scale", [(4.5, 7.5), (2.0, 2500.0)])
def test_inverse_gamma_matches_reference_distribution(shape, scale):
    draws = RngStream(8).inverse_gamma(shape, scale, size=20_000)
    result = sps.kstest(draws, sps.invgamma(shape, scale=scale).cdf)
    assert result.pvalue > 1e-3


def test_inverse_gamma_rejects_nonpositive_parameters():
    r = RngStream(1)
    with pytest.raises(ValueError):
        r.inverse_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        r.inverse_gamma(1.0, -1.0)


def test_inverse_gamma_logpdf_matches_reference():
    grid = np.geomspace(1e-3, 1e3, 200)
    for shape, scale in ((4.5, 7.5), (2.0, 2500.0), (2.0, 0.00125)):
        ours = inverse_gamma_logpdf(grid, shape, scale)
        ref = sps.invgamma.logpdf(grid, shape, scale=scale)
        assert_allclose(ours, ref, atol=1e-10)


def test_functional_aliases_mirror_the_methods():
    assert sample_uniform(RngStream(4), 0.0, 1.0) == RngStream(4).uniform(0.0, 1.0)
    assert sample_gaussian(RngStream(4), 0.0, 1.0) == RngStream(4).gaussian(0.0, 1.0)
    assert sample_inverse_gamma(RngStream(4), 2.0, 3.0) == RngStream(4).inverse_gamma(2.0, 3.0)


# --- systematic resampling ----------------------------------------------------


def test_resample_equal_weights_keeps_every_index_once():
    n = 10
    idx = systematic_resample(np.full(n, 1.0 / n), n, 0.37)
    assert_array_equal(np.sort(idx), np.arange(n))


def test_resample_point_mass_takes_everything():
    idx = systematic_resample(np.array([1.0, 0.0, 0.0]), 3, 0.5)
    assert_array_equal(idx, [0, 0, 0])


def test_resample_hand_derived_case():
    # grid points (0.1 + k) / 4 = 0.025, 0.275, 0.525, 0.775 against the
    # cumulative sums 0.5, 1.0, 1.0, 1.0
    idx = systematic_resample(np.array([0.5, 0.5, 0.0, 0.0]), 4, 0.1)
    assert_array_equal(idx, [0, 0, 1, 1])


def test_resample_never_selects_zero_weight_particles():
    # a grid point landing exactly on a cumulative boundary belongs to the
    # next interval, so an empty interval can never be chosen
    idx = systematic_resample(np.array([0.0, 1.0]), 2, 0.0)
    assert_array_equal(idx, [1, 1])
    w = np.array([0.25, 0.0, 0.75])
    for u in (0.0, 0.25, 0.5, 0.99):
        assert 1 not in systematic_resample(w, 8, u)


def test_resample_counts_stay_within_one_of_expectation():
    gen = np.random.default_rng(0)
    for _ in range(20):
        w = gen.dirichlet(np.full(6, 0.7))
        for n in (6, 17):
            for u in (0.0, 0.31, 0.84):
                counts = np.bincount(systematic_resample(w, n, u), minlength=6)
                assert np.all(counts >= np.floor(n * w))
                assert np.all(counts <= np.ceil(n * w))


def test_resample_validates_arguments():
    w = np.array([0.5, 0.5])
    with pytest.raises(ValueError):
        systematic_resample(w, 0, 0.5)
    with pytest.raises(ValueError):
        systematic_resample(w, 2, 1.0)
    with pytest.raises(ValueError):
        systematic_resample(w, 2, -0.01)
    with pytest.raises(ValueError):
        systematic_resample(np.array([0.5, 0.6]), 2, 0.5)


def test_resample_offset_zero_is_valid():
    idx = systematic_resample(np.array([0.5, 0.5]), 2, 0.0)
    assert_array_equal(np.sort(idx), [0, 1])
