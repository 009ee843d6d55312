"""Random number streams and the sampling primitives used by the filters.

Every stochastic quantity in this package is drawn through an RngStream,
which wraps a PCG64 generator keyed by (seed, stream).  Two streams built
from the same key produce bit-identical sequences, so a Monte Carlo run is
reproducible from its seed alone, and independent runs simply use distinct
stream ids.
"""

from __future__ import annotations

from math import lgamma

import numpy as np


class RngStream:
    """Deterministic random stream keyed by (seed, stream id)."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, stream: int) -> "RngStream":
        """Sibling stream under the same seed; does not touch this one."""
        return RngStream(self.seed, stream)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        if not hi > lo:
            raise ValueError(f"need lo < hi, got [{lo}, {hi})")
        return self._gen.uniform(lo, hi, size=size)

    def gaussian(self, mean, var, size=None):
        """Normal draw(s) with the given mean and variance.

        var may be zero (returns the mean exactly) and both arguments
        broadcast, so a vector of per-particle means and variances yields
        one draw per particle.
        """
        mean = np.asarray(mean, dtype=float)
        var = np.asarray(var, dtype=float)
        if np.any(var < 0):
            raise ValueError("variance must be nonnegative")
        if size is None:
            size = np.broadcast_shapes(mean.shape, var.shape)
        z = self._gen.standard_normal(size)
        out = mean + np.sqrt(var) * z
        return float(out) if out.ndim == 0 else out

    def inverse_gamma(self, shape, scale, size=None):
        """Inverse-gamma draw(s): reciprocal of a Gamma(shape, 1/scale) draw.

        The mean is scale / (shape - 1) for shape > 1.
        """
        shape = np.asarray(shape, dtype=float)
        scale = np.asarray(scale, dtype=float)
        if np.any(shape <= 0) or np.any(scale <= 0):
            raise ValueError("shape and scale must be positive")
        g = self._gen.gamma(shape, 1.0 / scale, size=size)
        out = 1.0 / g
        return float(out) if np.ndim(out) == 0 else out


# module-level aliases for call sites that read better functionally
def sample_uniform(rng: RngStream, lo: float, hi: float, size=None):
    return rng.uniform(lo, hi, size)


def sample_gaussian(rng: RngStream, mean, var, size=None):
    return rng.gaussian(mean, var, size)


def sample_inverse_gamma(rng: RngStream, shape, scale, size=None):
    return rng.inverse_gamma(shape, scale, size)


def inverse_gamma_logpdf(v, shape: float, scale: float):
    """Log density of IG(shape, scale) at v (> 0), vectorised over v."""
    v = np.asarray(v, dtype=float)
    return shape * np.log(scale) - lgamma(shape) - (shape + 1.0) * np.log(v) - scale / v


def systematic_resample(weights: np.ndarray, n: int, u: float) -> np.ndarray:
    """Systematic (stratified with one shared offset) resampling.

    Places n evenly spaced points (u + k)/n, k = 0..n-1, on the cumulative
    weight axis and returns the index of the interval each point lands in.
    Intervals are half-open on the left, so a point falling exactly on a
    cumulative boundary belongs to the next particle; zero-weight particles
    own empty intervals and are never selected.  Index i is drawn either
    floor(n * w_i) or ceil(n * w_i) times, which makes the expected count
    exactly n * w_i over the offset distribution.

    Args:
        weights: normalised probability vector.
        n: number of indices to draw.
        u: offset in [0, 1), normally a single uniform draw per call.

    Returns:
        Sorted int array of n particle indices.
    """
    weights = np.asarray(weights, dtype=float)
    if n <= 0:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"offset must lie in [0, 1), got {u}")
    if abs(np.sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must be normalised")
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard the last interval against rounding
    positions = (u + np.arange(n)) / n
    idx = np.searchsorted(cum, positions, side="right")
    return np.minimum(idx, len(weights) - 1)
