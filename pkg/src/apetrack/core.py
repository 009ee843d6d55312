"""Shared data model for the particle filters.

State vectors follow the layout (x, vx, y, vy) in metres and metres per
second.  A particle couples a state hypothesis with a parameter hypothesis
(turn rate plus noise variances) and a set of conjugate sufficient
statistics.  Clouds store all of that as column arrays so the filter steps
can stay vectorised; the tuple-of-objects view is available per particle
when convenience matters more than speed.

Weights live in probability space inside a cloud (normalised, summing to
one) and in log space while a filter step accumulates likelihood terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 4

# column order of ParticleCloud.suffstats
SUFFSTAT_FIELDS = ("a", "b", "c", "d", "e", "f")


class FilterError(Exception):
    """Base class for runtime failures inside a filter step."""

    step: int | None = None


class DegenerateWeights(FilterError):
    """Every particle (or mode) received zero likelihood."""


class SingularGeometry(FilterError):
    """A state coincides with the sensor position; bearing is undefined."""


class NumericalBreakdown(FilterError):
    """A covariance lost positive definiteness beyond repair."""


class ConfigError(FilterError):
    """A configuration value is outside its documented domain."""


@dataclass(frozen=True)
class StateVector:
    x: float
    vx: float
    y: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.vx, self.y, self.vy], dtype=float)

    @staticmethod
    def from_array(arr: np.ndarray) -> "StateVector":
        return StateVector(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass(frozen=True)
class ParamVector:
    """Model parameters carried by one particle.

    omega is the turn rate in rad/s; eta2 the process-noise variance in
    (m/s^2)^2; sigma_r2 and sigma_b2 the range and bearing measurement
    variances in m^2 and rad^2.  The variances must be positive, omega may
    take any sign.
    """

    omega: float
    eta2: float
    sigma_r2: float
    sigma_b2: float

    def __post_init__(self) -> None:
        if self.eta2 <= 0 or self.sigma_r2 <= 0 or self.sigma_b2 <= 0:
            raise ConfigError(f"variances must be positive, got {self}")


@dataclass(frozen=True)
class SuffStats:
    """Conjugate inverse-gamma bookkeeping for the three variances.

    (a, b) accumulate process-noise evidence, (c, d) range evidence and
    (e, f) bearing evidence.  Each pair encodes an IG(count/2, sum/2)
    posterior.  The counts a, c, e only ever grow; the sums stay positive.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e, self.f], dtype=float)

    @staticmethod
    def from_array(arr: np.ndarray) -> "SuffStats":
        return SuffStats(*(float(v) for v in arr))


def normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    """Exponentiate and normalise log weights without overflow.

    The maximum is subtracted before exponentiation, so any common offset
    in ``logw`` cancels.  Entries of -inf map to exactly zero.

    Raises:
        DegenerateWeights: if no entry is finite.
    """
    logw = np.asarray(logw, dtype=float)
    if logw.size == 0:
        raise ValueError("empty weight vector")
    m = np.max(logw)
    if not np.isfinite(m):
        raise DegenerateWeights("all log weights are -inf")
    w = np.exp(logw - m)
    return w / np.sum(w)


def effective_sample_size(weights: np.ndarray) -> float:
    """Inverse sum of squared weights; ranges from 1 to len(weights).

    Expects an already normalised weight vector.
    """
    weights = np.asarray(weights, dtype=float)
    total = np.sum(weights)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must be normalised, sum={total!r}")
    return float(1.0 / np.sum(weights**2))


@dataclass
class ParticleCloud:
    """A weighted particle ensemble stored column-wise.

    states has shape (n, 4); omega, eta2, sigma_r2, sigma_b2 and weights
    are length-n vectors; suffstats has shape (n, 6) with columns ordered
    as SUFFSTAT_FIELDS.  Weights are normalised on construction.
    """

    states: np.ndarray
    omega: np.ndarray
    eta2: np.ndarray
    sigma_r2: np.ndarray
    sigma_b2: np.ndarray
    suffstats: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        n = self.states.shape[0]
        if self.states.shape != (n, STATE_DIM):
            raise ValueError(f"states must be (n, {STATE_DIM}), got {self.states.shape}")
        for name in ("omega", "eta2", "sigma_r2", "sigma_b2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            setattr(self, name, arr)
        self.suffstats = np.asarray(self.suffstats, dtype=float)
        if self.suffstats.shape != (n, len(SUFFSTAT_FIELDS)):
            raise ValueError(f"suffstats must be (n, 6), got {self.suffstats.shape}")
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n,):
                raise ValueError(f"weights must have shape ({n},)")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and nonnegative")
            s = np.sum(w)
            if s <= 0:
                raise DegenerateWeights("weight vector sums to zero")
            self.weights = w / s

    @property
    def n(self) -> int:
        return self.states.shape[0]

    def particle(self, i: int) -> tuple[StateVector, ParamVector, SuffStats]:
        """Object view of particle i (slow path, for inspection and tests)."""
        return (
            StateVector.from_array(self.states[i]),
            ParamVector(
                float(self.omega[i]),
                float(self.eta2[i]),
                float(self.sigma_r2[i]),
                float(self.sigma_b2[i]),
            ),
            SuffStats.from_array(self.suffstats[i]),
        )

    def select(self, idx: np.ndarray) -> "ParticleCloud":
        """New cloud holding particles idx with uniform weights."""
        return ParticleCloud(
            states=self.states[idx].copy(),
            omega=self.omega[idx].copy(),
            eta2=self.eta2[idx].copy(),
            sigma_r2=self.sigma_r2[idx].copy(),
            sigma_b2=self.sigma_b2[idx].copy(),
            suffstats=self.suffstats[idx].copy(),
        )

    def ess(self) -> float:
        return effective_sample_size(self.weights)

    def check(self) -> None:
        """Assert the cloud invariants; test helper, not a hot-path call."""
        assert abs(np.sum(self.weights) - 1.0) <= 1e-12 * self.n
        assert np.all(self.weights >= 0)
        assert np.all(self.eta2 > 0) and np.all(self.sigma_r2 > 0) and np.all(self.sigma_b2 > 0)
        counts = self.suffstats[:, 0::2]
        sums = self.suffstats[:, 1::2]
        assert np.all(counts > 0) and np.all(sums > 0)


def weighted_state_mean(cloud: ParticleCloud) -> StateVector:
    """Weight-averaged state of the cloud."""
    return StateVector.from_array(cloud.weights @ cloud.states)


def weighted_param_mean(cloud: ParticleCloud) -> ParamVector:
    """Weight-averaged parameters of the cloud."""
    w = cloud.weights
    return ParamVector(
        omega=float(w @ cloud.omega),
        eta2=float(w @ cloud.eta2),
        sigma_r2=float(w @ cloud.sigma_r2),
        sigma_b2=float(w @ cloud.sigma_b2),
    )
