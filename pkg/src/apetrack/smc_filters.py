"""Auxiliary-style particle filters for joint state and parameter tracking.

All four filters share the resample-propagate skeleton: score each particle
by the likelihood of the new observation at its predicted (noise-free) next
state, resample on those scores, propagate the survivors stochastically,
then correct the weights by the ratio of the achieved likelihood to the
predictive score.  They differ in what they do about parameters:

  apf_step   parameters fixed; pure state tracking.
  lw_step    non-conjugate parameters tracked by a shrinkage kernel whose
             mixture preserves the parameter mean and variance exactly.
  pl_step    conjugate parameters redrawn each step from per-particle
             sufficient-statistic posteriors.
  ape_step   both of the above, plus an explicit changepoint mechanism:
             each particle enters the resampling pool twice, once assuming
             the turn rate persisted (kernel branch, prior mass 1 - beta)
             and once assuming it jumped to a fresh prior draw (mass beta),
             so the data decide how much change to believe this step.

Turn rate is the kernel-tracked parameter; the process and measurement
variances are the conjugate ones.  Filters accept any model object with
the CoordinatedTurnModel method set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    FilterError,
    ParamVector,
    ParticleCloud,
    StateVector,
    SuffStats,
    weighted_param_mean,
    weighted_state_mean,
)
from .stochastics import RngStream, systematic_resample
from .core import normalize_log_weights
from .tracking_models import Observation

# below this, the weighted turn-rate variance is floored before the kernel
# bandwidth is formed, so the changepoint filter never freezes completely
SPREAD_FLOOR = 1e-12


@dataclass(frozen=True)
class ApeConfig:
    """Knobs shared by the particle filters.

    beta is the per-step prior probability of a turn-rate changepoint and
    h2 the squared kernel bandwidth; the shrinkage factor is tied to h2 so
    the kernel mixture leaves the first two moments untouched.  The
    omega_prior interval (rad/s) seeds the initial clouds and supplies
    changepoint proposals; it may be degenerate (lo == hi).

    estimate_eta2 / estimate_obs_noise choose which variances are learned
    from their sufficient statistics; anything not estimated stays clamped
    at the value the cloud was initialised with.  reset_mask marks which
    statistic pairs (process, range, bearing) are treated as time-varying
    and reset to reset_stats on a changepoint.
    """

    n_particles: int
    beta: float = 0.05
    h2: float = 0.01
    omega_prior: tuple[float, float] = (-0.349, 0.349)
    estimate_eta2: bool = False
    estimate_obs_noise: bool = False
    reset_mask: tuple[bool, bool, bool] = (False, False, False)
    reset_stats: SuffStats | None = None

    def __post_init__(self) -> None:
        if self.n_particles < 1:
            raise ConfigError(f"n_particles must be >= 1, got {self.n_particles}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.h2 < 1.0:
            raise ConfigError(f"h2 must lie in (0, 1), got {self.h2}")
        lo, hi = self.omega_prior
        if lo > hi:
            raise ConfigError(f"omega_prior must satisfy lo <= hi, got {self.omega_prior}")
        if any(self.reset_mask) and self.reset_stats is None:
            raise ConfigError("reset_mask set but no reset_stats supplied")

    @property
    def a_shrink(self) -> float:
        """Kernel shrinkage factor; a_shrink**2 + h2 == 1 by construction."""
        return float(np.sqrt(1.0 - self.h2))


@dataclass(frozen=True)
class KernelSummary:
    """Shrunk kernel locations and bandwidth for one scalar parameter."""

    locations: np.ndarray
    bandwidth_var: float
    mean: float
    spread: float


def shrinkage_kernel(values: np.ndarray, weights: np.ndarray, h2: float) -> KernelSummary:
    """Kernel locations a*v + (1-a)*mean with variance h2 * spread.

    With a = sqrt(1 - h2) the mixture sum_i w_i N(loc_i, h2*spread) has
    mean equal to the weighted mean and variance equal to the weighted
    spread of the inputs, exactly.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mean = float(weights @ values)
    spread = float(weights @ (values - mean) ** 2)
    a = np.sqrt(1.0 - h2)
    locations = a * values + (1.0 - a) * mean
    return KernelSummary(locations, h2 * spread, mean, spread)


@dataclass
class FilterStepResult:
    cloud: ParticleCloud
    state_estimate: StateVector
    param_estimate: ParamVector
    changepoint_mass: float | None = None


def _log_probs(weights: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(weights)


def _finish(cloud: ParticleCloud, changepoint_mass: float | None = None) -> FilterStepResult:
    return FilterStepResult(
        cloud=cloud,
        state_estimate=weighted_state_mean(cloud),
        param_estimate=weighted_param_mean(cloud),
        changepoint_mass=changepoint_mass,
    )


def _estimate_flags(cfg: ApeConfig) -> tuple[bool, bool, bool]:
    return (cfg.estimate_eta2, cfg.estimate_obs_noise, cfg.estimate_obs_noise)


def apf_step(cloud: ParticleCloud, y: Observation, model, rng: RngStream) -> FilterStepResult:
    """One auxiliary-filter step with every parameter held fixed."""
    mu = model.state_mean(cloud.states, cloud.omega)
    pre_log = model.log_likelihood(y, mu, cloud.sigma_r2, cloud.sigma_b2)
    probs = normalize_log_weights(_log_probs(cloud.weights) + pre_log)
    idx = systematic_resample(probs, cloud.n, rng.uniform())

    prev = cloud.states[idx]
    omega = cloud.omega[idx]
    eta2 = cloud.eta2[idx]
    states = model.sample_states(prev, omega, eta2, rng)
    sigma_r2 = cloud.sigma_r2[idx]
    sigma_b2 = cloud.sigma_b2[idx]
    logw = model.log_likelihood(y, states, sigma_r2, sigma_b2) - pre_log[idx]
    stats = model.update_suffstats(cloud.suffstats[idx], prev, states, omega, y)

    out = ParticleCloud(states, omega, eta2, sigma_r2, sigma_b2, stats,
                        normalize_log_weights(logw))
    return _finish(out)


def pl_step(
    cloud: ParticleCloud, y: Observation, model, rng: RngStream, cfg: ApeConfig
) -> FilterStepResult:
    """apf_step plus a conjugate refresh of the estimated variances.

    After the sufficient statistics absorb the step's residuals, each
    estimated variance is redrawn from its per-particle posterior; clamped
    variances pass through untouched, in which case this collapses to
    apf_step exactly (same random stream consumption).
    """
    mu = model.state_mean(cloud.states, cloud.omega)
    pre_log = model.log_likelihood(y, mu, cloud.sigma_r2, cloud.sigma_b2)
    probs = normalize_log_weights(_log_probs(cloud.weights) + pre_log)
    idx = systematic_resample(probs, cloud.n, rng.uniform())

    prev = cloud.states[idx]
    omega = cloud.omega[idx]
    eta2 = cloud.eta2[idx]
    states = model.sample_states(prev, omega, eta2, rng)
    sigma_r2 = cloud.sigma_r2[idx]
    sigma_b2 = cloud.sigma_b2[idx]
    logw = model.log_likelihood(y, states, sigma_r2, sigma_b2) - pre_log[idx]
    stats = model.update_suffstats(cloud.suffstats[idx], prev, states, omega, y)

    eta2, sigma_r2, sigma_b2 = _refresh_params(
        stats, (eta2, sigma_r2, sigma_b2), _estimate_flags(cfg), rng
    )
    out = ParticleCloud(states, omega, eta2, sigma_r2, sigma_b2, stats,
                        normalize_log_weights(logw))
    return _finish(out)


def _refresh_params(stats, current, flags, rng: RngStream):
    """Redraw flagged variances from their IG posteriors, keep the rest."""
    pairs = ((0, 1), (2, 3), (4, 5))
    out = []
    for (lo, hi), value, flag in zip(pairs, current, flags):
        if flag:
            out.append(rng.inverse_gamma(stats[:, lo] / 2.0, stats[:, hi] / 2.0))
        else:
            out.append(value)
    return tuple(out)


def lw_step(
    cloud: ParticleCloud, y: Observation, model, rng: RngStream, cfg: ApeConfig
) -> FilterStepResult:
    """One shrinkage-kernel step treating the turn rate as a static unknown.

    The kernel variance comes straight from the weighted cloud; if the
    cloud has collapsed to a single turn-rate value the kernel draws
    reproduce it exactly, so a degenerate parameter stays frozen.
    """
    kern = shrinkage_kernel(cloud.omega, cloud.weights, cfg.h2)
    mu = model.state_mean(cloud.states, cloud.omega)
    pre_log = model.log_likelihood(y, mu, cloud.sigma_r2, cloud.sigma_b2)
    probs = normalize_log_weights(_log_probs(cloud.weights) + pre_log)
    idx = systematic_resample(probs, cloud.n, rng.uniform())

    omega = rng.gaussian(kern.locations[idx], kern.bandwidth_var)
    prev = cloud.states[idx]
    eta2 = cloud.eta2[idx]
    states = model.sample_states(prev, omega, eta2, rng)
    sigma_r2 = cloud.sigma_r2[idx]
    sigma_b2 = cloud.sigma_b2[idx]
    logw = model.log_likelihood(y, states, sigma_r2, sigma_b2) - pre_log[idx]
    stats = model.update_suffstats(cloud.suffstats[idx], prev, states, omega, y)

    out = ParticleCloud(states, omega, eta2, sigma_r2, sigma_b2, stats,
                        normalize_log_weights(logw))
    return _finish(out)


def ape_step(
    cloud: ParticleCloud, y: Observation, model, rng: RngStream, cfg: ApeConfig
) -> FilterStepResult:
    """One adaptive step with an explicit turn-rate changepoint branch.

    Every particle is scored twice: once at its predicted state under the
    carried turn rate (weight scaled by 1 - beta) and once under a fresh
    prior draw (scaled by beta).  A single systematic pass over the joint
    2n-entry pool then decides, in proportion to the evidence, how many
    survivors believe a changepoint occurred this step.  No-change
    survivors jitter their turn rate through the shrinkage kernel;
    changepoint survivors keep their prior draw (and reset any sufficient
    statistics marked time-varying).  The step ends with the usual
    likelihood-ratio correction, a resample back to equal weights, and the
    sufficient-statistic update.
    """
    n = cloud.n
    stats0 = cloud.suffstats
    flags = _estimate_flags(cfg)
    eta2_h, sr2_h, sb2_h = _refresh_params(
        stats0, (cloud.eta2, cloud.sigma_r2, cloud.sigma_b2), flags, rng
    )

    kern = shrinkage_kernel(cloud.omega, cloud.weights, cfg.h2)
    bandwidth = cfg.h2 * max(kern.spread, SPREAD_FLOOR)

    lo, hi = cfg.omega_prior
    omega_jump = rng.uniform(lo, hi, n) if hi > lo else np.full(n, lo)

    log_prev = _log_probs(cloud.weights)
    w1 = model.log_likelihood(y, model.state_mean(cloud.states, cloud.omega), sr2_h, sb2_h)
    w2 = model.log_likelihood(y, model.state_mean(cloud.states, omega_jump), sr2_h, sb2_h)
    pool = np.concatenate(
        [log_prev + np.log1p(-cfg.beta) + w1, log_prev + np.log(cfg.beta) + w2]
    )
    probs = normalize_log_weights(pool)
    pick = systematic_resample(probs, n, rng.uniform())

    jumped = pick >= n
    src = np.where(jumped, pick - n, pick)
    changepoint_mass = float(np.mean(jumped))

    omega = np.empty(n)
    keep = ~jumped
    omega[keep] = rng.gaussian(kern.locations[src[keep]], bandwidth)
    omega[jumped] = omega_jump[src[jumped]]

    stats = stats0[src].copy()
    if any(cfg.reset_mask):
        reset = cfg.reset_stats.as_array()
        for pair, flagged in enumerate(cfg.reset_mask):
            if flagged:
                stats[np.ix_(jumped, [2 * pair, 2 * pair + 1])] = reset[2 * pair : 2 * pair + 2]

    eta2 = np.broadcast_to(eta2_h, (n,))[src]
    sigma_r2 = np.broadcast_to(sr2_h, (n,))[src]
    sigma_b2 = np.broadcast_to(sb2_h, (n,))[src]
    denom = np.where(jumped, w2[src], w1[src])

    prev = cloud.states[src]
    states = model.sample_states(prev, omega, eta2, rng)
    logw = model.log_likelihood(y, states, sigma_r2, sigma_b2) - denom
    final = normalize_log_weights(logw)

    # equal-weight resample before the statistics absorb the step
    idx = systematic_resample(final, n, rng.uniform())
    prev, states, omega = prev[idx], states[idx], omega[idx]
    stats = model.update_suffstats(stats[idx], prev, states, omega, y)

    out = ParticleCloud(states, omega, eta2[idx], sigma_r2[idx], sigma_b2[idx], stats)
    return _finish(out, changepoint_mass)


# --- whole-track driver ---------------------------------------------------


@dataclass(frozen=True)
class FilterInit:
    """Everything needed to seed a cloud before the first observation.

    state_mean/state_cov give the Gaussian prior on the initial state;
    s0 the starting sufficient statistics; eta2, sigma_r2, sigma_b2 the
    values used for whichever variances the configuration clamps.
    """

    state_mean: np.ndarray
    state_cov: np.ndarray
    s0: SuffStats
    eta2: float
    sigma_r2: float
    sigma_b2: float


FILTER_KINDS = ("apf", "lw", "pl", "ape")


def init_cloud(kind: str, cfg: ApeConfig, init: FilterInit, rng: RngStream) -> ParticleCloud:
    """Prior cloud for the given filter kind.

    States come from the Gaussian prior.  Turn rates start at the prior
    for the kinds that estimate one ('lw', 'ape') and at zero otherwise
    (the driver overwrites them with the known schedule each step).
    Estimated variances start as draws from the s0 posteriors, clamped
    ones at the values in init.
    """
    if kind not in FILTER_KINDS:
        raise ConfigError(f"unknown filter kind {kind!r}")
    n = cfg.n_particles
    chol = np.linalg.cholesky(np.asarray(init.state_cov, dtype=float))
    states = init.state_mean + rng.generator.standard_normal((n, 4)) @ chol.T

    if kind in ("lw", "ape"):
        lo, hi = cfg.omega_prior
        omega = rng.uniform(lo, hi, n) if hi > lo else np.full(n, lo)
    else:
        omega = np.zeros(n)

    stats = np.tile(init.s0.as_array(), (n, 1))
    flags = _estimate_flags(cfg) if kind in ("pl", "ape") else (False, False, False)
    clamped = (np.full(n, init.eta2), np.full(n, init.sigma_r2), np.full(n, init.sigma_b2))
    eta2, sigma_r2, sigma_b2 = _refresh_params(stats, clamped, flags, rng)
    return ParticleCloud(states, omega, eta2, sigma_r2, sigma_b2, stats)


def _assimilate_first(
    cloud: ParticleCloud, y: Observation, model, rng: RngStream, flags
) -> FilterStepResult:
    """Weight-only update for the observation of the initial state."""
    logw = _log_probs(cloud.weights) + model.log_likelihood(
        y, cloud.states, cloud.sigma_r2, cloud.sigma_b2
    )
    weights = normalize_log_weights(logw)
    stats = model.update_suffstats(cloud.suffstats, None, cloud.states, cloud.omega, y)
    eta2, sigma_r2, sigma_b2 = _refresh_params(
        stats, (cloud.eta2, cloud.sigma_r2, cloud.sigma_b2), flags, rng
    )
    out = ParticleCloud(cloud.states, cloud.omega, eta2, sigma_r2, sigma_b2, stats, weights)
    return _finish(out)


def run_filter_iter(
    kind: str,
    observations,
    model,
    cfg: ApeConfig,
    init: FilterInit,
    rng: RngStream,
    true_omega=None,
):
    """Yield one FilterStepResult per observation.

    true_omega supplies the known turn-rate schedule (one value per
    observation, each governing the transition into that step) for the
    kinds that do not estimate it ('apf', 'pl').
    """
    if kind in ("apf", "pl") and true_omega is None:
        raise ConfigError(f"filter kind {kind!r} needs the true turn-rate schedule")
    if true_omega is not None:
        true_omega = np.asarray(true_omega, dtype=float)
        if len(true_omega) < len(observations):
            raise ConfigError("true_omega shorter than the observation record")

    flags = _estimate_flags(cfg) if kind in ("pl", "ape") else (False, False, False)
    cloud = init_cloud(kind, cfg, init, rng)
    for t, y in enumerate(observations):
        try:
            if t == 0:
                result = _assimilate_first(cloud, y, model, rng, flags)
            elif kind == "apf":
                cloud.omega[:] = true_omega[t]
                result = apf_step(cloud, y, model, rng)
            elif kind == "pl":
                cloud.omega[:] = true_omega[t]
                result = pl_step(cloud, y, model, rng, cfg)
            elif kind == "lw":
                result = lw_step(cloud, y, model, rng, cfg)
            else:
                result = ape_step(cloud, y, model, rng, cfg)
        except FilterError as err:
            err.step = t
            err.args = (f"step {t}: {err.args[0] if err.args else ''}",)
            raise
        cloud = result.cloud
        yield result


def run_filter(
    kind: str,
    observations,
    model,
    cfg: ApeConfig,
    init: FilterInit,
    rng: RngStream,
    true_omega=None,
) -> list[FilterStepResult]:
    """Run one filter over a full observation record; see run_filter_iter."""
    return list(run_filter_iter(kind, observations, model, cfg, init, rng, true_omega))
