"""Interacting-multiple-model baseline built on unscented Kalman filters.

Each mode of the bank is one hypothesis about the model parameters (turn
rate, process noise, measurement noise) filtered by its own UKF; a Markov
chain over modes mixes the mode beliefs before every prediction and the
observation likelihoods re-weight the mode probabilities afterwards.  The
fused output is the moment-matched Gaussian over modes.

Sigma-point handling follows the scaled unscented transform.  Bearing is
treated as the angular measurement component throughout: sigma-point
means use the circular mean and every innovation is wrapped before it is
squared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DegenerateWeights, NumericalBreakdown, normalize_log_weights
from .tracking_models import (
    CtConfig,
    Observation,
    SensorPose,
    ct_apply,
    noise_gain,
    observe_mean,
    wrap_angle,
)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class UtParams:
    """Scaled unscented-transform spread parameters."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = 0.0


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class UkfMode:
    """One bank entry: dynamics and measurement maps plus their noises.

    f and h must accept an array of state rows.  angular lists the
    measurement components that live on the circle.  The trailing scalars
    record the parameter hypothesis for reporting only.
    """

    f: object
    q: np.ndarray
    h: object
    r: np.ndarray
    angular: tuple[int, ...] = ()
    omega: float = 0.0
    eta2: float = float("nan")
    sigma_r2: float = float("nan")
    sigma_b2: float = float("nan")


def _chol_psd(cov: np.ndarray) -> np.ndarray:
    """Cholesky with symmetrisation and a small jitter, one retry."""
    sym = 0.5 * (cov + cov.T)
    for jitter in (1e-9, 1e-3):
        try:
            return np.linalg.cholesky(sym + jitter * np.eye(sym.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalBreakdown("covariance is not positive definite")


def sigma_points(mean: np.ndarray, cov: np.ndarray, params: UtParams):
    """Scaled sigma points and their mean/covariance weights."""
    n = len(mean)
    lam = params.alpha**2 * (n + params.kappa) - n
    if lam <= -n + 1e-9:
        lam = params.alpha**2 * 3.0 - n  # fall back to the kappa = 3 - n choice
    scale = np.sqrt(n + lam)
    root = _chol_psd(cov)
    pts = np.vstack([mean, mean + scale * root.T, mean - scale * root.T])
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1.0 - params.alpha**2 + params.beta
    return pts, wm, wc


def _point_mean(values: np.ndarray, wm: np.ndarray, angular: tuple[int, ...]) -> np.ndarray:
    mean = wm @ values
    for dim in angular:
        mean[dim] = np.arctan2(wm @ np.sin(values[:, dim]), wm @ np.cos(values[:, dim]))
    return mean


def _point_residuals(values: np.ndarray, mean: np.ndarray, angular: tuple[int, ...]) -> np.ndarray:
    resid = values - mean
    for dim in angular:
        resid[:, dim] = wrap_angle(resid[:, dim])
    return resid


def unscented_transform(
    mean: np.ndarray,
    cov: np.ndarray,
    fn,
    params: UtParams = UtParams(),
    angular: tuple[int, ...] = (),
):
    """Push a Gaussian through fn; returns (mean, cov, in-residuals, out-residuals, wc).

    The residual arrays let callers assemble cross-covariances without
    regenerating the sigma points.
    """
    pts, wm, wc = sigma_points(mean, cov, params)
    out = np.atleast_2d(np.asarray(fn(pts), dtype=float))
    m = _point_mean(out, wm, angular)
    dy = _point_residuals(out, m, angular)
    cov_out = (wc[:, None] * dy).T @ dy
    dx = pts - mean
    return m, cov_out, dx, dy, wc


def ukf_step(
    belief: GaussianBelief,
    y,
    mode: UkfMode,
    params: UtParams = UtParams(),
    predict: bool = True,
) -> tuple[GaussianBelief, float]:
    """One predict/update cycle of a single mode.

    Returns the posterior belief and the log marginal likelihood of y
    under the predicted measurement Gaussian.  Set predict=False to
    assimilate an observation of the current state without a transition.
    """
    y = _as_vector(y)
    if predict:
        m, p, _, _, _ = unscented_transform(belief.mean, belief.cov, mode.f, params)
        p = p + mode.q
    else:
        m, p = belief.mean, belief.cov

    y_mean, s, dx, dy, wc = unscented_transform(m, p, mode.h, params, mode.angular)
    s = s + mode.r
    cross = (wc[:, None] * dx).T @ dy
    innov = y - y_mean
    for dim in mode.angular:
        innov[dim] = wrap_angle(innov[dim])
    try:
        solved = np.linalg.solve(s, innov)
        gain = np.linalg.solve(s, cross.T).T
        sign, logdet = np.linalg.slogdet(s)
        if sign <= 0:
            raise NumericalBreakdown("innovation covariance lost positive definiteness")
    except np.linalg.LinAlgError as err:
        raise NumericalBreakdown(f"innovation covariance solve failed: {err}") from None
    mean = m + gain @ innov
    cov = p - gain @ s @ gain.T
    cov = 0.5 * (cov + cov.T)
    loglik = -0.5 * (len(y) * LOG_2PI + logdet + innov @ solved)
    return GaussianBelief(mean, cov), float(loglik)


def _as_vector(y) -> np.ndarray:
    if isinstance(y, Observation):
        return np.array([y.range, y.bearing], dtype=float)
    return np.asarray(y, dtype=float).copy()


def make_ct_mode(
    omega: float,
    eta2: float,
    sigma_r2: float,
    sigma_b2: float,
    cfg: CtConfig,
    sensor: SensorPose,
) -> UkfMode:
    """Coordinated-turn / range-bearing mode for one parameter hypothesis."""
    gain = noise_gain(cfg)

    def f(states: np.ndarray) -> np.ndarray:
        return ct_apply(states, omega, cfg)

    def h(states: np.ndarray) -> np.ndarray:
        return np.column_stack(observe_mean(states, sensor))

    return UkfMode(
        f=f,
        q=eta2 * gain @ gain.T,
        h=h,
        r=np.diag([sigma_r2, sigma_b2]),
        angular=(1,),
        omega=omega,
        eta2=eta2,
        sigma_r2=sigma_r2,
        sigma_b2=sigma_b2,
    )


@dataclass(frozen=True)
class ModelBank:
    modes: tuple[UkfMode, ...]
    transition: np.ndarray

    def __post_init__(self) -> None:
        m = len(self.modes)
        if self.transition.shape != (m, m):
            raise ValueError("transition matrix does not match the mode count")
        rows = np.sum(self.transition, axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to one")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def param_arrays(self):
        get = lambda name: np.array([getattr(m, name) for m in self.modes])
        return get("omega"), get("eta2"), get("sigma_r2"), get("sigma_b2")


def _stay_transition(m: int, stay: float) -> np.ndarray:
    if m == 1:
        return np.ones((1, 1))
    t = np.full((m, m), (1.0 - stay) / (m - 1))
    np.fill_diagonal(t, stay)
    return t


def build_model_bank(
    kind: str,
    cfg: CtConfig,
    sensor: SensorPose,
    sigma_r2: float,
    sigma_b2: float,
    stay: float = 0.95,
) -> ModelBank:
    """Construct one of the benchmark banks.

    'imm20' and 'imm60' spread that many turn-rate hypotheses evenly over
    +/- 20 deg/s, with process noise 2 for an exactly-zero rate and 2.5
    otherwise, all at the supplied measurement variances.  'imm45' crosses
    5 turn rates with 3 process-noise and 3 measurement-noise hypotheses
    for the case where the measurement noise is unknown too.
    """
    deg = np.pi / 180.0
    if kind in ("imm20", "imm60"):
        n = int(kind[3:])
        omegas = np.linspace(-20.0, 20.0, n) * deg
        modes = tuple(
            make_ct_mode(w, 2.0 if w == 0.0 else 2.5, sigma_r2, sigma_b2, cfg, sensor)
            for w in omegas
        )
    elif kind == "imm45":
        omegas = np.linspace(-20.0, 20.0, 5) * deg
        eta2s = (2.0, 2.5, 3.0)
        noises = ((50.0**2, deg**2), (25.0**2, (2.0 * deg) ** 2), (100.0**2, deg**2))
        modes = tuple(
            make_ct_mode(w, e, r2, b2, cfg, sensor)
            for w in omegas
            for e in eta2s
            for (r2, b2) in noises
        )
    else:
        raise ValueError(f"unknown bank kind {kind!r}")
    return ModelBank(modes, _stay_transition(len(modes), stay))


def _moment_match(means: np.ndarray, covs: np.ndarray, w: np.ndarray):
    mean = w @ means
    d = means - mean
    cov = np.einsum("m,mij->ij", w, covs) + (w[:, None] * d).T @ d
    return mean, cov


@dataclass
class ImmStepResult:
    belief: GaussianBelief
    mode_beliefs: list[GaussianBelief]
    mode_probs: np.ndarray
    omega_est: float
    eta2_est: float
    sigma_r2_est: float
    sigma_b2_est: float


def imm_step(
    beliefs: list[GaussianBelief],
    probs: np.ndarray,
    y,
    bank: ModelBank,
    params: UtParams = UtParams(),
    predict: bool = True,
) -> ImmStepResult:
    """One full IMM cycle: mix, filter per mode, re-weight, fuse."""
    m = bank.n_modes
    means = np.array([b.mean for b in beliefs])
    covs = np.array([b.cov for b in beliefs])

    if predict:
        ahead = bank.transition.T @ probs
        if np.any(ahead <= 0.0):
            raise DegenerateWeights("a mode has zero predicted probability")
        mix = bank.transition * probs[:, None] / ahead
        inputs = [GaussianBelief(*_moment_match(means, covs, mix[:, j])) for j in range(m)]
    else:
        ahead = probs
        inputs = beliefs

    posts, logliks = [], np.empty(m)
    for j in range(m):
        post, ll = ukf_step(inputs[j], y, bank.modes[j], params, predict=predict)
        posts.append(post)
        logliks[j] = ll

    with np.errstate(divide="ignore"):
        new_probs = normalize_log_weights(np.log(ahead) + logliks)

    post_means = np.array([b.mean for b in posts])
    post_covs = np.array([b.cov for b in posts])
    fused = GaussianBelief(*_moment_match(post_means, post_covs, new_probs))

    omega, eta2, sr2, sb2 = bank.param_arrays()
    return ImmStepResult(
        belief=fused,
        mode_beliefs=posts,
        mode_probs=new_probs,
        omega_est=float(new_probs @ omega),
        eta2_est=float(new_probs @ eta2),
        sigma_r2_est=float(new_probs @ sr2),
        sigma_b2_est=float(new_probs @ sb2),
    )


def run_imm_iter(
    observations,
    bank: ModelBank,
    state_mean: np.ndarray,
    state_cov: np.ndarray,
    params: UtParams = UtParams(),
):
    """Yield one ImmStepResult per observation; the first is update-only."""
    beliefs = [GaussianBelief(np.asarray(state_mean, float), np.asarray(state_cov, float))] * bank.n_modes
    probs = np.full(bank.n_modes, 1.0 / bank.n_modes)
    for t, y in enumerate(observations):
        try:
            step = imm_step(beliefs, probs, y, bank, params, predict=(t > 0))
        except Exception as err:
            if hasattr(err, "step"):
                err.step = t
            raise
        beliefs, probs = step.mode_beliefs, step.mode_probs
        yield step


def run_imm(
    observations,
    bank: ModelBank,
    state_mean: np.ndarray,
    state_cov: np.ndarray,
    params: UtParams = UtParams(),
) -> list[ImmStepResult]:
    """Filter a whole observation record; see run_imm_iter."""
    return list(run_imm_iter(observations, bank, state_mean, state_cov, params))
