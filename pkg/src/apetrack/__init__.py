"""Particle and IMM filtering for maneuvering targets with abrupt dynamics changes.

The package tracks a coordinated-turn target from range-bearing
measurements while estimating unknown model parameters online: turn rate
through a shrinkage kernel with an explicit changepoint branch, noise
variances through conjugate sufficient statistics.  A benchmark harness
compares the adaptive filter against auxiliary/kernel/conjugate particle
filters and IMM banks of unscented Kalman filters.
"""

from .core import (
    ConfigError,
    DegenerateWeights,
    FilterError,
    NumericalBreakdown,
    ParamVector,
    ParticleCloud,
    SingularGeometry,
    StateVector,
    SuffStats,
    effective_sample_size,
    normalize_log_weights,
    weighted_param_mean,
    weighted_state_mean,
)
from .stochastics import RngStream, systematic_resample
from .tracking_models import (
    CoordinatedTurnModel,
    CtConfig,
    Observation,
    SensorPose,
    ct_apply,
    ct_matrix,
    wrap_angle,
)
from .smc_filters import (
    ApeConfig,
    FilterInit,
    FilterStepResult,
    ape_step,
    apf_step,
    lw_step,
    pl_step,
    run_filter,
    run_filter_iter,
    shrinkage_kernel,
)
from .imm import (
    GaussianBelief,
    ModelBank,
    UtParams,
    build_model_bank,
    imm_step,
    make_ct_mode,
    run_imm,
    ukf_step,
    unscented_transform,
)
from .scenario import (
    GroundTruth,
    ScenarioConfig,
    benchmark_scenario,
    load_scenario,
    save_scenario,
    simulate,
)
from .bench import (
    BenchResult,
    MetricSeries,
    RunSpec,
    beta_sweep,
    run_monte_carlo,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
