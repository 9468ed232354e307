"""Pathwise analysis of 2-D vorticity dynamics driven by fractional transport
noise: exact fBm sampling, spectral torus calculus, dyadic Young convolution
integrals, mild-solution solvers, and quadratic-variation Hurst estimation."""

from .grids import DyadicGrid
from .fbm import (
    FbmPath,
    HurstParam,
    fbm_covariance,
    fgn_autocovariance,
    generate_ensemble,
    generate_path,
    holder_constant,
    read_fbm1,
    write_fbm1,
)
from .spectral import (
    FourierField,
    SobolevIndex,
    advect,
    biot_savart,
    check_divergence_free,
    gradient,
    heat_semigroup,
    pair,
    read_fld1,
    sobolev_norm,
    transport,
    write_fld1,
)
from .young import (
    IntegrandTrace,
    YoungIntegralResult,
    convolution_regularity_report,
    dyadic_sum,
    one_step_remainder_rate,
    young_integral,
)
from .solver import (
    BlowupError,
    ModelConfig,
    ObservableSeries,
    OperatorSpec,
    SolverState,
    extract_observable,
    generic_operator_solve,
    picard_window,
    preset_vorticity,
    shear_flow,
    solve,
    weak_residual,
)
from .hurst import (
    EstimatorReport,
    QVLadder,
    estimate_from_solver,
    hurst_estimate,
    prop15_monte_carlo,
    quadratic_variation,
    scaled_qv_limit_check,
    scaled_quadratic_variation,
)

__version__ = "0.1.0"
