"""Numerical solver for nonlocal Kirchhoff equations on R^3 (radial).

Computes positive ground states and sign-changing solutions of

    -(a + b*int |grad u|^2) Lap(u) + V(|x|) u = f(u)

by a damped descending flow through an auxiliary linear solve, with
invariant sign cones, a two-parameter perturbation continuation, and
independent shooting / dilation oracles for verification.
"""

from .errors import (
    CalibrationError,
    ConfigError,
    ContinuationError,
    DegenerateDeformationError,
    DimensionError,
    KirchhoffFlowError,
    NumericalError,
    OracleFailure,
    StepFailure,
    ThresholdError,
    UnsupportedPotentialError,
)
from .radial import (
    Field,
    RadialGrid,
    build_grid,
    count_sign_changes,
    grad_norm_sq,
    integrate,
    lp_norm_pow,
    lumped_integral,
    read_field_csv,
    split_signs,
    write_field_csv,
)
from .model import (
    ConstantPotential,
    EnergyReport,
    ModelParams,
    PerturbationParams,
    PowerNonlinearity,
    PowerSumNonlinearity,
    RationalPotential,
    TabulatedPotential,
    decomposition_gap,
    e_norm,
    energy,
    energy_perturbed,
    energy_report,
    pohozaev_residual,
    strong_residual,
    validate_model,
)
from .flow import (
    FlowConfig,
    FlowResult,
    auxiliary_solve,
    calibrate_eps_cone,
    check_cone_invariance,
    cone_distance,
    descend,
    flow_step,
    random_smooth_field,
)

__version__ = "0.1.0"
