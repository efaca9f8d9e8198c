"""Time-optimal rigid-body attitude maneuvers, computed directly on the
rotation group: a structure-preserving variational integrator for the
dynamics, discrete necessary conditions for optimality, and an indirect
shooting solver for the resulting boundary value problem."""

from .dynamics import (
    BodyState,
    DiscreteTrajectory,
    InertiaModel,
    IntegrationError,
    NoConvergenceError,
    StepTooLargeError,
    continuous_rhs,
    kinetic_energy,
    lgvi_step,
    rk4_step,
    rollout,
    solve_step_equation,
    spatial_momentum,
)
from .optimality import (
    ExtremalTrajectory,
    Multipliers,
    SingularArcError,
    attitude_boundary_residual,
    continuous_multiplier_rhs,
    continuous_transversality_residual,
    control_law,
    forward_extremal,
    propagate_multipliers,
    transversality_residual,
    variation_transfer_matrix,
)
from .problem import ManeuverProblem, ParseError, ValidationError, load_problem, save_problem
from .shooting import (
    NotConvergedError,
    ShootingResidual,
    ShootingVariables,
    SolverReport,
    jacobian_fd,
    residual,
    solve,
)
from .so3 import (
    NearPiRotationError,
    NotSkewError,
    SingularMatrixError,
    exp_so3,
    hat,
    log_so3,
    rotation_angle,
    vee,
)

__version__ = "0.1.0"
