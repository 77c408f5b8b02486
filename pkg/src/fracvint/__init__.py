"""Discrete embeddings and variational integrators for classical and
fractional Lagrangian systems on uniform grids.

The package builds one-sided and Grunwald-Letnikov difference operators,
assembles the directly embedded and the variationally derived discrete
Euler-Lagrange schemes, checks coherence between the two routes, and
solves the resulting two-point boundary-value systems.
"""

from .grid import Grid, SigmaIndexSet, as_sigma, make_grid, quadrature, sigma_indices
from .lagrangian import (
    BUILTIN_MODELS,
    LagrangianModel,
    bilinear_test,
    builtin_model,
    finite_difference_gradients,
    harmonic_oscillator,
)
from .operators import (
    DiscreteTrajectory,
    GLCoefficients,
    IndexedValues,
    as_trajectory,
    backward_diff,
    forward_diff,
    gl_coefficients,
    gl_left,
    gl_right,
)
from .schemes import (
    KIND_ASYMMETRIC_CLASSICAL,
    KIND_FRACTIONAL,
    KIND_SYMMETRIC_CLASSICAL,
    SCHEME_KINDS,
    CoherenceReport,
    EmbeddingScheme,
    InteriorResidual,
    action_gradient_fd,
    coherence_report,
    direct_residual,
    discrete_action,
    discrete_velocity,
    embed_friction_residual,
    variational_residual,
    velocity_matrix,
)
from .solver import (
    ConvergenceStudy,
    SingularMatrixError,
    SolveConfig,
    SolveResult,
    StepConvergenceError,
    harmonic_convergence_study,
    linear_oracle,
    solve_bvp,
    step_classical,
)

__version__ = "0.1.0"
