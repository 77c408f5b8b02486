"""Discrete actions, embedded residuals, and the coherence check between them.

Fixing an orientation sigma and a derivative order alpha turns a Lagrangian
system into a numerical scheme along two distinct routes:

* the **direct** route replaces each derivative in the written equation of
  motion by its discrete operator, term by term.  Its result depends on the
  written form: the `symmetric-classical` kind discretizes both derivative
  slots with the sigma-oriented operator; the `asymmetric-classical` and
  `fractional` kinds discretize the inner slot with the sigma-oriented
  operator and the outer slot with the opposite one.

* the **variational** route discretizes the action first,

      S(Q) = h * sum over I_sigma of L(Q_k, v_k, t_k),
      v
   = -sigma * (sigma-oriented operator applied to Q),

  and then differentiates S along interior variations (endpoints held
  fixed).  Transposing the velocity operator onto the momenta
  p_k = dL/dv(Q_k, v_k, t_k) yields, on the interior nodes 1..N-1,

      dL/dx_k  -  sigma * (opposite-oriented operator applied to p)_k.

An embedding is *coherent* when the two routes produce the same scheme.
The asymmetric-classical and fractional kinds are coherent; the
symmetric-classical kind is not, and `coherence_report` quantifies the gap
on random trajectories.  `variational_residual` is assembled in closed form
through the operator transpose (the discrete summation by parts), never by
numerical differentiation; `action_gradient_fd` provides the independent
finite-difference route for cross-checking.

All operations here are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, as_sigma, sigma_indices
from .lagrangian import LagrangianModel
from .operators import (
    GLCoefficients,
    IndexedValues,
    as_trajectory,
    backward_diff,
    forward_diff,
    gl_coefficients,
    gl_left,
    gl_right,
)

__all__ = [
    "KIND_ASYMMETRIC_CLASSICAL",
    "KIND_FRACTIONAL",
    "KIND_SYMMETRIC_CLASSICAL",
    "SCHEME_KINDS",
    "CoherenceReport",
    "EmbeddingScheme",
    "InteriorResidual",
    "action_gradient_fd",
    "coherence_report",
    "direct_residual",
    "discrete_action",
    "discrete_velocity",
    "embed_friction_residual",
    "variational_residual",
    "velocity_matrix",
]

KIND_SYMMETRIC_CLASSICAL = "symmetric-classical"
KIND_ASYMMETRIC_CLASSICAL = "asymmetric-classical"
KIND_FRACTIONAL = "fractional"
SCHEME_KINDS = (
    KIND_SYMMETRIC_CLASSICAL,
    KIND_ASYMMETRIC_CLASSICAL,
    KIND_FRACTIONAL,
)

# Residuals are index-carrying blocks like every other operator output.
InteriorResidual = IndexedValues


@dataclass(frozen=True)
class EmbeddingScheme:
    """Discretization choice: orientation, derivative order, and kind.

    Classical kinds require alpha = 1; the fractional kind admits any
    alpha in (0, 1] and reproduces the asymmetric-classical scheme at
    alpha = 1.
    """

    sigma: int
    alpha: float = 1.0
    kind: str = KIND_ASYMMETRIC_CLASSICAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", as_sigma(self.sigma))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.kind not in SCHEME_KINDS:
            known = ", ".join(SCHEME_KINDS)
            raise ValueError(f"kind: unknown scheme kind {self.kind!r} (known: {known})")
        if self.kind == KIND_FRACTIONAL:
            if not 0.0 < self.alpha <= 1.0:
                raise ValueError(f"alpha: expected a value in (0, 1], got {self.alpha}")
        elif self.alpha != 1.0:
            raise ValueError(f"alpha: classical kinds require alpha = 1, got {self.alpha}")

    @property
    def is_fractional(self) -> bool:
        return self.kind == KIND_FRACTIONAL


def _check_shapes(g: Grid, m: LagrangianModel, Q) -> np.ndarray:
    traj = as_trajectory(Q)
    if traj.num_steps != g.N:
        raise ValueError(
            f"trajectory has {traj.num_steps} steps but the grid has {g.N}"
        )
    if traj.dim != m.dim:
        raise ValueError(f"trajectory dimension {traj.dim} != model dimension {m.dim}")
    return traj.values


def _table(s: EmbeddingScheme, g: Grid) -> GLCoefficients:
    return gl_coefficients(s.alpha, g.N)


def _oriented_op(s: EmbeddingScheme, g: Grid, block, sigma: int) -> IndexedValues:
    """Apply the sigma-oriented discrete derivative operator to a block."""
    if s.is_fractional:
        c = _table(s, g)
        return gl_left(block, g.h, c) if sigma < 0 else gl_right(block, g.h, c)
    return backward_diff(block, g.h) if sigma < 0 else forward_diff(block, g.h)


def discrete_velocity(s: EmbeddingScheme, g: Grid, Q) -> IndexedValues:
    """The discrete d/dt analogue -sigma * (sigma-oriented operator) of Q.

    Aligned with I_sigma: nodes 1..N for sigma = -1, 0..N-1 for sigma = +1.
    """
    traj = as_trajectory(Q)
    if traj.num_steps != g.N:
        raise ValueError(f"trajectory has {traj.num_steps} steps but the grid has {g.N}")
    op = _oriented_op(s, g, traj, s.sigma)
    return IndexedValues(-s.sigma * op.values, op.start)


def velocity_matrix(s: EmbeddingScheme, g: Grid) -> np.ndarray:
    """Dense matrix of the sigma-oriented operator on trajectories.

    Shape (N, N+1); row i holds the stencil of output node
    I_sigma[i], so the discrete velocity is -sigma * (M @ Q).  This is the
    linear map whose transpose drives the variational assembly; it is
    built from the stencil definition, independently of the operator
    routines.
    """
    N, h = g.N, g.h
    M = np.zeros((N, N + 1))
    if s.is_fractional:
        w = _table(s, g).coeffs / h**s.alpha
        if s.sigma < 0:
            for i, k in enumerate(range(1, N + 1)):  # rows at nodes 1..N
                M[i, : k + 1] = w[: k + 1][::-1]
        else:
            for i, k in enumerate(range(0, N)):  # rows at nodes 0..N-1
                M[i, k:] = w[: N - k + 1]
    else:
        if s.sigma < 0:
            for i, k in enumerate(range(1, N + 1)):
                M[i, k] = 1.0 / h
                M[i, k - 1] = -1.0 / h
        else:
            for i, k in enumerate(range(0, N)):
                M[i, k] = 1.0 / h
                M[i, k + 1] = -1.0 / h
    return M


def _node_data(
    s: EmbeddingScheme, g: Grid, m: LagrangianModel, Q
) -> tuple[IndexedValues, IndexedValues, IndexedValues]:
    """Velocities, position gradients, and momenta on I_sigma.

    Both residual routes consume these same values; they differ only in
    the outer operator algebra applied to the momenta.
    """
    if not m.has_gradients:
        raise ValueError("model must carry gradient evaluators (see finite_difference_gradients)")
    vals = _check_shapes(g, m, Q)
    v = discrete_velocity(s, g, vals)
    idx = sigma_indices(s.sigma, g.N).indices
    dLdx = np.empty_like(v.values)
    p = np.empty_like(v.values)
    for i, k in enumerate(idx):
        x, w, t = vals[k], v.values[i], g.tau[k]
        dLdx[i] = m.eval_dLdx(x, w, t)
        p[i] = m.eval_dLdv(x, w, t)
    return v, IndexedValues(dLdx, idx.start), IndexedValues(p, idx.start)


def discrete_action(s: EmbeddingScheme, g: Grid, m: LagrangianModel, Q) -> float:
    """The discretized action h * sum over I_sigma of L(Q_k, v_k, t_k)."""
    vals = _check_shapes(g, m, Q)
    v = discrete_velocity(s, g, vals)
    total = 0.0
    for i, k in enumerate(sigma_indices(s.sigma, g.N).indices):
        total += m.eval_L(vals[k], v.values[i], g.tau[k])
    return g.h * total


def direct_residual(s: EmbeddingScheme, g: Grid, m: LagrangianModel, Q) -> IndexedValues:
    """Residual of the term-by-term embedded equation of motion.

    With momenta p_k = dL/dv(Q_k, v_k, t_k) on I_sigma:

    * symmetric-classical: dL/dx_k + sigma * (sigma-oriented op of p)_k,
      on nodes 2..N for sigma = -1 and 0..N-2 for sigma = +1 (the largest
      range where the same-orientation composition stays on the grid);
    * asymmetric-classical / fractional: dL/dx_k - sigma * (opposite-
      oriented op of p)_k on the interior nodes 1..N-1.
    """
    _, dLdx, p = _node_data(s, g, m, Q)
    if s.kind == KIND_SYMMETRIC_CLASSICAL:
        op = _oriented_op(s, g, p, s.sigma)
        values = dLdx.restrict(op.index_range).values + s.sigma * op.values
    else:
        op = _oriented_op(s, g, p, -s.sigma)
        values = dLdx.restrict(op.index_range).values - s.sigma * op.values
    return IndexedValues(values, op.start)


def variational_residual(s: EmbeddingScheme, g: Grid, m: LagrangianModel, Q) -> IndexedValues:
    """Residual of the variational integrator on the interior nodes 1..N-1.

    Assembled in closed form by transposing the velocity operator onto the
    momenta (discrete summation by parts): entry k is

        dL/dx_k - sigma * (M^T p)_k

    with M the sigma-oriented operator matrix.  Together with
    `action_gradient_fd` this gives two independent routes to the interior
    action gradient, which equals h times this residual.
    """
    _, dLdx, p = _node_data(s, g, m, Q)
    M = velocity_matrix(s, g)
    transported = M.T @ p.values  # (N+1, d), indexed by node
    interior = range(1, g.N)
    values = dLdx.restrict(interior).values - s.sigma * transported[1 : g.N]
    return IndexedValues(values, 1)


def action_gradient_fd(
    s: EmbeddingScheme, g: Grid, m: LagrangianModel, Q, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of the action in the interior components.

    Endpoints stay fixed (the discrete-variation constraint), so the
    result is an (N-1, d) array aligned with nodes 1..N-1.  Kept free of
    the transpose assembly on purpose: it is the independent oracle for
    `variational_residual`.
    """
    eps = float(eps)
    if not eps > 0.0:
        raise ValueError(f"eps: expected a positive step, got {eps}")
    base = _check_shapes(g, m, Q).copy()
    grad = np.empty((g.N - 1, base.shape[1]))
    for i, k in enumerate(range(1, g.N)):
        for c in range(base.shape[1]):
            saved = base[k, c]
            base[k, c] = saved + eps
            above = discrete_action(s, g, m, base)
            base[k, c] = saved - eps
            below = discrete_action(s, g, m, base)
            base[k, c] = saved
            grad[i, c] = (above - below) / (2.0 * eps)
    return grad


@dataclass(frozen=True)
class CoherenceReport:
    """Outcome of comparing the direct and variational residuals."""

    max_abs_discrepancy: float
    compared_indices: range
    gradient_check_error: float
    samples: int


def coherence_report(
    s: EmbeddingScheme,
    g: Grid,
    m: LagrangianModel,
    samples: int,
    rng_seed: int,
    gradient_samples: int = 1,
) -> CoherenceReport:
    """Compare the two residual routes on seeded random trajectories.

    Draws `samples` trajectories with components uniform in [-1, 1],
    evaluates both residuals, and reports the maximum componentwise
    absolute discrepancy on the intersection of their index ranges.  The
    first `gradient_samples` trajectories additionally cross-check the
    variational residual against action_gradient_fd / h; that check is
    O(N^2 * d) per trajectory, hence the separate, small count.

    Sampling is evaluation-order independent, so results depend only on
    the seed.
    """
    samples = int(samples)
    if samples < 1:
        raise ValueError(f"samples: expected a positive count, got {samples}")
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    worst_grad = float("nan") if gradient_samples <= 0 else 0.0
    compared: range | None = None
    for i in range(samples):
        Q = rng.uniform(-1.0, 1.0, size=(g.N + 1, m.dim))
        direct = direct_residual(s, g, m, Q)
        var = variational_residual(s, g, m, Q)
        lo = max(direct.start, var.start)
        hi = min(direct.stop, var.stop)
        if lo >= hi:
            raise ValueError(
                f"no comparable indices: direct range {direct.index_range} and "
                f"variational range {var.index_range} are disjoint (N too small)"
            )
        compared = range(lo, hi)
        gap = direct.restrict(compared).values - var.restrict(compared).values
        worst = max(worst, float(np.max(np.abs(gap))))
        if i < gradient_samples:
            grad = action_gradient_fd(s, g, m, Q)
            target = g.h * var.values
            err = float(np.max(np.abs(grad - target))) / (1.0 + float(np.max(np.abs(target))))
            worst_grad = max(worst_grad, err)
    assert compared is not None
    return CoherenceReport(
        max_abs_discrepancy=worst,
        compared_indices=compared,
        gradient_check_error=worst_grad,
        samples=samples,
    )


def embed_friction_residual(g: Grid, Q) -> IndexedValues:
    """Directly embedded damped-oscillator equation q'' + q' + q = 0.

    With the backward orientation both derivative slots discretize
    one-sidedly, giving on nodes k = 2..N

        (Q_k - 2 Q_{k-1} + Q_{k-2}) / h^2 + (Q_k - Q_{k-1}) / h + Q_k.
    """
    traj = as_trajectory(Q)
    if traj.num_steps != g.N:
        raise ValueError(f"trajectory has {traj.num_steps} steps but the grid has {g.N}")
    x = traj.values
    h = g.h
    values = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / h**2 + (x[2:] - x[1:-1]) / h + x[2:]
    return IndexedValues(values, 2)
