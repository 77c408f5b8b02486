"""Solvers for the discrete Euler-Lagrange systems.

Three routes are provided and cross-checked against each other:

* `solve_bvp`: damped Newton iteration on the interior nodes of the
  variational residual, with both endpoints fixed (the variational
  derivation makes endpoints data, not unknowns; a fractional scheme
  couples every node to every other, so no initial-value form exists).

* `linear_oracle`: for quadratic Lagrangians the residual is affine in the
  trajectory, so the dense interior system can be assembled exactly by
  probing residuals at basis vectors and solved directly.  Serves as
  ground truth for `solve_bvp`.

* `step_classical`: for classical backward-oriented schemes the residual
  at node k couples only three consecutive nodes, so the trajectory can be
  marched from its first two values with a small per-step Newton solve.
  Fractional memory forbids this route.

Dense linear algebra throughout; the fractional Jacobian is dense anyway
and desk-scale N keeps banded specializations unnecessary.  A solve owns
its workspace, so distinct solves may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, make_grid, sigma_indices
from .lagrangian import LagrangianModel, harmonic_oscillator
from .operators import DiscreteTrajectory, as_trajectory
from .schemes import (
    EmbeddingScheme,
    discrete_velocity,
    variational_residual,
    velocity_matrix,
)

__all__ = [
    "ConvergenceStudy",
    "SingularMatrixError",
    "SolveConfig",
    "SolveResult",
    "StepConvergenceError",
    "harmonic_convergence_study",
    "linear_oracle",
    "solve_bvp",
    "step_classical",
]

JACOBIAN_MODES = ("analytic", "finite-difference")


class SingularMatrixError(RuntimeError):
    """A Newton Jacobian or an assembled linear system is singular."""


class StepConvergenceError(RuntimeError):
    """Per-step Newton failed; `index` names the node that could not be produced."""

    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class SolveConfig:
    """Newton controls: residual tolerance (max-norm), iteration budget,
    Jacobian mode, and the forward-difference step for probed Jacobians.

    "analytic" assembles the Jacobian from the model's second derivatives
    and silently falls back to finite differences when they are absent.
    """

    tol: float = 1e-10
    max_iters: int = 50
    jacobian_mode: str = "analytic"
    fd_eps: float = 1e-7

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError(f"tol: expected a positive tolerance, got {self.tol}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters: expected a positive count, got {self.max_iters}")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(
                f"jacobian_mode: expected one of {JACOBIAN_MODES}, got {self.jacobian_mode!r}"
            )
        if not self.fd_eps > 0.0:
            raise ValueError(f"fd_eps: expected a positive step, got {self.fd_eps}")


@dataclass(frozen=True)
class SolveResult:
    trajectory: DiscreteTrajectory
    residual_norm: float
    iterations: int
    converged: bool


def _endpoint(q, dim: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(q, dtype=float))
    if arr.shape != (dim,):
        raise ValueError(f"{name}: expected a point of dimension {dim}, got shape {arr.shape}")
    return arr


def _use_analytic(m: LagrangianModel, cfg: SolveConfig) -> bool:
    return cfg.jacobian_mode == "analytic" and m.has_second_derivatives


def _fd_jacobian(residual, x: np.ndarray, f0: np.ndarray, eps: float) -> np.ndarray:
    J = np.empty((f0.size, x.size))
    for c in range(x.size):
        xp = x.copy()
        xp[c] += eps
        J[:, c] = (residual(xp) - f0) / eps
    return J


def _analytic_jacobian(
    s: EmbeddingScheme, g: Grid, m: LagrangianModel, full: np.ndarray
) -> np.ndarray:
    """Exact Jacobian of the interior variational residual.

    With M the velocity-operator matrix and second derivatives evaluated
    along the current trajectory, the (j, i) block over interior nodes is

        d(jj) Lxx_j  -  sigma (M_ji Lxv_j + M_ij Lvx_i)  +  sum_k M_kj M_ki Lvv_k.
    """
    N, d = g.N, m.dim
    M = velocity_matrix(s, g)
    idx = sigma_indices(s.sigma, N).indices
    v = discrete_velocity(s, g, full)

    Lvv = np.empty((N, d, d))
    for i, k in enumerate(idx):
        Lvv[i] = m.d2L_dvdv(full[k], v.values[i], g.tau[k])
    n_int = N - 1
    Lxx = np.empty((n_int, d, d))
    Lxv = np.empty((n_int, d, d))
    for r, k in enumerate(range(1, N)):
        w = v.values[k - idx.start]
        Lxx[r] = m.d2L_dxdx(full[k], w, g.tau[k])
        Lxv[r] = m.d2L_dxdv(full[k], w, g.tau[k])

    W = M[:, 1:N]  # all sigma rows, interior columns
    rows_int = [k - idx.start for k in range(1, N)]
    Mint = M[rows_int][:, 1:N]

    J = np.einsum("kj,kab,ki->jaib", W, Lvv, W)
    J -= s.sigma * np.einsum("ji,jab->jaib", Mint, Lxv)
    J -= s.sigma * np.einsum("ij,iab->jaib", Mint, np.transpose(Lxv, (0, 2, 1)))
    for r in range(n_int):
        J[r, :, r, :] += Lxx[r]
    return J.reshape(n_int * d, n_int * d)


def solve_bvp(
    s: EmbeddingScheme,
    g: Grid,
    m: LagrangianModel,
    q0,
    qN,
    init: DiscreteTrajectory | None = None,
    config: SolveConfig | None = None,
) -> SolveResult:
    """Solve the variational residual system with Q_0 and Q_N fixed.

    Newton iteration on the d*(N-1) interior unknowns with plain damping:
    the step is halved up to 30 times whenever the residual max-norm fails
    to decrease.  Returns the best iterate seen; `converged` is False when
    the tolerance was not reached within `max_iters`.  A singular Jacobian
    raises SingularMatrixError instead.

    `init` defaults to linear interpolation between the endpoints and must
    carry exactly those endpoints when given.
    """
    cfg = config if config is not None else SolveConfig()
    d = m.dim
    a0 = _endpoint(q0, d, "q0")
    aN = _endpoint(qN, d, "qN")
    N = g.N

    if init is None:
        w = np.linspace(0.0, 1.0, N + 1)[:, None]
        full = (1.0 - w) * a0 + w * aN
    else:
        traj = as_trajectory(init)
        if traj.num_steps != N or traj.dim != d:
            raise ValueError("init: shape does not match the grid and model")
        if not (np.array_equal(traj.values[0], a0) and np.array_equal(traj.values[-1], aN)):
            raise ValueError("init: endpoints must equal q0 and qN")
        full = traj.values.copy()

    def residual(xflat: np.ndarray) -> np.ndarray:
        full[1:N] = xflat.reshape(N - 1, d)
        return variational_residual(s, g, m, full).values.reshape(-1)

    x = full[1:N].reshape(-1).copy()
    F = residual(x)
    norm = float(np.max(np.abs(F)))
    best_x, best_norm = x.copy(), norm
    iterations = 0
    analytic = _use_analytic(m, cfg)

    while norm > cfg.tol and iterations < cfg.max_iters:
        if analytic:
            full[1:N] = x.reshape(N - 1, d)
            J = _analytic_jacobian(s, g, m, full)
        else:
            J = _fd_jacobian(residual, x, F, cfg.fd_eps)
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"singular Jacobian at iteration {iterations}") from exc

        lam = 1.0
        cand, Fc, nc = x, F, norm
        for _ in range(31):
            cand = x + lam * delta
            Fc = residual(cand)
            nc = float(np.max(np.abs(Fc)))
            if nc < norm:
                break
            lam *= 0.5
        # accept even a stagnant step; the iteration cap bounds the damage
        x, F, norm = cand, Fc, nc
        iterations += 1
        if norm < best_norm:
            best_x, best_norm = x.copy(), norm

    full[1:N] = best_x.reshape(N - 1, d)
    full[0] = a0
    full[N] = aN
    return SolveResult(
        trajectory=DiscreteTrajectory(full),
        residual_norm=best_norm,
        iterations=iterations,
        converged=bool(best_norm <= cfg.tol),
    )


def linear_oracle(s: EmbeddingScheme, g: Grid, m: LagrangianModel, q0, qN) -> DiscreteTrajectory:
    """Exact interior solve for quadratic models, independent of Newton.

    The residual is affine in the trajectory, so probing it at interior
    basis vectors assembles the dense system exactly; the solution is then
    one dense linear solve.
    """
    if not m.quadratic:
        raise ValueError("linear_oracle requires a model with the quadratic flag set")
    d = m.dim
    a0 = _endpoint(q0, d, "q0")
    aN = _endpoint(qN, d, "qN")
    N = g.N
    n = (N - 1) * d

    full = np.zeros((N + 1, d))
    full[0] = a0
    full[N] = aN

    def residual(xflat: np.ndarray) -> np.ndarray:
        full[1:N] = xflat.reshape(N - 1, d)
        return variational_residual(s, g, m, full).values.reshape(-1)

    base = residual(np.zeros(n))
    A = np.empty((n, n))
    probe = np.zeros(n)
    for c in range(n):
        probe[c] = 1.0
        A[:, c] = residual(probe) - base
        probe[c] = 0.0
    try:
        x = np.linalg.solve(A, -base)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("assembled interior system is singular") from exc
    full[1:N] = x.reshape(N - 1, d)
    return DiscreteTrajectory(full)


def step_classical(
    g: Grid,
    m: LagrangianModel,
    q0,
    q1,
    config: SolveConfig | None = None,
) -> DiscreteTrajectory:
    """March the backward-oriented classical scheme from its first two nodes.

    The residual at node k couples Q_{k-1}, Q_k, Q_{k+1} only, so each new
    node solves one d-dimensional root problem (a single Newton step when
    the Lagrangian is quadratic).  Raises StepConvergenceError with the
    failing node index when a step does not converge.
    """
    cfg = config if config is not None else SolveConfig()
    if not m.has_gradients:
        raise ValueError("model must carry gradient evaluators (see finite_difference_gradients)")
    d = m.dim
    N = g.N
    h = g.h
    traj = np.empty((N + 1, d))
    traj[0] = _endpoint(q0, d, "q0")
    traj[1] = _endpoint(q1, d, "q1")
    analytic = _use_analytic(m, cfg)

    for k in range(1, N):
        xk = traj[k]
        vk = (traj[k] - traj[k - 1]) / h
        ax = m.eval_dLdx(xk, vk, g.tau[k])
        pk = m.eval_dLdv(xk, vk, g.tau[k])
        tn = g.tau[k + 1]

        def gfun(y: np.ndarray) -> np.ndarray:
            return ax + (pk - np.asarray(m.eval_dLdv(y, (y - xk) / h, tn))) / h

        y = 2.0 * xk - traj[k - 1]
        gy = gfun(y)
        iters = 0
        while float(np.max(np.abs(gy))) > cfg.tol and iters < cfg.max_iters:
            if analytic:
                w = (y - xk) / h
                Lxv = np.asarray(m.d2L_dxdv(y, w, tn))
                Lvv = np.asarray(m.d2L_dvdv(y, w, tn))
                Jy = -(Lxv.T + Lvv / h) / h
            else:
                Jy = _fd_jacobian(gfun, y, gy, cfg.fd_eps)
            try:
                y = y + np.linalg.solve(Jy, -gy)
            except np.linalg.LinAlgError as exc:
                raise SingularMatrixError(f"singular step Jacobian at node {k + 1}") from exc
            gy = gfun(y)
            iters += 1
        if float(np.max(np.abs(gy))) > cfg.tol:
            raise StepConvergenceError(
                index=k + 1,
                message=f"step Newton did not reach tol={cfg.tol} at node {k + 1}",
            )
        traj[k + 1] = y
    return DiscreteTrajectory(traj)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Max-node errors against the reference solution, one row per N."""

    rows: tuple[tuple[int, float, float], ...]  # (N, h, max_error)
    fitted_order: float


def harmonic_convergence_study(
    Ns=(8, 16, 32, 64),
    a: float = 0.0,
    b: float = 1.0,
    sigma: int = -1,
    config: SolveConfig | None = None,
) -> ConvergenceStudy:
    """Refinement study of the classical harmonic boundary-value solve.

    Solves the two-point problem with endpoints taken from cos(t) for each
    step count, records the max-node error against cos(t), and fits the
    order as the slope of log(error) against log(h).
    """
    Ns = tuple(int(n) for n in Ns)
    if len(Ns) < 2:
        raise ValueError("Ns: need at least two step counts to fit an order")
    model = harmonic_oscillator(1)
    scheme = EmbeddingScheme(sigma=sigma)
    rows = []
    for N in Ns:
        g = make_grid(a, b, N)
        exact = np.cos(g.tau)
        result = solve_bvp(scheme, g, model, [exact[0]], [exact[-1]], config=config)
        if not result.converged:
            raise StepConvergenceError(
                index=N, message=f"refinement solve did not converge at N={N}"
            )
        err = float(np.max(np.abs(result.trajectory.values[:, 0] - exact)))
        rows.append((N, g.h, err))
    hs = np.array([r[1] for r in rows])
    errs = np.array([r[2] for r in rows])
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return ConvergenceStudy(rows=tuple(rows), fitted_order=order)
