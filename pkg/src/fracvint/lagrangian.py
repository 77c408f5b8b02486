"""Lagrangian models L(x, v, t) and their derivative evaluators.

A model bundles the scalar Lagrangian with its first partials in x and v
and, optionally, the constant-free second partials used for exact Newton
assembly.  Evaluators must be pure and reentrant; models are shareable
across threads.  Smoothness of user-supplied evaluators is a caller
obligation and cannot be verified here.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "LagrangianModel",
    "BUILTIN_MODELS",
    "bilinear_test",
    "builtin_model",
    "finite_difference_gradients",
    "harmonic_oscillator",
]

Scalar = Callable[[np.ndarray, np.ndarray, float], float]
Vector = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
Matrix = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class LagrangianModel:
    """Evaluator bundle for a Lagrangian on R^d x R^d x [a, b].

    `eval_L` maps (x, v, t) to a scalar; `eval_dLdx` and `eval_dLdv`
    return (d,) gradients.  `d2L_dxdx`, `d2L_dxdv`, `d2L_dvdv` return
    (d, d) matrices with entry [i, j] differentiating component i of the
    first-index gradient by component j of the second index; they are
    optional, and solvers fall back to finite differences without them.
    `quadratic` declares that L is a quadratic form in (x, v), making
    every second derivative constant and the discrete equations affine.

    Time is threaded through all evaluators even for autonomous models.
    """

    dim: int
    eval_L: Scalar
    eval_dLdx: Vector | None = None
    eval_dLdv: Vector | None = None
    d2L_dxdx: Matrix | None = None
    d2L_dxdv: Matrix | None = None
    d2L_dvdv: Matrix | None = None
    quadratic: bool = False
    name: str = ""

    @property
    def has_gradients(self) -> bool:
        return self.eval_dLdx is not None and self.eval_dLdv is not None

    @property
    def has_second_derivatives(self) -> bool:
        return (
            self.d2L_dxdx is not None
            and self.d2L_dxdv is not None
            and self.d2L_dvdv is not None
        )


def harmonic_oscillator(dim: int = 1) -> LagrangianModel:
    """L(x, v, t) = (|v|^2 - |x|^2) / 2 in d dimensions."""
    if dim < 1:
        raise ValueError(f"dim: expected a positive dimension, got {dim}")
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return LagrangianModel(
        dim=dim,
        eval_L=lambda x, v, t: 0.5 * (float(v @ v) - float(x @ x)),
        eval_dLdx=lambda x, v, t: -np.asarray(x, dtype=float),
        eval_dLdv=lambda x, v, t: np.asarray(v, dtype=float),
        d2L_dxdx=lambda x, v, t: -eye,
        d2L_dxdv=lambda x, v, t: zero,
        d2L_dvdv=lambda x, v, t: eye,
        quadratic=True,
        name="harmonic",
    )


def bilinear_test(dim: int = 1) -> LagrangianModel:
    """L(x, v, t) = x . v, a degenerate quadratic form used in tests."""
    if dim < 1:
        raise ValueError(f"dim: expected a positive dimension, got {dim}")
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return LagrangianModel(
        dim=dim,
        eval_L=lambda x, v, t: float(np.dot(x, v)),
        eval_dLdx=lambda x, v, t: np.asarray(v, dtype=float),
        eval_dLdv=lambda x, v, t: np.asarray(x, dtype=float),
        d2L_dxdx=lambda x, v, t: zero,
        d2L_dxdv=lambda x, v, t: eye,
        d2L_dvdv=lambda x, v, t: zero,
        quadratic=True,
        name="bilinear-test",
    )


def finite_difference_gradients(model: LagrangianModel, eps: float = 1e-5) -> LagrangianModel:
    """Fill eval_dLdx / eval_dLdv with central differences of eval_L.

    The default step balances truncation against rounding at double
    precision.  Existing gradient evaluators are replaced.
    """
    eps = float(eps)
    if not eps > 0.0:
        raise ValueError(f"eps: expected a positive step, got {eps}")
    L = model.eval_L

    def dLdx(x, v, t):
        x = np.asarray(x, dtype=float)
        g = np.empty_like(x)
        for i in range(x.shape[0]):
            xp = x.copy()
            xm = x.copy()
            xp[i] += eps
            xm[i] -= eps
            g[i] = (L(xp, v, t) - L(xm, v, t)) / (2.0 * eps)
        return g

    def dLdv(x, v, t):
        v = np.asarray(v, dtype=float)
        g = np.empty_like(v)
        for i in range(v.shape[0]):
            vp = v.copy()
            vm = v.copy()
            vp[i] += eps
            vm[i] -= eps
            g[i] = (L(x, vp, t) - L(x, vm, t)) / (2.0 * eps)
        return g

    return replace(model, eval_dLdx=dLdx, eval_dLdv=dLdv)


BUILTIN_MODELS: dict[str, Callable[[int], LagrangianModel]] = {
    "harmonic": harmonic_oscillator,
    "bilinear-test": bilinear_test,
}


def builtin_model(name: str, dim: int = 1) -> LagrangianModel:
    """Look up a built-in model by name ("harmonic" or "bilinear-test")."""
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_MODELS))
        raise ValueError(f"model: unknown name {name!r} (known: {known})") from None
    return factory(dim)
