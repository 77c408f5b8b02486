"""Uniform time grids and the one-sided rectangle quadrature attached to them.

A grid fixes the interval [a, b], the step count N and the step size
h = (b - a)/N.  Every discretization in this package lives on the node set
tau[k] = a + k*h, k = 0..N.  Sums over node values use the one-sided
quadrature rule

    integral of f over [a, b]  ~  h * sum of f(tau[k]) for k in I_sigma,

where the index set I_sigma is {1..N} for the backward orientation
(sigma = -1) and {0..N-1} for the forward orientation (sigma = +1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "SigmaIndexSet",
    "as_sigma",
    "make_grid",
    "quadrature",
    "sigma_indices",
]


def as_sigma(sigma) -> int:
    """Normalize an orientation to the integer -1 or +1.

    Accepts the integers -1/+1 and the strings "-"/"+".
    """
    if isinstance(sigma, str):
        if sigma == "-":
            return -1
        if sigma == "+":
            return +1
        raise ValueError(f"sigma: expected '-' or '+', got {sigma!r}")
    s = int(sigma)
    if s not in (-1, 1):
        raise ValueError(f"sigma: expected -1 or +1, got {sigma!r}")
    return s


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [a, b] into N steps.

    Immutable after construction; safe for concurrent reads.  Node times
    satisfy tau[0] = a, tau[N] = b and tau[k+1] - tau[k] = h to rounding.
    """

    a: float
    b: float
    N: int
    h: float
    tau: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.N + 1

    @property
    def interior(self) -> range:
        """Node indices strictly between the endpoints."""
        return range(1, self.N)


@dataclass(frozen=True)
class SigmaIndexSet:
    """The N quadrature indices attached to an orientation."""

    sigma: int
    indices: range


def make_grid(a: float, b: float, N: int) -> Grid:
    """Build the uniform grid on [a, b] with N steps.

    Requires b > a and N >= 2 (so at least one interior node exists).
    Node times are computed as a + k*h rather than by cumulative addition,
    to avoid rounding drift.
    """
    a = float(a)
    b = float(b)
    if not b > a:
        raise ValueError(f"grid: empty interval, need b > a (got a={a}, b={b})")
    N = int(N)
    if N < 2:
        raise ValueError(f"grid: need N >= 2 so an interior node exists (got N={N})")
    h = (b - a) / N
    tau = a + h * np.arange(N + 1)
    tau.flags.writeable = False
    return Grid(a=a, b=b, N=N, h=h, tau=tau)


def sigma_indices(sigma, N: int) -> SigmaIndexSet:
    """Quadrature index set: {1..N} for sigma = -1, {0..N-1} for sigma = +1."""
    s = as_sigma(sigma)
    if s < 0:
        return SigmaIndexSet(sigma=s, indices=range(1, N + 1))
    return SigmaIndexSet(sigma=s, indices=range(0, N))


def quadrature(g: Grid, sigma, values) -> float | np.ndarray:
    """One-sided rectangle rule: h times the sum of the N given node values.

    `values` must hold exactly N entries aligned with I_sigma (scalars or
    d-vectors; vectors are summed componentwise).  Objects carrying a
    `start` node offset (operator outputs) are checked for alignment with
    I_sigma instead of being silently re-indexed.
    """
    s = as_sigma(sigma)
    idx = sigma_indices(s, g.N)
    start = getattr(values, "start", None)
    vals = np.asarray(getattr(values, "values", values), dtype=float)
    if vals.shape[0] != g.N:
        raise ValueError(
            f"quadrature: expected {g.N} values aligned with I_sigma, got {vals.shape[0]}"
        )
    if start is not None and start != idx.indices.start:
        raise ValueError(
            f"quadrature: values start at node {start}, but I_sigma starts at "
            f"{idx.indices.start}"
        )
    total = vals.sum(axis=0) * g.h
    if np.ndim(total) == 0:
        return float(total)
    return total
