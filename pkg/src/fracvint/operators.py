"""Discrete derivative operators on sampled trajectories.

Two families act on a trajectory Q = (Q_0, ..., Q_N) of points in R^d:

* classical one-sided differences

      backward:  (Q_k - Q_{k-1}) / h   for k = 1..N
      forward:   (Q_k - Q_{k+1}) / h   for k = 0..N-1

  The forward operator is the negative of the usual forward difference;
  with orientation sigma, the discrete analogue of d/dt is -sigma times
  the sigma-oriented operator.

* Grunwald-Letnikov operators of order alpha in (0, 1]

      left:   h^(-alpha) * sum_{r=0..k}   c_r Q_{k-r}   for k = 1..N
      right:  h^(-alpha) * sum_{r=0..N-k} c_r Q_{k+r}   for k = 0..N-1

  with weights c_0 = 1, c_r = c_{r-1} * (r - 1 - alpha) / r.  At alpha = 1
  every weight beyond c_1 = -1 vanishes and the operators reduce to the
  classical differences (admitted here exactly for that reduction).

Outputs carry the node index of their first entry, so composing operators
on mismatched ranges is a detectable error rather than a silent shift.
All operations are pure; coefficient tables and operator outputs are
immutable and shareable across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteTrajectory",
    "GLCoefficients",
    "IndexedValues",
    "as_trajectory",
    "backward_diff",
    "forward_diff",
    "gl_coefficients",
    "gl_left",
    "gl_right",
]


def _as_points(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a sequence of points, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Node values Q_0..Q_N of a curve in R^d, stored as an (N+1, d) array."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_points(self.values).copy()
        if arr.shape[0] < 2:
            raise ValueError("trajectory needs at least two nodes")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def num_steps(self) -> int:
        """N, one less than the number of nodes."""
        return self.values.shape[0] - 1


def as_trajectory(Q) -> DiscreteTrajectory:
    """Coerce an array of node values (1-d for d=1) to a DiscreteTrajectory."""
    if isinstance(Q, DiscreteTrajectory):
        return Q
    return DiscreteTrajectory(np.asarray(Q, dtype=float))


@dataclass(frozen=True)
class IndexedValues:
    """A block of points aligned with grid nodes: values[i] sits at node start + i."""

    values: np.ndarray
    start: int

    def __post_init__(self) -> None:
        arr = _as_points(self.values).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def stop(self) -> int:
        return self.start + len(self)

    @property
    def index_range(self) -> range:
        return range(self.start, self.stop)

    def node(self, k: int) -> np.ndarray:
        """Value at grid node k; raises if k lies outside the carried range."""
        if not self.start <= k < self.stop:
            raise IndexError(f"node {k} outside carried range {self.index_range}")
        return self.values[k - self.start]

    def restrict(self, indices: range) -> "IndexedValues":
        """Sub-block on `indices`, which must lie inside the carried range."""
        if indices.start < self.start or indices.stop > self.stop:
            raise IndexError(f"range {indices} not contained in {self.index_range}")
        lo = indices.start - self.start
        return IndexedValues(self.values[lo : lo + len(indices)], indices.start)


def _as_block(Q) -> tuple[np.ndarray, int]:
    """Values plus starting node index for a trajectory, block, or raw array."""
    if isinstance(Q, DiscreteTrajectory):
        return Q.values, 0
    if isinstance(Q, IndexedValues):
        return Q.values, Q.start
    return _as_points(Q), 0


def _check_step(h: float) -> float:
    h = float(h)
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got h={h}")
    return h


@dataclass(frozen=True)
class GLCoefficients:
    """Grunwald-Letnikov weights c_0..c_n for a fixed order alpha.

    c_0 = 1 and c_r = c_{r-1} * (r - 1 - alpha) / r.  For alpha in (0, 1)
    every weight past c_0 is negative and |c_r| decreases in r.
    """

    alpha: float
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=float).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return self.coeffs.shape[0]


def gl_coefficients(alpha: float, n: int) -> GLCoefficients:
    """Tabulate the weights c_0..c_n by the multiplicative recurrence.

    Requires 0 < alpha <= 1.  The recurrence is used instead of the
    factorial form for stability and O(n) cost; tabulate once per
    (alpha, N) and reuse, since each operator application consumes the
    whole table.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha: expected a value in (0, 1], got {alpha}")
    n = int(n)
    if n < 0:
        raise ValueError(f"n: expected a nonnegative table size, got {n}")
    c = np.empty(n + 1)
    c[0] = 1.0
    for r in range(1, n + 1):
        c[r] = c[r - 1] * (r - 1 - alpha) / r
    return GLCoefficients(alpha=alpha, coeffs=c)


def backward_diff(Q, h: float) -> IndexedValues:
    """Differences (x_k - x_{k-1})/h on the input range shifted up by one.

    On a full trajectory this lives on nodes 1..N.
    """
    h = _check_step(h)
    x, start = _as_block(Q)
    return IndexedValues((x[1:] - x[:-1]) / h, start + 1)


def forward_diff(Q, h: float) -> IndexedValues:
    """Differences (x_k - x_{k+1})/h, dropping the last input node.

    On a full trajectory this lives on nodes 0..N-1.  Note the sign: this
    is the negative of the usual forward difference.
    """
    h = _check_step(h)
    x, start = _as_block(Q)
    return IndexedValues((x[:-1] - x[1:]) / h, start)


def _check_table(c: GLCoefficients, needed: int) -> np.ndarray:
    if len(c) < needed:
        raise ValueError(
            f"coefficient table too short: need at least {needed} entries, have {len(c)}"
        )
    return c.coeffs


def gl_left(Q, h: float, c: GLCoefficients) -> IndexedValues:
    """Left Grunwald-Letnikov sums h^(-alpha) * sum_{r=0..k-s} c_r x_{k-r}.

    Entry k weights the history back to the start of the input block; the
    output drops the first input node (nodes 1..N on a full trajectory).
    The table must cover the block length.
    """
    h = _check_step(h)
    x, start = _as_block(Q)
    m = x.shape[0]
    w = _check_table(c, m)
    scale = h**c.alpha
    out = np.empty((m - 1, x.shape[1]))
    for j in range(1, m):
        out[j - 1] = w[: j + 1][::-1] @ x[: j + 1]
    out /= scale
    return IndexedValues(out, start + 1)


def gl_right(Q, h: float, c: GLCoefficients) -> IndexedValues:
    """Right Grunwald-Letnikov sums h^(-alpha) * sum_{r=0..e-k} c_r x_{k+r}.

    Entry k weights the future up to the end e of the input block; the
    output drops the last input node (nodes 0..N-1 on a full trajectory).
    """
    h = _check_step(h)
    x, start = _as_block(Q)
    m = x.shape[0]
    w = _check_table(c, m)
    scale = h**c.alpha
    out = np.empty((m - 1, x.shape[1]))
    for j in range(m - 1):
        out[j] = w[: m - j] @ x[j:]
    out /= scale
    return IndexedValues(out, start)
