"""The regularized operator B = A - rho * ones(n, n) and the power method on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sbm import SbmGraph


class PowerMethodBreakdown(ArithmeticError):
    """B mapped the current iterate to the zero vector."""


def compute_rho(graph: SbmGraph) -> float:
    """Mean entry of A, i.e. 1'A1 / n**2, from the exact integer count."""
    return graph.nnz() / graph.n**2


@dataclass(frozen=True, eq=False)
class RegularizedOperator:
    """Implicit B = A - rho E_n; only the sparse A and the scalar rho are held."""

    graph: SbmGraph
    rho: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rho", compute_rho(self.graph))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.graph.n, self.graph.n)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return matvec(self, v)

    def __matmul__(self, v):
        return matvec(self, v)

    def to_dense(self) -> np.ndarray:
        """Dense B; for small-n oracles only."""
        return self.graph.to_dense() - self.rho


def matvec(op: RegularizedOperator, v: np.ndarray) -> np.ndarray:
    """B v = A v - rho (1'v) 1 in O(nnz + n).

    ``v`` may also be an (n, k) block of columns.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != op.n:
        raise ValueError(f"vector has length {v.shape[0]}, operator has size {op.n}")
    out = op.graph.csr @ v
    out -= op.rho * v.sum(axis=0)
    return out


def sample_unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^n (normalised Gaussian)."""
    if n < 1:
        raise ValueError("n must be positive")
    while True:
        b = rng.standard_normal(n)
        norm = np.linalg.norm(b)
        if norm > 0:
            return b / norm


@dataclass
class PmReport:
    iterations_run: int
    final_vector: np.ndarray
    rayleigh_quotient: float
    residual: float


def _sign_residual(y, y_prev):
    return min(np.linalg.norm(y - y_prev), np.linalg.norm(y + y_prev))


def power_method(op, y0: np.ndarray, max_iters: int, residual_tol: float = 1e-8,
                 callback: Callable[[int, float, float], None] | None = None) -> PmReport:
    """Iterate y <- B y / ||B y|| from ``y0``.

    Stops after ``max_iters`` steps or once min over s of ||y_k - s y_{k-1}||
    drops to ``residual_tol``.  ``op`` is anything supporting ``op @ v``.
    ``callback(k, rayleigh, residual)`` sees each step, where ``rayleigh`` is
    y_{k-1}' B y_{k-1} (available for free from the product just formed).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if residual_tol < 0:
        raise ValueError("residual_tol must be nonnegative")
    y = np.asarray(y0, dtype=np.float64)
    y = y / np.linalg.norm(y)
    residual = math.inf
    k = 0
    while k < max_iters:
        By = op @ y
        norm = np.linalg.norm(By)
        if not norm > 0:
            raise PowerMethodBreakdown(
                f"B annihilated the iterate at step {k + 1}; re-initialise from a fresh random start")
        k += 1
        y_next = By / norm
        residual = _sign_residual(y_next, y)
        if callback is not None:
            callback(k, float(y @ By), float(residual))
        y = y_next
        if residual <= residual_tol:
            break
    rayleigh = float(y @ (op @ y))
    return PmReport(k, y, rayleigh, float(residual))


# non-constructive constant from the spectral-norm concentration bound,
# fixed to its smallest admissible value
C1_SURROGATE = 1.0
PM_ITERS_MIN = 10
PM_ITERS_MAX = 200


def pm_iteration_formula(n: int, alpha: float, beta: float, c1: float = C1_SURROGATE) -> float:
    """Unclamped, un-rounded Stage-1 iteration count from the linear-rate bound.

    Returns ``inf`` when the rate bound does not contract, i.e. when
    (alpha - beta) sqrt(ln n) <= 6 c1.
    """
    gap = alpha - beta
    sq = math.sqrt(math.log(n))
    num = math.log(gap * n * sq) - math.log(3 * math.sqrt(2) * c1)
    den = math.log(gap * sq) - math.log(6 * c1)
    if den <= 0:
        return math.inf
    return num / den


def default_pm_iters(n: int, alpha: float, beta: float) -> int:
    """Default Stage-1 budget: the rate-bound count with c1 = 1, clamped to [10, 200]."""
    if n < 8:
        raise ValueError("default_pm_iters needs n >= 8")
    if not alpha > beta:
        raise ValueError(f"default_pm_iters needs alpha > beta, got alpha={alpha}, beta={beta}")
    raw = pm_iteration_formula(n, alpha, beta)
    if math.isinf(raw):
        return PM_ITERS_MAX
    return int(min(max(math.ceil(raw), PM_ITERS_MIN), PM_ITERS_MAX))
