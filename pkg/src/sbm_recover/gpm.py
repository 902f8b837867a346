"""Stage 2: sign-projected power iterations, and the full two-stage recovery."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .sbm import SbmGraph
from .spectral import (PM_ITERS_MAX, RegularizedOperator, default_pm_iters, matvec,
                       power_method, sample_unit_sphere)

GPM_MAX_ITERS = 100
PM_RESIDUAL_TOL = 1e-8


def sign_map(v: np.ndarray) -> np.ndarray:
    """Entrywise +1 where v_i >= 0 and -1 elsewhere; zero maps to +1."""
    v = np.asarray(v)
    if np.issubdtype(v.dtype, np.floating) and np.isnan(v).any():
        raise ValueError("sign_map received NaN entries")
    return np.where(v >= 0, 1, -1).astype(np.int8)


def _is_label_vector(x):
    return np.issubdtype(x.dtype, np.integer) or bool(np.all(np.abs(x) == 1))


def gpm_step(op: RegularizedOperator, x: np.ndarray) -> np.ndarray:
    """sign(B x).

    For a ±1 input, B x is evaluated exactly as n^2 (A x) - nnz (1'x) in
    integers, so entries that are truly zero take +1 instead of a rounding
    sign.
    """
    x = np.asarray(x)
    if x.shape[0] != op.n:
        raise ValueError(f"vector has length {x.shape[0]}, operator has size {op.n}")
    if not _is_label_vector(x):
        return sign_map(matvec(op, x))
    xi = x.astype(np.int64)
    Ax = np.rint(op.graph.csr @ xi.astype(np.float64)).astype(np.int64)
    n = op.n
    return sign_map(Ax * (n * n) - op.graph.nnz() * int(xi.sum()))


class GpmOutcome(NamedTuple):
    labels: np.ndarray
    iterations: int
    converged: bool
    cycled: bool


def gpm_run(op: RegularizedOperator, x0: np.ndarray, max_iters: int = GPM_MAX_ITERS,
            callback: Callable[[int, np.ndarray], None] | None = None) -> GpmOutcome:
    """Iterate x_k = sign(B x_{k-1}) until a fixed point, a 2-cycle or ``max_iters``.

    ``x0`` must have norm sqrt(n).  Hitting the cap is a normal return with
    ``converged=False``.  ``callback(k, x_k)`` is called for every iterate,
    starting with k = 0 and the real start vector.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    x0 = np.asarray(x0, dtype=np.float64)
    n = op.n
    if not math.isclose(np.linalg.norm(x0), math.sqrt(n), rel_tol=1e-9):
        raise ValueError("x0 must have Euclidean norm sqrt(n)")
    if callback is not None:
        callback(0, x0)
    prev2 = None
    prev = x0
    x = prev
    for k in range(1, max_iters + 1):
        x = gpm_step(op, prev)
        if callback is not None:
            callback(k, x)
        if np.array_equal(x, prev):
            return GpmOutcome(x, k, True, False)
        if prev2 is not None and np.array_equal(x, prev2):
            return GpmOutcome(x, k, False, True)
        prev2, prev = prev, x
    return GpmOutcome(x, max_iters, False, False)


@dataclass
class RecoveryResult:
    labels: np.ndarray
    pm_iterations: int
    gpm_iterations: int
    converged: bool
    wall_time_ns: int
    cycled: bool = False
    rayleigh_quotient: float = math.nan


def stage_one_budget(graph: SbmGraph) -> int:
    """Default N: the rate-bound count when the graph knows alpha > beta, else the cap."""
    a, b = graph.alpha, graph.beta
    if a is None or b is None or not a > b or graph.n < 8:
        return PM_ITERS_MAX
    return default_pm_iters(graph.n, a, b)


def two_stage_recover(graph: SbmGraph, pm_iters: int | None = None, seed: int = 0,
                      gpm_max_iters: int = GPM_MAX_ITERS,
                      pm_residual_tol: float = PM_RESIDUAL_TOL,
                      gpm_callback=None, pm_callback=None) -> RecoveryResult:
    """Power method from a random sphere point, then GPM from sqrt(n) y_N."""
    t0 = time.perf_counter_ns()
    op = RegularizedOperator(graph)
    n = graph.n
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    y0 = sample_unit_sphere(n, rng)
    budget = stage_one_budget(graph) if pm_iters is None else pm_iters
    pm = power_method(op, y0, budget, pm_residual_tol, callback=pm_callback)
    y = pm.final_vector
    x0 = math.sqrt(n) * y / np.linalg.norm(y)
    out = gpm_run(op, x0, gpm_max_iters, callback=gpm_callback)
    elapsed = time.perf_counter_ns() - t0
    return RecoveryResult(out.labels, pm.iterations_run, out.iterations, out.converged,
                          max(elapsed, 1), out.cycled, pm.rayleigh_quotient)
