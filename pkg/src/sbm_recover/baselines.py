"""Comparison methods: eigenvector sign rounding (SC) and manifold gradient
descent (MGD) on the rank-2 Burer-Monteiro relaxation max <Q, BQ>, rows of Q
on the unit circle."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gpm import sign_map
from .metrics import _truth_array
from .sbm import SbmGraph
from .spectral import PowerMethodBreakdown, RegularizedOperator, matvec, power_method, sample_unit_sphere

SC_MAX_ITERS = 5000


def _rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


class _DeflatedAdjacency:
    """A - lam u u', for pulling the second eigenvector of A out of the power method."""

    def __init__(self, graph, lam, u):
        self.csr = graph.csr
        self.lam = lam
        self.u = u

    def __matmul__(self, v):
        return self.csr @ v - self.lam * (self.u @ v) * self.u


class _Adjacency:
    def __init__(self, graph):
        self.csr = graph.csr

    def __matmul__(self, v):
        return self.csr @ v


@dataclass
class ScResult:
    labels: np.ndarray
    iterations: int
    eigenvector: np.ndarray
    wall_time_ns: int


def spectral_clustering(graph: SbmGraph, tol: float = 1e-8, seed: int = 0,
                        matrix: str = "B", max_iters: int = SC_MAX_ITERS) -> ScResult:
    """Sign-round a leading eigenvector estimate.

    ``matrix="B"`` rounds the dominant eigenvector of the regularized
    operator.  ``matrix="A"`` rounds the second eigenvector of A itself,
    found by deflating A's Perron vector.
    """
    t0 = time.perf_counter_ns()
    rng = _rng(seed)
    y0 = sample_unit_sphere(graph.n, rng)
    if matrix == "B":
        rep = power_method(RegularizedOperator(graph), y0, max_iters, tol)
        iters = rep.iterations_run
    elif matrix == "A":
        top = power_method(_Adjacency(graph), y0, max_iters, tol)
        defl = _DeflatedAdjacency(graph, top.rayleigh_quotient, top.final_vector)
        rep = power_method(defl, sample_unit_sphere(graph.n, rng), max_iters, tol)
        iters = top.iterations_run + rep.iterations_run
    else:
        raise ValueError(f"matrix must be 'A' or 'B', got {matrix!r}")
    labels = sign_map(rep.final_vector)
    return ScResult(labels, iters, rep.final_vector, time.perf_counter_ns() - t0)


# -- manifold gradient descent --------------------------------------------

def normalize_rows(Q: np.ndarray) -> np.ndarray:
    return Q / np.linalg.norm(Q, axis=1, keepdims=True)


def riemannian_gradient(egrad: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Project each row of the Euclidean gradient onto the tangent line of its q_i."""
    return egrad - np.sum(egrad * Q, axis=1, keepdims=True) * Q


def objective(op, Q) -> float:
    return float(np.sum(Q * matvec(op, Q)))


def gram_distance(Q: np.ndarray, truth) -> float:
    """||Q Q' - x* x*'||_F through ||Q'Q||_F^2 - 2 ||Q'x*||^2 + n^2.

    O(n k^2), but it cancels catastrophically near the optimum (the floor is
    about n * sqrt(eps)); use :func:`circle_gram_distance` for rank 2.
    """
    x = _truth_array(truth).astype(np.float64)
    n = x.shape[0]
    G = Q.T @ Q
    v = Q.T @ x
    return math.sqrt(max(float(np.sum(G * G)) - 2.0 * float(v @ v) + n * n, 0.0))


def circle_gram_distance(Q: np.ndarray, truth) -> float:
    """Rank-2 form of ||Q Q' - x* x*'||_F without the n^2 cancellation.

    With r_i = x*_i q_i at angle d_i from the circular mean direction,
    entry (i, j) of the difference is 1 - cos(d_i - d_j) = a_i + a_j - a_i a_j - s_i s_j
    where a = 1 - cos d (computed as 2 sin^2(d/2)) and s = sin d.  Summing
    the square over i, j gives power sums that are all second order in d.
    """
    x = _truth_array(truth).astype(np.float64)
    n = x.shape[0]
    R = Q * x[:, None]
    mean_dir = math.atan2(R[:, 1].sum(), R[:, 0].sum())
    d = np.arctan2(R[:, 1], R[:, 0]) - mean_dir
    a = 2.0 * np.sin(d / 2) ** 2
    s = np.sin(d)
    A1, A2, S1, S2, AS = a.sum(), a @ a, s.sum(), s @ s, a @ s
    total = (2 * n * A2 + 2 * A1 * A1 + A2 * A2 + S2 * S2
             - 4 * A2 * A1 - 4 * AS * S1 + 2 * AS * AS)
    return math.sqrt(max(total, 0.0))


def round_rows(Q: np.ndarray) -> np.ndarray:
    """Labels from projecting Q on its top right-singular vector."""
    _, vecs = np.linalg.eigh(Q.T @ Q)
    return sign_map(Q @ vecs[:, -1])


@dataclass
class MgdResult:
    labels: np.ndarray
    iterations: int
    converged: bool
    step_size: float
    trace: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    wall_time_ns: int = 0


class MgdDivergence(ArithmeticError):
    pass


def mgd_recover(graph: SbmGraph, step_size: float | None = None, max_iters: int = 2000,
                seed: int = 0, truth=None, grad_tol: float = 1e-8,
                estimate_iters: int = 20) -> MgdResult:
    """Riemannian gradient ascent on the oblique manifold of n x 2 matrices.

    The default step is 1/(2 lam), lam a Rayleigh-quotient estimate of B's
    top eigenvalue from ``estimate_iters`` power steps.  A step that lowers
    the objective is retried at half the size.  Stops when the Riemannian
    gradient norm falls below ``grad_tol``.  If ``truth`` is given, the
    distance ||Q_k Q_k' - x* x*'||_F is recorded for k = 0, 1, ...
    """
    t0 = time.perf_counter_ns()
    op = RegularizedOperator(graph)
    n = graph.n
    rng = _rng(seed)
    if step_size is None:
        try:
            lam = power_method(op, sample_unit_sphere(n, rng), estimate_iters, 1e-6).rayleigh_quotient
        except PowerMethodBreakdown:
            lam = 0.0
        # B = 0 (empty graph) leaves the gradient zero, any step will do
        step_size = 1.0 / (2.0 * lam) if lam > 0 else 1.0
    elif not step_size > 0:
        raise ValueError("step_size must be positive")
    Q = normalize_rows(rng.standard_normal((n, 2)))
    BQ = matvec(op, Q)
    f = float(np.sum(Q * BQ))
    trace = [] if truth is None else [circle_gram_distance(Q, truth)]
    objectives = [f]
    eta = step_size
    converged = False
    k = 0
    while k < max_iters:
        rgrad = riemannian_gradient(2.0 * BQ, Q)
        gnorm = np.linalg.norm(rgrad)
        if not np.isfinite(gnorm):
            raise MgdDivergence(f"non-finite gradient at iterate {k}")
        if gnorm < grad_tol:
            converged = True
            break
        for _ in range(60):
            Q_new = normalize_rows(Q + eta * rgrad)
            BQ_new = matvec(op, Q_new)
            f_new = float(np.sum(Q_new * BQ_new))
            if f_new >= f - 1e-12 * abs(f):
                break
            eta *= 0.5
        Q, BQ, f = Q_new, BQ_new, f_new
        k += 1
        objectives.append(f)
        if truth is not None:
            trace.append(circle_gram_distance(Q, truth))
    labels = round_rows(Q)
    return MgdResult(labels, k, converged, eta, trace, objectives, time.perf_counter_ns() - t0)
