import math

import numpy as np
import pytest

from sbm_recover.sbm import SbmParams, generate, generate_raw


def dense_B(graph):
    """B built entry by entry from the edge list; independent of the CSR product path."""
    n = graph.n
    A = np.zeros((n, n))
    for i, j in graph.edges():
        A[i, j] = A[j, i] = 1.0
    rho = A.sum() / n**2
    return A - rho * np.ones((n, n))


def dense_B_scaled(graph):
    """n^2 B as an exact integer matrix."""
    n = graph.n
    A = np.zeros((n, n), dtype=np.int64)
    for i, j in graph.edges():
        A[i, j] = A[j, i] = 1
    return A * n * n - int(A.sum())


def dense_sign(v):
    return np.array([1 if t >= 0 else -1 for t in v], dtype=np.int64)


def dense_two_stage(B, y0, pm_iters, pm_tol, gpm_max_iters, B_scaled):
    """Reference two-stage run on a dense matrix, written out loop by loop.

    Label iterates go through the exact integer matrix ``B_scaled`` = n^2 B.
    """
    n = B.shape[0]
    y = y0 / np.linalg.norm(y0)
    for _ in range(pm_iters):
        z = B @ y
        z = z / np.linalg.norm(z)
        res = min(np.linalg.norm(z - y), np.linalg.norm(z + y))
        y = z
        if res <= pm_tol:
            break
    x = math.sqrt(n) * y / np.linalg.norm(y)
    history = []
    prev2 = None
    for k in range(1, gpm_max_iters + 1):
        nxt = dense_sign(B @ x) if k == 1 else dense_sign(B_scaled @ x)
        history.append(nxt)
        if np.array_equal(nxt, x):
            return nxt, k, True, history
        if prev2 is not None and np.array_equal(nxt, prev2):
            return nxt, k, False, history
        prev2, x = x, nxt
    return x, gpm_max_iters, False, history


@pytest.fixture
def block4():
    """n=4, p=1, q=0: two all-ones 2x2 diagonal blocks."""
    return generate_raw(4, 1.0, 0.0, seed=3)


@pytest.fixture(params=range(5))
def small_instance(request):
    return generate(SbmParams(50, 10.0, 2.0, seed=100 + request.param))
