"""Binary symmetric stochastic block model instances.

Graphs are stored as the upper and lower halves of a symmetric 0/1 matrix in
CSR form.  Sampling works block by block (within community one, across,
within community two) over the linearised upper triangle, jumping from edge
to edge with geometric gaps, so the cost is proportional to the number of
edges rather than to n**2.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

MAGIC = b"SBMCSR01"
_HEADER = struct.Struct("<8sQQ")


class SbmParameterError(ValueError):
    """Raised when model parameters fall outside the model's validity domain."""


@dataclass(frozen=True)
class SbmParams:
    n: int
    alpha: float
    beta: float
    seed: int = 0
    include_diagonal: bool = True

    def __post_init__(self):
        _check_n(self.n)
        if self.alpha < 0 or self.beta < 0:
            raise SbmParameterError(
                f"alpha and beta must be nonnegative, got alpha={self.alpha}, beta={self.beta}")
        if self.p > 1:
            raise SbmParameterError(
                f"p = alpha*ln(n)/n = {self.p:.4g} exceeds 1 (alpha={self.alpha}, n={self.n})")
        if self.q > 1:
            raise SbmParameterError(
                f"q = beta*ln(n)/n = {self.q:.4g} exceeds 1 (beta={self.beta}, n={self.n})")
        _check_seed(self.seed)

    @property
    def p(self) -> float:
        return self.alpha * math.log(self.n) / self.n

    @property
    def q(self) -> float:
        return self.beta * math.log(self.n) / self.n


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1 or not np.all(np.abs(labels) == 1):
            raise ValueError("ground truth entries must be +1 or -1")
        if int(labels.sum(dtype=np.int64)) != 0:
            raise ValueError("ground truth must describe two equal-sized communities")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True, eq=False)
class SbmGraph:
    """Symmetric 0/1 adjacency matrix in CSR form (entries implicitly 1).

    ``alpha`` and ``beta`` are carried along when the graph came out of
    :func:`generate` so that recovery can pick a default iteration budget;
    they are ``None`` for graphs built from raw rates or loaded from disk.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    alpha: float | None = None
    beta: float | None = None
    _csr: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        if row_ptr.shape != (self.n + 1,) or row_ptr[0] != 0 or row_ptr[-1] != col_idx.size:
            raise ValueError("malformed row_ptr")
        row_ptr.setflags(write=False)
        col_idx.setflags(write=False)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        data = np.ones(col_idx.size, dtype=np.float64)
        csr = sp.csr_matrix((data, col_idx, row_ptr), shape=(self.n, self.n))
        object.__setattr__(self, "_csr", csr)

    @property
    def csr(self) -> sp.csr_matrix:
        """Float64 view of A for sparse products; do not mutate."""
        return self._csr

    def nnz(self) -> int:
        return int(self.col_idx.size)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def check(self) -> None:
        """Validate CSR well-formedness and symmetry; raise ValueError if broken."""
        n = self.n
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if self.col_idx.size and (self.col_idx.min() < 0 or self.col_idx.max() >= n):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(n), np.diff(self.row_ptr))
        same_row = rows[1:] == rows[:-1]
        if np.any(self.col_idx[1:][same_row] <= self.col_idx[:-1][same_row]):
            raise ValueError("column indices must be strictly increasing within a row")
        fwd = rows * n + self.col_idx
        rev = np.sort(self.col_idx * n + rows)
        if not np.array_equal(fwd, rev):
            raise ValueError("adjacency structure is not symmetric")

    def edges(self) -> np.ndarray:
        """Unordered edges (i <= j) as an (m, 2) array, sorted row-major."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))
        keep = rows <= self.col_idx
        return np.column_stack([rows[keep], self.col_idx[keep]])


def _check_n(n):
    if int(n) != n or n < 2 or n % 2:
        raise SbmParameterError(f"n must be an even integer >= 2, got {n}")


def _check_seed(seed):
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise SbmParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _check_prob(name, value):
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise SbmParameterError(f"{name} must lie in [0, 1], got {value}")


def sampling_streams(seed: int) -> list[np.random.Generator]:
    """Independent streams used by the generator.

    Order: node permutation, within block 1, cross block, within block 2.
    """
    children = np.random.SeedSequence(int(seed)).spawn(4)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def geometric_positions(rng: np.random.Generator, prob: float, total: int) -> np.ndarray:
    """Indices in ``range(total)`` hit by independent Bernoulli(prob) trials.

    Draws geometric gaps in batches; every batch is a contiguous continuation
    of the stream, so the result equals a one-gap-at-a-time scalar walk.
    """
    if prob <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    while True:
        remaining = total - 1 - pos
        mean = remaining * prob
        size = int(mean + 6.0 * math.sqrt(mean) + 16)
        # any gap past the end finishes the walk; clipping keeps cumsum from overflowing
        gaps = np.minimum(rng.geometric(prob, size=size), total + 1)
        hits = pos + np.cumsum(gaps)
        if hits[-1] >= total:
            chunks.append(hits[hits < total])
            break
        chunks.append(hits)
        pos = int(hits[-1])
    return np.concatenate(chunks)


def _triangle_pairs(t: np.ndarray, m: int, diagonal: bool):
    # row i of the upper triangle (within one block) starts at offsets[i]
    i = np.arange(m, dtype=np.int64)
    if diagonal:
        offsets = i * m - i * (i - 1) // 2
    else:
        offsets = i * (m - 1) - i * (i - 1) // 2
    rows = np.searchsorted(offsets, t, side="right") - 1
    cols = rows + (t - offsets[rows]) + (0 if diagonal else 1)
    return rows, cols


def _sample_blocks(n, p, q, seed, include_diagonal):
    m = n // 2
    perm_rng, rng_in1, rng_cross, rng_in2 = sampling_streams(seed)
    tri = m * (m + 1) // 2 if include_diagonal else m * (m - 1) // 2

    r1, c1 = _triangle_pairs(geometric_positions(rng_in1, p, tri), m, include_diagonal)
    t = geometric_positions(rng_cross, q, m * m)
    rc, cc = t // m, m + t % m
    r2, c2 = _triangle_pairs(geometric_positions(rng_in2, p, tri), m, include_diagonal)

    rows = np.concatenate([r1, rc, r2 + m])
    cols = np.concatenate([c1, cc, c2 + m])
    perm = perm_rng.permutation(n)
    return perm[rows], perm[cols], perm


def _assemble(n, u, v):
    off = u != v
    rows = np.concatenate([u, v[off]])
    cols = np.concatenate([v, u[off]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=row_ptr[1:])
    return row_ptr, cols


def _build(n, p, q, seed, include_diagonal, alpha=None, beta=None):
    u, v, perm = _sample_blocks(n, p, q, seed, include_diagonal)
    row_ptr, col_idx = _assemble(n, u, v)
    labels = np.empty(n, dtype=np.int8)
    labels[perm[: n // 2]] = 1
    labels[perm[n // 2:]] = -1
    graph = SbmGraph(n, row_ptr, col_idx, alpha=alpha, beta=beta)
    return graph, GroundTruth(labels)


def generate(params: SbmParams) -> tuple[SbmGraph, GroundTruth]:
    """Sample (A, x*) with p = alpha ln n / n and q = beta ln n / n."""
    return _build(params.n, params.p, params.q, params.seed, params.include_diagonal,
                  alpha=params.alpha, beta=params.beta)


def generate_raw(n: int, p: float, q: float, seed: int = 0,
                 include_diagonal: bool = True) -> tuple[SbmGraph, GroundTruth]:
    """Like :func:`generate` but with the edge probabilities given directly.

    p < q is allowed.
    """
    _check_n(n)
    _check_prob("p", p)
    _check_prob("q", q)
    _check_seed(seed)
    scale = n / math.log(n) if n > 2 else None
    alpha = p * scale if scale else None
    beta = q * scale if scale else None
    return _build(n, p, q, seed, include_diagonal, alpha=alpha, beta=beta)


def nnz(graph: SbmGraph) -> int:
    """Stored nonzeros of A; off-diagonal edges count twice, loops once."""
    return graph.nnz()


def expected_nnz(n: int, p: float, q: float, include_diagonal: bool = True) -> float:
    """Closed-form E[nnz(A)] for the balanced two-block model."""
    m = n // 2
    within = 2 * m * (m - 1) + (n if include_diagonal else 0)
    return within * p + 2 * m * m * q


# -- serialization ---------------------------------------------------------

def save_graph(graph: SbmGraph, path) -> None:
    """Binary format: magic, n, nnz, row_ptr, col_idx; all little-endian int64."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, graph.n, graph.nnz()))
        fh.write(graph.row_ptr.astype("<i8").tobytes())
        fh.write(graph.col_idx.astype("<i8").tobytes())


def load_graph(path) -> SbmGraph:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated graph file")
    magic, n, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a graph file (bad magic {magic!r})")
    expect = _HEADER.size + 8 * (n + 1 + count)
    if len(raw) != expect:
        raise ValueError(f"{path}: expected {expect} bytes, found {len(raw)}")
    row_ptr = np.frombuffer(raw, dtype="<i8", count=n + 1, offset=_HEADER.size)
    col_idx = np.frombuffer(raw, dtype="<i8", count=count, offset=_HEADER.size + 8 * (n + 1))
    graph = SbmGraph(int(n), row_ptr.astype(np.int64), col_idx.astype(np.int64))
    graph.check()
    return graph


def write_edge_list(graph: SbmGraph, path) -> None:
    np.savetxt(path, graph.edges(), fmt="%d")


def read_edge_list(path, n: int) -> SbmGraph:
    pairs = np.loadtxt(path, dtype=np.int64, ndmin=2).reshape(-1, 2)
    u, v = pairs[:, 0], pairs[:, 1]
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise ValueError("edge endpoint out of range")
    row_ptr, col_idx = _assemble(n, u, v)
    graph = SbmGraph(n, row_ptr, col_idx)
    graph.check()
    return graph


def write_truth(truth: GroundTruth, path) -> None:
    np.savetxt(path, truth.labels, fmt="%d")


def read_truth(path) -> GroundTruth:
    return GroundTruth(np.loadtxt(path, dtype=np.int64, ndmin=1))
