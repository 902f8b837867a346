"""Scoring a label vector against the planted partition."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .sbm import GroundTruth

METHODS = ("two_stage", "sc", "mgd")
RECORD_SCHEMA = "# sbm-recover trial records v1"


def _truth_array(truth):
    return truth.labels if isinstance(truth, GroundTruth) else np.asarray(truth)


def _pair(x, truth):
    x = np.asarray(x)
    t = _truth_array(truth)
    if x.shape != t.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} labels vs {t.shape[0]} truth entries")
    return x.astype(np.int64), t.astype(np.int64)


def is_exact(x, truth) -> bool:
    """True iff x equals x* or -x*."""
    x, t = _pair(x, truth)
    return bool(np.array_equal(x, t) or np.array_equal(x, -t))


def misclassification(x, truth) -> int:
    """Hamming distance to x*, minimised over a global flip."""
    x, t = _pair(x, truth)
    wrong = int(np.count_nonzero(x != t))
    return min(wrong, x.shape[0] - wrong)


def rank_one_distance(x, truth) -> float:
    """||x x' - x* x*'||_F for ±1 vectors, via sqrt(2 n^2 - 2 (x'x*)^2)."""
    x, t = _pair(x, truth)
    n = x.shape[0]
    overlap = int(x @ t)
    return math.sqrt(2 * n * n - 2 * overlap * overlap)


@dataclass
class TrialRecord:
    alpha: float
    beta: float
    n: int
    seed: int
    method: str
    exact: bool
    misclassified: int
    pm_iters: int
    gpm_iters: int
    wall_time_ns: int
    nnz: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 <= self.misclassified <= self.n // 2:
            raise ValueError("misclassified must lie in [0, n/2]")
        if self.exact != (self.misclassified == 0):
            raise ValueError("exact must agree with misclassified == 0")

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list:
        d = asdict(self)
        d["exact"] = int(self.exact)
        return [d[k] for k in self.header()]
