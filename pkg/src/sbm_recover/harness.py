"""Monte-Carlo experiments: phase transition grid, convergence traces, runtime scaling.

Every trial draws its graph and its algorithm randomness from seeds derived
from (base_seed, alpha index, beta index, trial), so any cell can be rerun on
its own and results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import mgd_recover, spectral_clustering
from .gpm import GPM_MAX_ITERS, sign_map, two_stage_recover
from .metrics import METHODS, RECORD_SCHEMA, TrialRecord, misclassification, rank_one_distance
from .sbm import SbmParams, generate
from .spectral import PowerMethodBreakdown

log = logging.getLogger(__name__)

THREADS_ENV = "SBM_RECOVER_THREADS"
AGGREGATE_HEADER = ["alpha", "beta", "method", "success_ratio"]
CONVERGENCE_HEADER = ["n", "method", "iter", "distance"]
SCALING_HEADER = ["n", "median_ns", "nnz"]
# MGD never lands exactly on x* x*', so its trace counts as "at the truth" below this
MGD_ZERO_LEVEL = 1e-6

_GRAPH_TAG = 0
_ALGO_TAG = 1


def derive_seed(base_seed: int, *keys: int) -> int:
    """64-bit seed hashed from the base seed and integer keys."""
    ss = np.random.SeedSequence([int(base_seed) % 2**64, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def axis_values(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid start, start+step, ..., <= stop."""
    if not step > 0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must be >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 10)


@dataclass
class ExperimentGrid:
    n: int
    alpha_range: tuple[float, float, float]
    beta_range: tuple[float, float, float]
    trials: int = 40
    methods: tuple[str, ...] = ("two_stage",)
    base_seed: int = 0
    output_path: str | None = None
    threads: int | None = None
    pm_iters: int | None = None
    gpm_max_iters: int = GPM_MAX_ITERS
    include_generation_time: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        self.alphas = axis_values(*self.alpha_range)
        self.betas = axis_values(*self.beta_range)


@dataclass
class ExperimentReport:
    records: list[TrialRecord] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    timing_totals: dict = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)
    skipped: list[tuple[float, float]] = field(default_factory=list)

    def success_ratio(self, alpha, beta, method="two_stage") -> float:
        return self.aggregate[(float(alpha), float(beta), method)]

    def to_json(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "aggregate": [
                {"alpha": a, "beta": b, "method": m, "success_ratio": _json_float(v)}
                for (a, b, m), v in self.aggregate.items()
            ],
            "timing_totals_ns": self.timing_totals,
            "rows": [list(r) for r in self.rows],
            "skipped": [list(c) for c in self.skipped],
        }


def _json_float(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def run_method(method: str, graph, truth, seed: int, pm_iters=None,
               gpm_max_iters=GPM_MAX_ITERS):
    """Run one recovery method; returns (labels, pm_iters, gpm_iters, wall_ns).

    For ``sc`` the iteration count goes in the pm column, for ``mgd`` in the
    gpm column.  A power-method breakdown (B x = 0, e.g. an empty graph) is
    scored as the all-(+1) labelling rather than raised.
    """
    t0 = time.perf_counter_ns()
    try:
        if method == "two_stage":
            res = two_stage_recover(graph, pm_iters, seed, gpm_max_iters)
            return res.labels, res.pm_iterations, res.gpm_iterations, res.wall_time_ns
        if method == "sc":
            res = spectral_clustering(graph, seed=seed)
            return res.labels, res.iterations, 0, res.wall_time_ns
        if method == "mgd":
            res = mgd_recover(graph, seed=seed)
            return res.labels, 0, res.iterations, res.wall_time_ns
    except PowerMethodBreakdown:
        labels = sign_map(np.zeros(graph.n))
        return labels, 0, 0, max(time.perf_counter_ns() - t0, 1)
    raise ValueError(f"unknown method {method!r}")


def _cell_valid(n, alpha, beta):
    scale = math.log(n) / n
    return alpha * scale <= 1 and beta * scale <= 1


def _run_trial(grid: ExperimentGrid, ai: int, bi: int, trial: int) -> list[TrialRecord]:
    alpha, beta = float(grid.alphas[ai]), float(grid.betas[bi])
    graph_seed = derive_seed(grid.base_seed, ai, bi, trial, _GRAPH_TAG)
    algo_seed = derive_seed(grid.base_seed, ai, bi, trial, _ALGO_TAG)
    t0 = time.perf_counter_ns()
    graph, truth = generate(SbmParams(grid.n, alpha, beta, graph_seed))
    gen_ns = time.perf_counter_ns() - t0
    out = []
    for method in grid.methods:
        labels, pm_it, gpm_it, ns = run_method(method, graph, truth, algo_seed,
                                               grid.pm_iters, grid.gpm_max_iters)
        if grid.include_generation_time:
            ns += gen_ns
        wrong = misclassification(labels, truth)
        out.append(TrialRecord(alpha, beta, grid.n, graph_seed, method, wrong == 0, wrong,
                               pm_it, gpm_it, ns, graph.nnz()))
    return out


class _CsvSink:
    """Line-buffered CSV writer; each completed row is flushed immediately."""

    def __init__(self, path, header, comment=None):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        if comment:
            self.fh.write(comment + "\n")
        self.writer.writerow(header)
        self.fh.flush()

    def write(self, row):
        self.writer.writerow(row)
        self.fh.flush()

    def close(self):
        self.fh.close()


def _prepare_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def threshold_curve(beta_max: float, points: int = 201) -> np.ndarray:
    """(beta, alpha) samples of the exact-recovery boundary sqrt(a) - sqrt(b) = sqrt(2)."""
    betas = np.linspace(0.0, beta_max, points)
    return np.column_stack([betas, (math.sqrt(2) + np.sqrt(betas)) ** 2])


def run_phase_transition(grid: ExperimentGrid, fmt: str = "csv") -> ExperimentReport:
    """Success ratio of each method over the (alpha, beta) grid.

    With ``output_path`` set, writes ``records.csv`` (flushed per trial),
    ``aggregate.csv`` and ``threshold.csv`` into that directory, or a single
    ``report.json`` when ``fmt="json"``.  Cells where p or q would exceed 1
    are skipped and given a NaN success ratio.
    """
    report = ExperimentReport()
    tasks, skipped = [], []
    for ai, a in enumerate(grid.alphas):
        for bi, b in enumerate(grid.betas):
            if _cell_valid(grid.n, a, b):
                tasks.extend((ai, bi, t) for t in range(grid.trials))
            else:
                skipped.append((float(a), float(b)))
    report.skipped = skipped

    out_dir = _prepare_dir(grid.output_path) if grid.output_path else None
    sink = None
    if out_dir is not None and fmt == "csv":
        sink = _CsvSink(out_dir / "records.csv", TrialRecord.header(), RECORD_SCHEMA)

    threads = resolve_threads(grid.threads)
    try:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map() yields in submission order, so output is independent of scheduling
            for recs in pool.map(lambda t: _run_trial(grid, *t), tasks):
                for r in recs:
                    report.records.append(r)
                    if sink:
                        sink.write(r.as_row())
    finally:
        if sink:
            sink.close()

    hits, counts = {}, {}
    for r in report.records:
        key = (r.alpha, r.beta, r.method)
        hits[key] = hits.get(key, 0) + int(r.exact)
        counts[key] = counts.get(key, 0) + 1
        report.timing_totals[r.method] = report.timing_totals.get(r.method, 0) + r.wall_time_ns
    for a in grid.alphas:
        for b in grid.betas:
            for m in grid.methods:
                key = (float(a), float(b), m)
                report.aggregate[key] = hits[key] / counts[key] if key in counts else math.nan

    if out_dir is not None:
        if fmt == "json":
            (out_dir / "report.json").write_text(json.dumps(report.to_json()))
        else:
            with open(out_dir / "aggregate.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(AGGREGATE_HEADER)
                for (a, b, m), v in report.aggregate.items():
                    w.writerow([a, b, m, v])
            with open(out_dir / "threshold.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["beta", "alpha"])
                w.writerows(threshold_curve(float(grid.betas[-1])).tolist())
    log.info("phase grid done: %d records, %d skipped cells", len(report.records), len(skipped))
    return report


def _real_rank_one_distance(x, truth):
    # ||x x' - x* x*'||_F for real x with ||x||^2 = n
    t = truth.labels.astype(np.float64)
    n = t.shape[0]
    sq = float(x @ x)
    return math.sqrt(max(sq * sq - 2.0 * float(x @ t) ** 2 + n * n, 0.0))


def first_hit(trace, level: float = 0.0):
    """First iteration whose distance is <= level, or None."""
    for k, d in trace:
        if d <= level:
            return k
    return None


def convergence_traces(graph, truth, seed: int, mgd_max_iters: int = 2000,
                       pm_iters=None, gpm_max_iters=GPM_MAX_ITERS):
    """(gpm_trace, mgd_trace) lists of (iteration, distance) on one instance.

    GPM trace starts at x0 = sqrt(n) y_N; MGD trace at its random start Q0.
    """
    gpm_trace = []

    def on_gpm(k, x):
        d = _real_rank_one_distance(x, truth) if k == 0 else rank_one_distance(x, truth)
        gpm_trace.append((k, d))

    res = two_stage_recover(graph, pm_iters, seed, gpm_max_iters, gpm_callback=on_gpm)
    mgd = mgd_recover(graph, seed=seed, max_iters=mgd_max_iters, truth=truth)
    mgd_trace = list(enumerate(mgd.trace))
    return gpm_trace, mgd_trace, res, mgd


def run_convergence(n_list, alpha: float, beta: float, base_seed: int = 0,
                    output_path=None, mgd_max_iters: int = 2000, fmt: str = "csv",
                    pm_iters=None, gpm_max_iters=GPM_MAX_ITERS) -> ExperimentReport:
    """Per-iteration distance to x* x*' for GPM and MGD on one graph per n.

    Rows are (n, method, iter, distance), long form.
    """
    if not alpha > beta:
        raise ValueError(f"convergence experiment needs alpha > beta, got {alpha} <= {beta}")
    n_list = [int(n) for n in n_list]
    for n in n_list:
        SbmParams(n, alpha, beta, 0)
    report = ExperimentReport()
    for n in n_list:
        graph_seed = derive_seed(base_seed, n, _GRAPH_TAG)
        graph, truth = generate(SbmParams(n, alpha, beta, graph_seed))
        gpm_trace, mgd_trace, res, mgd = convergence_traces(
            graph, truth, derive_seed(base_seed, n, _ALGO_TAG), mgd_max_iters,
            pm_iters, gpm_max_iters)
        report.rows.extend((n, "two_stage", k, d) for k, d in gpm_trace)
        report.rows.extend((n, "mgd", k, d) for k, d in mgd_trace)
        for method, labels, it_pm, it_2, ns in (
                ("two_stage", res.labels, res.pm_iterations, res.gpm_iterations, res.wall_time_ns),
                ("mgd", mgd.labels, 0, mgd.iterations, mgd.wall_time_ns)):
            wrong = misclassification(labels, truth)
            report.records.append(TrialRecord(alpha, beta, n, graph_seed, method, wrong == 0,
                                              wrong, it_pm, it_2, ns, graph.nnz()))
    if output_path is not None:
        _write_rows(output_path, CONVERGENCE_HEADER, report, fmt)
    return report


def run_scaling(n_list, alpha: float, beta: float, trials: int = 11, base_seed: int = 0,
                output_path=None, fmt: str = "csv", pm_iters=None) -> ExperimentReport:
    """Median two-stage wall time per n (graph generation excluded)."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = ExperimentReport()
    for n in n_list:
        times, sizes = [], []
        for t in range(trials):
            graph_seed = derive_seed(base_seed, n, t, _GRAPH_TAG)
            graph, truth = generate(SbmParams(n, alpha, beta, graph_seed))
            res = two_stage_recover(graph, pm_iters, derive_seed(base_seed, n, t, _ALGO_TAG))
            times.append(res.wall_time_ns)
            sizes.append(graph.nnz())
            wrong = misclassification(res.labels, truth)
            report.records.append(TrialRecord(alpha, beta, n, graph_seed, "two_stage", wrong == 0,
                                              wrong, res.pm_iterations, res.gpm_iterations,
                                              res.wall_time_ns, graph.nnz()))
        report.rows.append((n, int(np.median(times)), int(np.median(sizes))))
        report.timing_totals[n] = int(sum(times))
    if output_path is not None:
        _write_rows(output_path, SCALING_HEADER, report, fmt)
    return report


def _write_rows(path, header, report, fmt):
    path = Path(path)
    if path.parent and not path.parent.exists():
        _prepare_dir(path.parent)
    if fmt == "json":
        path.write_text(json.dumps({"columns": header, "rows": [list(r) for r in report.rows]}))
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(report.rows)
