"""Command line entry point: ``sbm-recover {generate,recover,phase,converge,scale}``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import harness
from .baselines import mgd_recover, spectral_clustering
from .gpm import GPM_MAX_ITERS, two_stage_recover
from .metrics import METHODS, is_exact, misclassification
from .sbm import SbmParameterError, SbmParams, generate, save_graph, write_edge_list, write_truth
from .spectral import PowerMethodBreakdown


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _range(text):
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    return start, stop, step


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(p, method_default="two_stage", multi_method=False):
    p.add_argument("--n", type=int, default=300, help="node count (even)")
    p.add_argument("--alpha", type=float, default=10.0, help="within-community constant")
    p.add_argument("--beta", type=float, default=2.0, help="cross-community constant")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed")
    p.add_argument("--trials", type=int, default=40)
    if multi_method:
        p.add_argument("--method", default=method_default,
                       help=f"comma-separated subset of {','.join(METHODS)}")
    else:
        p.add_argument("--method", default=method_default, choices=METHODS)
    p.add_argument("--pm-iters", type=int, default=None,
                   help="Stage-1 iterations (default: rate-bound formula, clamped to [10, 200])")
    p.add_argument("--gpm-max-iters", type=int, default=GPM_MAX_ITERS)
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (fallback: ${harness.THREADS_ENV}, then 1)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbm-recover",
                     description="Exact community recovery in the binary symmetric SBM.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a graph and write it to disk")
    _common(p)
    p.add_argument("--no-diagonal", action="store_true", help="do not draw self-loops")

    p = sub.add_parser("recover", help="sample one graph, recover it, print a JSON summary")
    _common(p)

    p = sub.add_parser("phase", help="phase-transition grid over (alpha, beta)")
    _common(p, multi_method=True)
    p.add_argument("--alpha-range", type=_range, default=None, metavar="START:STOP:STEP")
    p.add_argument("--beta-range", type=_range, default=None, metavar="START:STOP:STEP")
    p.add_argument("--include-generation", action="store_true",
                   help="count graph generation in wall times")

    p = sub.add_parser("converge", help="per-iteration distance traces for GPM and MGD")
    _common(p)
    p.add_argument("--n-list", type=_int_list, default=[1000, 5000, 10000])
    p.add_argument("--mgd-max-iters", type=int, default=2000)

    p = sub.add_parser("scale", help="median recovery wall time versus n")
    _common(p)
    p.add_argument("--n-list", type=_int_list, default=[5000, 20000])
    return parser


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")


def _cmd_generate(args):
    params = SbmParams(args.n, args.alpha, args.beta, args.seed,
                       include_diagonal=not args.no_diagonal)
    graph, truth = generate(params)
    summary = {"n": graph.n, "nnz": graph.nnz(), "p": params.p, "q": params.q, "seed": args.seed}
    if args.out:
        stem = Path(args.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        save_graph(graph, stem.with_suffix(".bin"))
        write_edge_list(graph, stem.with_suffix(".edges"))
        write_truth(truth, stem.with_suffix(".truth"))
        summary["files"] = [str(stem.with_suffix(s)) for s in (".bin", ".edges", ".truth")]
    _emit(summary)


def _cmd_recover(args):
    if not args.alpha > args.beta:
        raise UsageError(f"recover requires alpha > beta, got alpha={args.alpha}, beta={args.beta}")
    params = SbmParams(args.n, args.alpha, args.beta, args.seed)
    graph, truth = generate(params)
    algo_seed = harness.derive_seed(args.seed, 1)
    summary = {"method": args.method, "n": args.n, "alpha": args.alpha, "beta": args.beta,
               "p": params.p, "q": params.q, "seed": args.seed, "nnz": graph.nnz()}
    if args.method == "two_stage":
        res = two_stage_recover(graph, args.pm_iters, algo_seed, args.gpm_max_iters)
        labels = res.labels
        summary.update(pm_iterations=res.pm_iterations, gpm_iterations=res.gpm_iterations,
                       converged=res.converged, wall_time_ns=res.wall_time_ns)
    elif args.method == "sc":
        res = spectral_clustering(graph, seed=algo_seed)
        labels = res.labels
        summary.update(iterations=res.iterations, wall_time_ns=res.wall_time_ns)
    else:
        res = mgd_recover(graph, seed=algo_seed)
        labels = res.labels
        summary.update(iterations=res.iterations, converged=res.converged,
                       wall_time_ns=res.wall_time_ns)
    summary["exact"] = is_exact(labels, truth)
    summary["misclassified"] = misclassification(labels, truth)
    _emit(summary)


def _cmd_phase(args):
    methods = tuple(m.strip() for m in args.method.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"--method must name methods from {','.join(METHODS)}, got {args.method!r}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    a_range = args.alpha_range or (args.alpha, args.alpha, 1.0)
    b_range = args.beta_range or (args.beta, args.beta, 1.0)
    for name, r in (("alpha", a_range), ("beta", b_range)):
        if not r[2] > 0 or r[1] < r[0]:
            raise UsageError(f"--{name}-range needs step > 0 and stop >= start")
    grid = harness.ExperimentGrid(args.n, a_range, b_range, args.trials, methods, args.seed,
                                  args.out, args.threads, args.pm_iters, args.gpm_max_iters,
                                  args.include_generation)
    report = harness.run_phase_transition(grid, fmt=args.format)
    cells = [{"alpha": a, "beta": b, "method": m,
              "success_ratio": None if math.isnan(v) else v}
             for (a, b, m), v in report.aggregate.items()]
    _emit({"cells": cells if len(cells) <= 50 else len(cells),
           "records": len(report.records), "skipped": len(report.skipped),
           "timing_totals_ns": report.timing_totals})


def _cmd_converge(args):
    if not args.alpha > args.beta:
        raise UsageError(f"converge requires alpha > beta, got alpha={args.alpha}, beta={args.beta}")
    report = harness.run_convergence(args.n_list, args.alpha, args.beta, args.seed, args.out,
                                     args.mgd_max_iters, args.format, args.pm_iters,
                                     args.gpm_max_iters)
    if not args.out:
        _emit({"columns": harness.CONVERGENCE_HEADER, "rows": [list(r) for r in report.rows]})
    else:
        _emit({"rows": len(report.rows), "out": args.out})


def _cmd_scale(args):
    report = harness.run_scaling(args.n_list, args.alpha, args.beta, args.trials, args.seed,
                                 args.out, args.format, args.pm_iters)
    _emit({"columns": harness.SCALING_HEADER, "rows": [list(r) for r in report.rows]})


_COMMANDS = {"generate": _cmd_generate, "recover": _cmd_recover, "phase": _cmd_phase,
             "converge": _cmd_converge, "scale": _cmd_scale}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        _COMMANDS[args.command](args)
    except (UsageError, SbmParameterError) as exc:
        sys.stderr.write(f"sbm-recover {args.command}: {exc}\n")
        return 1
    except (OSError, PowerMethodBreakdown, ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"sbm-recover {args.command}: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(cli_main())
