"""
Command-line entry point
~~~~~~~~~~~~~~~~~~~~~~~~
::

    densitybayes [--seed N] [--out DIR] [--tol X] {figure|check|bayes|em|flow|odot} ...

Exit codes: 0 success, 1 a property or assertion failed, 2 bad input. Module
errors are reported on stderr by their class name.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import checks, figures
from . import io as dio
from .bayes import bayes_main
from .dynamics import (
    FlowTrace,
    conjugate_trace,
    flow_closed_trace,
    integrate_log_ode,
)
from .em_invert import em_invert
from .errors import CalculusError, IoError
from .odot import odot

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
FLOW_GAP_TOL = 1e-6


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    out: Path = Path(".")
    tol: float | None = None
    inputs: dict[str, Path] = field(default_factory=dict)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS, help="master seed (default 0)")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory (default .)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="tolerance override")

    parser = argparse.ArgumentParser(prog="densitybayes", parents=[common],
                                     description="Density-matrix probability calculus tools.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("figure", parents=[common], help="write a figure as SVG + CSV")
    p.add_argument("name", choices=figures.FIGURES)
    p.add_argument("--commuting", action="store_true", help="fig3: use a commuting pair")
    p.add_argument("--steps", type=_positive_int, default=12, help="fig5: number of updates")

    p = sub.add_parser("check", parents=[common], help="run the seeded property sweeps")
    p.add_argument("--suite", default="all", help="'all', a module name or a property name")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--inject-bad", action="store_true", help="corrupt one density to test the harness")

    p = sub.add_parser("bayes", parents=[common], help="generalized Bayes update")
    p.add_argument("--prior", type=Path, required=True)
    p.add_argument("--likelihood", type=Path, required=True)

    p = sub.add_parser("em", parents=[common], help="recover D(B) from D(A|B)")
    p.add_argument("--conditional", type=Path, required=True)
    p.add_argument("--start", default="uniform", help="Matrix JSON file or 'uniform'")
    p.add_argument("--max-iter", type=_positive_int, default=10000)

    p = sub.add_parser("flow", parents=[common], help="continuous-time updates")
    p.add_argument("--prior", type=Path, required=True)
    p.add_argument("--likelihood", type=Path, help="likelihood (closed, ode) or skew generator (conjugate)")
    p.add_argument("--t", type=float, default=1.0, dest="t_end")
    p.add_argument("--steps", type=_positive_int, default=1000)
    p.add_argument("--mode", choices=("closed", "ode", "conjugate"), default="closed")

    p = sub.add_parser("odot", parents=[common], help="odot product of two matrices")
    p.add_argument("--left", type=Path, required=True)
    p.add_argument("--right", type=Path, required=True)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(args.subcommand, getattr(args, "seed", 0), getattr(args, "out", Path(".")),
                    getattr(args, "tol", None))
    for key in ("prior", "likelihood", "conditional", "left", "right"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.inputs[key] = value
    start = getattr(args, "start", "uniform")
    if start != "uniform":
        cfg.inputs["start"] = Path(start)
    # validate every path before any work starts
    for key, path in cfg.inputs.items():
        if not path.is_file():
            raise IoError(f"--{key}: no such file {path}")
    if cfg.out.exists() and not cfg.out.is_dir():
        raise IoError(f"--out {cfg.out} is not a directory")
    return cfg


def cmd_figure(cfg: RunConfig, args) -> int:
    kwargs = {}
    if args.name == "fig3":
        kwargs["commuting"] = args.commuting
    if args.name == "fig5":
        kwargs["steps"] = args.steps
    summary = figures.make_figure(args.name, cfg.out, **kwargs)
    print(f"wrote {cfg.out / (args.name + '.svg')} and {cfg.out / (args.name + '.csv')}")
    if args.name == "fig2" and not summary["all_contained"]:
        return EXIT_FAIL
    return EXIT_OK


def cmd_check(cfg: RunConfig, args) -> int:
    try:
        report = checks.run_checks(cfg.seed, args.trials, args.suite, args.inject_bad, cfg.tol)
    except ValueError as exc:
        raise IoError(str(exc)) from exc
    text = checks.report_json(report)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "check_report.json").write_text(text, encoding="utf-8")
    for row in report["properties"]:
        status = "PASS" if row["passed"] else "FAIL"
        print(f"{status} {row['name']} worst={row['worst_residual']} threshold={row['threshold']:g}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_bayes(cfg: RunConfig, args) -> int:
    update = bayes_main(dio.read_matrix(args.prior), dio.read_matrix(args.likelihood))
    path = dio.write_json(cfg.out / "bayes.json", dio.bayes_update_to_json(update))
    print(f"evidence {update.evidence!r}; wrote {path}")
    return EXIT_OK


def cmd_em(cfg: RunConfig, args) -> int:
    cond = dio.read_matrix(args.conditional)
    if not hasattr(cond, "dims"):
        raise IoError("--conditional must be a full_conditional or carry 'dims'")
    start = None if args.start == "uniform" else dio.read_matrix(args.start)
    tol = 1e-10 if cfg.tol is None else cfg.tol
    result = em_invert(cond, start, tol=tol, max_iter=args.max_iter)
    dio.write_json(cfg.out / "em.json", dio.inversion_to_json(result))
    dio.write_inversion_csv(cfg.out / "em_iterations.csv", result)
    state = "converged" if result.converged else "did not converge"
    print(f"{state} after {result.iterations} iterations, last step {result.final_step_norm:.3e}")
    return EXIT_OK


def _flow(args) -> FlowTrace:
    prior = dio.read_matrix(args.prior)
    if args.likelihood is None:
        raise IoError("--likelihood is required")
    if args.mode == "conjugate":
        k = dio.read_raw_matrix(args.likelihood)
        times = np.linspace(0.0, args.t_end, args.steps + 1)
        return conjugate_trace(prior, k, times)
    like = dio.read_matrix(args.likelihood)
    if args.mode == "ode":
        return integrate_log_ode(prior, like, args.t_end, args.steps)
    return flow_closed_trace(prior, like, np.linspace(0.0, args.t_end, args.steps + 1))


def cmd_flow(cfg: RunConfig, args) -> int:
    trace = _flow(args)
    dio.write_flow_csv(cfg.out / "flow.csv", trace)
    report = {"mode": args.mode, "t_end": args.t_end, "steps": args.steps,
              "final_state": trace.final.data.tolist(),
              "max_trace_drift": max(trace.trace_drift)}
    code = EXIT_OK
    if args.mode == "ode":
        closed = flow_closed_trace(dio.read_matrix(args.prior), dio.read_matrix(args.likelihood),
                                   [args.t_end]).final
        gap = float(np.linalg.norm(trace.final.data - closed.data))
        limit = FLOW_GAP_TOL if cfg.tol is None else cfg.tol
        report.update(closed_form_gap=gap, gap_threshold=limit)
        code = EXIT_OK if gap <= limit else EXIT_FAIL
    dio.write_json(cfg.out / "flow.json", report)
    print(f"wrote {cfg.out / 'flow.csv'} ({len(trace)} states)")
    return code


def cmd_odot(cfg: RunConfig, args) -> int:
    res = odot(dio.read_matrix(args.left), dio.read_matrix(args.right))
    out = dio.matrix_to_json(res.matrix, "symmetric")
    out.update(common_range_dim=res.common_range_dim, used_limit_form=res.used_limit_form)
    path = dio.write_json(cfg.out / "odot.json", out)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"figure": cmd_figure, "check": cmd_check, "bayes": cmd_bayes,
            "em": cmd_em, "flow": cmd_flow, "odot": cmd_odot}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[cfg.subcommand](cfg, args)
    except CalculusError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
