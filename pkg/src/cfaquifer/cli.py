"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure,
3 failed property check.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .io import field_to_csv, field_to_json, trace_to_csv
from .picard import solve_picard
from .scheme import SolverError, classical_solve, run_simulation
from .stability import perturbation_experiment
from .verification import run_checks

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
GROWTH_TOL = 1e-8


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfaquifer", description="Fractional groundwater-flow solver and checks.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="run the Crank-Nicolson fractional scheme")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="output file (overrides output_path; stdout if neither is set)")

    p = sub.add_parser("classical", help="run the integer-order reference solver")
    p.add_argument("--config", required=True)
    p.add_argument("--output")

    p = sub.add_parser("picard", help="run the Picard fixed-point iteration")
    p.add_argument("--config", required=True)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--output")

    p = sub.add_parser("stability", help="evolve random perturbations and check their norms")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--trace-dir", help="directory for one trace CSV per perturbation")

    p = sub.add_parser("verify", help="run the full property suite")
    p.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these check numbers")
    p.add_argument("--report", help="also write the JSON report to this file")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _serialise(field, cfg: RunConfig, path: str | None) -> str:
    fmt = cfg.output_format
    if path and path.endswith(".json"):
        fmt = "json"
    elif path and path.endswith(".csv"):
        fmt = "csv"
    if fmt == "json":
        return field_to_json(field, cfg.params, cfg.alpha)
    return field_to_csv(field)


def _check_finite(field) -> None:
    if not np.all(np.isfinite(field.values)):
        raise SolverError("solution contains non-finite values")


def _cmd_solve(args, cfg: RunConfig) -> int:
    field = run_simulation(cfg.params, cfg.grid, cfg.order, cfg.phi)
    _check_finite(field)
    out = args.output or cfg.output_path or None
    _emit(_serialise(field, cfg, out), out)
    return EXIT_OK


def _cmd_classical(args, cfg: RunConfig) -> int:
    field = classical_solve(cfg.params, cfg.grid, cfg.phi)
    _check_finite(field)
    out = args.output or cfg.output_path or None
    _emit(_serialise(field, cfg, out), out)
    return EXIT_OK


def _cmd_picard(args, cfg: RunConfig) -> int:
    if args.max_iter < 1:
        raise _UsageError("--max-iter must be at least 1")
    res = solve_picard(cfg.params, cfg.grid, cfg.order, cfg.phi, max_iter=args.max_iter, rtol=args.rtol)
    for m, d in enumerate(res.diff_norms, start=1):
        print(f"sweep {m:4d}  diff {d:.6e}")
    status = "converged" if res.converged else "did not converge"
    print(f"picard {status} after {res.iterations} sweeps", file=sys.stdout if res.converged else sys.stderr)
    if args.output:
        _emit(_serialise(res.field, cfg, args.output), args.output)
    if not res.converged or not np.all(np.isfinite(res.field.values)):
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_stability(args, cfg: RunConfig) -> int:
    if args.seeds < 1:
        raise _UsageError("--seeds must be at least 1")
    rng = np.random.default_rng(args.seed)
    grid = cfg.grid
    trace_dir = Path(args.trace_dir) if args.trace_dir else None
    if trace_dir:
        trace_dir.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    for i in range(args.seeds):
        trace = perturbation_experiment(cfg.params, grid, cfg.order, cfg.phi, rng.standard_normal(grid.n_cells - 1))
        worst = max(worst, trace.max_growth)
        print(f"seed {i:3d}  max growth {trace.max_growth:.15f}")
        if trace_dir:
            (trace_dir / f"trace_{i:03d}.csv").write_text(trace_to_csv(trace))
    ok = worst <= 1.0 + GROWTH_TOL
    print(f"stability {'PASS' if ok else 'FAIL'}: worst growth {worst:.15f} (limit 1 + {GROWTH_TOL:g})")
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_verify(args) -> int:
    results = run_checks(set(args.only) if args.only else None)
    for r in results:
        print(r.line(), flush=True)
    failed = [{"number": r.number, "name": r.name, "detail": r.detail} for r in results if not r.passed]
    report = {"passed": [r.number for r in results if r.passed], "failed": failed}
    print(json.dumps(report))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1) + "\n")
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return _cmd_verify(args)
        cfg = load_config(args.config)
        handler = {
            "solve": _cmd_solve,
            "classical": _cmd_classical,
            "picard": _cmd_picard,
            "stability": _cmd_stability,
        }[args.command]
        return handler(args, cfg)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def cli_main(args: list[str]) -> int:
    return main(args)


if __name__ == "__main__":
    sys.exit(main())
