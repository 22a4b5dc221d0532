"""``pdom-bench``: run solvers on seeded synthetic problems.

Subcommands
-----------
solve
    One instance per trial; writes per-iteration trace rows.
bench
    Grid of cells x trials; writes one summary row per (cell, solver).
phase
    Sweep of sparsity (sparse family) or rank (RPCA); writes success
    fractions per sweep value per solver.

Exit codes are 0 on success, 1 for configuration errors and 2 for I/O
errors.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

from .experiments import (
    GRID_DEFAULTS,
    SUMMARY_COLUMNS,
    TRACE_COLUMNS,
    ExperimentSpec,
    canonical_family,
    phase_rows,
    run_experiment,
    summarize,
    trace_rows,
)
from .solvers import SolverConfig

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

# CLI flag -> (grid key, element type); every grid flag takes one or more values
GRID_FLAGS = {
    "n": ("n", int),
    "sparsity": ("sparsity", int),
    "lambda_scale": ("lambda_scale", float),
    "noise_std": ("noise_std", float),
    "mu_scale": ("mu_scale", float),
    "m": ("m", int),
    "rank": ("rank", int),
    "sparse_frac": ("sparse_frac", float),
    "rpca_mu": ("mu", float),
}
SOLVER_FLAGS = ("gamma", "max_iter", "eps_abs", "eps_rel", "tau", "i_max")
TOP_FLAGS = ("seed", "trials", "tol", "output", "format", "workers", "threshold", "stop_at_tol")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(p):
    p.add_argument("--config", help="JSON file with ExperimentSpec fields; flags override it")
    p.add_argument("--family", help="sparse | rpca | custom")
    p.add_argument("--solver", dest="solvers", nargs="+", choices=["pdom", "pg", "mapg"])
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--max-iter", type=int, help="iteration cap (default 2000)")
    p.add_argument("--gamma", type=float, help="step damping in (0, 1) (default 0.98)")
    p.add_argument("--tol", type=float, help="target residual norm (default 1e-5)")
    p.add_argument("--eps-abs", type=float, help="absolute stopping tolerance (default 1e-12)")
    p.add_argument("--eps-rel", type=float, help="relative stopping tolerance (default 1e-12)")
    p.add_argument("--tau", type=float, help="base step (default 1/L_q)")
    p.add_argument("--i-max", type=int, help="maximum backtracks before alpha = 1")
    p.add_argument(
        "--stop-at-tol",
        action="store_const",
        const=True,
        help="also stop each run as soon as the residual drops below --tol",
    )
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--workers", type=int, help="threads running trials in parallel")

    g = p.add_argument_group("sparse recovery grid")
    g.add_argument("--n", type=int, nargs="+")
    g.add_argument("--sparsity", type=int, nargs="+")
    g.add_argument("--lambda-scale", type=float, nargs="+")
    g.add_argument("--noise-std", type=float, nargs="+")
    g.add_argument("--mu-scale", type=float, nargs="+")
    g = p.add_argument_group("rpca grid")
    g.add_argument("--m", type=int, nargs="+")
    g.add_argument("--rank", type=int, nargs="+")
    g.add_argument("--sparse-frac", type=float, nargs="+")
    g.add_argument("--rpca-mu", type=float, nargs="+")
    g = p.add_argument_group("custom quadratic")
    g.add_argument("--q-diag", type=_floats, help="diagonal of Q, e.g. 4,1")
    g.add_argument("--b", type=_floats, help="linear term, e.g. -4,-1")
    g.add_argument("--x0", type=_floats, help="starting point (default 0)")
    g.add_argument("--h", choices=["zero", "l0", "l1"])
    g.add_argument("--lam", type=float)


def build_parser():
    parser = _Parser(prog="pdom-bench", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for name, help_text in [
        ("solve", "trace of each solver on single instances"),
        ("bench", "summary statistics over a parameter grid"),
        ("phase", "success fractions over a sparsity or rank sweep"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))
    sub.choices["phase"].add_argument("--threshold", type=float, help="success threshold on the error")
    for name in ("solve", "bench"):
        sub.choices[name].set_defaults(threshold=None)
    return parser


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return data


def merge_spec(args):
    """Combine the optional config file with explicit flags (flags win)."""
    data = _load_config(args.config) if args.config else {}
    known = {"family", "grid", "trials", "solvers", "config", "seed", "tol", "output", "format", "workers", "threshold", "stop_at_tol"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    family = canonical_family(args.family or data.get("family", "sparse"))
    grid = dict(data.get("grid", {}))
    for flag, (key, _) in GRID_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            if key not in GRID_DEFAULTS[family]:
                raise ConfigError(f"--{flag.replace('_', '-')} does not apply to family {family}")
            grid[key] = list(val)
    if family == "custom_quadratic":
        for key in ("q_diag", "b", "x0", "h", "lam"):
            val = getattr(args, key)
            if val is not None:
                grid[key] = [val]

    solver_cfg = dict(data.get("config", {}))
    for key in SOLVER_FLAGS:
        val = getattr(args, key)
        if val is not None:
            solver_cfg[key] = val
    top = {k: data[k] for k in TOP_FLAGS if k in data}
    for key in TOP_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            top[key] = val

    default_solvers = ["pdom"] if args.command == "solve" else ["pdom", "pg", "mapg"]
    solvers = args.solvers or data.get("solvers", default_solvers)
    default_trials = 1 if args.command == "solve" else 20
    try:
        spec = ExperimentSpec(
            family=family,
            grid=grid,
            trials=int(top.get("trials", default_trials)),
            solvers=list(solvers),
            config=SolverConfig(**solver_cfg),
            seed=int(top.get("seed", 0)),
            tol=float(top.get("tol", 1e-5)),
            stop_at_tol=bool(top.get("stop_at_tol", False)),
            threshold=top.get("threshold"),
        )
    except TypeError as exc:
        raise ConfigError(str(exc))
    fmt = top.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    workers = int(top.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    if args.command == "phase" and spec.sweep is None:
        raise ConfigError(f"phase needs a sweep family (sparse or rpca), got {family}")
    return spec, top.get("output"), fmt, workers


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def render(rows, columns, fmt):
    """Serialize rows; ``columns`` are placed after any leading keys of the first row."""
    if fmt == "json":
        cleaned = [{k: _jsonable(v) for k, v in row.items()} for row in rows]
        return json.dumps(cleaned, indent=1) + "\n"
    if not rows:
        return ""
    lead = [k for k in rows[0] if k not in columns]
    fieldnames = lead + [c for c in columns if c in rows[0]]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def execute(command, spec, workers=1):
    """Run a subcommand and return ``(rows, columns)``."""
    if command == "solve":
        outcomes = run_experiment(spec, workers=workers, keep_result=True)
        rows = [row for o in outcomes for row in trace_rows(spec, o)]
        return rows, TRACE_COLUMNS
    outcomes = run_experiment(spec, workers=workers)
    if command == "bench":
        return summarize(spec, outcomes), SUMMARY_COLUMNS
    rows = phase_rows(spec, outcomes)
    return rows, ["solver", "seed", "sweep_parameter", "sweep_value", "trials", "successes", "fraction", "threshold", "metric"]


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec, output, fmt, workers = merge_spec(args)
        if output:
            parent = os.path.dirname(os.path.abspath(output))
            if not os.path.isdir(parent):
                raise FileNotFoundError(f"output directory does not exist: {parent}")
        rows, columns = execute(args.command, spec, workers)
        text = render(rows, columns, fmt)
        if output:
            with open(output, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (ConfigError, ValueError) as exc:
        print(f"pdom-bench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pdom-bench: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
