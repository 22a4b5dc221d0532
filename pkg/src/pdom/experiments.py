"""Seeded experiment grids shared by the CLI and the acceptance tests.

Trial ``t`` of grid cell ``c`` draws everything (instance and starting
point) from ``SeedSequence([seed, c, t])``, so results never depend on the
order or thread in which trials execute.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .diagnostics import aggregate_phase
from .problems import (
    MU_SCALE,
    RPCA_MU,
    gen_rpca,
    gen_sparse_recovery,
    nre,
    random_start,
    recovery_metric,
    to_composite,
)
from .prox import L0, L1, Zero
from .quadmodel import build_dense
from .solvers import SOLVERS, SolverConfig

__all__ = [
    "FAMILIES",
    "ExperimentSpec",
    "TrialOutcome",
    "trial_seed",
    "expand_grid",
    "build_trial",
    "run_trial",
    "run_experiment",
    "summarize",
    "phase_rows",
    "trace_rows",
]

FAMILY_ALIASES = {
    "sparse": "sparse_recovery",
    "sparse_recovery": "sparse_recovery",
    "rpca": "rpca",
    "custom": "custom_quadratic",
    "custom_quadratic": "custom_quadratic",
}
FAMILIES = tuple(sorted(set(FAMILY_ALIASES.values())))

GRID_DEFAULTS = {
    "sparse_recovery": {
        "n": [200],
        "sparsity": [1],
        "lambda_scale": [0.01],
        "noise_std": [0.0],
        "mu_scale": [MU_SCALE],
    },
    "rpca": {"m": [100], "rank": [5], "sparse_frac": [0.1], "mu": [RPCA_MU]},
    "custom_quadratic": {
        "q_diag": [[4.0, 1.0]],
        "b": [[-4.0, -1.0]],
        "x0": [None],
        "h": ["zero"],
        "lam": [None],
    },
}
SWEEP_PARAMETER = {"sparse_recovery": "sparsity", "rpca": "rank"}
PHASE_THRESHOLD = {"sparse_recovery": 1e-4, "rpca": 1e-3}

TRACE_COLUMNS = [
    "k",
    "f",
    "residual_norm",
    "alpha",
    "tau_alpha",
    "backtracks",
    "safeguard",
    "step_norm",
    "nre",
    "prox_calls_cumulative",
]
SUMMARY_COLUMNS = [
    "solver",
    "seed",
    "trials",
    "mean_nre",
    "median_iters",
    "mean_iters",
    "capped_count",
    "mean_prox_calls",
]


def canonical_family(name):
    try:
        return FAMILY_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILY_ALIASES)}")


@dataclass
class ExperimentSpec:
    family: str = "sparse_recovery"
    grid: Dict[str, list] = field(default_factory=dict)
    trials: int = 1
    solvers: List[str] = field(default_factory=lambda: ["pdom"])
    config: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    tol: float = 1e-5
    stop_at_tol: bool = False
    threshold: Optional[float] = None

    def __post_init__(self):
        self.family = canonical_family(self.family)
        defaults = GRID_DEFAULTS[self.family]
        unknown = set(self.grid) - set(defaults)
        if unknown:
            raise ValueError(f"unknown grid keys for {self.family}: {sorted(unknown)}")
        self.grid = {k: list(self.grid.get(k, v)) for k, v in defaults.items()}
        for k, v in self.grid.items():
            if not v:
                raise ValueError(f"grid value list for {k!r} is empty")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad or not self.solvers:
            raise ValueError(f"unknown solvers {bad}; choose from {sorted(SOLVERS)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def solver_config(self):
        if self.stop_at_tol:
            return self.config.replace(target_residual=self.tol)
        return self.config

    @property
    def sweep(self):
        return SWEEP_PARAMETER.get(self.family)

    @property
    def phase_threshold(self):
        if self.threshold is not None:
            return self.threshold
        return PHASE_THRESHOLD.get(self.family, 1e-4)


@dataclass
class TrialOutcome:
    cell: int
    params: dict
    trial: int
    seed: int
    solver: str
    nre: float
    iters_to_tol: Optional[int]
    n_iter: int
    status: str
    prox_calls_to_tol: int
    prox_calls: int
    result: object = None


def trial_seed(seed, cell, trial):
    """Integer seed for one trial, independent of execution order."""
    return int(np.random.SeedSequence([int(seed), int(cell), int(trial)]).generate_state(1)[0])


def expand_grid(family, grid):
    """Cartesian product of the grid in a fixed key order."""
    keys = list(GRID_DEFAULTS[canonical_family(family)])
    values = [grid[k] for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def _vector(val, name):
    arr = np.asarray(val, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a flat list of numbers")
    return arr


def _custom_trial(params):
    if "Q" in params and params["Q"] is not None:
        Q = np.asarray(params["Q"], dtype=float)
    else:
        Q = np.diag(_vector(params["q_diag"], "q_diag"))
    b = _vector(params["b"], "b")
    model = build_dense(Q, b)
    kind = params.get("h", "zero")
    lam = params.get("lam")
    if kind == "zero":
        h = Zero()
    elif kind in ("l0", "l1"):
        if lam is None:
            raise ValueError(f"h={kind} needs lam")
        h = L0(lam) if kind == "l0" else L1(lam)
    else:
        raise ValueError(f"unknown regularizer {kind!r}")
    x0 = params.get("x0")
    x0 = np.zeros(model.dim) if x0 is None else _vector(x0, "x0")
    x_ref = params.get("x_true")
    if x_ref is None and kind == "zero":
        x_ref = model.minimizer()
    metric = None if x_ref is None else (lambda x, ref=np.asarray(x_ref, float): nre(x, ref))
    return model, h, x0, metric


def build_trial(family, params, seed):
    """Return ``(model, h, x0, metric, instance)`` for one trial."""
    family = canonical_family(family)
    if family == "custom_quadratic":
        return (*_custom_trial(params), None)
    rng = np.random.default_rng(seed)
    if family == "sparse_recovery":
        inst = gen_sparse_recovery(
            rng,
            params["n"],
            params["sparsity"],
            params["lambda_scale"],
            noise_std=params.get("noise_std", 0.0),
            mu_scale=params.get("mu_scale", MU_SCALE),
        )
    else:
        inst = gen_rpca(rng, params["m"], params["rank"], params["sparse_frac"], mu=params.get("mu", RPCA_MU))
    model, h, emb = to_composite(inst)
    x0 = random_start(inst, rng)
    return model, h, x0, recovery_metric(inst, emb), inst


def run_trial(family, params, seed, solvers, config, tol, cell=0, trial=0, keep_result=False):
    """Run every requested solver from the same instance and starting point."""
    model, h, x0, metric, _ = build_trial(family, params, seed)
    out = []
    for name in solvers:
        res = SOLVERS[name](model, h, x0, config, metric=metric)
        rn = res.column("residual_norm")
        hits = np.nonzero(rn < tol)[0]
        if hits.size:
            iters, prox_to_tol = int(hits[0]) + 1, res.trace[hits[0]].prox_calls
        else:
            iters, prox_to_tol = None, res.prox_calls
        final_nre = metric(res.x_final) if metric is not None else float("nan")
        out.append(
            TrialOutcome(
                cell=cell,
                params=dict(params),
                trial=trial,
                seed=seed,
                solver=name,
                nre=float(final_nre),
                iters_to_tol=iters,
                n_iter=res.n_iter,
                status=res.status,
                prox_calls_to_tol=prox_to_tol,
                prox_calls=res.prox_calls,
                result=res if keep_result else None,
            )
        )
    return out


def run_experiment(spec, workers=1, keep_result=False):
    """Run all (cell, trial) jobs; returns outcomes in (cell, trial, solver) order."""
    cells = expand_grid(spec.family, spec.grid)
    config = spec.solver_config()
    jobs = [
        (c, t, params, trial_seed(spec.seed, c, t))
        for c, params in enumerate(cells)
        for t in range(spec.trials)
    ]

    def work(job):
        c, t, params, s = job
        return run_trial(spec.family, params, s, spec.solvers, config, spec.tol, c, t, keep_result)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, jobs))
    else:
        chunks = [work(job) for job in jobs]
    return [o for chunk in chunks for o in chunk]


def _cell_columns(params):
    return {k: (json_scalar(v)) for k, v in params.items()}


def json_scalar(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(repr(float(x)) for x in v)
    return v


def summarize(spec, outcomes):
    """One summary row per (cell, solver)."""
    max_iter = spec.config.max_iter
    groups = {}
    for o in outcomes:
        groups.setdefault((o.cell, o.solver), []).append(o)
    rows = []
    for (cell, solver), group in sorted(groups.items(), key=lambda kv: (kv[0][0], spec.solvers.index(kv[0][1]))):
        iters = [o.iters_to_tol if o.iters_to_tol is not None else max_iter for o in group]
        capped = sum(o.iters_to_tol is None for o in group)
        mean_iters = float(np.mean(iters))
        row = {"family": spec.family, **_cell_columns(group[0].params)}
        row.update(
            solver=solver,
            seed=spec.seed,
            trials=len(group),
            mean_nre=float(np.mean([o.nre for o in group])),
            median_iters=float(np.median(iters)),
            mean_iters=f">{max_iter}" if capped == len(group) else mean_iters,
            capped_count=capped,
            mean_prox_calls=float(np.mean([o.prox_calls_to_tol for o in group])),
        )
        rows.append(row)
    return rows


def trial_rows(spec, outcomes):
    rows = []
    for o in outcomes:
        row = {"family": spec.family, **_cell_columns(o.params)}
        row.update(
            solver=o.solver,
            trial=o.trial,
            seed=o.seed,
            nre=o.nre,
            iters_to_tol="" if o.iters_to_tol is None else o.iters_to_tol,
            n_iter=o.n_iter,
            status=o.status,
            prox_calls_to_tol=o.prox_calls_to_tol,
            prox_calls=o.prox_calls,
        )
        rows.append(row)
    return rows


def phase_rows(spec, outcomes):
    """Success fractions per sweep value per solver (other grid keys fixed per row)."""
    sweep = spec.sweep
    if sweep is None:
        raise ValueError(f"family {spec.family} has no sweep parameter")
    threshold = spec.phase_threshold
    metric = "nre" if spec.family == "sparse_recovery" else "low_rank_relerr"
    groups = {}
    for o in outcomes:
        fixed = tuple((k, json_scalar(v)) for k, v in o.params.items() if k != sweep)
        groups.setdefault((fixed, o.solver), []).append((o.params[sweep], o.nre))
    rows = []
    order = sorted(groups, key=lambda key: (key[0], spec.solvers.index(key[1])))
    for fixed, solver in order:
        for cell in aggregate_phase(groups[(fixed, solver)], threshold, metric):
            row = {"family": spec.family, **dict(fixed)}
            row.update(
                solver=solver,
                seed=spec.seed,
                sweep_parameter=sweep,
                sweep_value=cell.sweep_parameter,
                trials=cell.trials,
                successes=cell.successes,
                fraction=cell.fraction,
                threshold=cell.threshold,
                metric=cell.metric,
            )
            rows.append(row)
    return rows


def trace_rows(spec, outcome):
    """Per-iteration rows for one solver run (``outcome.result`` must be kept)."""
    res = outcome.result
    prefix = {"family": spec.family, **_cell_columns(outcome.params)}
    prefix.update(solver=outcome.solver, trial=outcome.trial, seed=outcome.seed)
    rows = []
    for rec in res.trace:
        row = dict(prefix)
        row.update(
            k=rec.k,
            f=rec.f_value,
            residual_norm=rec.residual_norm,
            alpha=rec.alpha,
            tau_alpha=rec.tau_alpha,
            backtracks=rec.backtracks,
            safeguard=int(rec.safeguard_taken),
            step_norm=rec.step_norm,
            nre=rec.nre,
            prox_calls_cumulative=rec.prox_calls,
        )
        rows.append(row)
    return rows


def median_iters(outcomes, solver, max_iter):
    vals = [o.iters_to_tol if o.iters_to_tol is not None else max_iter for o in outcomes if o.solver == solver]
    return float(np.median(vals)) if vals else math.nan
