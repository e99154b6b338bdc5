"""Reproducible experiment grid runner and plot-data emitter.

Reported "ARI" columns are Average Rand Index over repetitions (the plain
Rand Index averaged), not the Adjusted Rand Index.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import algorithms as alg
from . import sdp
from .constraints import OracleSim, constraint_budget, sample_constraints
from .dataset import Dataset, load_benchmark, standardize
from .evaluation import ExperimentResult, aggregate_ari, rand_index
from .graph import graph_from_points, normalized_laplacian

ALGORITHM_ORDER = ("sc", "sdsc", "fcsc", "csdsc", "asc", "asdsc", "stsc", "stsdsc")
DATASET_ORDER = ("twomoon", "hepatitis", "iris", "wine")
SDP_FAMILY = {"sdsc", "csdsc", "asdsc", "stsdsc"}
UNCONSTRAINED = {"sc", "sdsc"}
ACTIVE = {"asc", "asdsc"}
DEFAULT_RATES = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)


class ConfigError(Exception):
    pass


class CellFailure(Exception):
    pass


@dataclass
class RunConfig:
    datasets: tuple = DATASET_ORDER
    algorithms: tuple = ALGORITHM_ORDER
    rates: tuple = DEFAULT_RATES
    reps: int = 10
    master_seed: int = 0
    out_dir: str = "results"
    cache_dir: str | None = None  # default: <out_dir>/sdp_cache
    sigma: float | None = None    # None: median pairwise distance
    beta: float | None = None     # None: 0.5 * lambda_{K-1}(Qbar) * vol
    alpha: float | None = None    # None: 0.5 * lambda_max(Q) per refit
    mu: float = 1e-2
    beta_fpc: float = 2.0
    alpha_st: float = 1.0
    sdp_tol: float = 1e-6
    ytilde_spectrum: str = "verbatim"
    multiway_active: bool = False  # one-vs-rest ASC/ASDSC on k > 2 datasets
    timings: bool = False          # real wall times in results.csv (breaks byte identity)
    jobs: int = 1
    twomoon_n: int = 100
    twomoon_noise: float = 0.1
    twomoon_seed: int = 7
    sdp_debug_dir: str | None = None

    def validate(self):
        for ds in self.datasets:
            if ds not in DATASET_ORDER:
                raise ConfigError(f"unknown dataset {ds!r}")
        for a in self.algorithms:
            if a not in ALGORITHM_ORDER:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        for rate in self.rates:
            if not 0 < rate <= 1:
                raise ConfigError(f"rate {rate} outside (0, 1]")
        if self.ytilde_spectrum not in ("verbatim", "similarity"):
            raise ConfigError("ytilde_spectrum must be 'verbatim' or 'similarity'")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.rates = tuple(sorted(self.rates))
        self.datasets = tuple(self.datasets)
        self.algorithms = tuple(self.algorithms)


def cell_seed(master_seed: int, dataset: str, algorithm: str, rate: float, rep: int) -> int:
    """Stable per-cell seed; unconstrained algorithms ignore the rate axis."""
    rate_key = "-" if algorithm in UNCONSTRAINED else format(rate, ".17g")
    text = f"{master_seed}|{dataset}|{algorithm}|{rate_key}|{rep}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass
class DatasetContext:
    dataset: Dataset
    graph: object
    ytilde: sdp.FeasibleMatrix | None = None
    sdp_converged: bool = True


def _sdp_cache_key(name: str, sigma: float, k: int, tol: float) -> str:
    text = f"{name}|{sigma!r}|{k}|{tol!r}"
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def prepare_context(name: str, config: RunConfig, need_sdp: bool) -> DatasetContext:
    ds = standardize(load_benchmark(name, twomoon_n=config.twomoon_n,
                                    twomoon_noise=config.twomoon_noise,
                                    twomoon_seed=config.twomoon_seed))
    graph = graph_from_points(ds.points, sigma=config.sigma)
    ctx = DatasetContext(dataset=ds, graph=graph)
    if not need_sdp:
        return ctx
    cache_dir = Path(config.cache_dir or Path(config.out_dir) / "sdp_cache")
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = _sdp_cache_key(name, graph.sigma, ds.k, config.sdp_tol)
    cache_file = cache_dir / f"{name}_{key}.npz"
    if cache_file.exists():
        blob = np.load(cache_file)
        ctx.ytilde = sdp.FeasibleMatrix(Ytilde=blob["ytilde"])
        ctx.sdp_converged = bool(blob["converged"])
        return ctx
    problem = sdp.build_equipartition_sdp(graph.L, ds.n, ds.k)
    sol = sdp.solve_sdp(problem, tol=config.sdp_tol)
    ctx.ytilde = sdp.extract_feasible(sol, ds.n, ds.k)
    ctx.sdp_converged = sol.converged
    np.savez(cache_file, ytilde=ctx.ytilde.Ytilde, converged=sol.converged,
             objective=sol.objective_value, iterations=sol.iterations)
    if config.sdp_debug_dir:
        dump = Path(config.sdp_debug_dir)
        dump.mkdir(parents=True, exist_ok=True)
        np.savetxt(dump / f"{name}_C.txt", problem.C)
        np.savetxt(dump / f"{name}_balance.txt", problem.M_bal)
        np.savetxt(dump / f"{name}_Y.txt", sol.Y)
    return ctx


def run_cell(ctx: DatasetContext, algorithm: str, rate: float, rep: int,
             seed: int, config: RunConfig) -> dict:
    """Execute one grid cell; returns the per-run record."""
    ds, graph = ctx.dataset, ctx.graph
    k = ds.k
    started = time.perf_counter()
    record = {"dataset": ds.name, "algorithm": algorithm, "rate": rate,
              "repetition": rep, "seed": seed, "query_count": 0,
              "parameters": {"sigma": graph.sigma, "k": k, "beta": config.beta,
                             "alpha": config.alpha, "mu": config.mu,
                             "beta_fpc": config.beta_fpc,
                             "ytilde_spectrum": config.ytilde_spectrum}}

    if algorithm in SDP_FAMILY:
        if ctx.ytilde is None or not ctx.sdp_converged:
            raise CellFailure(f"SDP unavailable or unconverged for {ds.name}")

    if algorithm == "sc":
        assignment = alg.spectral_clustering(graph, k, seed=seed)
        labels = assignment.labels
    elif algorithm == "sdsc":
        assignment = alg.sdsc(ctx.ytilde, graph.degrees, k, seed=seed)
        labels = assignment.labels
    elif algorithm in ("fcsc", "csdsc"):
        q = sample_constraints(ds.labels, rate, seed)
        if algorithm == "fcsc":
            res = alg.fcsc(graph, q, k, beta=config.beta, seed=seed)
        else:
            res = alg.csdsc(graph, ctx.ytilde, q, k, beta=config.beta, seed=seed,
                            spectrum=config.ytilde_spectrum)
        if isinstance(res, alg.InfeasibleCut):
            raise CellFailure(f"infeasible cut: {res.reason}")
        labels = res.labels
    elif algorithm in ACTIVE:
        M = normalized_laplacian(graph) if algorithm == "asc" else ctx.ytilde.Ytilde
        budget = constraint_budget(ds.n, rate)
        params = alg.ActiveParams(budget=budget, alpha=config.alpha)
        oracle = OracleSim(ds.labels)
        if k == 2:
            res = alg.active_loop(M, graph.degrees, oracle, params,
                                  truth_for_eval=ds.labels)
        elif config.multiway_active:
            res = alg.active_loop_ovr(M, graph.degrees, ds.labels, k, params,
                                      seed=seed)
            record["extrapolation"] = "one-vs-rest"
        else:
            raise CellFailure(f"{algorithm} restricted to 2-class datasets "
                              f"(enable multiway_active for k={k})")
        labels = res.labels
        record["query_count"] = len(res.queries)
        record["ri_trace"] = res.ri_trace
        record["query_log"] = [[int(i), int(j)] for i, j in res.queries]
    elif algorithm in ("stsc", "stsdsc"):
        q = sample_constraints(ds.labels, rate, seed)
        fpc_params = alg.FPCParams(mu=config.mu, beta_fpc=config.beta_fpc)
        if algorithm == "stsc":
            M, spectrum = normalized_laplacian(graph), "verbatim"
        else:
            M, spectrum = ctx.ytilde.Ytilde, config.ytilde_spectrum
        res = alg.self_taught(M, q, k, fpc_params, alpha_st=config.alpha_st,
                              seed=seed, spectrum=spectrum)
        labels = res.assignment.labels
    else:
        raise CellFailure(f"unknown algorithm {algorithm}")

    record["rand_index"] = rand_index(labels, ds.labels)
    record["wall_time_ms"] = (time.perf_counter() - started) * 1e3
    return record


def _grid_cells(config: RunConfig):
    """Canonical cell ordering: (dataset, algorithm, rate, repetition) sorted."""
    cells = []
    for ds in config.datasets:
        for a in config.algorithms:
            for rate in config.rates:
                if a in UNCONSTRAINED and rate != config.rates[0]:
                    continue  # computed once, replicated across rates
                for rep in range(config.reps):
                    cells.append((ds, a, rate, rep))
    return sorted(cells)


_WORKER: dict = {}


def _pool_init(contexts, config):
    _WORKER["contexts"] = contexts
    _WORKER["config"] = config


def _pool_cell(cell):
    ds_name, algorithm, rate, rep = cell
    config = _WORKER["config"]
    seed = cell_seed(config.master_seed, ds_name, algorithm, rate, rep)
    try:
        record = run_cell(_WORKER["contexts"][ds_name], algorithm, rate, rep,
                          seed, config)
        return ("ok", record)
    except (CellFailure, alg.InfeasibleCutError, alg.FPCDivergenceError) as exc:
        return ("fail", {"dataset": ds_name, "algorithm": algorithm, "rate": rate,
                         "repetition": rep, "seed": seed, "error": str(exc)})


def run(config: RunConfig) -> int:
    """Execute the grid; returns the process exit code (0 ok, 1 cell failures)."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    need_sdp = bool(SDP_FAMILY & set(config.algorithms))
    contexts = {name: prepare_context(name, config, need_sdp)
                for name in config.datasets}

    cells = _grid_cells(config)
    records, failures = [], []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs,
                                 initializer=_pool_init,
                                 initargs=(contexts, config)) as pool:
            outcomes = list(pool.map(_pool_cell, cells, chunksize=8))
    else:
        _pool_init(contexts, config)
        outcomes = [_pool_cell(cell) for cell in cells]
    for status, payload in outcomes:
        (records if status == "ok" else failures).append(payload)

    results = []
    for record in records:
        if record["algorithm"] in UNCONSTRAINED:
            expand_rates = config.rates
        else:
            expand_rates = (record["rate"],)
        for rate in expand_rates:
            results.append(ExperimentResult(
                dataset=record["dataset"], algorithm=record["algorithm"], rate=rate,
                repetition=record["repetition"], seed=record["seed"],
                rand_index=record["rand_index"],
                wall_time_ms=record["wall_time_ms"] if config.timings else 0.0,
                query_count=record["query_count"]))
    results.sort(key=lambda r: (r.dataset, r.algorithm, r.rate, r.repetition))

    with open(out_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "algorithm", "rate", "repetition", "seed",
                         "rand_index", "wall_time_ms", "query_count"])
        for r in results:
            writer.writerow([r.dataset, r.algorithm, r.rate, r.repetition, r.seed,
                             repr(r.rand_index), repr(r.wall_time_ms), r.query_count])

    if results:
        with open(out_dir / "aggregate.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["dataset", "algorithm", "rate", "ari", "std", "reps"])
            for row in aggregate_ari(results):
                writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4]),
                                 row[5]])

    with open(out_dir / "runs.jsonl", "w") as fh:
        for record in sorted(records, key=lambda r: (r["dataset"], r["algorithm"],
                                                     r["rate"], r["repetition"])):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if failures:
        with open(out_dir / "failures.jsonl", "w") as fh:
            for failure in failures:
                fh.write(json.dumps(failure, sort_keys=True) + "\n")
        print(f"{len(failures)} cell(s) failed; see failures.jsonl", file=sys.stderr)
        return 1
    return 0


def emit_plotdata(aggregate_path, out_dir) -> list[Path]:
    """One whitespace-delimited file per dataset: rate column then ARI per algorithm."""
    aggregate_path = Path(aggregate_path)
    if not aggregate_path.exists():
        raise ConfigError(f"aggregate file {aggregate_path} missing")
    table: dict[str, dict[tuple[str, float], float]] = {}
    with open(aggregate_path, newline="") as fh:
        for row in csv.DictReader(fh):
            table.setdefault(row["dataset"], {})[
                (row["algorithm"], float(row["rate"]))] = float(row["ari"])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ds in sorted(table):
        cells = table[ds]
        algos = [a for a in ALGORITHM_ORDER if any(key[0] == a for key in cells)]
        rates = sorted({key[1] for key in cells})
        path = out_dir / f"{ds}_ari.dat"
        with open(path, "w") as fh:
            fh.write("# ARI = Average Rand Index over repetitions\n")
            fh.write("rate " + " ".join(algos) + "\n")
            for rate in rates:
                vals = [repr(cells[(a, rate)]) if (a, rate) in cells else "nan"
                        for a in algos]
                fh.write(f"{rate!r} " + " ".join(vals) + "\n")
        written.append(path)
    return written


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdcluster",
        description="Constraint-rate benchmark for semidefinite spectral clustering "
                    "(reported ARI is the Average Rand Index, not Adjusted)")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute an experiment grid")
    runp.add_argument("--config", help="JSON config file")
    runp.add_argument("--dataset", action="append", dest="datasets")
    runp.add_argument("--algo", action="append", dest="algorithms")
    runp.add_argument("--rate", action="append", type=float, dest="rates")
    runp.add_argument("--reps", type=int)
    runp.add_argument("--seed", type=int, dest="master_seed")
    runp.add_argument("--out-dir", dest="out_dir")
    runp.add_argument("--cache-dir", dest="cache_dir")
    runp.add_argument("--sdp-tol", type=float, dest="sdp_tol")
    runp.add_argument("--sigma", type=float)
    runp.add_argument("--beta", type=float)
    runp.add_argument("--alpha", type=float)
    runp.add_argument("--mu", type=float)
    runp.add_argument("--beta-fpc", type=float, dest="beta_fpc")
    runp.add_argument("--spectrum", dest="ytilde_spectrum",
                      choices=("verbatim", "similarity"))
    runp.add_argument("--multiway-active", action="store_true", default=None)
    runp.add_argument("--timings", action="store_true", default=None)
    runp.add_argument("--jobs", type=int)
    runp.add_argument("--sdp-debug-dir", dest="sdp_debug_dir")
    plot = sub.add_parser("plotdata", help="emit per-dataset plot files")
    plot.add_argument("--aggregate", required=True)
    plot.add_argument("--out-dir", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plotdata":
            emit_plotdata(args.aggregate, args.out_dir)
            return 0
        config = load_config(args.config) if args.config else RunConfig()
        for key in RunConfig.__dataclass_fields__:
            value = getattr(args, key, None)
            if value is not None:
                setattr(config, key, tuple(value) if isinstance(value, list) else value)
        config.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
