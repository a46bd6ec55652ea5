"""Experiment driver: data loading, reference handling, runs, sweeps, CSV output.

CSV is the output boundary.  The schema is versioned in the leading comment
line and every value is formatted with repr, so identical experiment specs
produce byte-identical files regardless of worker-thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np

from .cluster import MachineParams, VirtualCluster
from .data import Dataset, load_libsvm, partition_columns, synthesize
from .kstep import ca_sfista_run, ca_spnm_run
from .lasso import LassoProblem, objective
from .linalg import estimate_lipschitz
from .reference import ReferenceSolution, get_reference
from .solvers import RunTrace, SolverConfig, run_classical

CSV_HEADER = "# kstep-lasso csv v1"
SWEEP_CSV_HEADER = "# kstep-lasso sweep csv v1"
COLUMNS = "iter,objective,rel_sol_err,F,L,W,M_peak,modeled_time"

EXPERIMENT_ALGORITHMS = ("sfista", "spnm", "ca-sfista", "ca-spnm", "reference")

# per-dataset regularization presets; b is included where a preferred
# sampling fraction is established for the dataset
PRESETS = {
    "abalone": {"lam": 0.1, "b": 0.1},
    "covtype": {"lam": 0.01, "b": 0.01},
    "susy": {"lam": 0.01},
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the Gaussian planted-model generator."""

    d: int
    n: int
    sparsity: float = 0.3
    noise_sd: float = 0.0
    seed: int = 0


@dataclass
class ExperimentSpec:
    """One experiment: algorithm, data source, solver config, cluster shape."""

    algorithm: str
    data: str | Path | SyntheticSpec
    config: SolverConfig
    procs: int = 1
    machine: MachineParams = field(default_factory=MachineParams)
    out: Path | None = None
    reference_cache: Path | None = None
    track_reference: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in EXPERIMENT_ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.procs < 1:
            raise ValueError("procs must be >= 1")
        if self.algorithm in ("sfista", "ca-sfista") and self.config.Q != 1:
            raise ValueError("Q applies to the spnm algorithms only")
        if self.algorithm in ("sfista", "spnm") and self.config.k != 1:
            raise ValueError("k applies to the ca- algorithms only")
        if self.config.stopping_mode == "tolerance" and not self.track_reference:
            raise ValueError("tolerance stopping requires the reference solution")


def load_data(source: str | Path | SyntheticSpec) -> Dataset:
    if isinstance(source, SyntheticSpec):
        dataset, _ = synthesize(
            source.d, source.n, source.sparsity, source.noise_sd, source.seed
        )
        return dataset
    return load_libsvm(source)


def resolve_step(config: SolverConfig, dataset: Dataset) -> SolverConfig:
    """Fill in step = 1/L when the config left it unresolved."""
    if config.step is not None:
        return config
    return replace(config, step=1.0 / estimate_lipschitz(dataset))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def _trace_lines(trace: RunTrace) -> list[str]:
    return [
        ",".join(
            _fmt(v)
            for v in (
                row.iteration,
                row.objective,
                row.rel_sol_err,
                row.flops,
                row.messages,
                row.words,
                row.mem_peak,
                row.modeled_time,
            )
        )
        for row in trace.rows
    ]


def _reference_lines(problem: LassoProblem, solution: ReferenceSolution) -> list[str]:
    values = (
        solution.iterations,
        objective(problem, solution.w),
        0.0,
        0,
        0,
        0,
        0,
        0.0,
    )
    return [",".join(_fmt(v) for v in values)]


def run_solver(
    spec: ExperimentSpec,
    problem: LassoProblem,
    config: SolverConfig,
    w_ref: np.ndarray | None,
    keep_iterates: bool = False,
) -> RunTrace:
    """Execute the experiment's algorithm on a fresh virtual cluster."""
    partition = partition_columns(problem.dataset, spec.procs)
    with VirtualCluster(partition, workers=spec.workers) as cluster:
        if spec.algorithm == "ca-sfista":
            return ca_sfista_run(
                problem, config, cluster, spec.machine, w_ref, keep_iterates
            )
        if spec.algorithm == "ca-spnm":
            return ca_spnm_run(
                problem, config, cluster, spec.machine, w_ref, keep_iterates
            )
        algorithm = spec.algorithm
        return run_classical(
            problem, config, cluster, algorithm, spec.machine, w_ref, keep_iterates
        )


def run_experiment(spec: ExperimentSpec) -> str:
    """Run one experiment and return (and optionally write) its CSV text."""
    dataset = load_data(spec.data)
    config = resolve_step(spec.config, dataset)
    problem = LassoProblem(dataset=dataset, lam=config.lam)

    if spec.algorithm == "reference":
        solution = get_reference(problem, spec.reference_cache)
        lines = _reference_lines(problem, solution)
    else:
        w_ref = None
        if spec.track_reference:
            w_ref = get_reference(problem, spec.reference_cache).w
        trace = run_solver(spec, problem, config, w_ref)
        lines = _trace_lines(trace)

    text = "\n".join([CSV_HEADER, COLUMNS, *lines]) + "\n"
    if spec.out is not None:
        Path(spec.out).write_text(text)
    return text


def _sanitize(message: str) -> str:
    return message.replace(",", ";").replace("\n", " ")


def sweep(
    spec: ExperimentSpec,
    ks: tuple[int, ...] = (1,),
    bs: tuple[float, ...] | None = None,
    procs: tuple[int, ...] | None = None,
) -> str:
    """Grid of runs over (k, b, P) sharing one dataset and reference solution.

    Cells run in deterministic grid order; a failing cell contributes one row
    with the error column filled instead of aborting the sweep.
    """
    bs = bs if bs is not None else (spec.config.b,)
    procs = procs if procs is not None else (spec.procs,)
    if not ks or not bs or not procs:
        raise ValueError("sweep grids must be nonempty")

    dataset = load_data(spec.data)
    base_config = resolve_step(spec.config, dataset)
    problem = LassoProblem(dataset=dataset, lam=base_config.lam)
    w_ref = None
    if spec.track_reference:
        w_ref = get_reference(problem, spec.reference_cache).w

    lines = [SWEEP_CSV_HEADER, "k,b,P," + COLUMNS + ",error"]
    for k, b, P in product(ks, bs, procs):
        prefix = f"{k},{_fmt(float(b))},{P}"
        try:
            config = replace(base_config, k=k, b=b)
            cell = replace(spec, procs=P, out=None, config=config)
            trace = run_solver(cell, problem, config, w_ref)
            lines.extend(f"{prefix},{line}," for line in _trace_lines(trace))
        except Exception as exc:  # recorded, not raised: sweeps must finish
            lines.append(f"{prefix},,,,,,,,,{_sanitize(str(exc))}")
    text = "\n".join(lines) + "\n"
    if spec.out is not None:
        Path(spec.out).write_text(text)
    return text
