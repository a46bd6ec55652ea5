"""Classical stochastic solvers: accelerated proximal gradient and proximal Newton.

Both algorithms sample columns each iteration, build the sampled Gram pair
with one all-reduce, then apply the update redundantly on every rank:

    sfista   v_j = w_{j-1} + (j-2)/j * (w_{j-1} - w_{j-2});  shrink(v - t*grad)
    spnm     Q inner shrink steps on the local quadratic model around w_{j-1}

The step size t is a fixed scalar for the whole run, which keeps the iterate
sequence a pure function of (seed, config) and lets the k-step variants
reproduce it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster import CostCounters, MachineParams, VirtualCluster, modeled_time
from .data import Sampler
from .lasso import (
    DivergenceError,
    Iterate,
    LassoProblem,
    objective,
    relative_solution_error,
    sampled_gradient,
    soft_threshold,
)
from .linalg import FlopMeter, GramPair, axpy, sampled_gram, symv

ALGORITHMS = ("sfista", "spnm")
GRADIENT_POINTS = ("auxiliary", "previous")
STOPPING_MODES = ("fixed", "tolerance")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters shared by the classical and k-step solvers.

    ``step`` is the fixed step size t; leave it None to have the experiment
    runner fill in 1 / estimate_lipschitz.  ``tol`` is the relative solution
    error threshold used when stopping_mode == "tolerance".
    """

    b: float = 1.0
    lam: float = 0.0
    step: float | None = None
    T: int = 100
    Q: int = 1
    k: int = 1
    seed: int = 0
    tol: float | None = None
    stopping_mode: str = "fixed"
    gradient_eval: str = "auxiliary"
    momentum: bool = True

    def __post_init__(self):
        if not 0.0 < self.b <= 1.0:
            raise ValueError(f"b must lie in (0, 1], got {self.b}")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if self.step is not None and self.step <= 0.0:
            raise ValueError("step must be > 0")
        if self.T < 1 or self.Q < 1 or self.k < 1:
            raise ValueError("T, Q, and k must all be >= 1")
        if self.stopping_mode not in STOPPING_MODES:
            raise ValueError(f"unknown stopping_mode {self.stopping_mode!r}")
        if self.stopping_mode == "tolerance" and (self.tol is None or self.tol <= 0.0):
            raise ValueError("tolerance mode needs tol > 0")
        if self.gradient_eval not in GRADIENT_POINTS:
            raise ValueError(f"unknown gradient_eval {self.gradient_eval!r}")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    rel_sol_err: float | None
    flops: int
    messages: int
    words: int
    mem_peak: int
    modeled_time: float


@dataclass
class RunTrace:
    """Per-iteration diagnostics plus the final iterate.

    Diagnostic evaluations (objective, relative error) are instrumentation and
    do not touch the cost counters.  ``iterates`` holds every w_j when the run
    was asked to keep them.
    """

    algorithm: str
    step: float
    rows: list[TraceRow] = field(default_factory=list)
    w: np.ndarray | None = None
    iterates: list[np.ndarray] | None = None
    stop: str = "iterations"

    @property
    def final_row(self) -> TraceRow:
        return self.rows[-1]


def momentum_coefficient(j: int) -> float:
    """(j-2)/j for j >= 2, clamped to 0 at j = 1."""
    if j < 2:
        return 0.0
    return (j - 2) / j


def sfista_step(
    gram: GramPair,
    w_prev: np.ndarray,
    w_prev2: np.ndarray,
    j: int,
    config: SolverConfig,
    meter: FlopMeter | None = None,
) -> Iterate:
    """One accelerated proximal step using the iteration-j Gram pair."""
    t = config.step
    beta = momentum_coefficient(j) if config.momentum else 0.0
    dw = axpy(-1.0, w_prev2, w_prev, meter)
    v = axpy(beta, dw, w_prev, meter)
    point = v if config.gradient_eval == "auxiliary" else w_prev
    g = sampled_gradient(gram, point, meter)
    u = axpy(-t, g, v, meter)
    w = soft_threshold(u, config.lam * t)
    if meter is not None:
        meter.add(2 * w.shape[0])  # shrink pass, 2 flops per element
    return Iterate(w=w, v=v, j=j).require_finite()


def spnm_step(
    gram: GramPair,
    w_prev: np.ndarray,
    j: int,
    config: SolverConfig,
    meter: FlopMeter | None = None,
) -> Iterate:
    """Q inner shrink steps on the quadratic model with curvature G.

    The model gradient at z is grad(w_prev) + G (z - w_prev); the inner loop
    warm-starts at z_0 = w_prev, so Q = 1 collapses to one plain proximal
    gradient step.
    """
    t = config.step
    g0 = sampled_gradient(gram, w_prev, meter)
    z = w_prev
    for _ in range(config.Q):
        dz = axpy(-1.0, w_prev, z, meter)
        hdz = symv(gram.G, dz, meter)
        mg = axpy(1.0, g0, hdz, meter)
        u = axpy(-t, mg, z, meter)
        z = soft_threshold(u, config.lam * t)
        if meter is not None:
            meter.add(2 * z.shape[0])
    return Iterate(w=z, v=z, j=j).require_finite()


def _validate_run(problem: LassoProblem, config: SolverConfig, algorithm: str) -> None:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if config.step is None:
        raise ValueError("config.step is unresolved; set it before running")
    if problem.lam != config.lam:
        raise ValueError(
            f"problem.lam={problem.lam} and config.lam={config.lam} disagree"
        )


def _state_words(algorithm: str, d: int) -> int:
    # live vectors per rank: sfista keeps w_prev, w_prev2 plus dw/v/grad/u
    # temporaries; spnm keeps w_prev plus g0/z/dz/hdz/mg/u
    return 6 * d if algorithm == "sfista" else 7 * d


def register_run_memory(
    cluster: VirtualCluster, problem: LassoProblem, gram_blocks: int, algorithm: str
) -> None:
    """Charge each rank's ledger with its resident working set.

    Counted words: the rank's share of the feature matrix (dense d * columns,
    sparse stored values), the replicated Gram workspace, and the iterate
    vectors.  The length-n label share is excluded as lower order, matching
    the memory ledger the cost model uses.
    """
    d = problem.d
    workspace = gram_blocks * (d * d + d) + _state_words(algorithm, d)

    def charge(ctx):
        lo, hi = ctx.block
        ctx.ledger.acquire(problem.dataset.block_value_words(lo, hi) + workspace)

    cluster.local_phase(charge)


def gram_exchange(
    problem: LassoProblem,
    sampler: Sampler,
    cluster: VirtualCluster,
    global_iteration: int,
) -> GramPair:
    """Sample, build local partials, and all-reduce one Gram pair."""
    idx = sampler.indices(global_iteration)

    def build(ctx):
        lo, hi = ctx.block
        local = idx[np.searchsorted(idx, lo) : np.searchsorted(idx, hi)]
        return sampled_gram(
            problem.dataset, local, m=sampler.m, owned=ctx.block, meter=ctx.meter
        )

    partials = cluster.local_phase(build)
    reduced = cluster.all_reduce_sum([p.to_payload() for p in partials])
    return GramPair.from_payload(reduced, problem.d)


def _trace_row(
    problem: LassoProblem,
    w: np.ndarray,
    j: int,
    counters: CostCounters,
    machine: MachineParams,
    w_ref: np.ndarray | None,
) -> TraceRow:
    rel = relative_solution_error(w, w_ref) if w_ref is not None else None
    return TraceRow(
        iteration=j,
        objective=objective(problem, w),
        rel_sol_err=rel,
        flops=counters.flops,
        messages=counters.messages,
        words=counters.words,
        mem_peak=counters.mem_peak,
        modeled_time=modeled_time(counters, machine),
    )


def run_classical(
    problem: LassoProblem,
    config: SolverConfig,
    cluster: VirtualCluster,
    algorithm: str = "sfista",
    machine: MachineParams | None = None,
    w_ref: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> RunTrace:
    """Run SFISTA or SPNM with one Gram all-reduce per iteration."""
    _validate_run(problem, config, algorithm)
    if config.stopping_mode == "tolerance" and w_ref is None:
        raise ValueError("tolerance stopping needs a reference solution")
    if cluster.partition.n != problem.n:
        raise ValueError("cluster partition does not match the dataset")
    machine = machine or MachineParams()
    d = problem.d
    sampler = Sampler(seed=config.seed, b=config.b, n=problem.n)
    register_run_memory(cluster, problem, gram_blocks=1, algorithm=algorithm)

    trace = RunTrace(algorithm=algorithm, step=config.step)
    if keep_iterates:
        trace.iterates = []
    w_prev = np.zeros(d)
    w_prev2 = np.zeros(d)
    for j in range(1, config.T + 1):
        try:
            gram = gram_exchange(problem, sampler, cluster, j)

            def update(ctx):
                if algorithm == "sfista":
                    return sfista_step(gram, w_prev, w_prev2, j, config, ctx.meter)
                return spnm_step(gram, w_prev, j, config, ctx.meter)

            iterate = cluster.local_phase(update)[0]
        except DivergenceError as exc:
            exc.partial_trace = trace  # rows up to the failing iteration
            raise
        w_prev2, w_prev = w_prev, iterate.w
        row = _trace_row(problem, iterate.w, j, cluster.critical, machine, w_ref)
        trace.rows.append(row)
        if keep_iterates:
            trace.iterates.append(iterate.w)
        if (
            config.stopping_mode == "tolerance"
            and row.rel_sol_err is not None
            and row.rel_sol_err < config.tol
        ):
            trace.stop = "tolerance"
            break
    trace.w = w_prev
    return trace
