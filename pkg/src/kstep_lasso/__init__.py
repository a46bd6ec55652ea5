"""LASSO solvers with k-step communication-avoiding variants on a metered virtual cluster."""

from .cluster import (
    ClusterProtocolError,
    CostCounters,
    MachineParams,
    VirtualCluster,
    modeled_time,
    spmd_execute,
)
from .data import (
    ColumnPartition,
    Dataset,
    LibsvmParseError,
    Sampler,
    load_libsvm,
    parse_libsvm,
    partition_columns,
    sample_indices,
    serialize_libsvm,
    synthesize,
)
from .experiments import ExperimentSpec, SyntheticSpec, run_experiment, sweep
from .kstep import GramBlocks, build_gram_blocks, ca_sfista_run, ca_spnm_run
from .lasso import (
    DivergenceError,
    Iterate,
    LassoProblem,
    full_gradient,
    kkt_residual,
    objective,
    relative_solution_error,
    sampled_gradient,
    soft_threshold,
)
from .linalg import (
    FlopMeter,
    GramPair,
    OwnershipError,
    estimate_lipschitz,
    sampled_gram,
    symv,
)
from .reference import (
    ReferenceFailure,
    ReferenceSolution,
    get_reference,
    solve_reference,
)
from .solvers import (
    RunTrace,
    SolverConfig,
    TraceRow,
    run_classical,
    sfista_step,
    spnm_step,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterProtocolError",
    "ColumnPartition",
    "CostCounters",
    "Dataset",
    "DivergenceError",
    "ExperimentSpec",
    "FlopMeter",
    "GramBlocks",
    "GramPair",
    "Iterate",
    "LassoProblem",
    "LibsvmParseError",
    "MachineParams",
    "OwnershipError",
    "ReferenceFailure",
    "ReferenceSolution",
    "RunTrace",
    "Sampler",
    "SolverConfig",
    "SyntheticSpec",
    "TraceRow",
    "VirtualCluster",
    "build_gram_blocks",
    "ca_sfista_run",
    "ca_spnm_run",
    "estimate_lipschitz",
    "full_gradient",
    "get_reference",
    "kkt_residual",
    "load_libsvm",
    "modeled_time",
    "objective",
    "parse_libsvm",
    "partition_columns",
    "relative_solution_error",
    "run_classical",
    "run_experiment",
    "sample_indices",
    "sampled_gradient",
    "sampled_gram",
    "serialize_libsvm",
    "sfista_step",
    "soft_threshold",
    "solve_reference",
    "spmd_execute",
    "spnm_step",
    "sweep",
    "symv",
    "synthesize",
]
