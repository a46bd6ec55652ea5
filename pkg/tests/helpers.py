"""Shared fixtures-in-plain-code for the test suite."""

from __future__ import annotations

import numpy as np

from kstep_lasso import (
    Dataset,
    LassoProblem,
    SolverConfig,
    VirtualCluster,
    estimate_lipschitz,
    partition_columns,
    synthesize,
)


def tiny_dataset() -> Dataset:
    """The 2x2 worked example used throughout: X = [[1,2],[0,1]], y = [1,1]."""
    return Dataset(X=np.array([[1.0, 2.0], [0.0, 1.0]]), y=np.array([1.0, 1.0]))


def lam_max(dataset: Dataset) -> float:
    """Smallest lambda whose optimum is exactly zero: ||(1/n) X y||_inf."""
    return float(np.max(np.abs(dataset.X @ dataset.y / dataset.n)))


def make_problem(
    d=20, n=200, sparsity=0.3, noise=0.1, data_seed=42, lam_frac=0.1
) -> tuple[LassoProblem, float]:
    """Synthetic problem plus the default step size 1/L."""
    dataset, _ = synthesize(d, n, sparsity, noise, seed=data_seed)
    lam = lam_frac * lam_max(dataset)
    return LassoProblem(dataset=dataset, lam=lam), 1.0 / estimate_lipschitz(dataset)


def fresh_cluster(dataset: Dataset, P: int, workers: int = 1) -> VirtualCluster:
    return VirtualCluster(partition_columns(dataset, P), workers=workers)


def config_for(problem: LassoProblem, step: float, **overrides) -> SolverConfig:
    fields = dict(b=1.0, lam=problem.lam, step=step, T=20, seed=0)
    fields.update(overrides)
    return SolverConfig(**fields)


def max_rel_inf_diff(ws_a, ws_b) -> float:
    """Largest per-iteration relative infinity-norm gap between iterate lists."""
    worst = 0.0
    for a, b in zip(ws_a, ws_b):
        denom = max(np.max(np.abs(b)), 1e-300)
        worst = max(worst, np.max(np.abs(a - b)) / denom)
    return worst
