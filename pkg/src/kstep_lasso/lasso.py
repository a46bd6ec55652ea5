"""L1-regularized least squares: objective, gradients, prox operator, optimality.

The composite objective is

    F(w) = (1/2n) ||X^T w - y||_2^2 + lambda * ||w||_1

with gradient of the smooth part (1/n)(X X^T w - X y).  The sampled variant
replaces the full Gram statistics with a GramPair built from a column sample.
All functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .linalg import FlopMeter, GramPair, axpy, symv


@dataclass(frozen=True)
class LassoProblem:
    dataset: Dataset
    lam: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @property
    def d(self) -> int:
        return self.dataset.d

    @property
    def n(self) -> int:
        return self.dataset.n


class DivergenceError(RuntimeError):
    """An iterate picked up NaN or Inf entries."""


@dataclass(frozen=True)
class Iterate:
    """Solver state at iteration j: optimization variable w and auxiliary v."""

    w: np.ndarray
    v: np.ndarray
    j: int

    def require_finite(self) -> "Iterate":
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.v))):
            raise DivergenceError(f"non-finite iterate at iteration {self.j}")
        return self


def objective(problem: LassoProblem, w: np.ndarray) -> float:
    """F(w) = (1/2n)||X^T w - y||^2 + lambda*||w||_1."""
    if w.shape != (problem.d,):
        raise ValueError(f"w has shape {w.shape}, expected ({problem.d},)")
    r = np.asarray(problem.dataset.X.T @ w - problem.dataset.y)
    return float(r @ r) / (2 * problem.n) + problem.lam * float(np.sum(np.abs(w)))


def full_gradient(
    problem: LassoProblem, w: np.ndarray, meter: FlopMeter | None = None
) -> np.ndarray:
    """(1/n)(X X^T w - X y), evaluated as two matrix-vector products."""
    if w.shape != (problem.d,):
        raise ValueError(f"w has shape {w.shape}, expected ({problem.d},)")
    X = problem.dataset.X
    g = (X @ (X.T @ w) - X @ problem.dataset.y) / problem.n
    if meter is not None:
        # two d x n products plus the length-d combine
        meter.add(4 * problem.d * problem.n + 2 * problem.d)
    return np.asarray(g)


def sampled_gradient(
    gram: GramPair, w: np.ndarray, meter: FlopMeter | None = None
) -> np.ndarray:
    """G w - R for an already 1/m-normalized Gram pair."""
    gw = symv(gram.G, w, meter)
    return axpy(-1.0, gram.R, gw, meter)


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    """Componentwise shrink toward zero by ``threshold``; ties map to 0."""
    if threshold < 0.0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def kkt_residual(problem: LassoProblem, w: np.ndarray) -> float:
    """Max violation of the L1 subgradient optimality conditions at w.

    Zero exactly when w is optimal: on the support the gradient must cancel
    lambda*sign(w); off the support it must stay inside [-lambda, lambda].
    """
    g = full_gradient(problem, w)
    lam = problem.lam
    on = w != 0.0
    res = 0.0
    if np.any(on):
        res = float(np.max(np.abs(g[on] + lam * np.sign(w[on]))))
    if np.any(~on):
        res = max(res, float(np.max(np.maximum(np.abs(g[~on]) - lam, 0.0))))
    return res


def relative_solution_error(w: np.ndarray, w_ref: np.ndarray) -> float:
    """||w - w_ref|| / ||w_ref||; undefined (raises) for a zero reference."""
    denom = float(np.linalg.norm(w_ref))
    if denom == 0.0:
        raise ValueError("reference solution is zero; relative error is undefined")
    return float(np.linalg.norm(w - w_ref)) / denom
