"""Metered dense/sparse kernels for sampled Gram construction and vector updates.

Flop accounting rule, used consistently everywhere: a multiply and an add are
two separate flops, so one fused multiply-add pair costs 2.  Pinned charges:

    sampled_gram   2*d^2*|S| + 2*d*|S|   dense columns
                   2*sum(nnz_i^2) + 2*d*|S|   sparse columns
    symv           2*d^2
    axpy/dot/norm  2*d (one elementwise pass over a length-d vector)

Summation order is fixed (ascending column index inside a sample, ascending
rank at reduction time) so repeated runs are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


class OwnershipError(ValueError):
    """A sampled column index fell outside the processor's owned block."""


class FlopMeter:
    """Accumulating flop counter; monotone within a run."""

    __slots__ = ("flops",)

    def __init__(self) -> None:
        self.flops = 0

    def add(self, n: int) -> None:
        self.flops += int(n)


@dataclass(frozen=True)
class GramPair:
    """Sample-averaged sufficient statistics (1/m) X_S X_S^T and (1/m) X_S y_S.

    G is d x d symmetric positive semidefinite; R has length d.  With the full
    sample these are (1/n) X X^T and (1/n) X y exactly.
    """

    G: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        d = self.R.shape[0]
        if self.G.shape != (d, d):
            raise ValueError(f"G is {self.G.shape}, expected ({d}, {d})")

    @property
    def d(self) -> int:
        return self.R.shape[0]

    @property
    def payload_words(self) -> int:
        return self.d * self.d + self.d

    def to_payload(self) -> np.ndarray:
        return np.concatenate([self.G.ravel(), self.R])

    @staticmethod
    def from_payload(payload: np.ndarray, d: int) -> "GramPair":
        return GramPair(G=payload[: d * d].reshape(d, d).copy(), R=payload[d * d :].copy())


def sampled_gram(
    dataset: Dataset,
    indices: np.ndarray,
    m: int,
    owned: tuple[int, int] | None = None,
    meter: FlopMeter | None = None,
) -> GramPair:
    """Partial Gram pair over the given sampled columns, scaled by 1/m.

    ``m`` is the global sample size, so summing the partials returned by every
    processor reproduces the serial pair.  Columns are accumulated in
    ascending index order regardless of the order of ``indices``; an index
    outside ``owned`` (when given) raises OwnershipError.
    """
    if m < 1:
        raise ValueError("global sample size m must be >= 1")
    d = dataset.d
    idx = np.sort(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= dataset.n):
        raise OwnershipError(f"index out of range [0, {dataset.n})")
    if owned is not None and idx.size:
        lo, hi = owned
        if idx[0] < lo or idx[-1] >= hi:
            bad = idx[(idx < lo) | (idx >= hi)][0]
            raise OwnershipError(f"column {bad} is outside owned block [{lo}, {hi})")

    G = np.zeros((d, d))
    R = np.zeros(d)
    flops = 0
    if dataset.is_sparse:
        for i in idx:
            rows, vals = dataset.column_nonzeros(int(i))
            G[np.ix_(rows, rows)] += np.outer(vals, vals)
            R[rows] += vals * dataset.y[i]
            flops += 2 * int(rows.size) ** 2
        flops += 2 * d * int(idx.size)
    else:
        for i in idx:
            x = dataset.column(int(i))
            G += np.outer(x, x)
            R += x * dataset.y[i]
        flops = 2 * d * d * int(idx.size) + 2 * d * int(idx.size)
    if meter is not None:
        meter.add(flops)
    G /= m
    R /= m
    return GramPair(G=G, R=R)


def _check_dim(name: str, v: np.ndarray, d: int) -> None:
    if v.shape != (d,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({d},)")


def symv(G: np.ndarray, w: np.ndarray, meter: FlopMeter | None = None) -> np.ndarray:
    """Dense symmetric matrix-vector product G @ w (2*d^2 flops)."""
    d = G.shape[0]
    if G.shape != (d, d):
        raise ValueError(f"G is {G.shape}, expected square")
    _check_dim("w", w, d)
    if meter is not None:
        meter.add(2 * d * d)
    return G @ w


def axpy(a: float, x: np.ndarray, y: np.ndarray, meter: FlopMeter | None = None) -> np.ndarray:
    """a*x + y (2*d flops)."""
    _check_dim("y", y, x.shape[0])
    if meter is not None:
        meter.add(2 * x.shape[0])
    return a * x + y


def dot(x: np.ndarray, y: np.ndarray, meter: FlopMeter | None = None) -> float:
    _check_dim("y", y, x.shape[0])
    if meter is not None:
        meter.add(2 * x.shape[0])
    return float(x @ y)


def norm2(x: np.ndarray, meter: FlopMeter | None = None) -> float:
    if meter is not None:
        meter.add(2 * x.shape[0])
    return float(np.linalg.norm(x))


def norm1(x: np.ndarray, meter: FlopMeter | None = None) -> float:
    if meter is not None:
        meter.add(2 * x.shape[0])
    return float(np.sum(np.abs(x)))


def estimate_lipschitz(dataset: Dataset, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest eigenvalue of (1/n) X X^T by power iteration.

    Stops when the Rayleigh quotient's relative change drops below ``tol`` or
    after ``max_iter`` iterations.  The start vector comes from a fixed-seed
    generator so the estimate is deterministic.  Never returns below 1e-12.
    """
    full = sampled_gram(dataset, np.arange(dataset.n), m=dataset.n)
    A = full.G
    d = dataset.d
    v = np.random.default_rng(0).standard_normal(d)
    v /= np.linalg.norm(v)
    rayleigh = float(v @ (A @ v))
    for _ in range(max_iter):
        Av = A @ v
        nrm = np.linalg.norm(Av)
        if nrm == 0.0:
            rayleigh = 0.0
            break
        v = Av / nrm
        new = float(v @ (A @ v))
        if abs(new - rayleigh) <= tol * max(abs(new), 1e-30):
            rayleigh = new
            break
        rayleigh = new
    return max(rayleigh, 1e-12)
