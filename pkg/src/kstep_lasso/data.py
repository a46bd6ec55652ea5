"""Dataset handling: LIBSVM ingestion, synthetic problems, column partitioning, sampling.

The feature matrix X is stored column-major (d features x n samples), dense or
sparse-by-column (CSC).  Columns are the unit of distribution and of random
sampling: a virtual processor owns a contiguous block of columns, and every
solver draws its per-iteration sample from the same counter-based generator so
that loop restructurings consume identical index sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; the message names the offending line."""


@dataclass(frozen=True)
class Dataset:
    """A d x n feature matrix (samples are columns) with a length-n label vector.

    X is either a dense ndarray or a scipy CSC matrix; y is always dense.
    Instances are immutable after construction and safe to share across
    virtual processors.
    """

    X: np.ndarray | sparse.csc_matrix
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        d, n = self.X.shape
        if d < 1 or n < 1:
            raise ValueError(f"X must be at least 1x1, got {d}x{n}")
        if self.y.shape != (n,):
            raise ValueError(f"y has length {self.y.shape}, expected ({n},)")

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.X)

    def densified(self) -> np.ndarray:
        """Dense copy of X; sparse storage round-trips exactly."""
        if self.is_sparse:
            return self.X.toarray()
        return np.array(self.X, copy=True)

    def nnz_per_column(self) -> np.ndarray:
        if self.is_sparse:
            return np.diff(self.X.indptr).astype(np.int64)
        return np.count_nonzero(self.X, axis=0).astype(np.int64)

    def column(self, i: int) -> np.ndarray:
        """Column i as a dense vector."""
        if self.is_sparse:
            return self.X[:, [i]].toarray().ravel()
        return np.asarray(self.X[:, i])

    def column_nonzeros(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(row indices, values) of the stored entries of column i."""
        if self.is_sparse:
            lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
            return self.X.indices[lo:hi], self.X.data[lo:hi]
        col = np.asarray(self.X[:, i])
        rows = np.nonzero(col)[0]
        return rows, col[rows]

    def block_value_words(self, start: int, stop: int) -> int:
        """Words of numeric payload held for columns [start, stop)."""
        if self.is_sparse:
            return int(self.X.indptr[stop] - self.X.indptr[start])
        return self.d * (stop - start)


def parse_libsvm(text: str | bytes, n_features: int | None = None) -> Dataset:
    """Parse LIBSVM-format text into a Dataset.

    Each nonempty line is ``label idx:val idx:val ...`` with 1-based strictly
    increasing indices; line i becomes column i of X and y[i] = label.  The
    feature count is the largest index seen unless ``n_features`` overrides it.

    Raises LibsvmParseError on malformed input, naming the line number.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    labels: list[float] = []
    data: list[float] = []
    rows: list[int] = []
    indptr: list[int] = [0]
    max_index = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(
                f"line {lineno}: label {tokens[0]!r} is not numeric"
            ) from None
        prev_idx = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(
                    f"line {lineno}: token {tok!r} is not idx:val"
                )
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(
                    f"line {lineno}: token {tok!r} has a non-numeric part"
                ) from None
            if idx < 1:
                raise LibsvmParseError(f"line {lineno}: index {idx} is not 1-based")
            if idx <= prev_idx:
                raise LibsvmParseError(
                    f"line {lineno}: index {idx} does not increase (previous {prev_idx})"
                )
            prev_idx = idx
            rows.append(idx - 1)
            data.append(val)
            max_index = max(max_index, idx)
        labels.append(label)
        indptr.append(len(data))

    if not labels:
        raise LibsvmParseError("no samples")

    d = max_index if n_features is None else int(n_features)
    if d < max_index:
        raise LibsvmParseError(
            f"n_features={d} is smaller than the largest index seen ({max_index})"
        )
    if d < 1:
        raise LibsvmParseError("no features; pass n_features to force a width")
    X = sparse.csc_matrix(
        (np.array(data), np.array(rows, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(d, len(labels)),
    )
    return Dataset(X=X, y=np.array(labels))


def serialize_libsvm(dataset: Dataset) -> str:
    """Inverse of parse_libsvm: one line per sample, stored nonzeros only."""
    lines = []
    for i in range(dataset.n):
        rows, vals = dataset.column_nonzeros(i)
        pairs = " ".join(f"{r + 1}:{float(v)!r}" for r, v in zip(rows, vals))
        lines.append(f"{float(dataset.y[i])!r} {pairs}".rstrip())
    return "\n".join(lines) + "\n"


def load_libsvm(path, n_features: int | None = None) -> Dataset:
    with open(path, "rb") as fh:
        return parse_libsvm(fh.read(), n_features=n_features)


def synthesize(
    d: int,
    n: int,
    sparsity: float,
    noise_sd: float,
    seed: int,
) -> tuple[Dataset, np.ndarray]:
    """Generate a dense Gaussian problem with a planted sparse weight vector.

    X entries are standard normal, w_true has ceil(sparsity * d) nonzeros, and
    y = X^T w_true + noise.  Bit-for-bit deterministic given the seed.
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity must lie in [0, 1], got {sparsity}")
    if noise_sd < 0.0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((d, n))
    w_true = np.zeros(d)
    k = math.ceil(sparsity * d)
    support = rng.choice(d, size=k, replace=False)
    w_true[support] = rng.standard_normal(k)
    y = X.T @ w_true
    if noise_sd > 0.0:
        y = y + noise_sd * rng.standard_normal(n)
    return Dataset(X=X, y=y), w_true


@dataclass(frozen=True)
class ColumnPartition:
    """Contiguous column blocks covering [0, n): boundaries[p] .. boundaries[p+1]."""

    P: int
    boundaries: tuple[int, ...]

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be >= 1")
        b = self.boundaries
        if len(b) != self.P + 1 or b[0] != 0:
            raise ValueError("boundaries must be P+1 values starting at 0")
        if any(b[i] > b[i + 1] for i in range(self.P)):
            raise ValueError("boundaries must be non-decreasing")

    @property
    def n(self) -> int:
        return self.boundaries[-1]

    def block(self, rank: int) -> tuple[int, int]:
        return self.boundaries[rank], self.boundaries[rank + 1]

    def block_size(self, rank: int) -> int:
        lo, hi = self.block(rank)
        return hi - lo


def partition_columns(dataset: Dataset, P: int) -> ColumnPartition:
    """Split columns into P contiguous blocks of near-equal nonzero count.

    Boundary p is placed at the first column where the nonzero prefix sum
    reaches p * total/P.  When n >= P the boundaries are then clamped so every
    block keeps at least one column.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    n = dataset.n
    nnz = dataset.nnz_per_column()
    prefix = np.concatenate(([0], np.cumsum(nnz)))
    total = int(prefix[-1])
    boundaries = [0]
    for p in range(1, P):
        target = total * p / P
        cut = int(np.searchsorted(prefix, target, side="left"))
        boundaries.append(min(cut, n))
    boundaries.append(n)
    if n >= P:
        # guarantee non-empty blocks without reordering boundaries
        for p in range(1, P):
            boundaries[p] = max(boundaries[p], p)
        for p in range(P - 1, 0, -1):
            boundaries[p] = min(boundaries[p], n - (P - p))
    return ColumnPartition(P=P, boundaries=tuple(boundaries))


@dataclass(frozen=True)
class Sampler:
    """Counter-based column sampler shared by every solver variant.

    For a fixed (seed, global_iteration) the same sorted set of m = floor(b*n)
    distinct column indices is returned on every call, in every process, and
    in every solver, which is what makes the k-step reformulations exactly
    reproduce the classical iterate sequence.
    """

    seed: int
    b: float
    n: int
    m: int = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.b <= 1.0:
            raise ValueError(f"sampling fraction b must lie in (0, 1], got {self.b}")
        if self.n < 1:
            raise ValueError("population size n must be >= 1")
        m = int(math.floor(self.b * self.n))
        if m < 1:
            raise ValueError(
                f"floor(b*n) = {m}; the sample would be empty (b={self.b}, n={self.n})"
            )
        object.__setattr__(self, "m", m)

    def indices(self, global_iteration: int) -> np.ndarray:
        """m distinct indices in [0, n), sorted ascending."""
        key = np.array(
            [self.seed & 0xFFFFFFFFFFFFFFFF, global_iteration & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        gen = np.random.Generator(np.random.Philox(key=key))
        if self.m == self.n:
            return np.arange(self.n, dtype=np.int64)
        idx = gen.choice(self.n, size=self.m, replace=False)
        return np.sort(idx.astype(np.int64))


def sample_indices(sampler: Sampler, global_iteration: int) -> np.ndarray:
    return sampler.indices(global_iteration)
