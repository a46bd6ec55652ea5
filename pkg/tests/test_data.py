import numpy as np
import pytest
from helpers import tiny_dataset

from kstep_lasso import (
    Dataset,
    LibsvmParseError,
    Sampler,
    parse_libsvm,
    partition_columns,
    sample_indices,
    serialize_libsvm,
    synthesize,
)
from kstep_lasso.reference import solve_reference
from kstep_lasso.lasso import LassoProblem


# ---------------------------------------------------------------- parsing

def test_parse_two_line_example():
    ds = parse_libsvm("1 1:1 2:0.5\n-1 2:2\n")
    assert (ds.d, ds.n) == (2, 2)
    dense = ds.densified()
    assert np.array_equal(dense[:, 0], [1.0, 0.5])
    assert np.array_equal(dense[:, 1], [0.0, 2.0])
    assert np.array_equal(ds.y, [1.0, -1.0])


def test_parse_empty_input():
    with pytest.raises(LibsvmParseError, match="no samples"):
        parse_libsvm("\n   \n")


def test_parse_malformed_pair_names_line():
    with pytest.raises(LibsvmParseError, match="line 2"):
        parse_libsvm("1 1:1\n1 broken\n")


def test_parse_non_numeric_token_names_line():
    with pytest.raises(LibsvmParseError, match="line 1"):
        parse_libsvm("1 1:abc\n")
    with pytest.raises(LibsvmParseError, match="line 3"):
        parse_libsvm("1 1:1\n-1 1:2\nxyz 1:3\n")


def test_parse_non_increasing_index_names_line():
    with pytest.raises(LibsvmParseError, match="line 1"):
        parse_libsvm("1 2:1 2:2\n")
    with pytest.raises(LibsvmParseError, match="line 2"):
        parse_libsvm("1 1:1\n1 3:1 2:1\n")


def test_parse_feature_override():
    ds = parse_libsvm("1 1:1\n", n_features=5)
    assert ds.d == 5
    with pytest.raises(LibsvmParseError, match="smaller than"):
        parse_libsvm("1 3:1\n", n_features=2)


def test_parse_abalone_scale_file():
    # file with the shape of the abalone benchmark: 4177 samples, 8 features
    rng = np.random.default_rng(5)
    lines = []
    for _ in range(4177):
        vals = rng.normal(size=8).round(4)
        pairs = " ".join(f"{j + 1}:{vals[j]}" for j in range(8))
        lines.append(f"{rng.integers(1, 30)} {pairs}")
    ds = parse_libsvm("\n".join(lines))
    assert (ds.n, ds.d) == (4177, 8)


def test_libsvm_round_trip():
    text = "1 1:1 3:-0.25\n-1 2:2\n0.5 1:0.125 2:1 3:4\n"
    first = parse_libsvm(text)
    second = parse_libsvm(serialize_libsvm(first))
    assert (first.d, first.n) == (second.d, second.n)
    assert np.array_equal(first.y, second.y)
    assert np.array_equal(first.densified(), second.densified())
    # sparse structure preserved, not just values
    assert np.array_equal(first.X.indices, second.X.indices)
    assert np.array_equal(first.X.indptr, second.X.indptr)


def test_sparse_round_trips_to_dense_exactly():
    ds = parse_libsvm("1 1:1 2:0.5\n-1 2:2\n")
    assert ds.is_sparse
    dense_ds = Dataset(X=ds.densified(), y=ds.y)
    assert np.array_equal(dense_ds.X, ds.densified())
    assert np.array_equal(ds.nnz_per_column(), dense_ds.nnz_per_column())


# ---------------------------------------------------------------- synthesis

def test_synthesize_zero_noise_is_exact():
    ds, w_true = synthesize(d=2, n=4, sparsity=0.5, noise_sd=0.0, seed=3)
    assert np.count_nonzero(w_true) == 1
    assert np.array_equal(ds.y, ds.X.T @ w_true)


def test_synthesize_deterministic():
    a, wa = synthesize(6, 11, 0.4, 0.2, seed=9)
    b, wb = synthesize(6, 11, 0.4, 0.2, seed=9)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(wa, wb)


def test_synthesize_validation():
    with pytest.raises(ValueError):
        synthesize(0, 5, 0.5, 0.0, seed=1)
    with pytest.raises(ValueError):
        synthesize(5, 5, 1.5, 0.0, seed=1)


def test_reference_recovers_planted_support():
    ds, w_true = synthesize(d=20, n=200, sparsity=0.3, noise_sd=0.1, seed=42)
    lam = 0.05 * float(np.max(np.abs(ds.X @ ds.y / ds.n)))
    solution = solve_reference(LassoProblem(dataset=ds, lam=lam))
    assert np.array_equal(solution.w != 0.0, w_true != 0.0)


# ---------------------------------------------------------------- partitioning

def test_partition_matches_minmax_enumeration():
    # per-column nnz [4,1,3,2]: best of the 3 contiguous 2-way splits
    X = np.zeros((4, 4))
    X[:4, 0] = 1.0
    X[:1, 1] = 1.0
    X[:3, 2] = 1.0
    X[:2, 3] = 1.0
    ds = Dataset(X=X, y=np.zeros(4))
    nnz = [4, 1, 3, 2]
    best_cut = min(range(1, 4), key=lambda c: max(sum(nnz[:c]), sum(nnz[c:])))
    part = partition_columns(ds, 2)
    assert part.boundaries == (0, best_cut, 4)
    assert part.boundaries == (0, 2, 4)  # both blocks hold 5 nonzeros


def test_partition_uniform_dense():
    ds = Dataset(X=np.ones((3, 6)), y=np.zeros(6))
    assert partition_columns(ds, 3).boundaries == (0, 2, 4, 6)


def test_partition_single_processor():
    ds, _ = synthesize(4, 9, 0.5, 0.0, seed=1)
    assert partition_columns(ds, 1).boundaries == (0, 9)


def test_partition_completeness_random_nnz():
    rng = np.random.default_rng(0)
    for trial in range(25):
        d, n = 6, int(rng.integers(1, 40))
        X = np.where(rng.random((d, n)) < 0.4, rng.normal(size=(d, n)), 0.0)
        ds = Dataset(X=X, y=np.zeros(n))
        for P in (1, 2, 3, 7):
            part = partition_columns(ds, P)
            assert part.boundaries[0] == 0 and part.boundaries[-1] == n
            assert all(
                part.boundaries[i] <= part.boundaries[i + 1] for i in range(P)
            )
            if n >= P:
                assert all(part.block_size(p) >= 1 for p in range(P))


def test_partition_clamps_empty_trailing_blocks():
    X = np.zeros((2, 3))
    X[:, 2] = 1.0  # all mass in the final column
    part = partition_columns(Dataset(X=X, y=np.zeros(3)), 2)
    assert part.block_size(0) >= 1 and part.block_size(1) >= 1


# ---------------------------------------------------------------- sampling

def test_sampler_full_batch_is_identity():
    s = Sampler(seed=1, b=1.0, n=7)
    for it in (1, 2, 50):
        assert np.array_equal(sample_indices(s, it), np.arange(7))


def test_sampler_size_is_floor_bn():
    s = Sampler(seed=0, b=0.5, n=5)
    assert s.m == 2
    assert sample_indices(s, 3).shape == (2,)


def test_sampler_rejects_empty_sample():
    with pytest.raises(ValueError, match="empty"):
        Sampler(seed=0, b=0.01, n=10)


def test_sampler_deterministic_and_sorted():
    s = Sampler(seed=123, b=0.3, n=50)
    for it in range(1, 20):
        idx = s.indices(it)
        assert np.array_equal(idx, s.indices(it))
        assert np.array_equal(idx, np.sort(idx))
        assert len(set(idx.tolist())) == s.m
        assert idx.min() >= 0 and idx.max() < 50
    # different iterations give different draws somewhere
    assert any(
        not np.array_equal(s.indices(i), s.indices(i + 1)) for i in range(1, 10)
    )


def test_sampler_empirical_frequency():
    s = Sampler(seed=7, b=0.2, n=100)
    counts = np.zeros(100)
    trials = 10_000
    for it in range(trials):
        counts[s.indices(it)] += 1
    freq = counts / trials
    assert np.all(np.abs(freq - 0.2) < 0.05)
