import numpy as np
import pytest
from helpers import lam_max, make_problem, tiny_dataset

from kstep_lasso import (
    Dataset,
    LassoProblem,
    ReferenceFailure,
    get_reference,
    kkt_residual,
    relative_solution_error,
    solve_reference,
    synthesize,
)
from kstep_lasso.reference import dataset_hash, load_reference, save_reference


def test_reference_zero_solution_above_lam_max():
    ds = tiny_dataset()
    prob = LassoProblem(dataset=ds, lam=lam_max(ds))
    solution = solve_reference(prob)
    assert np.array_equal(solution.w, np.zeros(2))
    assert solution.kkt == 0.0
    assert solution.iterations <= 5
    with pytest.raises(ValueError, match="undefined"):
        relative_solution_error(np.ones(2), solution.w)


def test_reference_identity_least_squares():
    prob = LassoProblem(
        dataset=Dataset(X=np.eye(2), y=np.array([1.0, 2.0])), lam=0.0
    )
    solution = solve_reference(prob)
    assert np.max(np.abs(solution.w - [1.0, 2.0])) <= 1e-7
    assert solution.kkt <= 1e-8


def test_reference_certificate_on_synthetic_problem():
    prob, _ = make_problem(d=20, n=200, lam_frac=0.1)
    solution = solve_reference(prob)
    assert solution.kkt <= 1e-8
    assert kkt_residual(prob, solution.w) <= 1e-8


def test_reference_failure_is_raised_not_silent():
    prob, _ = make_problem(d=10, n=60, lam_frac=0.1)
    with pytest.raises(ReferenceFailure, match="after 3 iterations"):
        solve_reference(prob, max_iterations=3)


def test_reference_cache_round_trip(tmp_path):
    prob, _ = make_problem(d=8, n=50, lam_frac=0.2)
    path = tmp_path / "ref.npz"
    solution = solve_reference(prob)
    save_reference(path, prob, solution)
    loaded = load_reference(path, prob)
    assert loaded is not None
    assert np.array_equal(loaded.w, solution.w)
    assert loaded.kkt == solution.kkt
    assert loaded.iterations == solution.iterations


def test_reference_cache_rejects_mismatched_key(tmp_path):
    prob, _ = make_problem(d=8, n=50, lam_frac=0.2)
    path = tmp_path / "ref.npz"
    save_reference(path, prob, solve_reference(prob))
    other_lam = LassoProblem(dataset=prob.dataset, lam=prob.lam * 2)
    assert load_reference(path, other_lam) is None
    other_data, _ = synthesize(8, 50, 0.3, 0.1, seed=99)
    other_prob = LassoProblem(dataset=other_data, lam=prob.lam)
    assert load_reference(path, other_prob) is None
    assert load_reference(tmp_path / "missing.npz", prob) is None


def test_get_reference_uses_cache(tmp_path):
    prob, _ = make_problem(d=6, n=40, lam_frac=0.2)
    path = tmp_path / "ref.npz"
    first = get_reference(prob, cache_path=path)
    assert path.exists()
    # poison the stored vector: a cache hit must return it verbatim
    doctored = np.load(path)
    np.savez(
        path,
        dataset_hash=doctored["dataset_hash"],
        lam=doctored["lam"],
        w=first.w + 1.0,
        kkt=doctored["kkt"],
        iterations=doctored["iterations"],
    )
    second = get_reference(prob, cache_path=path)
    assert np.array_equal(second.w, first.w + 1.0)


def test_dataset_hash_distinguishes_values_and_structure():
    a, _ = synthesize(4, 10, 0.5, 0.0, seed=1)
    b, _ = synthesize(4, 10, 0.5, 0.0, seed=2)
    assert dataset_hash(a) == dataset_hash(a)
    assert dataset_hash(a) != dataset_hash(b)
    flipped = Dataset(X=a.X.copy(), y=a.y + 1e-12)
    assert dataset_hash(a) != dataset_hash(flipped)
