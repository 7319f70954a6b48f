from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mofpca.dataset import RawTable, from_arrays, standardize
from mofpca.exceptions import InputError
from mofpca.pca import (PrincipalBasis, compute_basis, evaluate, evaluate_batch, evaluate_direct,
                        group_errors, load_basis, save_basis)


def svd_oracle(x):
    """Eigenpairs of X^T X from the SVD of X, sign-normalised like compute_basis."""
    _, s, vt = np.linalg.svd(x, full_matrices=True)
    vals = np.zeros(x.shape[1])
    vals[:len(s)] = s ** 2
    vecs = vt.T
    pivot = np.argmax(np.abs(vecs), axis=0)
    return vals, vecs * np.sign(vecs[pivot, np.arange(vecs.shape[1])])


def test_axis_aligned_basis(diag_toy):
    _, basis = diag_toy
    np.testing.assert_allclose(basis.eigenvalues, [3.0, 1.0], rtol=1e-12)
    np.testing.assert_allclose(np.abs(basis.u), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(basis.group_a_energy, [3.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(basis.group_b_energy, [0.0, 1.0], atol=1e-12)


def test_correlated_toy_matches_svd():
    x = np.array([[1, 1], [-1, -1], [1, 0.5], [-1, -0.5]], dtype=float)
    ds = standardize(RawTable(x, ["a", "b"]), [0, 2], [1, 3], mode="none")
    basis = compute_basis(ds)
    vals, vecs = svd_oracle(x)
    np.testing.assert_allclose(basis.eigenvalues, vals, rtol=1e-8)
    np.testing.assert_allclose(basis.u, vecs, atol=1e-8)


def test_basis_invariants(random_dataset):
    ds, basis = random_dataset(n=50, d=7, seed=4)
    assert np.max(np.abs(basis.u.T @ basis.u - np.eye(7))) < 1e-8
    assert np.all(np.diff(basis.eigenvalues) <= 0)
    np.testing.assert_allclose(basis.eigenvalues.sum(), basis.total_energy, rtol=1e-8)
    np.testing.assert_allclose(basis.group_a_energy + basis.group_b_energy, basis.eigenvalues, rtol=1e-8)
    # zscore makes every column carry energy n
    np.testing.assert_allclose(basis.total_energy, ds.n * ds.d, rtol=1e-10)


def test_sign_convention(random_dataset):
    _, basis = random_dataset(seed=9)
    pivot = np.argmax(np.abs(basis.u), axis=0)
    assert np.all(basis.u[pivot, np.arange(basis.d)] > 0)


def test_full_selection_is_exact_zero(random_dataset):
    _, basis = random_dataset(d=5, seed=2)
    obj = evaluate(basis, range(5))
    assert obj.recon_error == 0.0
    assert obj.fairness == 0.0


def test_identical_groups_have_zero_fairness():
    rng = np.random.default_rng(5)
    half = rng.standard_normal((15, 4))
    ds = standardize(RawTable(np.vstack([half, half]), list("abcd")), range(15), range(15, 30), mode="none")
    basis = compute_basis(ds)
    for r in range(1, 5):
        for sel in combinations(range(4), r):
            assert evaluate(basis, sel).fairness == 0.0


def test_all_subsets_match_direct_oracle(random_dataset):
    ds, basis = random_dataset(n=20, d=6, seed=11)
    subsets = list(combinations(range(6), 3))
    assert len(subsets) == 20
    for sel in subsets:
        np.testing.assert_allclose(evaluate(basis, sel), evaluate_direct(ds, basis, sel), rtol=1e-8)


def test_top1_on_diag_toy(diag_toy):
    ds, basis = diag_toy
    direct = evaluate_direct(ds, basis, [0])
    assert direct.recon_error == pytest.approx(1.0, rel=1e-12)
    # A: no residual; B keeps its full axis-1 energy over 2 samples
    assert direct.fairness == pytest.approx(0.25, rel=1e-12)
    assert group_errors(basis, [0]) == pytest.approx((0.0, 0.5))


@pytest.mark.parametrize("sel", [[], [0, 0], [2], [-1]])
def test_invalid_selections(diag_toy, sel):
    ds, basis = diag_toy
    with pytest.raises(InputError):
        evaluate(basis, sel)
    with pytest.raises(InputError):
        evaluate_direct(ds, basis, sel)


def test_batch_matches_scalar_bitwise(random_dataset):
    _, basis = random_dataset(n=40, d=8, seed=6)
    subsets = np.array(list(combinations(range(8), 4)))
    out = evaluate_batch(basis, subsets)
    for k in [0, 17, 40, len(subsets) - 1]:
        obj = evaluate(basis, subsets[k])
        assert obj.recon_error == out["recon_error"][k]
        assert obj.fairness == out["fairness"][k]


def test_basis_json_roundtrip(tmp_path, random_dataset):
    _, basis = random_dataset(seed=1)
    save_basis(basis, tmp_path / "b.json")
    loaded = load_basis(tmp_path / "b.json")
    np.testing.assert_array_equal(loaded.u, basis.u)
    np.testing.assert_array_equal(loaded.group_b_energy, basis.group_b_energy)
    assert evaluate(loaded, (1, 4)) == evaluate(basis, (1, 4))
    save_basis(basis, tmp_path / "c.json", include_matrix=False)
    assert load_basis(tmp_path / "c.json").u is None


def test_basis_json_schema_version(tmp_path):
    (tmp_path / "b.json").write_text('{"schema_version": 99}')
    with pytest.raises(InputError, match="schema"):
        load_basis(tmp_path / "b.json")


def test_non_finite_input_rejected():
    ds = standardize(RawTable(np.eye(3), list("abc")), [0], [1, 2], mode="none")
    object.__setattr__(ds, "x", np.array([[np.inf, 0, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(InputError):
        compute_basis(ds)


@st.composite
def dataset_and_subset(draw):
    seed = draw(st.integers(0, 10_000))
    d = draw(st.integers(2, 7))
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 40))
    x = rng.standard_normal((n, d)) * rng.uniform(0.2, 3, size=d)
    groups = np.where(rng.random(n) < 0.4, "A", "B")
    groups[0], groups[1] = "A", "B"
    r = draw(st.integers(1, d - 1))
    sel = draw(st.lists(st.integers(0, d - 1), min_size=r, max_size=r, unique=True))
    return from_arrays(x, groups, "A"), sorted(sel)


@settings(max_examples=60, deadline=None)
@given(dataset_and_subset())
def test_adding_component_never_increases_error(case):
    ds, sel = case
    basis = compute_basis(ds)
    base = evaluate(basis, sel).recon_error
    for extra in set(range(ds.d)) - set(sel):
        assert evaluate(basis, sel + [extra]).recon_error <= base


@settings(max_examples=60, deadline=None)
@given(dataset_and_subset())
def test_group_swap_leaves_fairness_unchanged(case):
    ds, sel = case
    basis = compute_basis(ds)
    swapped = PrincipalBasis(basis.u, basis.eigenvalues, basis.total_energy, basis.group_b_energy,
                             basis.group_a_energy, basis.group_b_total, basis.group_a_total,
                             basis.n_b, basis.n_a)
    assert evaluate(swapped, sel).fairness == evaluate(basis, sel).fairness


@settings(max_examples=40, deadline=None)
@given(dataset_and_subset())
def test_classical_prefix_is_subset_optimum(case):
    ds, sel = case
    basis = compute_basis(ds)
    r = len(sel)
    best = evaluate(basis, range(r)).recon_error
    np.testing.assert_allclose(best, basis.eigenvalues[r:].sum(), rtol=1e-8, atol=1e-12)
    assert all(best <= evaluate(basis, s).recon_error for s in combinations(range(ds.d), r))
