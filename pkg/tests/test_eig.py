import numpy as np
import pytest

from lyinggcn.errors import ConfigurationError, DimensionError
from lyinggcn.numerics import eig_dense


def matched_difference(got, want):
    """Greedy eigenvalue matching; max distance over the matching."""
    pool = list(want)
    worst = 0.0
    for v in got:
        j = int(np.argmin([abs(v - w) for w in pool]))
        worst = max(worst, abs(v - pool[j]))
        pool.pop(j)
    return worst


def test_identity():
    spec = eig_dense(np.eye(2))
    np.testing.assert_allclose(sorted(spec.values.real), [1.0, 1.0], atol=1e-12)
    assert spec.max_imag() <= 1e-12


def test_rotation_matrix_pure_imaginary():
    spec = eig_dense(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    got = np.sort_complex(spec.values)
    np.testing.assert_allclose(got, [-1j, 1j], atol=1e-12)


def test_companion_matrix_roots():
    # companion of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    C = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    spec = eig_dense(C)
    assert matched_difference(spec.values, [1.0, 2.0, 3.0]) < 1e-9


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        eig_dense(np.zeros((2, 3)))


def test_dimension_cap():
    with pytest.raises(ConfigurationError):
        eig_dense(np.eye(5), max_n=4)


def test_residual_contract_random():
    rng = np.random.default_rng(0)
    for n in (2, 5, 10, 30):
        A = rng.standard_normal((n, n))
        spec = eig_dense(A)
        anorm = np.linalg.norm(A)
        for i in range(n):
            res = np.linalg.norm(A @ spec.vectors[:, i] - spec.values[i] * spec.vectors[:, i])
            assert res <= 1e-8 * anorm


def test_trace_and_determinant_invariants():
    rng = np.random.default_rng(1)
    for n in (2, 4, 8, 15, 20):
        A = rng.standard_normal((n, n))
        vals = eig_dense(A, want_vectors=False).values
        anorm = np.linalg.norm(A)
        assert abs(vals.sum() - np.trace(A)) <= 1e-8 * n * anorm
        det = np.linalg.det(A)  # LU-based reference
        assert abs(vals.prod() - det) <= 1e-6 * max(abs(det), 1e-12)


def test_conjugate_pairing():
    rng = np.random.default_rng(2)
    for n in (6, 12, 20):
        vals = eig_dense(rng.standard_normal((n, n)), want_vectors=False).values
        pool = list(vals[np.abs(vals.imag) > 1e-9])
        while pool:
            v = pool.pop()
            gaps = [abs(np.conj(v) - w) for w in pool]
            assert gaps, f"unpaired complex eigenvalue {v}"
            j = int(np.argmin(gaps))
            assert gaps[j] <= 1e-9
            pool.pop(j)


def test_real_symmetric_spectrum_is_real():
    rng = np.random.default_rng(3)
    for n in (3, 10, 25):
        B = rng.standard_normal((n, n))
        spec = eig_dense(B + B.T, want_vectors=False)
        assert spec.max_imag() <= 1e-9


def test_matches_lapack_oracle():
    rng = np.random.default_rng(4)
    for n in (5, 15, 40):
        A = rng.standard_normal((n, n))
        got = eig_dense(A, want_vectors=False).values
        want = np.linalg.eigvals(A)
        assert matched_difference(got, list(want)) <= 1e-9 * max(np.linalg.norm(A), 1.0)


def test_defective_matrix_eigenvalues():
    # Jordan block: defective, but eigenvalues must still come out right
    J = np.array([[2.0, 1.0], [0.0, 2.0]])
    vals = eig_dense(J, want_vectors=False).values
    np.testing.assert_allclose(sorted(vals.real), [2.0, 2.0], atol=1e-7)
    assert np.abs(vals.imag).max() <= 1e-7


def test_pairs_property():
    spec = eig_dense(np.diag([3.0, -1.0]))
    assert sorted(spec.pairs) == [(-1.0, 0.0), (3.0, 0.0)]
