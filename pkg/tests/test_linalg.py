import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from projreg.linalg import (
    GridSignal,
    OrthonormalBasis,
    gram_deviation,
    householder_orthonormalise,
    inner,
    mgs_extend,
    project,
    reorthogonalise,
    residual_norm,
)


def mgs_basis(rows, deptol=1e-10):
    basis = OrthonormalBasis(rows.shape[1])
    for r in rows:
        mgs_extend(basis, r, deptol)
    return basis


def test_grid_signal_invariants():
    s = GridSignal(np.arange(6.0), (2, 3))
    assert s.as_image().shape == (2, 3)
    with pytest.raises(ValueError):
        GridSignal(np.arange(6.0), (4, 2))
    with pytest.raises(ValueError):
        GridSignal(np.array([1.0, np.nan]))
    assert GridSignal(np.ones((2, 2))).shape == (2, 2)


def test_inner_examples():
    assert inner([1, 0], [0, 1]) == 0
    assert inner([3, 4], [3, 4]) == 25
    assert inner([1, 2, 3], [4, 5, 6]) == 32
    with pytest.raises(ValueError):
        inner([1, 2], [1, 2, 3])


def test_mgs_single_vector():
    b = OrthonormalBasis(3)
    out = mgs_extend(b, [0, 3, 0])
    assert out.accepted
    np.testing.assert_allclose(out.q, [0, 1, 0])
    assert b.rdiag == [3.0]


def test_mgs_rejects_dependent():
    b = OrthonormalBasis(2)
    mgs_extend(b, [1, 0])
    out = mgs_extend(b, [1, 0])
    assert not out.accepted
    assert out.residual_norm == 0.0
    assert len(b) == 1


def test_mgs_hand_qr():
    b = OrthonormalBasis(2)
    mgs_extend(b, [1, 0])
    out = mgs_extend(b, np.array([1, 1]) / np.sqrt(2))
    assert out.accepted
    np.testing.assert_allclose(out.q, [0, 1], atol=1e-15)
    np.testing.assert_allclose(out.rcolumn, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_mgs_errors():
    b = OrthonormalBasis(3)
    with pytest.raises(ValueError):
        mgs_extend(b, [1, 2])
    with pytest.raises(ValueError):
        mgs_extend(b, [0, 0, 0])
    with pytest.raises(ValueError):
        mgs_extend(b, [1, 0, 0], deptol=0)


def test_householder_identity():
    basis, dropped = householder_orthonormalise(np.eye(4))
    np.testing.assert_allclose(basis.vectors, np.eye(4), atol=1e-15)
    assert dropped == []


def test_householder_matches_mgs_small():
    rows = np.array([[1.0, 0, 0], [1.0, 1.0, 0]])
    h, _ = householder_orthonormalise(rows)
    m = mgs_basis(rows)
    np.testing.assert_allclose(h.vectors, m.vectors, atol=1e-12)
    np.testing.assert_allclose(h.rdiag, m.rdiag, atol=1e-12)


def test_householder_large_random():
    rows = np.random.default_rng(0).standard_normal((500, 1000))
    basis, dropped = householder_orthonormalise(rows)
    assert dropped == []
    assert gram_deviation(basis) <= 1e-10


def test_householder_drops_dependent():
    rows = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1.0, 0]])
    basis, dropped = householder_orthonormalise(rows)
    assert dropped == [1]
    assert len(basis) == 2
    with pytest.raises(ValueError):
        householder_orthonormalise(np.zeros((2, 3)))


def test_qr_reconstructs_inputs():
    rows = np.random.default_rng(1).standard_normal((30, 50))
    for basis in (mgs_basis(rows), householder_orthonormalise(rows)[0]):
        rec = basis.r_matrix().T @ basis.vectors
        assert np.linalg.norm(rec - rows) / np.linalg.norm(rows) <= 1e-8
        assert all(r > 0 for r in basis.rdiag)


def test_mgs_and_householder_same_span():
    rows = np.random.default_rng(2).standard_normal((20, 40))
    m = mgs_basis(rows)
    h, _ = householder_orthonormalise(rows)
    for v in m.vectors:
        assert residual_norm(h, v) <= 1e-8
    for v in h.vectors:
        assert residual_norm(m, v) <= 1e-8


def test_project_examples():
    basis, _ = householder_orthonormalise(np.random.default_rng(3).standard_normal((5, 8)))
    q1 = basis.vectors[0]
    np.testing.assert_allclose(project(basis, q1, 1), q1, atol=1e-14)
    np.testing.assert_array_equal(project(basis, np.ones(8), 0), np.zeros(8))
    with pytest.raises(ValueError):
        project(basis, np.ones(8), 6)
    with pytest.raises(ValueError):
        project(basis, np.ones(7))


def test_residual_examples():
    b = OrthonormalBasis(2)
    mgs_extend(b, [1, 0])
    assert residual_norm(b, [1, 0]) == 0
    assert residual_norm(b, [0, 1]) == 1


def test_residual_equals_rdiag_during_extension():
    rows = np.random.default_rng(4).standard_normal((15, 30))
    b = OrthonormalBasis(30)
    for r in rows:
        before = residual_norm(b, r) if len(b) else np.linalg.norm(r)
        out = mgs_extend(b, r)
        assert abs(before - out.rcolumn[-1]) <= 1e-12 * np.linalg.norm(r)


vec = arrays(np.float64, 12, elements=st.floats(-10, 10))


@settings(max_examples=50, deadline=None)
@given(vec, vec, st.integers(0, 6))
def test_projection_properties(v, w, n):
    basis, _ = householder_orthonormalise(np.random.default_rng(5).standard_normal((6, 12)))
    p = project(basis, v, n)
    assert np.max(np.abs(project(basis, p, n) - p)) <= 1e-10 * (1 + np.linalg.norm(v))
    assert abs(inner(p, w) - inner(v, project(basis, w, n))) <= 1e-10 * (
        1 + np.linalg.norm(v) * np.linalg.norm(w))
    lhs = residual_norm(basis, v, n) ** 2 + np.linalg.norm(p) ** 2
    assert abs(lhs - v @ v) <= 1e-10 * (1 + v @ v)


def test_reorthogonalise_keeps_factorisation():
    rows = np.random.default_rng(6).standard_normal((10, 20))
    b = mgs_basis(rows)
    fresh, s = reorthogonalise(b)
    np.testing.assert_allclose(s.T @ fresh.vectors, b.vectors, atol=1e-12)
    np.testing.assert_allclose(fresh.r_matrix().T @ fresh.vectors, rows, atol=1e-10)


def test_vectors_view_is_read_only():
    b = mgs_basis(np.eye(3))
    with pytest.raises(ValueError):
        b.vectors[0, 0] = 2.0
