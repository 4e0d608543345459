import numpy as np
import pytest

from projreg.operators import (
    IdentityOperator,
    MatrixOperator,
    RadonOperator,
    SeidmanOperator,
    SvdOperator,
    default_detector_bins,
    operator_from_config,
    seidman_coefficients,
)


def adjoint_gap(op, rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(op.domain_dim)
        z = rng.standard_normal(op.range_dim)
        lhs, rhs = op.apply(u) @ z, u @ op.adjoint_apply(z)
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(op.apply(u)) * np.linalg.norm(z)))
    return worst


def test_seidman_coefficient_rules():
    a, b = seidman_coefficients(6)
    np.testing.assert_allclose(a, [1, 2 ** -2.5, 1 / 3, 4 ** -2.5, 1 / 5, 6 ** -2.5])
    np.testing.assert_allclose(b, [0, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6])


def test_seidman_examples():
    op = SeidmanOperator(10)
    j = np.arange(1, 11)
    np.testing.assert_allclose(op.apply(np.eye(10)[0]), 1.0 / j)
    np.testing.assert_allclose(op.apply(np.eye(10)[1]), 2 ** -2.5 * np.eye(10)[1])
    np.testing.assert_allclose(op.apply(np.eye(10)[2]), np.eye(10)[2] / 3)
    with pytest.raises(ValueError):
        op.apply(np.ones(9))


def test_seidman_injective_and_matrix():
    op = SeidmanOperator(500)
    mat = op.matrix()
    assert np.linalg.svd(mat, compute_uv=False)[-1] > 0
    x = np.random.default_rng(0).standard_normal(500)
    np.testing.assert_allclose(mat @ x, op.apply(x), atol=1e-13)
    np.testing.assert_allclose(op.column(7), mat[:, 6])


def test_svd_operator():
    op = SvdOperator.from_law(20, "inverse", 1.0, seed=3)
    x, z, s = op.right_vectors, op.left_vectors, op.singular_values
    np.testing.assert_allclose(op.apply(x[0]), s[0] * z[0], atol=1e-14)
    u = np.random.default_rng(1).standard_normal(20)
    dense = (z.T * s) @ x
    assert np.max(np.abs(dense @ u - op.apply(u))) <= 1e-12
    with pytest.raises(ValueError):
        SvdOperator([1.0, 2.0], np.eye(2), np.eye(2))


def test_svd_null_component():
    op = SvdOperator([1.0, 0.5], np.eye(3)[:2], np.eye(3)[:2])
    np.testing.assert_array_equal(op.apply([0, 0, 1.0]), np.zeros(3))


def test_linearity():
    rng = np.random.default_rng(2)
    for op in (RadonOperator(12, 12, 9), SeidmanOperator(30), SvdOperator.from_law(15, seed=0)):
        u, v = rng.standard_normal((2, op.domain_dim))
        lhs = op.apply(2.0 * u - 3.0 * v)
        assert np.max(np.abs(lhs - 2.0 * op.apply(u) + 3.0 * op.apply(v))) <= 1e-10 * (
            1 + np.abs(lhs).max())


def test_adjoint_consistency_all_operators():
    rng = np.random.default_rng(3)
    ops = [RadonOperator(16, 20, 11), SeidmanOperator(40), SvdOperator.from_law(25, seed=1),
           MatrixOperator(rng.standard_normal((7, 5))), IdentityOperator(4)]
    for op in ops:
        assert adjoint_gap(op, rng) <= 1e-10


def test_radon_shapes_and_bins():
    op = RadonOperator(32, 32, 30)
    assert op.sinogram_shape == (49, 30)
    assert op.range_dim == 49 * 30
    assert default_detector_bins(100, 100) == 145
    assert RadonOperator(100, 100).sinogram_shape == (145, 70)
    with pytest.raises(ValueError):
        op.apply(np.ones(31 * 32))


def test_radon_zero_and_mass():
    op = RadonOperator(24, 24, 17)
    assert not np.any(op.apply(np.zeros(24 * 24)))
    sino = op.apply(np.ones(24 * 24)).reshape(op.sinogram_shape)
    np.testing.assert_allclose(sino.sum(axis=0), 24 * 24, rtol=1e-8)


def test_radon_centre_pixel():
    op = RadonOperator(3, 3, 8)
    img = np.zeros(9)
    img[4] = 1.0
    sino = op.apply(img).reshape(op.sinogram_shape)
    np.testing.assert_allclose(sino.sum(axis=0), 1.0, rtol=1e-12)
    # a centred pixel projects symmetrically about the detector centre
    np.testing.assert_allclose(sino, sino[::-1, :], atol=1e-12)


def test_radon_transpose_is_adjoint():
    op = RadonOperator(10, 10, 7)
    mat = op.matrix()
    z = np.random.default_rng(4).standard_normal(op.range_dim)
    np.testing.assert_allclose(mat.T @ z, op.adjoint_apply(z), atol=1e-12)


def test_operator_from_config_roundtrip():
    for op in (RadonOperator(8, 8, 5), SeidmanOperator(12), SvdOperator.from_law(6, seed=2)):
        again = operator_from_config(op.config())
        u = np.random.default_rng(5).standard_normal(op.domain_dim)
        np.testing.assert_allclose(again.apply(u), op.apply(u))
    with pytest.raises(ValueError):
        operator_from_config({"kind": "fan"})
