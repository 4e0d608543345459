import numpy as np
import pytest

from projreg.operators import MatrixOperator, RadonOperator, SvdOperator
from projreg.training import NoiseSpec, add_noise, blob_images, make_pairs
from projreg.variational import (
    ProjectedOperator,
    SolverControls,
    VariationalProblem,
    choose_alpha,
    divergence,
    fit_input_side,
    gradient,
    operator_norm,
    solve_tikhonov,
    solve_tikhonov_dense,
    solve_tv,
    total_variation,
)


def dense(seed, m=30, d=20, count=12):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, d))
    return a, make_pairs(MatrixOperator(a), rng.standard_normal((count, d)))


def test_orthonormal_inputs_unchanged():
    q = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 5)))[0].T
    y = np.random.default_rng(1).standard_normal((5, 4))
    im = fit_input_side((q, y))
    np.testing.assert_allclose(im.uhat.vectors, q, atol=1e-12)
    np.testing.assert_allclose(im.yhat, y, atol=1e-12)


def test_svd_pairs():
    op = SvdOperator.from_law(9, seed=2)
    im = fit_input_side(make_pairs(op, op.right_vectors))
    np.testing.assert_allclose(im.yhat, op.singular_values[:, None] * op.left_vectors, atol=1e-12)


def test_operator_oracle():
    a, ts = dense(3)
    im = fit_input_side(ts)
    for uh, yh in zip(im.uhat.vectors, im.yhat):
        assert np.linalg.norm(a @ uh - yh) <= 1e-8 * np.linalg.norm(yh)


def test_projected_apply_and_adjoint():
    a, ts = dense(4)
    im = fit_input_side(ts)
    k = ProjectedOperator(im, 7)
    np.testing.assert_allclose(k.apply(im.uhat.vectors[0]), im.yhat[0], atol=1e-12)
    u = np.random.default_rng(5).standard_normal(20)
    q = im.uhat.vectors[:7]
    perp = u - (q @ u) @ q
    assert np.linalg.norm(k.apply(perp)) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(a)
    dense_k = a @ (q.T @ q)
    assert np.linalg.norm(k.apply(u) - dense_k @ u) <= 1e-10 * np.linalg.norm(dense_k @ u)
    rng = np.random.default_rng(6)
    for _ in range(20):
        u, z = rng.standard_normal(20), rng.standard_normal(30)
        gap = abs(k.apply(u) @ z - u @ k.adjoint_apply(z))
        assert gap <= 1e-10 * np.linalg.norm(k.apply(u)) * np.linalg.norm(z)
    with pytest.raises(ValueError):
        k.apply(np.ones(19))


def test_learned_operator_nesting():
    op = RadonOperator(12, 12, 8)
    ts = make_pairs(op, blob_images(60, 12, seed=1))
    im = fit_input_side(ts)
    for u in blob_images(3, 12, seed=7):
        errs = [np.linalg.norm(ProjectedOperator(im, n).apply(u) - op.apply(u))
                for n in (5, 10, 20, 40, 60)]
        assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_tikhonov_large_alpha_shrinks():
    a, ts = dense(7)
    k = ProjectedOperator(fit_input_side(ts))
    y = np.random.default_rng(8).standard_normal(30)
    norms = [np.linalg.norm(solve_tikhonov(VariationalProblem(k, y, al))) for al in (1, 1e1, 1e2, 1e4, 1e6)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-3


def test_tikhonov_exact_on_span():
    a, ts = dense(9)
    im = fit_input_side(ts)
    ud = np.random.default_rng(1).standard_normal(12) @ ts.inputs
    u = solve_tikhonov(VariationalProblem(ProjectedOperator(im), a @ ud, 1e-12))
    assert np.linalg.norm(u - ud) <= 1e-6 * np.linalg.norm(ud)


def test_tikhonov_optimality():
    a, ts = dense(10)
    k = ProjectedOperator(fit_input_side(ts), 9)
    y = np.random.default_rng(2).standard_normal(30)
    alpha = 0.3
    u = solve_tikhonov(VariationalProblem(k, y, alpha))
    g = k.adjoint_apply(k.apply(u) - y) + 2 * alpha * u
    assert np.linalg.norm(g) <= 1e-10 * np.linalg.norm(k.adjoint_apply(y))


def test_tikhonov_matches_dense_when_full():
    a, ts = dense(11, count=25)
    k = ProjectedOperator(fit_input_side(ts))
    y = np.random.default_rng(3).standard_normal(30)
    u = solve_tikhonov(VariationalProblem(k, y, 0.05))
    ref = solve_tikhonov_dense(a, y, 0.05)
    assert np.linalg.norm(u - ref) <= 1e-10 * np.linalg.norm(ref)
    np.testing.assert_allclose(solve_tikhonov(VariationalProblem(MatrixOperator(a), y, 0.05)), ref)


def test_problem_validation():
    a, ts = dense(12)
    k = ProjectedOperator(fit_input_side(ts))
    with pytest.raises(ValueError):
        VariationalProblem(k, np.ones(30), 0.0)
    with pytest.raises(ValueError):
        VariationalProblem(k, np.ones(29), 1.0)
    with pytest.raises(ValueError):
        VariationalProblem(k, np.ones(30), 1.0, "tv")
    with pytest.raises(ValueError):
        VariationalProblem(k, np.ones(30), 1.0, "tv", (3, 3))


def test_gradient_adjoint():
    rng = np.random.default_rng(13)
    img, p = rng.standard_normal((7, 5)), rng.standard_normal((2, 7, 5))
    assert abs(np.sum(gradient(img) * p) + np.sum(img * divergence(p))) <= 1e-12
    assert total_variation(np.full((4, 4), 3.0)) == 0.0
    step = np.zeros((4, 4))
    step[:, 2:] = 1.0
    assert total_variation(step) == 4.0


def test_operator_norm_estimate():
    op = SvdOperator.from_law(30, "inverse", 1.0, seed=1)
    assert abs(operator_norm(op, 20) - 1.0) <= 1e-3


def small_tv_instance(seed=0, side=6):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((50, side * side))
    ts = make_pairs(MatrixOperator(a), rng.standard_normal((side * side, side * side)))
    return a, ProjectedOperator(fit_input_side(ts))


def test_tv_tiny_alpha_is_least_squares():
    a, k = small_tv_instance()
    ud = np.random.default_rng(1).uniform(size=36)
    ctl = SolverControls(max_iter=20000, tol=1e-10)
    res = solve_tv(VariationalProblem(k, a @ ud, 1e-12, "tv", (6, 6), ctl))
    assert res.converged
    assert np.linalg.norm(res.solution - ud) <= 1e-6 * np.linalg.norm(ud)


def test_tv_constant_image():
    a, k = small_tv_instance(2)
    ud = np.full(36, 0.7)
    y = a @ ud
    yd = add_noise(y, NoiseSpec(1e-3, "absolute", 0))
    ctl = SolverControls(max_iter=20000, tol=1e-10)
    res = solve_tv(VariationalProblem(k, yd, 10.0, "tv", (6, 6), ctl))
    assert total_variation(res.solution.reshape(6, 6)) <= 1e-6
    assert res.converged
    assert np.linalg.norm(k.apply(res.solution) - yd) <= 1e-3 + 1e-6


def test_tv_objective_beats_simple_guesses():
    op = RadonOperator(12, 12, 10)
    ts = make_pairs(op, blob_images(80, 12, seed=3), input_shape=(12, 12))
    k = ProjectedOperator(fit_input_side(ts))
    u = blob_images(1, 12, seed=9)[0]
    yd = add_noise(op.apply(u), NoiseSpec(0.01, "relative", 1))
    prob = VariationalProblem(k, yd, 0.05, "tv", controls=SolverControls(max_iter=3000))
    res = solve_tv(prob)
    back = k.adjoint_apply(yd)
    back *= (yd @ k.apply(back)) / np.sum(k.apply(back) ** 2)
    assert res.objective <= prob.objective(np.zeros(144))
    assert res.objective <= prob.objective(back)
    assert res.iterations <= 3000 and np.isfinite(res.gap)


def test_tv_reports_nonconvergence():
    a, k = small_tv_instance(4)
    y = a @ np.random.default_rng(0).uniform(size=36)
    res = solve_tv(VariationalProblem(k, y, 0.1, "tv", (6, 6), SolverControls(max_iter=5, tol=1e-14)))
    assert not res.converged and res.iterations == 5


def test_trace():
    a, k = small_tv_instance(5)
    y = a @ np.ones(36)
    res = solve_tv(VariationalProblem(k, y, 0.1, "tv", (6, 6),
                                      SolverControls(max_iter=50, tol=0, trace_every=10)))
    assert [t[0] for t in res.trace] == [10, 20, 30, 40, 50]


def test_choose_alpha():
    assert choose_alpha(0.0, 0.0) == 1e-14
    assert choose_alpha(0.2, 0.0, 3.0) == 2 * choose_alpha(0.1, 0.0, 3.0)
    assert choose_alpha(0.1, 0.05, 2.0) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        choose_alpha(-1.0, 0.0)
    with pytest.raises(ValueError):
        choose_alpha(1.0, 0.0, 0.0)


def test_boundedness_along_schedule():
    op = RadonOperator(12, 12, 8)
    ts = make_pairs(op, blob_images(60, 12, seed=2))
    im = fit_input_side(ts)
    u = blob_images(1, 12, seed=8)[0]
    y = op.apply(u)
    norms = []
    for delta in (1e-1, 1e-2, 1e-3):
        yd = add_noise(y, NoiseSpec(delta, "relative", 0))
        alpha = choose_alpha(delta * np.linalg.norm(y), 0.0)
        norms.append(np.linalg.norm(solve_tikhonov(VariationalProblem(ProjectedOperator(im), yd, alpha))))
    assert max(norms) <= 2 * np.linalg.norm(u)
