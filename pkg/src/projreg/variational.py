"""Projected variational regularisation with the learned operator ``A P_{U_n}``.

The inputs are orthonormalised into ``uhat_i`` and the outputs combined with
the same coefficients into ``yhat_i = A uhat_i``. The learned operator is then
``K u = sum_i (u, uhat_i) yhat_i`` and needs no access to ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .linalg import DEPTOL, OrthonormalBasis, RowStack, as_vector, mgs_extend
from .operators import LinearOperator
from .projection import _check_n, _unpack

__all__ = [
    "InputModel",
    "ProjectedOperator",
    "VariationalProblem",
    "SolverControls",
    "TVResult",
    "fit_input_side",
    "apply_projected",
    "apply_projected_adjoint",
    "solve_tikhonov",
    "solve_tikhonov_dense",
    "solve_tv",
    "choose_alpha",
    "data_residual",
    "gradient",
    "divergence",
    "total_variation",
    "operator_norm",
]

ALPHA_FLOOR = 1e-14


class InputModel:
    """Orthonormal inputs ``uhat`` with matched outputs ``yhat``."""

    def __init__(self, dim_u: int, dim_y: int, deptol: float = DEPTOL):
        self.dim_u = int(dim_u)
        self.dim_y = int(dim_y)
        self.deptol = deptol
        self.uhat = OrthonormalBasis(self.dim_u)
        self._yhat = RowStack(self.dim_y)
        self.accepted_indices: list[int] = []
        self.rejected_indices: list[int] = []
        self.n_seen = 0
        self.input_shape = None

    def __len__(self):
        return len(self.uhat)

    @property
    def yhat(self) -> np.ndarray:
        return self._yhat.rows

    @property
    def rdiag(self) -> np.ndarray:
        return np.asarray(self.uhat.rdiag)

    def extend(self, pairs) -> "InputModel":
        inputs, outputs = _unpack(pairs)
        if self.input_shape is None:
            self.input_shape = getattr(pairs, "input_shape", None)
        for u, y in zip(inputs, outputs):
            if u.size != self.dim_u or y.size != self.dim_y:
                raise ValueError("pair dimensions do not match the model")
            index = self.n_seen
            self.n_seen += 1
            if not np.any(u):
                self.rejected_indices.append(index)
                continue
            outcome = mgs_extend(self.uhat, u, self.deptol)
            if not outcome.accepted:
                self.rejected_indices.append(index)
                continue
            coeffs, rho = outcome.rcolumn[:-1], outcome.rcolumn[-1]
            prev = self._yhat.rows
            self._yhat.append((y - coeffs @ prev) / rho if len(prev) else y / rho)
            self.accepted_indices.append(index)
        return self


def fit_input_side(pairs, deptol: float = DEPTOL) -> InputModel:
    inputs, outputs = _unpack(pairs)
    if len(inputs) == 0:
        raise ValueError("need at least one training pair")
    model = InputModel(inputs.shape[1], outputs.shape[1], deptol)
    model.extend(pairs)
    if len(model) == 0:
        raise ValueError("all training pairs were rejected as dependent")
    return model


class ProjectedOperator(LinearOperator):
    """``K = A P_{U_n}`` evaluated from the first ``n`` basis pairs."""

    kind = "projected"

    def __init__(self, model: InputModel, n: int | None = None):
        self.model = model
        self.n = _check_n(model, n)
        self.domain_dim = model.dim_u
        self.range_dim = model.dim_y
        self._u = model.uhat.vectors[: self.n]
        self._y = model.yhat[: self.n]

    def _apply(self, u):
        return (self._u @ u) @ self._y

    def _adjoint(self, z):
        return (self._y @ z) @ self._u

    def matrix(self):
        return self._y.T @ self._u

    def config(self):
        return {"kind": self.kind, "n": self.n}


def apply_projected(op: ProjectedOperator, u) -> np.ndarray:
    return op.apply(u)


def apply_projected_adjoint(op: ProjectedOperator, z) -> np.ndarray:
    return op.adjoint_apply(z)


@dataclass
class SolverControls:
    max_iter: int = 5000
    tol: float = 1e-6
    power_iter: int = 20
    safety: float = 0.95
    trace_every: int = 0
    seed: int = 0


@dataclass
class VariationalProblem:
    operator: LinearOperator
    data: np.ndarray
    alpha: float
    penalty: str = "tikhonov"
    shape: tuple[int, int] | None = None
    controls: SolverControls = field(default_factory=SolverControls)

    def __post_init__(self):
        self.data = as_vector(self.data)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.penalty not in ("tikhonov", "tv"):
            raise ValueError(f"unknown penalty {self.penalty!r}")
        if self.data.size != self.operator.range_dim:
            raise ValueError(f"dimension mismatch: data {self.data.size}, "
                             f"operator range {self.operator.range_dim}")
        if self.penalty == "tv":
            if self.shape is None:
                self.shape = getattr(getattr(self.operator, "model", None), "input_shape", None) \
                    or getattr(self.operator, "image_shape", None)
            if self.shape is None:
                raise ValueError("tv penalty needs the image grid shape")
            self.shape = tuple(int(s) for s in self.shape)
            if self.shape[0] * self.shape[1] != self.operator.domain_dim:
                raise ValueError("grid shape does not match the operator domain")

    def objective(self, u: np.ndarray) -> float:
        r = self.operator.apply(u) - self.data
        if self.penalty == "tikhonov":
            reg = float(u @ u)
        else:
            reg = total_variation(u.reshape(self.shape))
        return 0.5 * float(r @ r) + self.alpha * reg


# --- Tikhonov -----------------------------------------------------------------


def solve_tikhonov(problem: VariationalProblem) -> np.ndarray:
    """Exact minimiser of ``1/2 |K u - y|^2 + alpha |u|^2``.

    For the learned operator the minimiser lies in ``U_n``, so the system is
    solved for the coefficients in the ``uhat`` basis.
    """
    if problem.penalty != "tikhonov":
        raise ValueError("solve_tikhonov needs the tikhonov penalty")
    op = problem.operator
    if not isinstance(op, ProjectedOperator):
        return solve_tikhonov_dense(op.matrix(), problem.data, problem.alpha)
    m = op._y.T
    if op.n == 0:
        return np.zeros(op.domain_dim)
    lhs = m.T @ m
    lhs[np.diag_indices_from(lhs)] += 2.0 * problem.alpha
    c = la.solve(lhs, m.T @ problem.data, assume_a="pos")
    return c @ op._u


def solve_tikhonov_dense(mat, y, alpha: float) -> np.ndarray:
    """Model-based reference: ``(A^T A + 2 alpha I) u = A^T y``."""
    mat = np.asarray(mat, dtype=np.float64)
    lhs = mat.T @ mat
    lhs[np.diag_indices_from(lhs)] += 2.0 * alpha
    return la.solve(lhs, mat.T @ as_vector(y), assume_a="pos")


# --- total variation ----------------------------------------------------------


def gradient(img: np.ndarray) -> np.ndarray:
    """Forward differences with a reflexive boundary, shape ``(2, rows, cols)``."""
    g = np.zeros((2,) + img.shape)
    g[0, :-1, :] = img[1:, :] - img[:-1, :]
    g[1, :, :-1] = img[:, 1:] - img[:, :-1]
    return g


def divergence(p: np.ndarray) -> np.ndarray:
    """Negative adjoint of :func:`gradient`."""
    py, px = p
    d = np.zeros(py.shape)
    d[:-1, :] += py[:-1, :]
    d[1:, :] -= py[:-1, :]
    d[:, :-1] += px[:, :-1]
    d[:, 1:] -= px[:, :-1]
    return d


def total_variation(img: np.ndarray) -> float:
    g = gradient(img)
    return float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))


def operator_norm(op: LinearOperator, iterations: int = 20, seed: int = 0) -> float:
    """Power-iteration estimate of ``|K|`` from ``K* K``."""
    x = np.random.default_rng(seed).standard_normal(op.domain_dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iterations):
        w = op.adjoint_apply(op.apply(x))
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        x = w / lam
    return float(np.sqrt(lam))


@dataclass
class TVResult:
    solution: np.ndarray
    iterations: int
    gap: float
    converged: bool
    objective: float
    trace: list = field(default_factory=list)


def solve_tv(problem: VariationalProblem, x0=None) -> TVResult:
    """Primal-dual iteration for ``1/2 |K u - y|^2 + alpha TV(u)`` over the full grid.

    The stopping quantity is the primal-dual residual relative to ``|K* y|``.
    The iterate with the smallest residual is returned if the cap is reached.
    """
    if problem.penalty != "tv":
        raise ValueError("solve_tv needs the tv penalty")
    op, y, alpha, ctl = problem.operator, problem.data, problem.alpha, problem.controls
    shape = problem.shape
    lip = np.sqrt(operator_norm(op, ctl.power_iter, ctl.seed) ** 2 + 8.0)
    tau = sigma = ctl.safety / lip

    x = np.zeros(op.domain_dim) if x0 is None else as_vector(x0).copy()
    xbar = x.copy()
    p = np.zeros(op.range_dim)
    q = np.zeros((2,) + shape)
    scale = max(np.linalg.norm(op.adjoint_apply(y)), np.finfo(float).tiny)
    kx = op.apply(x)
    best = (np.inf, x.copy(), 0)
    trace = []
    gap = np.inf
    it = 0
    for it in range(1, ctl.max_iter + 1):
        # dual updates: data term conjugate prox and pointwise ball projection
        kxbar = op.apply(xbar)
        p_new = (p + sigma * (kxbar - y)) / (1.0 + sigma)
        q_new = q + sigma * gradient(xbar.reshape(shape))
        norm = np.maximum(1.0, np.sqrt(q_new[0] ** 2 + q_new[1] ** 2) / alpha)
        q_new /= norm
        x_new = x - tau * (op.adjoint_apply(p_new) - divergence(q_new).ravel())
        kx_new = op.apply(x_new)

        dx, dp, dq = x - x_new, p - p_new, q - q_new
        r_primal = dx / tau - (op.adjoint_apply(dp) - divergence(dq).ravel())
        r_dual_p = dp / sigma - (kx - kx_new)
        r_dual_q = dq / sigma - gradient(dx.reshape(shape))
        gap = np.sqrt(r_primal @ r_primal + r_dual_p @ r_dual_p
                      + np.sum(r_dual_q ** 2)) / scale

        xbar = 2.0 * x_new - x
        x, p, q, kx = x_new, p_new, q_new, kx_new
        if gap < best[0]:
            best = (gap, x.copy(), it)
        if ctl.trace_every and it % ctl.trace_every == 0:
            trace.append((it, problem.objective(x), gap))
        if gap <= ctl.tol:
            break
    converged = gap <= ctl.tol
    sol = x if converged else best[1]
    return TVResult(sol, it, gap if converged else best[0], converged,
                    problem.objective(sol), trace)


# --- parameter choice ---------------------------------------------------------


def data_residual(basis: OrthonormalBasis, y, n: int | None = None) -> float:
    """``|(I - P_{Y_n}) y|`` for an orthonormal output basis."""
    y = as_vector(y)
    n = len(basis) if n is None else n
    q = basis.vectors[:n]
    return float(np.linalg.norm(y - (q @ y) @ q))


def choose_alpha(delta: float, rho: float = 0.0, c: float = 1.0) -> float:
    """``alpha = c (delta + rho)``, floored so it stays positive."""
    if delta < 0 or rho < 0:
        raise ValueError("delta and rho must be non-negative")
    if not c > 0:
        raise ValueError("c must be positive")
    return max(c * (delta + rho), ALPHA_FLOOR)
