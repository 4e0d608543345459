"""Dual least squares from adjoint training pairs ``v_i = A* y_i``.

The reconstruction is the minimum-norm ``u`` with ``(u, vbar_i) = (y, ybar_i)``
for ``i <= n``, where ``vbar_i = A* ybar_i`` is formed by applying the output
Gram-Schmidt coefficients to the ``v_i``.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as la

from .linalg import DEPTOL, OrthonormalBasis, RowStack, as_vector, mgs_extend
from .projection import NoAdmissibleSizeWarning, _check_n
from .training import AdjointTrainingSet

__all__ = [
    "DualModel",
    "fit_dual",
    "reconstruct_dual",
    "smallest_singular",
    "singular_path",
    "choose_n_dual",
]


class DualModel:
    def __init__(self, dim_u: int, dim_y: int, deptol: float = DEPTOL):
        self.dim_u = int(dim_u)
        self.dim_y = int(dim_y)
        self.deptol = deptol
        self.ybar = OrthonormalBasis(self.dim_y)
        self._vbar = RowStack(self.dim_u)
        self.accepted_indices: list[int] = []
        self.rejected_indices: list[int] = []
        self.n_seen = 0
        self._gram = np.zeros((0, 0))
        self.input_shape = None

    def __len__(self):
        return len(self.ybar)

    @property
    def vbar(self) -> np.ndarray:
        return self._vbar.rows

    @property
    def gram(self) -> np.ndarray:
        """``G_ij = (vbar_i, vbar_j)``, symmetric by construction."""
        return self._gram

    def extend(self, adjoint_images, outputs) -> "DualModel":
        adjoint_images = np.atleast_2d(np.asarray(adjoint_images, dtype=np.float64))
        outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        if len(adjoint_images) != len(outputs):
            raise ValueError("adjoint images and outputs must have equal counts")
        start = len(self)
        for v, y in zip(adjoint_images, outputs):
            if v.size != self.dim_u or y.size != self.dim_y:
                raise ValueError("pair dimensions do not match the model")
            index = self.n_seen
            self.n_seen += 1
            if not np.any(y):
                self.rejected_indices.append(index)
                continue
            outcome = mgs_extend(self.ybar, y, self.deptol)
            if not outcome.accepted:
                self.rejected_indices.append(index)
                continue
            coeffs, rho = outcome.rcolumn[:-1], outcome.rcolumn[-1]
            prev = self._vbar.rows
            self._vbar.append((v - coeffs @ prev) / rho if len(prev) else v / rho)
            self.accepted_indices.append(index)
        self._grow_gram(start)
        return self

    def _grow_gram(self, start: int):
        k = len(self)
        if k == start:
            return
        vb = self.vbar
        gram = np.zeros((k, k))
        gram[:start, :start] = self._gram
        block = vb[start:] @ vb.T
        gram[start:, :] = block
        gram[:, start:] = block.T
        self._gram = gram


def fit_dual(adjoint_pairs: AdjointTrainingSet, outputs=None, deptol: float = DEPTOL) -> DualModel:
    """Fit from adjoint pairs; ``outputs`` defaults to the pairs' own ``y_i``."""
    outputs = adjoint_pairs.outputs if outputs is None else np.atleast_2d(
        np.asarray(outputs, dtype=np.float64))
    if len(outputs) != len(adjoint_pairs):
        raise ValueError("output count does not match adjoint pair count")
    if len(outputs) == 0:
        raise ValueError("need at least one adjoint pair")
    model = DualModel(adjoint_pairs.adjoint_images.shape[1], outputs.shape[1], deptol)
    model.extend(adjoint_pairs.adjoint_images, outputs)
    if len(model) == 0:
        raise ValueError("all training pairs were rejected as dependent")
    if np.linalg.eigvalsh(model.gram)[0] <= 0:
        raise np.linalg.LinAlgError("Gram matrix of the adjoint images is numerically singular")
    return model


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return la.cho_solve(la.cho_factor(gram, lower=True), rhs)
    except la.LinAlgError:
        n = gram.shape[0]
        jitter = 1e-12 * np.trace(gram) / n
        try:
            return la.cho_solve(la.cho_factor(gram + jitter * np.eye(n), lower=True), rhs)
        except la.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"leading {n}x{n} Gram block is singular; n exceeds the numerical rank") from exc


def reconstruct_dual(model: DualModel, y, n: int | None = None) -> np.ndarray:
    """Minimum-norm ``u`` with ``(u, vbar_i) = (y, ybar_i)``, ``i <= n``."""
    n = _check_n(model, n)
    if n == 0:
        return np.zeros(model.dim_u)
    y = as_vector(y)
    if y.size != model.dim_y:
        raise ValueError(f"dimension mismatch: data {y.size}, model {model.dim_y}")
    rhs = model.ybar.vectors[:n] @ y
    c = _solve_gram(model.gram[:n, :n], rhs)
    return c @ model.vbar[:n]


def smallest_singular(model: DualModel, n: int | None = None) -> float:
    """``mu_n``: smallest singular value of ``P_{Y_n} A``."""
    n = _check_n(model, n)
    if n == 0:
        raise ValueError("n must be at least 1")
    lam = la.eigvalsh(model.gram[:n, :n], subset_by_index=[0, 0])[0]
    return float(np.sqrt(max(lam, 0.0)))


def singular_path(model: DualModel) -> np.ndarray:
    """``mu_n`` for ``n = 1..len(model)``."""
    return np.array([smallest_singular(model, n) for n in range(1, len(model) + 1)])


def choose_n_dual(model: DualModel, delta: float, tau: float = 1.0) -> int:
    """Largest ``n`` with ``delta / mu_n <= tau``; full size for clean data."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return len(model)
    mu = singular_path(model)
    with np.errstate(divide="ignore"):
        ok = delta / mu <= tau
    if not ok[0]:
        warnings.warn(f"no admissible training-set size for delta={delta:g}; using n=1",
                      NoAdmissibleSizeWarning, stacklevel=2)
        return 1
    # mu_n is non-increasing, so the admissible sizes form a prefix.
    return int(np.argmin(ok)) if not ok.all() else len(model)
