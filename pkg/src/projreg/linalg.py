"""Dense vector arithmetic, incremental orthonormalisation and projections.

Vectors are stored as rows of 2-D float64 arrays. A basis grows one vector at
a time through :func:`mgs_extend`; :func:`householder_orthonormalise` builds a
whole basis at once and is the more stable choice for an initial batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GridSignal",
    "OrthonormalBasis",
    "ExtendOutcome",
    "as_vector",
    "inner",
    "mgs_extend",
    "householder_orthonormalise",
    "project",
    "residual_norm",
    "gram_deviation",
    "reorthogonalise",
    "DEPTOL",
    "ORTHTOL",
    "REORTH_TRIGGER",
]

DEPTOL = 1e-10
ORTHTOL = 1e-8
# Gram deviation above which a grown basis is rebuilt by Householder.
REORTH_TRIGGER = 1e-6
# Second MGS pass when the residual keeps less than this fraction of the input.
_REPASS_RATIO = 0.1


@dataclass(frozen=True, eq=False)
class GridSignal:
    """Finite real vector with optional ``(rows, cols)`` grid metadata."""

    values: np.ndarray
    shape: tuple[int, int] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2 and self.shape is None:
            object.__setattr__(self, "shape", (int(values.shape[0]), int(values.shape[1])))
        values = values.reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("GridSignal entries must be finite")
        if self.shape is not None:
            rows, cols = self.shape
            if rows * cols != values.size:
                raise ValueError(
                    f"grid shape {self.shape} does not match vector length {values.size}"
                )
            object.__setattr__(self, "shape", (int(rows), int(cols)))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def as_image(self) -> np.ndarray:
        if self.shape is None:
            raise ValueError("signal carries no grid shape")
        return self.values.reshape(self.shape)

    def __eq__(self, other):
        if not isinstance(other, GridSignal):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)


def as_vector(x) -> np.ndarray:
    """Return ``x`` as a flat float64 array (row-major for grids)."""
    if isinstance(x, GridSignal):
        return x.values
    return np.asarray(x, dtype=np.float64).reshape(-1)


def inner(a, b) -> float:
    """Euclidean inner product; summation order is fixed by ``np.dot``."""
    a = as_vector(a)
    b = as_vector(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.dot(a, b))


class OrthonormalBasis:
    """Orthonormal vectors ``q_i`` with the triangular factor of their sources.

    The ``j``-th accepted source vector equals
    ``sum(rcols[j][i] * vectors[i] for i in range(j + 1))`` and
    ``rcols[j][j] == rdiag[j] > 0``.
    """

    def __init__(self, dim: int, capacity: int = 16):
        if dim <= 0:
            raise ValueError("basis dimension must be positive")
        self.dim = int(dim)
        self._q = np.empty((max(capacity, 1), self.dim))
        self._size = 0
        self.rdiag: list[float] = []
        self.rcols: list[np.ndarray] = []

    def __len__(self):
        return self._size

    @property
    def vectors(self) -> np.ndarray:
        """Read-only ``(size, dim)`` view of the basis vectors."""
        view = self._q[: self._size]
        view.flags.writeable = False
        return view

    def r_matrix(self) -> np.ndarray:
        k = self._size
        r = np.zeros((k, k))
        for j, col in enumerate(self.rcols):
            r[: j + 1, j] = col
        return r

    def copy(self) -> "OrthonormalBasis":
        new = OrthonormalBasis(self.dim, capacity=max(self._size, 1))
        new._q[: self._size] = self._q[: self._size]
        new._size = self._size
        new.rdiag = list(self.rdiag)
        new.rcols = [c.copy() for c in self.rcols]
        return new

    def _append(self, q: np.ndarray, rcol: np.ndarray):
        if self._size == self._q.shape[0]:
            grown = np.empty((2 * self._q.shape[0], self.dim))
            grown[: self._size] = self._q[: self._size]
            self._q = grown
        self._q[self._size] = q
        self._size += 1
        self.rdiag.append(float(rcol[-1]))
        self.rcols.append(rcol)

    @classmethod
    def from_arrays(cls, vectors, rcols: Sequence[np.ndarray]) -> "OrthonormalBasis":
        vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        basis = cls(vectors.shape[1], capacity=max(len(vectors), 1))
        for q, col in zip(vectors, rcols):
            basis._append(q.copy(), np.asarray(col, dtype=np.float64).copy())
        return basis

    def extend(self, candidate, deptol: float = DEPTOL) -> "ExtendOutcome":
        return mgs_extend(self, candidate, deptol)


@dataclass
class ExtendOutcome:
    status: str
    residual_norm: float
    candidate_norm: float
    q: np.ndarray | None = None
    # Coefficients against prior vectors, then the new rdiag entry when accepted.
    rcolumn: np.ndarray | None = field(default=None, repr=False)

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def _mgs_pass(q: np.ndarray, v: np.ndarray, coeffs: np.ndarray):
    for i in range(q.shape[0]):
        c = np.dot(q[i], v)
        v -= c * q[i]
        coeffs[i] += c


def mgs_extend(basis: OrthonormalBasis, candidate, deptol: float = DEPTOL) -> ExtendOutcome:
    """Orthogonalise ``candidate`` against ``basis`` by modified Gram-Schmidt.

    A second pass is made when the first one removes more than 90% of the
    candidate's norm. The candidate is rejected, leaving the basis untouched,
    when the final residual is at most ``deptol`` times its original norm.
    """
    if deptol <= 0:
        raise ValueError("deptol must be positive")
    v = np.array(as_vector(candidate), dtype=np.float64)
    if v.size != basis.dim:
        raise ValueError(f"dimension mismatch: candidate {v.size}, basis {basis.dim}")
    cnorm = float(np.linalg.norm(v))
    if cnorm == 0.0:
        raise ValueError("cannot orthogonalise a zero candidate")
    q = basis._q[: basis._size]
    coeffs = np.zeros(basis._size)
    _mgs_pass(q, v, coeffs)
    rnorm = float(np.linalg.norm(v))
    if basis._size and rnorm < _REPASS_RATIO * cnorm:
        _mgs_pass(q, v, coeffs)
        rnorm = float(np.linalg.norm(v))
    if rnorm <= deptol * cnorm:
        return ExtendOutcome("rejected", rnorm, cnorm, None, coeffs)
    v /= rnorm
    rcol = np.append(coeffs, rnorm)
    basis._append(v, rcol)
    return ExtendOutcome("accepted", rnorm, cnorm, v, rcol)


def householder_orthonormalise(
    vectors, deptol: float = DEPTOL
) -> tuple[OrthonormalBasis, list[int]]:
    """Orthonormalise ``vectors`` with Householder reflections.

    Reflectors are accumulated in compact WY form, so each incoming vector is
    transformed with two matrix products. Vectors whose trailing part is at
    most ``deptol`` times their norm are skipped.

    Returns
    -------
    basis : OrthonormalBasis
        Basis with positive ``rdiag``, spanning the accepted inputs.
    dropped : list of int
        Indices of inputs rejected as linearly dependent.
    """
    if isinstance(vectors, np.ndarray):
        mat = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    else:
        rows = [as_vector(v) for v in vectors]
        if not rows:
            raise ValueError("need at least one vector")
        if len({r.size for r in rows}) != 1:
            raise ValueError("vectors must have equal lengths")
        mat = np.vstack(rows)
    p, m = mat.shape
    if p == 0:
        raise ValueError("need at least one vector")
    if not np.any(mat):
        raise ValueError("all input vectors are zero")

    kmax = min(p, m)
    V = np.zeros((m, kmax))
    T = np.zeros((kmax, kmax))
    signs = np.zeros(kmax)
    k = 0
    dropped: list[int] = []
    rcols: list[np.ndarray] = []
    for j in range(p):
        a = mat[j]
        anorm = np.linalg.norm(a)
        if anorm == 0.0 or k == m:
            dropped.append(j)
            continue
        if k:
            Vk = V[:, :k]
            b = a - Vk @ (T[:k, :k].T @ (Vk.T @ a))
        else:
            b = a.copy()
        x = b[k:]
        xnorm = np.linalg.norm(x)
        if xnorm <= deptol * anorm:
            dropped.append(j)
            continue
        alpha = -xnorm if x[0] >= 0 else xnorm
        v = np.zeros(m)
        v[k:] = x
        v[k] -= alpha
        tau = 2.0 / np.dot(v, v)
        if k:
            T[:k, k] = -tau * (T[:k, :k] @ (V[:, :k].T @ v))
        T[k, k] = tau
        V[:, k] = v
        signs[k] = np.sign(alpha)
        rcol = np.empty(k + 1)
        rcol[:k] = signs[:k] * b[:k]
        rcol[k] = abs(alpha)
        rcols.append(rcol)
        k += 1

    Vk = V[:, :k]
    E = np.zeros((m, k))
    E[np.arange(k), np.arange(k)] = 1.0
    qcols = E - Vk @ (T[:k, :k] @ Vk[:k, :].T)
    qcols *= signs[:k]
    return OrthonormalBasis.from_arrays(qcols.T, rcols), dropped


def _check_n(basis: OrthonormalBasis, n: int):
    if not 0 <= n <= len(basis):
        raise ValueError(f"n={n} out of range for basis of size {len(basis)}")


def project(basis: OrthonormalBasis, v, n: int | None = None) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the span of the first ``n`` vectors."""
    n = len(basis) if n is None else n
    _check_n(basis, n)
    v = as_vector(v)
    if v.size != basis.dim:
        raise ValueError(f"dimension mismatch: {v.size} vs {basis.dim}")
    q = basis._q[:n]
    return (q @ v) @ q if n else np.zeros(basis.dim)


def residual_norm(basis: OrthonormalBasis, v, n: int | None = None) -> float:
    v = as_vector(v)
    return float(np.linalg.norm(v - project(basis, v, n)))


def gram_deviation(basis_or_vectors) -> float:
    """Max-norm deviation of the Gram matrix from the identity."""
    if isinstance(basis_or_vectors, OrthonormalBasis):
        q = basis_or_vectors._q[: len(basis_or_vectors)]
    else:
        q = np.atleast_2d(np.asarray(basis_or_vectors, dtype=np.float64))
    if q.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(q @ q.T - np.eye(q.shape[0]))))


def reorthogonalise(basis: OrthonormalBasis) -> tuple[OrthonormalBasis, np.ndarray]:
    """Rebuild a drifted basis with Householder reflections.

    Returns the new basis and the upper-triangular ``S`` with
    ``old_j = sum_i S[i, j] new_i``. Callers holding companion vectors ``W``
    matched to the old basis must map them to ``W S^{-1}``. The returned basis
    has ``rcols`` of ``S @ R_old`` so it still factors the original sources.
    """
    if len(basis) == 0:
        return basis.copy(), np.zeros((0, 0))
    fresh, dropped = householder_orthonormalise(basis._q[: len(basis)], deptol=1e-14)
    if dropped:
        raise np.linalg.LinAlgError("basis lost rank during reorthogonalisation")
    s = fresh.r_matrix()
    r_new = s @ basis.r_matrix()
    rcols = [r_new[: j + 1, j].copy() for j in range(len(basis))]
    return OrthonormalBasis.from_arrays(fresh.vectors, rcols), s


def stack(vectors: Iterable) -> np.ndarray:
    """Stack signals as rows of a float64 matrix."""
    return np.vstack([as_vector(v) for v in vectors])


class RowStack:
    """Append-only float64 row matrix with amortised growth."""

    def __init__(self, dim: int, capacity: int = 16):
        self.dim = int(dim)
        self._data = np.empty((max(capacity, 1), self.dim))
        self._size = 0

    def __len__(self):
        return self._size

    def append(self, row: np.ndarray):
        if self._size == self._data.shape[0]:
            grown = np.empty((2 * self._data.shape[0], self.dim))
            grown[: self._size] = self._data[: self._size]
            self._data = grown
        self._data[self._size] = row
        self._size += 1

    @property
    def rows(self) -> np.ndarray:
        return self._data[: self._size]

    def replace(self, rows: np.ndarray):
        self._data = np.array(rows, dtype=np.float64, copy=True).reshape(-1, self.dim)
        self._size = self._data.shape[0]
        if self._size == 0:
            self._data = np.empty((1, self.dim))
