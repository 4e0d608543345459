"""Forward operators used to synthesise training data and ground truth.

None of these are touched by the reconstruction methods themselves; they only
generate pairs ``(u, A u)``, adjoint pairs and reference solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import as_vector

__all__ = [
    "LinearOperator",
    "MatrixOperator",
    "IdentityOperator",
    "SeidmanOperator",
    "SvdOperator",
    "RadonOperator",
    "seidman_coefficients",
    "default_detector_bins",
    "operator_from_config",
]


class LinearOperator:
    """Bounded linear map between finite-dimensional spaces."""

    domain_dim: int
    range_dim: int
    kind = "abstract"

    def _apply(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _adjoint(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, u) -> np.ndarray:
        u = as_vector(u)
        if u.size != self.domain_dim:
            raise ValueError(f"expected domain vector of length {self.domain_dim}, got {u.size}")
        return self._apply(u)

    def adjoint_apply(self, z) -> np.ndarray:
        z = as_vector(z)
        if z.size != self.range_dim:
            raise ValueError(f"expected range vector of length {self.range_dim}, got {z.size}")
        return self._adjoint(z)

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Dense materialisation, column by column. Only for small oracles."""
        eye = np.eye(self.domain_dim)
        return np.column_stack([self._apply(e) for e in eye])

    def config(self) -> dict:
        raise NotImplementedError


class MatrixOperator(LinearOperator):
    kind = "matrix"

    def __init__(self, mat):
        self.mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
        self.range_dim, self.domain_dim = self.mat.shape

    def _apply(self, u):
        return self.mat @ u

    def _adjoint(self, z):
        return self.mat.T @ z

    def matrix(self):
        return self.mat.copy()

    def config(self):
        return {"kind": self.kind, "dims": list(self.mat.shape)}


class IdentityOperator(LinearOperator):
    kind = "identity"

    def __init__(self, dim: int):
        self.domain_dim = self.range_dim = int(dim)

    def _apply(self, u):
        return u.copy()

    _adjoint = _apply

    def config(self):
        return {"kind": self.kind, "dims": [self.domain_dim]}


def seidman_coefficients(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``a`` and first-column ``b`` for modes ``1..n``."""
    i = np.arange(1, n + 1, dtype=np.float64)
    a = np.where(i % 2 == 1, 1.0 / i, i ** -2.5)
    b = 1.0 / i
    b[0] = 0.0
    return a, b


class SeidmanOperator(LinearOperator):
    """``sum xi_i e_i -> sum (a_i xi_i + b_i xi_1) e_i`` on the first ``N`` modes.

    Compact and injective; regularisation by projection with the inputs
    ``e_i`` fails to converge for slowly decaying solutions.
    """

    kind = "seidman"

    def __init__(self, truncation: int):
        if truncation < 1:
            raise ValueError("truncation must be >= 1")
        self.truncation = int(truncation)
        self.domain_dim = self.range_dim = self.truncation
        self.a, self.b = seidman_coefficients(self.truncation)

    def _apply(self, xi):
        out = self.a * xi
        out += self.b * xi[0]
        return out

    def _adjoint(self, z):
        out = self.a * z
        out[0] += np.dot(self.b, z)
        return out

    def column(self, i: int) -> np.ndarray:
        """``A e_i`` for a 1-based mode index."""
        e = np.zeros(self.truncation)
        e[i - 1] = 1.0
        return self._apply(e)

    def matrix(self):
        mat = np.diag(self.a)
        mat[:, 0] += self.b
        return mat

    def config(self):
        return {"kind": self.kind, "truncation": self.truncation}


class SvdOperator(LinearOperator):
    """``u -> sum_i sigma_i (u, x_i) z_i`` from an explicit singular system."""

    kind = "svd"

    def __init__(self, singular_values, left_vectors, right_vectors, law: str | None = None):
        self.singular_values = np.asarray(singular_values, dtype=np.float64)
        self.left_vectors = np.atleast_2d(np.asarray(left_vectors, dtype=np.float64))
        self.right_vectors = np.atleast_2d(np.asarray(right_vectors, dtype=np.float64))
        r = self.singular_values.size
        if self.left_vectors.shape[0] != r or self.right_vectors.shape[0] != r:
            raise ValueError("need one left and one right vector per singular value")
        if np.any(self.singular_values <= 0) or np.any(np.diff(self.singular_values) > 0):
            raise ValueError("singular values must be positive and non-increasing")
        self.range_dim = self.left_vectors.shape[1]
        self.domain_dim = self.right_vectors.shape[1]
        self.law = law

    @classmethod
    def from_law(cls, dim: int, law: str = "inverse", power: float = 1.0, seed: int | None = None):
        """Square operator with ``sigma_i = i**-power``.

        With ``seed=None`` the singular vectors are the canonical basis,
        otherwise random orthonormal bases drawn from the seed.
        """
        i = np.arange(1, dim + 1, dtype=np.float64)
        if law == "inverse":
            sigma = i ** -power
        elif law == "geometric":
            sigma = power ** -(i - 1)
        else:
            raise ValueError(f"unknown singular value law {law!r}")
        if seed is None:
            x = z = np.eye(dim)
        else:
            rng = np.random.default_rng(seed)
            x = np.linalg.qr(rng.standard_normal((dim, dim)))[0].T
            z = np.linalg.qr(rng.standard_normal((dim, dim)))[0].T
        op = cls(sigma, z, x, law=f"{law}:{power}")
        op._seed = seed
        return op

    def _apply(self, u):
        return (self.singular_values * (self.right_vectors @ u)) @ self.left_vectors

    def _adjoint(self, z):
        return (self.singular_values * (self.left_vectors @ z)) @ self.right_vectors

    def matrix(self):
        return (self.left_vectors.T * self.singular_values) @ self.right_vectors

    def config(self):
        cfg = {"kind": self.kind, "dims": [self.domain_dim]}
        if self.law:
            name, power = self.law.split(":")
            cfg["law"] = name
            cfg["power"] = float(power)
            cfg["seed"] = getattr(self, "_seed", None)
        return cfg


def default_detector_bins(rows: int, cols: int) -> int:
    return math.ceil(math.sqrt(2.0) * max(rows, cols)) + 3


def _box_conv_cdf(s: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """CDF of the chord-length profile of a unit pixel.

    For a unit square seen along direction ``theta`` the intersection length
    of the line at signed offset ``s`` is the convolution of two centred
    boxes of widths ``|cos theta|`` and ``|sin theta|``; its integral is 1.
    """
    wide = np.maximum(w1, w2)
    narrow = np.minimum(w1, w2)
    out = np.empty_like(s)
    thin = narrow < 1e-9
    if np.any(thin):
        out[thin] = np.clip(s[thin] / wide[thin] + 0.5, 0.0, 1.0)
    fat = ~thin
    if np.any(fat):
        x, a, b = s[fat], wide[fat], narrow[fat]

        def ramp(t):
            return 0.5 * np.maximum(t, 0.0) ** 2

        num = (
            ramp(x + 0.5 * (a + b))
            - ramp(x + 0.5 * (a - b))
            - ramp(x - 0.5 * (a - b))
            + ramp(x - 0.5 * (a + b))
        )
        out[fat] = np.clip(num / (a * b), 0.0, 1.0)
    return out


@dataclass(frozen=True)
class _RadonGeometry:
    rows: int
    cols: int
    angles: tuple[float, ...]
    detector_bins: int


class RadonOperator(LinearOperator):
    """Parallel-beam Radon transform on a ``rows x cols`` pixel grid.

    Pixels are unit squares centred on the origin; detector bins have unit
    width. The weight of pixel ``p`` in bin ``j`` at angle ``theta`` is the
    exact ray-pixel intersection length integrated over the bin width, so
    every pixel deposits its full area at every angle (mass preservation).
    The sinogram is a ``(detector_bins, n_angles)`` grid stored row-major;
    the adjoint is the exact transpose of the sparse system matrix.
    """

    kind = "radon"

    def __init__(self, rows: int, cols: int | None = None, angles=70, detector_bins: int | None = None):
        cols = rows if cols is None else cols
        if isinstance(angles, (int, np.integer)):
            angles = np.arange(int(angles)) * (np.pi / int(angles))
        angles = tuple(float(t) for t in np.asarray(angles, dtype=np.float64).reshape(-1))
        if not angles:
            raise ValueError("need at least one projection angle")
        bins = default_detector_bins(rows, cols) if detector_bins is None else int(detector_bins)
        self.geometry = _RadonGeometry(int(rows), int(cols), angles, bins)
        self.image_shape = (int(rows), int(cols))
        self.sinogram_shape = (bins, len(angles))
        self.domain_dim = rows * cols
        self.range_dim = bins * len(angles)
        self._mat = self._build()
        self._mat_t = self._mat.T.tocsr()

    @property
    def angles(self) -> np.ndarray:
        return np.asarray(self.geometry.angles)

    @property
    def detector_bins(self) -> int:
        return self.geometry.detector_bins

    def _build(self) -> sp.csr_matrix:
        rows, cols = self.image_shape
        bins, nang = self.sinogram_shape
        rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        px = (cc - (cols - 1) / 2.0).reshape(-1)
        py = ((rows - 1) / 2.0 - rr).reshape(-1)
        pix = np.arange(rows * cols)
        centre = (bins - 1) / 2.0
        data, ri, ci = [], [], []
        for k, theta in enumerate(self.geometry.angles):
            c, s = math.cos(theta), math.sin(theta)
            w1 = np.full(pix.size, abs(c))
            w2 = np.full(pix.size, abs(s))
            proj = px * c + py * s
            half = 0.5 * (abs(c) + abs(s))
            lo = np.floor(proj - half + centre + 0.5).astype(int)
            hi = np.floor(proj + half + centre + 0.5).astype(int)
            for off in range(int((hi - lo).max()) + 1):
                j = lo + off
                keep = (j <= hi) & (j >= 0) & (j < bins)
                if not np.any(keep):
                    continue
                edge_lo = j[keep] - centre - 0.5 - proj[keep]
                w = _box_conv_cdf(edge_lo + 1.0, w1[keep], w2[keep]) - _box_conv_cdf(
                    edge_lo, w1[keep], w2[keep]
                )
                nz = w > 0
                data.append(w[nz])
                ri.append(j[keep][nz] * nang + k)
                ci.append(pix[keep][nz])
        mat = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
            shape=(self.range_dim, self.domain_dim),
        )
        return mat.tocsr()

    @property
    def system_matrix(self) -> sp.csr_matrix:
        return self._mat

    def _apply(self, u):
        return self._mat @ u

    def _adjoint(self, z):
        return self._mat_t @ z

    def matrix(self):
        return self._mat.toarray()

    def config(self):
        g = self.geometry
        return {
            "kind": self.kind,
            "dims": [g.rows, g.cols],
            "angles": len(g.angles),
            "detector_bins": g.detector_bins,
        }


def operator_from_config(cfg: dict) -> LinearOperator:
    """Build an operator from a flat config mapping.

    Keys: ``kind`` (radon | seidman | svd | identity), ``dims``,
    ``angles``, ``detector_bins``, ``truncation``, ``law``, ``power``, ``seed``.
    """
    kind = str(cfg.get("kind", "")).strip().lower()
    dims = cfg.get("dims")
    if isinstance(dims, str):
        dims = [int(d) for d in dims.replace("x", ",").split(",") if d.strip()]
    if kind == "radon":
        if not dims:
            raise ValueError("radon operator needs dims")
        rows, cols = (dims[0], dims[-1])
        bins = cfg.get("detector_bins")
        return RadonOperator(rows, cols, angles=int(cfg.get("angles", 70)),
                             detector_bins=int(bins) if bins not in (None, "") else None)
    if kind == "seidman":
        return SeidmanOperator(int(cfg.get("truncation", dims[0] if dims else 0)))
    if kind == "svd":
        seed = cfg.get("seed")
        seed = None if seed in (None, "", "none", "None") else int(seed)
        return SvdOperator.from_law(int(dims[0]), cfg.get("law", "inverse"),
                                    float(cfg.get("power", 1.0)), seed)
    if kind == "identity":
        return IdentityOperator(int(dims[0]))
    raise ValueError(f"unknown operator kind {kind!r}")
