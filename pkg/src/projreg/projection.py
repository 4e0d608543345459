"""Regularisation by projection from training pairs alone.

The outputs ``y_i`` are orthonormalised into ``ybar_i``; the inputs are
combined with the very same coefficients into ``ubar_i`` so that
``A ubar_i = ybar_i`` holds without ever evaluating ``A``. The reconstruction
is ``u_n = sum_{i<=n} (y, ybar_i) ubar_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import (
    DEPTOL,
    REORTH_TRIGGER,
    OrthonormalBasis,
    RowStack,
    as_vector,
    gram_deviation,
    mgs_extend,
    reorthogonalise,
)
from .training import TrainingSet

__all__ = [
    "ProjectionModel",
    "ChoiceRule",
    "NoAdmissibleSizeWarning",
    "fit",
    "reconstruct",
    "reconstruct_noisy",
    "reconstruct_path",
    "choose_n",
]


class NoAdmissibleSizeWarning(UserWarning):
    """No training-set size satisfies the stability constraint."""


class ProjectionModel:
    """Fitted state: ``ybar`` (orthonormal outputs) and ``ubar`` (matched inputs).

    Extending the model with more pairs only orthogonalises the new outputs
    against the existing basis.
    """

    def __init__(self, dim_u: int, dim_y: int, deptol: float = DEPTOL,
                 reorth_trigger: float | None = REORTH_TRIGGER):
        self.dim_u = int(dim_u)
        self.dim_y = int(dim_y)
        self.deptol = deptol
        self.reorth_trigger = reorth_trigger
        self.ybar = OrthonormalBasis(self.dim_y)
        self._ubar = RowStack(self.dim_u)
        self.accepted_indices: list[int] = []
        self.rejected_indices: list[int] = []
        self.n_seen = 0
        self.input_shape = None
        self.output_shape = None

    def __len__(self):
        return len(self.ybar)

    @property
    def ubar(self) -> np.ndarray:
        return self._ubar.rows

    @property
    def rdiag(self) -> np.ndarray:
        return np.asarray(self.ybar.rdiag)

    def extend(self, pairs: TrainingSet | tuple) -> "ProjectionModel":
        inputs, outputs = _unpack(pairs)
        if self.input_shape is None and isinstance(pairs, TrainingSet):
            self.input_shape, self.output_shape = pairs.input_shape, pairs.output_shape
        for u, y in zip(inputs, outputs):
            if u.size != self.dim_u or y.size != self.dim_y:
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
            prev = self._ubar.rows
            ubar = (u - coeffs @ prev) / rho if len(prev) else u / rho
            self._ubar.append(ubar)
            self.accepted_indices.append(index)
        if self.reorth_trigger is not None and gram_deviation(self.ybar) > self.reorth_trigger:
            self.reorthogonalise()
        return self

    def reorthogonalise(self):
        """Rebuild ``ybar`` by Householder and carry ``ubar`` along."""
        fresh, s = reorthogonalise(self.ybar)
        self.ybar = fresh
        self._ubar.replace(solve_triangular(s, self._ubar.rows, trans="T"))

    def coefficients(self, y, n: int | None = None) -> np.ndarray:
        n = _check_n(self, n)
        y = as_vector(y)
        if y.size != self.dim_y:
            raise ValueError(f"dimension mismatch: data {y.size}, model {self.dim_y}")
        return self.ybar.vectors[:n] @ y


def _unpack(pairs):
    if isinstance(pairs, TrainingSet):
        return pairs.inputs, pairs.outputs
    inputs, outputs = pairs
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if len(inputs) != len(outputs):
        raise ValueError("inputs and outputs must have equal counts")
    return inputs, outputs


def _check_n(model, n):
    if n is None:
        return len(model)
    if not 0 <= n <= len(model):
        raise ValueError(f"n={n} out of range for model of size {len(model)}")
    return int(n)


def fit(pairs, deptol: float = DEPTOL, **kwargs) -> ProjectionModel:
    """Fit a projection model; raises when every pair is dependent."""
    inputs, outputs = _unpack(pairs)
    if len(inputs) == 0:
        raise ValueError("need at least one training pair")
    model = ProjectionModel(inputs.shape[1], outputs.shape[1], deptol, **kwargs)
    model.extend(pairs)
    if len(model) == 0:
        raise ValueError("all training pairs were rejected as dependent")
    return model


def reconstruct(model: ProjectionModel, y, n: int | None = None) -> np.ndarray:
    """``sum_{i<=n} (y, ybar_i) ubar_i``, the minimum-norm solution of ``A P_{U_n} u = y``."""
    n = _check_n(model, n)
    if n == 0:
        return np.zeros(model.dim_u)
    return model.coefficients(y, n) @ model.ubar[:n]


def reconstruct_noisy(model: ProjectionModel, y_delta, n: int | None = None) -> np.ndarray:
    # Same formula; P_{Y_n} y_delta always lies in the range, so it is well defined.
    return reconstruct(model, y_delta, n)


def reconstruct_path(model: ProjectionModel, y, ns) -> np.ndarray:
    """Reconstructions for every ``n`` in ``ns`` from one coefficient pass."""
    ns = [_check_n(model, n) for n in ns]
    coeffs = model.coefficients(y, max(ns) if ns else 0)
    out = np.empty((len(ns), model.dim_u))
    order = np.argsort(ns, kind="stable")
    acc = np.zeros(model.dim_u)
    done = 0
    for idx in order:
        n = ns[idx]
        if n > done:
            acc = acc + coeffs[done:n] @ model.ubar[done:n]
            done = n
        out[idx] = acc
    return out


@dataclass(frozen=True)
class ChoiceRule:
    """Keep the largest ``n`` with ``delta * sqrt(n) * max_{i<=n} 1/rdiag_i <= tau``.

    ``delta`` is an absolute noise norm and the rule assumes unit-norm inputs.
    """

    tau: float = 1.0
    grid: tuple[int, ...] | None = None

    def bound(self, model: ProjectionModel, delta: float) -> np.ndarray:
        """Stability bound for ``n = 1..len(model)``."""
        inv = np.maximum.accumulate(1.0 / model.rdiag)
        return delta * np.sqrt(np.arange(1, len(model) + 1)) * inv

    def select(self, model: ProjectionModel, delta: float) -> int:
        if delta < 0:
            raise ValueError("delta must be non-negative")
        size = len(model)
        candidates = np.arange(1, size + 1) if self.grid is None else np.array(
            sorted(n for n in self.grid if 1 <= n <= size), dtype=int)
        if delta == 0:
            return int(candidates[-1]) if candidates.size else size
        ok = self.bound(model, delta)[candidates - 1] <= self.tau
        if not np.any(ok):
            warnings.warn(f"no admissible training-set size for delta={delta:g}; using n=1",
                          NoAdmissibleSizeWarning, stacklevel=2)
            return 1
        return int(candidates[ok][-1])


def choose_n(model: ProjectionModel, delta: float, tau: float = 1.0, rule: ChoiceRule | None = None) -> int:
    rule = rule or ChoiceRule(tau)
    return rule.select(model, delta)
