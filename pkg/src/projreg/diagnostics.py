"""Numerical checks of the convergence assumptions and trend reports.

Identity-type checks return numbers to be compared against tolerances.
Trend-type checks return an :class:`AssumptionReport` whose verdict is one of
``consistent``, ``inconsistent`` or ``inconclusive``; nothing here asserts.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg as la

from .dual import DualModel, reconstruct_dual
from .linalg import as_vector
from .operators import SeidmanOperator, seidman_coefficients
from .projection import ProjectionModel, reconstruct_path
from .training import NoiseSpec, add_noise
from .variational import (
    InputModel,
    ProjectedOperator,
    VariationalProblem,
    choose_alpha,
    data_residual,
    fit_input_side,
    solve_tikhonov,
)

__all__ = [
    "AssumptionReport",
    "ErrorCurve",
    "GammaOracle",
    "l1_partial_sums",
    "beta_bound_check",
    "beta_path",
    "seidman_gamma_oracle",
    "strong_condition_check",
    "ubar_bounds_check",
    "residual_decay_report",
    "condition_curve",
    "semiconvergence_curve",
    "worker_count",
    "write_report_json",
    "write_curve_csv",
]

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

TAIL_FRACTION = 0.05
DECAY_FACTOR = 10.0


@dataclass
class AssumptionReport:
    name: str
    grid: list
    values: list
    verdict: str
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = [int(n) for n in self.grid]
        self.values = [float(v) for v in self.values]
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("report grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("report values must be finite")

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@dataclass
class ErrorCurve:
    method: str
    delta: float
    grid: list
    errors: list
    argmin: int = 0

    def __post_init__(self):
        self.grid = [int(n) for n in self.grid]
        self.errors = [float(e) for e in self.errors]
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be non-negative")
        if self.grid:
            self.argmin = self.grid[int(np.argmin(self.errors))]

    def interior_minimum(self) -> bool:
        return self.grid[0] < self.argmin < self.grid[-1]

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _grid(grid, size: int) -> list[int]:
    grid = sorted({int(n) for n in grid}) if grid is not None else list(range(1, size + 1))
    if not grid or grid[0] < 1 or grid[-1] > size:
        raise ValueError(f"grid must lie in 1..{size}")
    return grid


def _tail_verdict(partial: np.ndarray) -> tuple[str, str]:
    """Judge a non-decreasing sequence of partial sums indexed ``1..len``.

    The last-decade increment ``S(N) - S(N/10)`` below 5% of ``S(N)`` reads as
    convergent. An increment at least half the previous decade's reads as
    divergent (logarithmic growth or faster).
    """
    size = len(partial)
    total = partial[-1]
    if size < 10 or total == 0:
        return INCONCLUSIVE, "sweep shorter than one decade"
    last = total - partial[size // 10 - 1]
    note = f"last-decade increment {last:.3g} of total {total:.3g}"
    if last < TAIL_FRACTION * total:
        return CONSISTENT, note
    if size >= 100:
        prev = partial[size // 10 - 1] - partial[size // 100 - 1]
        note += f"; previous decade {prev:.3g}"
        if prev > 0 and last >= 0.5 * prev:
            return INCONSISTENT, note
    return INCONCLUSIVE, note


# --- coefficient sums ---------------------------------------------------------


def l1_partial_sums(input_model: InputModel, target, grid=None) -> AssumptionReport:
    """Partial sums of ``|(target, uhat_i)|`` over the retained basis."""
    target = as_vector(target)
    if target.size != input_model.dim_u:
        raise ValueError(f"dimension mismatch: target {target.size}, model {input_model.dim_u}")
    grid = _grid(grid, len(input_model))
    partial = np.cumsum(np.abs(input_model.uhat.vectors[: grid[-1]] @ target))
    verdict, note = _tail_verdict(partial)
    return AssumptionReport("l1_coefficients", grid, partial[np.array(grid) - 1], verdict, note)


def beta_bound_check(input_model: InputModel, i: int, n: int) -> tuple[float, float]:
    """Squared norm of the coefficients of ``P_{Y_n} yhat_i`` in ``{yhat_j}_{j<=n}``.

    Indices are 1-based. Returns ``(sum beta_j^2, cond)`` where ``cond`` is the
    condition number of the ``yhat`` basis matrix; ``inf`` flags a numerically
    singular basis.
    """
    size = len(input_model)
    if not (1 <= n <= size and 1 <= i <= size):
        raise ValueError(f"indices out of range for model of size {size}")
    if i <= n:
        return 1.0, _cond(input_model.yhat[:n])
    beta, cond = _beta(input_model, i, n)
    return float(beta @ beta), cond


def _cond(rows: np.ndarray) -> float:
    s = la.svdvals(rows)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def _beta(input_model: InputModel, i: int, n: int) -> tuple[np.ndarray, float]:
    basis = input_model.yhat[:n].T
    beta, _, rank, _ = la.lstsq(basis, input_model.yhat[i - 1], lapack_driver="gelsy")
    return beta, (_cond(basis.T) if rank == n else float("inf"))


def beta_path(input_model: InputModel) -> np.ndarray:
    """``C_i = sum_j (beta_j^{i,i-1})^2`` for every retained ``i`` (``C_1 = 0``).

    Uses one QR of the ``yhat`` rows: with ``yhat = (Q S)^T`` the coefficients
    are ``S[:i-1,:i-1]^{-1} S[:i-1,i-1]``.
    """
    size = len(input_model)
    _, s = la.qr(input_model.yhat.T, mode="economic")
    out = np.zeros(size)
    for i in range(1, size):
        b = la.solve_triangular(s[:i, :i], s[:i, i])
        out[i] = b @ b
    return out


# --- Seidman oracle -----------------------------------------------------------


@dataclass
class GammaOracle:
    truncation: int
    n: int
    i: int
    gamma1_numeric: float
    gamma1_analytic: float
    cn: float
    sum_squares: float
    condition: float
    deviations: list
    max_deviation: float

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@lru_cache(maxsize=4)
def _seidman_model(truncation: int, count: int) -> InputModel:
    op = SeidmanOperator(truncation)
    inputs = np.eye(count, truncation)
    outputs = np.vstack([op.column(k) for k in range(1, count + 1)])
    return fit_input_side((inputs, outputs))


def seidman_cn(truncation: int, n: int) -> float:
    j = np.arange(n + 1, truncation + 1, dtype=np.float64)
    return 1.0 / (1.0 + np.sum(1.0 / j ** 2))


def seidman_gamma_oracle(truncation: int, n: int, i: int, model: InputModel | None = None) -> GammaOracle:
    """Numeric against closed-form coefficients of ``P_{Y_n} yhat_i``.

    Only the first ``i`` unit inputs are needed, so the model stays small even
    for a long truncation. ``model`` may be passed to reuse a fit.
    """
    if not 1 <= n < i <= truncation:
        raise ValueError("need 1 <= n < i <= truncation")
    if model is None or len(model) < i:
        # round up so neighbouring indices share one fit
        model = _seidman_model(truncation, min(truncation, 1 << max(6, (i - 1).bit_length())))
    a, _ = seidman_coefficients(truncation)
    beta, cond = _beta(model, i, n)
    cn = seidman_cn(truncation, n)
    g1 = cn * a[i - 1] / i
    k = np.arange(2, n + 1)
    analytic = np.concatenate([[g1], -g1 / (k * a[k - 1])])
    dev = np.abs(beta - analytic)
    return GammaOracle(truncation, n, i, float(beta[0]), float(g1), float(cn), float(beta @ beta),
                       cond, dev.tolist(), float(dev.max()))


# --- strong convergence and ubar bounds ---------------------------------------


def _check_same_pairs(model: ProjectionModel, input_model: InputModel):
    if model.accepted_indices != input_model.accepted_indices:
        raise ValueError("models must retain the same training pairs")


def strong_condition_check(model: ProjectionModel, input_model: InputModel, y, grid=None) -> AssumptionReport:
    """Running sup of ``|(y, ybar_i)| / |(y_i, ybar_i)|`` and partial sums of ``|(u_i, uhat_i)|``.

    ``values`` holds the partial sums; the ratio path is in ``extra``.
    """
    _check_same_pairs(model, input_model)
    y = as_vector(y)
    grid = _grid(grid, len(model))
    ratio = np.abs(model.coefficients(y)) / model.rdiag
    sup = np.maximum.accumulate(ratio)
    partial = np.cumsum(input_model.rdiag)
    verdict, note = _tail_verdict(partial)
    # a sup that keeps growing over the last decade spoils condition (i)
    size = len(sup)
    if size >= 10 and sup[-1] > 2.0 * sup[max(size // 10 - 1, 0)] and verdict == CONSISTENT:
        verdict, note = INCONCLUSIVE, note + "; coefficient ratio still growing"
    idx = np.array(grid) - 1
    return AssumptionReport("strong_convergence", grid, partial[idx], verdict, note,
                            {"ratio_sup": sup[idx].tolist(), "ratio_sup_final": float(sup[-1])})


def ubar_bounds_check(model: ProjectionModel, input_model: InputModel, c: float | None = None,
                      slack: float = 1e-8) -> dict:
    """Check ``lower <= |ubar_i| <= upper`` for every retained index.

    ``lower = r_u / r_y`` and ``upper = sqrt(C + 1) r_u / r_y`` with ``r_u``, ``r_y``
    the Gram-Schmidt residual norms of ``u_i`` and ``y_i``; ``C`` defaults to the
    largest coefficient sum from :func:`beta_path`.
    """
    _check_same_pairs(model, input_model)
    betas = beta_path(input_model)
    c = float(betas.max()) if c is None else float(c)
    ratio = input_model.rdiag / model.rdiag
    lower = ratio
    upper = np.sqrt(c + 1.0) * ratio
    value = np.linalg.norm(model.ubar, axis=1)
    ok = (lower <= value * (1 + slack)) & (value <= upper * (1 + slack))
    return {"lower": lower, "value": value, "upper": upper, "C": c, "per_index_C": betas,
            "holds": bool(ok.all()), "violations": np.flatnonzero(~ok).tolist()}


def residual_decay_report(model) -> AssumptionReport:
    """Gram-Schmidt residual norms ``|y_i - P_{Y_{i-1}} y_i|`` and their running minimum."""
    rdiag = np.asarray(model.rdiag)
    running = np.minimum.accumulate(rdiag)
    drop = rdiag[0] / running[-1] if running[-1] > 0 else np.inf
    verdict = CONSISTENT if drop >= DECAY_FACTOR else INCONCLUSIVE
    return AssumptionReport("residual_decay", range(1, len(rdiag) + 1), rdiag, verdict,
                            f"running minimum fell by a factor {drop:.3g}",
                            {"running_min": running.tolist()})


def condition_curve(input_model: InputModel, grid=None) -> AssumptionReport:
    """Condition number of the ``yhat`` basis matrix for each ``n`` in ``grid``."""
    grid = _grid(grid, len(input_model))
    values = [min(_cond(input_model.yhat[:n]), np.finfo(float).max) for n in grid]
    return AssumptionReport("yhat_condition", grid, values, INCONCLUSIVE,
                            "conditioning confounds coefficient checks")


# --- semiconvergence ----------------------------------------------------------


def worker_count(default: int | None = None) -> int:
    env = os.environ.get("PROJREG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"PROJREG_THREADS must be an integer, got {env!r}") from None
    return default or min(8, os.cpu_count() or 1)


def _errors_for(method: str, model, u, y_delta, grid, delta_abs, options) -> np.ndarray:
    nu = np.linalg.norm(u)
    if method == "projection":
        recs = reconstruct_path(model, y_delta, grid)
    elif method == "dual":
        recs = np.vstack([reconstruct_dual(model, y_delta, n) for n in grid])
    elif method == "variational":
        c = options.get("alpha_c", 1.0)
        basis = options.get("output_basis")
        recs = []
        for n in grid:
            rho = data_residual(basis, y_delta, n) if basis is not None else 0.0
            alpha = options.get("alpha") or choose_alpha(delta_abs, rho, c)
            recs.append(solve_tikhonov(VariationalProblem(ProjectedOperator(model, n), y_delta, alpha)))
        recs = np.vstack(recs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.linalg.norm(recs - u, axis=1) / nu


def semiconvergence_curve(method: str, model, inputs, outputs, deltas, grid, seed: int = 0,
                          workers: int | None = None, **options) -> list[ErrorCurve]:
    """Mean relative error per ``(delta, n)`` over a validation set.

    Noise on validation item ``k`` uses seed ``seed + k`` for every ``delta``,
    so curves differ only by the noise level. ``delta`` is relative to ``|y|``.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if len(inputs) != len(outputs) or len(inputs) == 0:
        raise ValueError("validation inputs and outputs must be non-empty and paired")
    grid = _grid(grid, len(model))

    def cell(args):
        delta, k = args
        y = outputs[k]
        yd = add_noise(y, NoiseSpec(delta, "relative", seed + k))
        return _errors_for(method, model, inputs[k], yd, grid, delta * np.linalg.norm(y), options)

    cells = [(d, k) for d in deltas for k in range(len(inputs))]
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as ex:
        results = list(ex.map(cell, cells))
    curves = []
    for j, d in enumerate(deltas):
        block = results[j * len(inputs):(j + 1) * len(inputs)]
        curves.append(ErrorCurve(method, float(d), grid, np.mean(block, axis=0)))
    return curves


# --- emitters -----------------------------------------------------------------


def write_report_json(path, payload):
    """Write a report, curve, oracle or plain dict as sorted JSON."""
    if hasattr(payload, "to_dict"):
        payload = payload.to_dict()
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_curve_csv(path, grid, values, provenance: dict | None = None):
    """Plot-ready CSV with columns ``n,value`` plus constant provenance columns."""
    provenance = provenance or {}
    keys = sorted(provenance)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "value"] + keys)
        for n, v in zip(grid, values):
            w.writerow([int(n), repr(float(v))] + [provenance[k] for k in keys])
