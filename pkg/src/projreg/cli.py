"""Command-line front end and experiment harness.

Every command reads an INI config (``--config``); command-line flags override
config keys, which override built-in defaults. Errors are reported as one JSON
object on stderr with exit codes 2 (config), 3 (numerical) and 4 (I/O).
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as diag
from .dual import choose_n_dual, fit_dual, reconstruct_dual
from .linalg import householder_orthonormalise
from .operators import LinearOperator, RadonOperator, SvdOperator, operator_from_config
from .persist import ContainerError, load_model, save_model
from .projection import ProjectionModel, choose_n, fit, reconstruct
from .training import (
    NoiseSpec,
    TrainingSet,
    add_noise,
    blob_images,
    load_dataset,
    make_adjoint_pairs,
    make_pairs,
    save_image,
    write_manifest,
)
from .variational import (
    InputModel,
    ProjectedOperator,
    SolverControls,
    VariationalProblem,
    choose_alpha,
    fit_input_side,
    solve_tikhonov,
    solve_tv,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "operator": {"kind": "radon", "dims": "32,32", "angles": "30", "detector_bins": "",
                 "truncation": "", "law": "inverse", "power": "1", "seed": ""},
    "dataset": {"source": "synthetic", "generator": "", "count": "300", "seed": "1",
                "blobs": "2,5", "widths": "1.5,4", "outputs": ""},
    "training": {"grid": "25,50,100,200,300", "n": "", "normalise": "true"},
    "validation": {"count": "5", "seed": "99", "target": ""},
    "noise": {"deltas": "0,1e-3,1e-2", "mode": "relative", "seed": "0"},
    "methods": {"list": "projection,dual"},
    "solver": {"penalty": "tikhonov", "alpha": "", "alpha_c": "1", "max_iter": "5000",
               "tol": "1e-6", "trace_every": "0"},
    "diagnose": {"ns": "5,10,25,50", "offsets": "20"},
    "output": {"dir": "out"},
}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class NumericalFailure(RuntimeError):
    """A solver failed in a way the user asked to treat as fatal."""


# --- configuration ------------------------------------------------------------


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _words(text: str) -> list[str]:
    return [t.strip().lower() for t in text.split(",") if t.strip()]


@dataclass
class ExperimentConfig:
    operator: dict
    dataset: dict
    grid: list[int]
    deltas: list[float]
    noise_mode: str
    noise_seed: int
    methods: list[str]
    solver: dict
    validation: dict
    diagnose: dict
    out: Path
    n: int | None = None
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        # the output location does not change results
        blob = json.dumps({k: v for k, v in self.raw.items() if k != "output"},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.dataset["seed"])

    def provenance(self) -> dict:
        import scipy

        return {"config_hash": self.config_hash, "seed": self.seed,
                "versions": f"projreg={__version__};numpy={np.__version__};scipy={scipy.__version__}"}


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, the INI file at ``path`` and ``overrides`` (section -> key -> value)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        unknown = set(parser.sections()) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, items in (overrides or {}).items():
        for key, value in items.items():
            if value is not None:
                parser.set(section, key, str(value))
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    try:
        cfg = ExperimentConfig(
            operator=raw["operator"],
            dataset=raw["dataset"],
            grid=_ints(raw["training"]["grid"]),
            deltas=_floats(raw["noise"]["deltas"]),
            noise_mode=raw["noise"]["mode"],
            noise_seed=int(raw["noise"]["seed"]),
            methods=_words(raw["methods"]["list"]),
            solver=raw["solver"],
            validation=raw["validation"],
            diagnose=raw["diagnose"],
            out=Path(raw["output"]["dir"]),
            n=int(raw["training"]["n"]) if raw["training"]["n"] else None,
            raw=raw,
        )
        int(cfg.dataset["seed"]), int(cfg.dataset["count"]), int(cfg.validation["seed"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if not cfg.grid or any(n < 1 for n in cfg.grid):
        raise ConfigError("training grid must be a non-empty list of positive sizes")
    if not cfg.deltas or any(d < 0 for d in cfg.deltas):
        raise ConfigError("noise deltas must be a non-empty list of non-negative levels")
    if cfg.noise_mode not in ("relative", "absolute"):
        raise ConfigError(f"unknown noise mode {cfg.noise_mode!r}")
    bad = set(cfg.methods) - {"projection", "dual", "variational"}
    if bad or not cfg.methods:
        raise ConfigError(f"unknown methods {sorted(bad)}")
    source = cfg.dataset["source"]
    if source != "synthetic" and not Path(source).exists():
        raise ConfigError(f"dataset source does not exist: {source}")
    if cfg.dataset["outputs"] and not Path(cfg.dataset["outputs"]).exists():
        raise ConfigError(f"dataset outputs do not exist: {cfg.dataset['outputs']}")
    if cfg.solver["penalty"] not in ("tikhonov", "tv"):
        raise ConfigError(f"unknown penalty {cfg.solver['penalty']!r}")


# --- shared plumbing ----------------------------------------------------------


def build_operator(cfg: ExperimentConfig) -> LinearOperator:
    try:
        return operator_from_config(cfg.operator)
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"invalid operator spec: {exc}") from exc


def _input_shape(op: LinearOperator):
    return getattr(op, "image_shape", None)


def _generator(cfg: ExperimentConfig, op: LinearOperator) -> str:
    gen = cfg.dataset["generator"].strip().lower()
    if gen:
        return gen
    return {"radon": "blobs", "seidman": "unit", "svd": "singular"}.get(op.kind, "blobs")


def synth_inputs(cfg: ExperimentConfig, op: LinearOperator, count: int, seed: int) -> np.ndarray:
    gen = _generator(cfg, op)
    if gen == "blobs":
        shape = _input_shape(op)
        if shape is None:
            raise ConfigError("blob generator needs an image-domain operator")
        lo, hi = _ints(cfg.dataset["blobs"])
        widths = tuple(_floats(cfg.dataset["widths"]))
        return blob_images(count, shape[0], shape[1], seed=seed, blobs=(lo, hi), widths=widths)
    if gen == "unit":
        return np.eye(count, op.domain_dim)
    if gen == "singular":
        if not isinstance(op, SvdOperator):
            raise ConfigError("singular generator needs an svd operator")
        return op.right_vectors[:count].copy()
    raise ConfigError(f"unknown dataset generator {gen!r}")


def load_inputs(cfg: ExperimentConfig, op: LinearOperator) -> tuple[np.ndarray, np.ndarray | None]:
    """Training inputs, plus outputs when they are stored on disk."""
    source = cfg.dataset["source"]
    if source == "synthetic":
        return synth_inputs(cfg, op, int(cfg.dataset["count"]), cfg.seed), None
    root = Path(source)
    img_dir = root / "images" if (root / "images").is_dir() else root
    fmt = None if (img_dir / "manifest.json").exists() else (
        "csv" if any(img_dir.glob("*.csv")) else None)
    inputs = np.vstack([s.values for s in load_dataset(img_dir, fmt)])
    out_dir = Path(cfg.dataset["outputs"]) if cfg.dataset["outputs"] else root / "sinograms"
    outputs = None
    if out_dir.is_dir():
        outputs = np.vstack([s.values for s in load_dataset(out_dir, "csv")])
        if len(outputs) != len(inputs):
            raise ConfigError("stored inputs and outputs differ in count")
    return inputs, outputs


def training_pairs(cfg: ExperimentConfig, op: LinearOperator, limit: int | None = None):
    inputs, outputs = load_inputs(cfg, op)
    limit = limit or cfg.n or len(inputs)
    inputs = inputs[:limit]
    if inputs.shape[1] != op.domain_dim:
        raise ConfigError(f"input size {inputs.shape[1]} does not match operator domain {op.domain_dim}")
    normalise = cfg.raw["training"]["normalise"].lower() in ("1", "true", "yes")
    if outputs is None:
        return make_pairs(op, inputs, normalise, input_shape=_input_shape(op),
                          provenance=cfg.config_hash)
    outputs = outputs[:limit]
    if normalise:
        norms = np.linalg.norm(inputs, axis=1)
        inputs, outputs = inputs / norms[:, None], outputs / norms[:, None]
    return TrainingSet(inputs, outputs, normalised=normalise, input_shape=_input_shape(op),
                       output_shape=getattr(op, "sinogram_shape", None), provenance=cfg.config_hash)


def validation_set(cfg: ExperimentConfig, op: LinearOperator) -> tuple[np.ndarray, np.ndarray]:
    count = int(cfg.validation["count"])
    target = cfg.validation["target"].strip().lower() or (
        "harmonic" if op.kind == "seidman" else "synthetic")
    if target == "harmonic":
        u = (1.0 / np.arange(1, op.domain_dim + 1))[None, :]
    elif target == "synthetic":
        if _generator(cfg, op) == "blobs":
            u = synth_inputs(cfg, op, count, int(cfg.validation["seed"]))
        else:
            rng = np.random.default_rng(int(cfg.validation["seed"]))
            u = np.vstack([op.adjoint_apply(rng.standard_normal(op.range_dim))
                           for _ in range(count)])
    else:
        raise ConfigError(f"unknown validation target {target!r}")
    return u, np.vstack([op.apply(x) for x in u])


def _write_json(path: Path, payload):
    diag.write_report_json(path, payload)


def _save_image_pair(stem: Path, vec: np.ndarray, shape):
    shape = tuple(shape) if shape else (1, vec.size)
    save_image(stem.with_suffix(".csv"), vec, "csv", shape)
    if len(shape) == 2 and shape[0] > 1:
        save_image(stem.with_suffix(".pgm"), vec, "pgm", shape)


def _read_vector(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    return load_dataset(path)[0].values


def _noisy(cfg: ExperimentConfig, y: np.ndarray, delta: float | None) -> tuple[np.ndarray, float]:
    """Data with seeded noise and the absolute noise norm."""
    if not delta:
        return y, 0.0
    spec = NoiseSpec(delta, cfg.noise_mode, cfg.noise_seed)
    absolute = delta * np.linalg.norm(y) if cfg.noise_mode == "relative" else delta
    return add_noise(y, spec), absolute


def _load(path, kind: type):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model not found: {path}")
    model = load_model(path)
    if not isinstance(model, kind):
        raise ConfigError(f"{path} holds a {type(model).__name__}, expected {kind.__name__}")
    return model


# --- commands -----------------------------------------------------------------


def cmd_gen(cfg: ExperimentConfig, args) -> dict:
    op = build_operator(cfg)
    count = int(cfg.dataset["count"])
    inputs = synth_inputs(cfg, op, count, cfg.seed)
    shape = _input_shape(op) or (1, op.domain_dim)
    out_shape = getattr(op, "sinogram_shape", None) or (1, op.range_dim)
    img_dir, sino_dir = cfg.out / "images", cfg.out / "sinograms"
    img_dir.mkdir(parents=True, exist_ok=True)
    sino_dir.mkdir(parents=True, exist_ok=True)
    img_files, sino_files = [], []
    for k, u in enumerate(inputs):
        name = f"u_{k:05d}"
        _save_image_pair(img_dir / name, u, shape)
        img_files.append(name + ".csv")
        sname = f"y_{k:05d}.csv"
        save_image(sino_dir / sname, op.apply(u), "csv", out_shape)
        sino_files.append(sname)
    prov = dict(cfg.provenance(), operator=op.config(), generator=_generator(cfg, op))
    write_manifest(img_dir, img_files, shape, "csv", prov)
    write_manifest(sino_dir, sino_files, out_shape, "csv", prov)
    meta = {"count": count, "image_shape": list(shape), "output_shape": list(out_shape),
            "provenance": prov, "created": time.strftime("%Y-%m-%dT%H:%M:%S")}
    (cfg.out / "manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return {"images": count, "sinograms": count, "out": str(cfg.out)}


def cmd_fit(cfg: ExperimentConfig, args) -> dict:
    op = build_operator(cfg)
    pairs = training_pairs(cfg, op)
    model = fit(pairs)
    inp = fit_input_side(pairs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    meta = cfg.provenance()
    save_model(model, cfg.out / "projection.model", meta)
    save_model(inp, cfg.out / "input.model", meta)
    report = {"size": len(model), "pairs": len(pairs), "rejected": model.rejected_indices,
              "input_size": len(inp), "rdiag_min": float(model.rdiag.min()),
              "rdiag_max": float(model.rdiag.max())}
    _write_json(cfg.out / "fit_report.json", report)
    return report


def _model_path(cfg, args, name):
    return Path(args.model) if getattr(args, "model", None) else cfg.out / name


def cmd_reconstruct(cfg: ExperimentConfig, args) -> dict:
    model = _load(_model_path(cfg, args, "projection.model"), ProjectionModel)
    if not args.data:
        raise ConfigError("reconstruct needs --data")
    y = _read_vector(args.data)
    if y.size != model.dim_y:
        raise ConfigError(f"dimension mismatch: data {y.size}, model {model.dim_y}")
    delta = args.delta if args.delta is not None else None
    yd, dabs = _noisy(cfg, y, delta)
    n = cfg.n if cfg.n is not None else choose_n(model, dabs)
    u = reconstruct(model, yd, n)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _save_image_pair(cfg.out / "reconstruction", u, model.input_shape)
    report = {"n": n, "delta": dabs, "norm": float(np.linalg.norm(u)), "size": len(model)}
    _write_json(cfg.out / "reconstruction.json", report)
    return report


def cmd_dual(cfg: ExperimentConfig, args) -> dict:
    op = build_operator(cfg)
    pairs = training_pairs(cfg, op)
    model = fit_dual(make_adjoint_pairs(op, pairs.outputs))
    model.input_shape = pairs.input_shape
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_model(model, cfg.out / "dual.model", cfg.provenance())
    report = {"size": len(model), "rejected": model.rejected_indices}
    if args.data:
        y = _read_vector(args.data)
        if y.size != model.dim_y:
            raise ConfigError(f"dimension mismatch: data {y.size}, model {model.dim_y}")
        yd, dabs = _noisy(cfg, y, args.delta)
        n = cfg.n if cfg.n is not None else choose_n_dual(model, dabs)
        u = reconstruct_dual(model, yd, n)
        _save_image_pair(cfg.out / "dual_reconstruction", u, model.input_shape)
        report.update(n=n, delta=dabs, norm=float(np.linalg.norm(u)))
    _write_json(cfg.out / "dual_report.json", report)
    return report


def cmd_var(cfg: ExperimentConfig, args) -> dict:
    if getattr(args, "model", None):
        model = _load(args.model, InputModel)
    else:
        op = build_operator(cfg)
        model = fit_input_side(training_pairs(cfg, op))
    if not args.data:
        raise ConfigError("var needs --data")
    y = _read_vector(args.data)
    if y.size != model.dim_y:
        raise ConfigError(f"dimension mismatch: data {y.size}, model {model.dim_y}")
    yd, dabs = _noisy(cfg, y, args.delta)
    n = cfg.n if cfg.n is not None else len(model)
    K = ProjectedOperator(model, n)
    if cfg.solver["alpha"]:
        alpha = float(cfg.solver["alpha"])
    else:
        basis, _ = householder_orthonormalise(model.yhat[:n])
        resid = yd - (basis.vectors @ yd) @ basis.vectors
        alpha = choose_alpha(dabs, float(np.linalg.norm(resid)), float(cfg.solver["alpha_c"]))
    penalty = cfg.solver["penalty"]
    controls = SolverControls(max_iter=int(cfg.solver["max_iter"]), tol=float(cfg.solver["tol"]),
                              trace_every=int(cfg.solver["trace_every"]))
    problem = VariationalProblem(K, yd, alpha, penalty, model.input_shape, controls)
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = {"n": n, "alpha": alpha, "penalty": penalty, "delta": dabs}
    if penalty == "tikhonov":
        u = solve_tikhonov(problem)
        report["converged"] = True
    else:
        res = solve_tv(problem)
        u = res.solution
        report.update(converged=res.converged, iterations=res.iterations, gap=res.gap,
                      objective=res.objective)
        if res.trace:
            with open(cfg.out / "tv_trace.csv", "w") as fh:
                fh.write("iteration,objective,gap\n")
                for it, obj, gap in res.trace:
                    fh.write(f"{it},{obj!r},{gap!r}\n")
    report["norm"] = float(np.linalg.norm(u))
    _save_image_pair(cfg.out / "var_reconstruction", u, model.input_shape)
    _write_json(cfg.out / "var_report.json", report)
    if not report["converged"] and args.strict:
        raise NumericalFailure(f"TV solver stopped after {report['iterations']} iterations "
                               f"with residual {report['gap']:.3g}")
    return report


def cmd_diagnose(cfg: ExperimentConfig, args) -> dict:
    op = build_operator(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    if op.kind == "seidman":
        ns = _ints(cfg.diagnose["ns"])
        offsets = int(cfg.diagnose["offsets"])
        cells = [diag.seidman_gamma_oracle(op.truncation, n, i).to_dict()
                 for n in ns for i in range(n + 1, n + offsets + 1)]
        for c in cells:
            c["gamma1_deviation"] = abs(c["gamma1_numeric"] - c["gamma1_analytic"])
        payload = {"truncation": op.truncation, "cells": cells,
                   "max_deviation": max(max(c["max_deviation"], c["gamma1_deviation"]) for c in cells),
                   "max_sum_squares": max(c["sum_squares"] for c in cells),
                   "provenance": cfg.provenance()}
        _write_json(cfg.out / "gamma_oracle.json", payload)
        summary["gamma_max_deviation"] = payload["max_deviation"]
    pairs = training_pairs(cfg, op)
    model, inp = fit(pairs), fit_input_side(pairs)
    u_val, y_val = validation_set(cfg, op)
    reports = {
        "residual_decay": diag.residual_decay_report(model),
        "l1_coefficients": diag.l1_partial_sums(inp, u_val[0]),
        "yhat_condition": diag.condition_curve(inp, [n for n in cfg.grid if n <= len(inp)] or None),
    }
    if model.accepted_indices == inp.accepted_indices:
        reports["strong_convergence"] = diag.strong_condition_check(model, inp, y_val[0])
        bounds = diag.ubar_bounds_check(model, inp)
        _write_json(cfg.out / "ubar_bounds.json", bounds)
        summary["ubar_bounds_hold"] = bounds["holds"]
    prov = cfg.provenance()
    for name, rep in reports.items():
        _write_json(cfg.out / f"{name}.json", rep)
        diag.write_curve_csv(cfg.out / f"{name}.csv", rep.grid, rep.values, prov)
        summary[name] = rep.verdict
    _write_json(cfg.out / "diagnose_summary.json", summary)
    return summary


def cmd_experiment(cfg: ExperimentConfig, args) -> dict:
    op = build_operator(cfg)
    pairs = training_pairs(cfg, op, max(cfg.grid))
    u_val, y_val = validation_set(cfg, op)
    models = {}
    if "projection" in cfg.methods:
        models["projection"] = fit(pairs)
    if "dual" in cfg.methods:
        models["dual"] = fit_dual(make_adjoint_pairs(op, pairs.outputs))
    options = {}
    if "variational" in cfg.methods:
        models["variational"] = fit_input_side(pairs)
        options = {"alpha_c": float(cfg.solver["alpha_c"]),
                   "output_basis": fit(pairs).ybar}
        if cfg.solver["alpha"]:
            options["alpha"] = float(cfg.solver["alpha"])
    curve_dir = cfg.out / "curves"
    curve_dir.mkdir(parents=True, exist_ok=True)
    prov = cfg.provenance()
    summary = {"curves": [], "provenance": prov}
    for method in cfg.methods:
        model = models[method]
        grid = [n for n in cfg.grid if n <= len(model)]
        if not grid:
            raise ConfigError(f"no grid size fits the {method} model of size {len(model)}")
        curves = diag.semiconvergence_curve(
            method, model, u_val, y_val, cfg.deltas, grid, seed=cfg.noise_seed,
            **(options if method == "variational" else {}))
        for curve in curves:
            name = f"{method}_delta_{curve.delta:g}.csv"
            diag.write_curve_csv(curve_dir / name, curve.grid, curve.errors,
                                 dict(prov, method=method, delta=repr(curve.delta)))
            summary["curves"].append(dict(curve.to_dict(), file=f"curves/{name}"))
    _write_json(cfg.out / "experiment.json", summary)
    return {"curves": len(summary["curves"])}


COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "reconstruct": cmd_reconstruct,
    "dual": cmd_dual,
    "var": cmd_var,
    "diagnose": cmd_diagnose,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"projreg {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="dataset seed")
    common.add_argument("--n", type=int, help="training-set size used for reconstruction")
    common.add_argument("--delta", type=float, help="noise level (mode from config)")
    common.add_argument("--alpha", type=float, help="variational regularisation parameter")
    common.add_argument("--method", help="method list, or tikhonov/tv for var")
    common.add_argument("--strict", action="store_true", help="treat solver non-convergence as failure")
    common.add_argument("--model", help="model container path")
    common.add_argument("--data", help="measurement file (CSV or PGM)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__[4:])
    return parser


def _overrides(args) -> dict:
    over = {"output": {"dir": args.out}, "dataset": {"seed": args.seed},
            "training": {"n": args.n}, "solver": {"alpha": args.alpha}}
    if args.delta is not None:
        over["noise"] = {"deltas": repr(args.delta)}
    if args.method:
        if args.method.lower() in ("tikhonov", "tv"):
            over["solver"]["penalty"] = args.method.lower()
        else:
            over["methods"] = {"list": args.method}
    return over


def _fail(code: int, exc: BaseException) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        result = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (OSError, ContainerError) as exc:
        return _fail(EXIT_IO, exc)
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, exc)
    print(json.dumps(diag._jsonable(result), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
