"""Training pairs: ingestion, synthesis, adjoint pairs and noise."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import GridSignal, as_vector
from .operators import LinearOperator

__all__ = [
    "TrainingSet",
    "AdjointTrainingSet",
    "NoiseSpec",
    "load_dataset",
    "save_image",
    "write_manifest",
    "make_pairs",
    "make_adjoint_pairs",
    "add_noise",
    "blob_images",
    "random_split",
]


class TrainingSet:
    """Nested list of pairs ``(u_i, y_i)`` held as row matrices.

    Appending never rewrites earlier rows, so any prefix of a set equals the
    set built from the same source truncated to that length.
    """

    def __init__(self, inputs=None, outputs=None, *, normalised: bool = False,
                 input_shape=None, output_shape=None, provenance: str = ""):
        self.inputs = _rows(inputs)
        self.outputs = _rows(outputs)
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs must have equal counts")
        self.normalised = normalised
        self.input_shape = tuple(input_shape) if input_shape is not None else None
        self.output_shape = tuple(output_shape) if output_shape is not None else None
        self.provenance = provenance
        if normalised and len(self):
            norms = np.linalg.norm(self.inputs, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-12:
                raise ValueError("normalised set has inputs of non-unit norm")

    def __len__(self):
        return self.inputs.shape[0] if self.inputs.ndim == 2 else 0

    def __iter__(self):
        return iter(zip(self.inputs, self.outputs))

    def append(self, u, y):
        u = as_vector(u)[None, :]
        y = as_vector(y)[None, :]
        if self.normalised and abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("normalised set only accepts unit-norm inputs")
        self.inputs = u.copy() if len(self) == 0 else np.vstack([self.inputs, u])
        self.outputs = y.copy() if self.outputs.size == 0 else np.vstack([self.outputs, y])

    def prefix(self, m: int) -> "TrainingSet":
        return TrainingSet(self.inputs[:m], self.outputs[:m], normalised=self.normalised,
                           input_shape=self.input_shape, output_shape=self.output_shape,
                           provenance=self.provenance)


def _rows(x) -> np.ndarray:
    if x is None:
        return np.zeros((0, 0))
    if isinstance(x, np.ndarray):
        return np.atleast_2d(np.asarray(x, dtype=np.float64)) if x.size else np.zeros((0, 0))
    x = list(x)
    if not x:
        return np.zeros((0, 0))
    return np.vstack([as_vector(v) for v in x])


@dataclass
class AdjointTrainingSet:
    outputs: np.ndarray
    adjoint_images: np.ndarray

    def __post_init__(self):
        self.outputs = _rows(self.outputs)
        self.adjoint_images = _rows(self.adjoint_images)
        if len(self.outputs) != len(self.adjoint_images):
            raise ValueError("outputs and adjoint images must have equal counts")

    def __len__(self):
        return self.outputs.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    mode: str = "relative"
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be non-negative")
        if self.mode not in ("absolute", "relative"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


def add_noise(y, spec: NoiseSpec) -> np.ndarray:
    """Return ``y + Delta`` with seeded Gaussian ``Delta`` of exact norm.

    ``||Delta|| = level`` in absolute mode and ``level * ||y||`` in relative mode.
    """
    y = as_vector(y)
    target = spec.level * (np.linalg.norm(y) if spec.mode == "relative" else 1.0)
    if target == 0.0:
        return y.copy()
    delta = np.random.default_rng(spec.seed).standard_normal(y.size)
    delta *= target / np.linalg.norm(delta)
    return y + delta


def make_pairs(op: LinearOperator, inputs, normalise: bool = True, *, input_shape=None,
               provenance: str = "") -> TrainingSet:
    """Apply ``op`` to each input, after scaling it to unit norm when asked."""
    rows = _rows(inputs)
    if input_shape is None and not isinstance(inputs, np.ndarray):
        shapes = {getattr(v, "shape", None) for v in inputs if isinstance(v, GridSignal)}
        if len(shapes) == 1:
            input_shape = shapes.pop()
    if normalise and len(rows):
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms == 0):
            raise ValueError(f"zero input at index {int(np.argmin(norms))} cannot be normalised")
        rows = rows / norms[:, None]
    outputs = np.vstack([op.apply(u) for u in rows]) if len(rows) else np.zeros((0, 0))
    return TrainingSet(rows, outputs, normalised=normalise, input_shape=input_shape,
                       output_shape=getattr(op, "sinogram_shape", None), provenance=provenance)


def make_adjoint_pairs(op: LinearOperator, outputs) -> AdjointTrainingSet:
    rows = _rows(outputs)
    return AdjointTrainingSet(rows, np.vstack([op.adjoint_apply(y) for y in rows]))


def blob_images(count: int, rows: int, cols: int | None = None, seed: int = 0,
                blobs: tuple[int, int] = (2, 5),
                widths: tuple[float, float] = (1.5, 4.0)) -> np.ndarray:
    """Smooth synthetic images: sums of random Gaussian bumps scaled to [0, 1].

    ``widths`` are bump standard deviations in pixels at 32x32 and scale with
    the grid. Returns an array of shape ``(count, rows * cols)``.
    """
    cols = rows if cols is None else cols
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(rows) - (rows - 1) / 2, np.arange(cols) - (cols - 1) / 2,
                         indexing="ij")
    scale = min(rows, cols) / 32.0
    out = np.empty((count, rows * cols))
    for k in range(count):
        img = np.zeros((rows, cols))
        for _ in range(rng.integers(blobs[0], blobs[1] + 1)):
            r = 0.3 * min(rows, cols) * np.sqrt(rng.uniform())
            phi = rng.uniform(0, 2 * np.pi)
            cy, cx = r * np.sin(phi), r * np.cos(phi)
            width = rng.uniform(*widths) * scale
            amp = rng.uniform(0.3, 1.0)
            img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width ** 2))
        out[k] = (img / img.max()).reshape(-1)
    return out


def random_split(count: int, fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation split into ``(first, second)`` index arrays."""
    perm = np.random.default_rng(seed).permutation(count)
    cut = int(round(fraction * count))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


# --- file formats -------------------------------------------------------------


def _read_pgm(path: Path) -> GridSignal:
    from PIL import Image

    with Image.open(path) as img:
        if img.format != "PPM" or img.mode not in ("L", "I", "I;16", "I;16B"):
            raise ValueError(f"{path}: not a grayscale PGM image")
        arr = np.asarray(img, dtype=np.float64)
        maxval = 255.0 if img.mode == "L" else float(img.info.get("maxval", 65535))
    return GridSignal(arr / maxval)


def _read_csv(path: Path) -> GridSignal:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed CSV ({exc})") from exc
    return GridSignal(arr)


def load_dataset(path, format: str | None = None) -> list[GridSignal]:
    """Load one image file or every image in a directory.

    PGM files are scaled by their maxval into [0, 1]; CSV files are read as
    they are (one grid row per line, no header). In a directory with a
    ``manifest.json`` the listed files are read in manifest order, otherwise
    files are read in sorted order.
    """
    path = Path(path)
    if path.is_dir():
        manifest = path / "manifest.json"
        if manifest.exists():
            meta = json.loads(manifest.read_text())
            files = [path / f for f in meta["files"]]
            format = format or meta.get("format")
        else:
            suffixes = {"pgm": (".pgm",), "csv": (".csv",), None: (".pgm", ".csv")}[format]
            files = sorted(p for p in path.iterdir() if p.suffix.lower() in suffixes)
    else:
        files = [path]
    signals = []
    for f in files:
        fmt = format or f.suffix.lower().lstrip(".")
        if fmt == "pgm":
            signals.append(_read_pgm(f))
        elif fmt == "csv":
            signals.append(_read_csv(f))
        else:
            raise ValueError(f"{f}: unsupported format {fmt!r}")
    shapes = {s.shape for s in signals}
    if len(shapes) > 1:
        raise ValueError(f"inconsistent image shapes in {path}: {sorted(shapes)}")
    return signals


def save_image(path, image, format: str | None = None, shape=None):
    """Write a grid as PGM (P5, maxval 255, clipped to [0, 1]) or exact CSV."""
    path = Path(path)
    fmt = format or path.suffix.lower().lstrip(".")
    if isinstance(image, GridSignal):
        arr = image.as_image()
    else:
        arr = np.asarray(image, dtype=np.float64)
        if shape is not None:
            arr = arr.reshape(shape)
    if arr.ndim != 2:
        raise ValueError("image must be two-dimensional")
    if fmt == "pgm":
        from PIL import Image

        q = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
        Image.fromarray(q, mode="L").save(path, format="PPM")
    elif fmt == "csv":
        np.savetxt(path, arr, delimiter=",", fmt="%.17g")
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def write_manifest(directory, files, shape, fmt: str, provenance: dict | str):
    directory = Path(directory)
    meta = {"files": [os.fspath(f) for f in files], "shape": list(shape), "format": fmt,
            "provenance": provenance}
    (directory / "manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
