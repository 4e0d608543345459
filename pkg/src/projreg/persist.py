"""Binary model container with a JSON sidecar.

Layout: 8-byte magic, little-endian ``uint32`` format version, ``uint32``
header length, a UTF-8 JSON header, then the raw sections in header order.
Float sections are little-endian float64 and index sections little-endian
int64. The sidecar ``<file>.json`` repeats the header plus a content hash.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .dual import DualModel
from .linalg import OrthonormalBasis
from .projection import ProjectionModel
from .variational import InputModel

__all__ = ["FORMAT_VERSION", "ContainerError", "save_model", "load_model", "read_sidecar"]

MAGIC = b"PROJREG\x00"
FORMAT_VERSION = 1
_KINDS = {ProjectionModel: "projection", DualModel: "dual", InputModel: "input"}


class ContainerError(ValueError):
    """Malformed, truncated or incompatible model file."""


def _basis_sections(basis: OrthonormalBasis) -> dict:
    return {"basis": np.array(basis.vectors), "r": basis.r_matrix()}


def _sections(model) -> dict:
    secs = _basis_sections(model.uhat if isinstance(model, InputModel) else model.ybar)
    if isinstance(model, ProjectionModel):
        secs["ubar"] = model.ubar
    elif isinstance(model, DualModel):
        secs["vbar"] = model.vbar
        secs["gram"] = model.gram
    else:
        secs["yhat"] = model.yhat
    secs["accepted"] = np.asarray(model.accepted_indices, dtype=np.int64)
    secs["rejected"] = np.asarray(model.rejected_indices, dtype=np.int64)
    return secs


def save_model(model, path, metadata: dict | None = None) -> Path:
    """Write ``model`` to ``path`` and its sidecar to ``path + '.json'``."""
    kind = _KINDS.get(type(model))
    if kind is None:
        raise TypeError(f"cannot persist {type(model).__name__}")
    path = Path(path)
    secs = _sections(model)
    layout = []
    blobs = []
    for name, arr in secs.items():
        dtype = "<i8" if arr.dtype.kind == "i" else "<f8"
        data = np.ascontiguousarray(arr, dtype=dtype)
        layout.append({"name": name, "dtype": dtype, "shape": list(data.shape)})
        blobs.append(data.tobytes())
    header = {
        "kind": kind,
        "dim_u": model.dim_u,
        "dim_y": model.dim_y,
        "deptol": model.deptol,
        "size": len(model),
        "n_seen": model.n_seen,
        "input_shape": list(model.input_shape) if model.input_shape else None,
        "output_shape": list(getattr(model, "output_shape", None) or []) or None,
        "sections": layout,
    }
    head = json.dumps(header, sort_keys=True).encode()
    payload = MAGIC + struct.pack("<II", FORMAT_VERSION, len(head)) + head + b"".join(blobs)
    path.write_bytes(payload)
    side = dict(header, format_version=FORMAT_VERSION,
                sha256=hashlib.sha256(payload).hexdigest(), metadata=metadata or {})
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def read_sidecar(path) -> dict:
    return json.loads(Path(str(path) + ".json").read_text())


def _read(path: Path) -> tuple[dict, dict]:
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:8] != MAGIC:
        raise ContainerError(f"{path}: not a model container")
    version, hlen = struct.unpack("<II", raw[8:16])
    if version != FORMAT_VERSION:
        raise ContainerError(f"{path}: unsupported format version {version}")
    try:
        header = json.loads(raw[16:16 + hlen])
    except ValueError as exc:
        raise ContainerError(f"{path}: corrupt header") from exc
    offset = 16 + hlen
    secs = {}
    for sec in header["sections"]:
        count = int(np.prod(sec["shape"])) if sec["shape"] else 1
        nbytes = 8 * count
        if offset + nbytes > len(raw):
            raise ContainerError(f"{path}: truncated section {sec['name']!r}")
        secs[sec["name"]] = np.frombuffer(raw, dtype=sec["dtype"], count=count,
                                          offset=offset).reshape(sec["shape"]).astype(
            np.int64 if sec["dtype"] == "<i8" else np.float64)
        offset += nbytes
    if offset != len(raw):
        raise ContainerError(f"{path}: trailing bytes after last section")
    return header, secs


def _basis(vectors: np.ndarray, r: np.ndarray, dim: int) -> OrthonormalBasis:
    if len(vectors) == 0:
        return OrthonormalBasis(dim)
    return OrthonormalBasis.from_arrays(vectors, [r[: j + 1, j] for j in range(r.shape[0])])


def load_model(path):
    """Inverse of :func:`save_model`; returns the model of the stored kind."""
    path = Path(path)
    header, secs = _read(path)
    kind = header["kind"]
    dim_u, dim_y = header["dim_u"], header["dim_y"]
    if kind == "projection":
        model = ProjectionModel(dim_u, dim_y, header["deptol"])
        model.ybar = _basis(secs["basis"], secs["r"], dim_y)
        model._ubar.replace(secs["ubar"])
    elif kind == "dual":
        model = DualModel(dim_u, dim_y, header["deptol"])
        model.ybar = _basis(secs["basis"], secs["r"], dim_y)
        model._vbar.replace(secs["vbar"])
        model._gram = secs["gram"].reshape(len(model.ybar), len(model.ybar))
    elif kind == "input":
        model = InputModel(dim_u, dim_y, header["deptol"])
        model.uhat = _basis(secs["basis"], secs["r"], dim_u)
        model._yhat.replace(secs["yhat"])
    else:
        raise ContainerError(f"{path}: unknown model kind {kind!r}")
    model.accepted_indices = secs["accepted"].tolist()
    model.rejected_indices = secs["rejected"].tolist()
    model.n_seen = header["n_seen"]
    model.input_shape = tuple(header["input_shape"]) if header["input_shape"] else None
    if hasattr(model, "output_shape"):
        model.output_shape = tuple(header["output_shape"]) if header["output_shape"] else None
    return model
