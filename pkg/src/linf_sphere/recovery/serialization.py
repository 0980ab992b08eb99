"""Versioned JSON model files and training-data CSV input."""

import json

import numpy as np

from ..errors import ConfigError, FormatError
from ..sphere import write_atomic
from .config import RecoveryConfig
from .kernel import KernelModel
from .network import NNModel

FORMAT_VERSION = "1"
KERNEL_TOL = 1e-6
NN_TOL = 1e-9


def _floats(arr):
    return np.asarray(arr, dtype=float).tolist()


def model_to_dict(model):
    if isinstance(model, KernelModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "kernel",
            "d": model.d,
            "degree": model.degree,
            "anchors": _floats(model.anchors),
            "dual_coeffs": _floats(model.dual_coeffs),
            "multipliers": _floats(model.multipliers),
            "loss": float(model.loss),
            "config": model.config.to_dict(),
        }
    if isinstance(model, NNModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "nn",
            "d": model.d,
            "degree": model.degree,
            "directions": _floats(model.directions),
            "out_weights": _floats(model.out_weights),
            "norm_bound": float(model.norm_bound),
            "loss": float(model.loss),
            "config": None if model.config is None else model.config.to_dict(),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def dumps_model(model):
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":")) + "\n"


def save_model(model, path):
    write_atomic(path, dumps_model(model))


def model_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version!r}")
    try:
        cfg = doc["config"]
        config = None if cfg is None else RecoveryConfig.from_dict(cfg)
        kind = doc["kind"]
        if kind == "kernel":
            model = KernelModel(int(doc["d"]), int(doc["degree"]), np.array(doc["anchors"], float),
                                np.array(doc["dual_coeffs"], float), config,
                                np.array(doc["multipliers"], float), float(doc["loss"]))
        elif kind == "nn":
            model = NNModel(int(doc["d"]), int(doc["degree"]), np.array(doc["directions"], float),
                            np.array(doc["out_weights"], float), float(doc["norm_bound"]), config,
                            float(doc["loss"]))
        else:
            raise FormatError(f"unknown model kind {kind!r}")
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model file: {exc}") from exc
    _check_invariants(model)
    return model


def _check_invariants(model):
    if isinstance(model, KernelModel):
        norms = np.linalg.norm(model.anchors, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise FormatError("anchors are not unit vectors")
        if model.config is None:
            raise FormatError("kernel model needs its config snapshot")
        if model.constraint_violation() > KERNEL_TOL:
            raise FormatError("stored dual coefficients violate a degree norm constraint")
    else:
        norms = np.linalg.norm(model.directions, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise FormatError("directions are not unit vectors")
        if np.sum(np.abs(model.out_weights)) > model.norm_bound * (1.0 + NN_TOL):
            raise FormatError("output weights exceed the L1 norm bound")


def loads_model(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())


def read_training_csv(path):
    """Return (x, y) from a training CSV.

    Accepts plain rows ``x_0, ..., x_{d-1}, y`` (an optional non-numeric header
    line is skipped) or a random-field sample file, whose ``total`` column is
    used as the label.
    """
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if header is not None or rows:
                    raise FormatError(f"{path}: non-numeric row {line[:40]!r}")
                header = parts
    if not rows:
        raise FormatError(f"{path}: no data rows")
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: ragged rows") from exc
    if arr.ndim != 2:
        raise FormatError(f"{path}: ragged rows")
    if header is not None and "total" in header:
        d = sum(1 for h in header if h.startswith("x"))
        return arr[:, :d], arr[:, header.index("total")]
    if arr.shape[1] < 4:
        raise FormatError(f"{path}: need at least 3 coordinates and a label per row")
    return arr[:, :-1], arr[:, -1]
