"""Point sets on S^{d-1}, ridge functions and grid-based norm estimates."""

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError
from .harmonics import _check_dim

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class PointSet:
    """n unit vectors in R^d stored row-wise.

    ``seed`` records the RNG seed that produced the points, or None when they
    were supplied directly.
    """

    coords: np.ndarray
    seed: int = None

    def __post_init__(self):
        x = np.array(self.coords, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1:
            raise DomainError("a point set needs a nonempty n x d array")
        _check_dim(x.shape[1])
        norms = np.linalg.norm(x, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise DomainError("point set rows must have unit norm")
        # renormalize rows outside the 1e-12 band; rows inside keep their exact bits
        off = np.abs(norms - 1.0) > UNIT_TOL
        x[off] /= norms[off, None]
        x.setflags(write=False)
        object.__setattr__(self, "coords", x)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    def __len__(self):
        return self.n

    def append(self, extra):
        """New point set with ``extra`` rows (e.g. known maximizers) at the end."""
        extra = np.atleast_2d(np.asarray(extra, dtype=float))
        return PointSet(np.vstack([self.coords, extra]), self.seed)

    def head(self, m):
        return PointSet(self.coords[:m], self.seed)

    def gram(self, other=None):
        """Clamped inner products x_i . y_j."""
        other = self if other is None else other
        return np.clip(self.coords @ as_coords(other).T, -1.0, 1.0)

    def to_csv(self, path):
        rows = [[repr(float(v)) for v in row] for row in self.coords]
        header = [f"# d={self.d},n={self.n},seed={self.seed}"]
        write_atomic(path, "\n".join(header + [",".join(r) for r in rows]) + "\n")

    @classmethod
    def from_csv(cls, path):
        seed = None
        data = []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    for part in line[1:].strip().split(","):
                        key, _, val = part.partition("=")
                        if key.strip() == "seed" and val not in ("", "None"):
                            seed = int(val)
                    continue
                if line.strip():
                    data.append([float(v) for v in line.split(",")])
        if not data:
            raise FormatError(f"{path}: no points")
        return cls(np.array(data), seed)


def as_coords(points):
    if isinstance(points, PointSet):
        return points.coords
    return np.atleast_2d(np.asarray(points, dtype=float))


def sample_uniform_sphere(d, n, seed):
    """n i.i.d. uniform points on S^{d-1} (normalized Gaussians)."""
    d = _check_dim(d)
    if int(n) != n or n < 1:
        raise DomainError(f"number of points must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((int(n), d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return PointSet(x, seed)


def random_direction(d, rng):
    v = rng.standard_normal(_check_dim(d))
    return v / np.linalg.norm(v)


def check_unit_vector(u, d=None, tol=1e-9):
    u = np.asarray(u, dtype=float).reshape(-1)
    if d is not None and u.size != d:
        raise DomainError(f"direction has length {u.size}, expected {d}")
    if abs(np.linalg.norm(u) - 1.0) > tol:
        raise DomainError("direction must have unit norm")
    return u


def ridge_eval(table, k, u, pts):
    """Pbar_{k,d}(x_i . u) for every row of ``pts``."""
    x = as_coords(pts)
    u = check_unit_vector(u, table.d)
    return table.eval(k, np.clip(x @ u, -1.0, 1.0), normalized=True)


@dataclass(frozen=True)
class NormEstimate:
    """Grid estimates of the sup and L2 norms.

    ``sup_abs`` is a lower bound on the true sup norm unless the maximizer is
    on the grid.
    """

    sup_abs: float
    rms: float
    argmax_index: int
    argmax_point: np.ndarray
    grid_size: int

    @property
    def ratio(self):
        return self.sup_abs / self.rms if self.rms > 0 else float("inf")


def estimate_norms(values, points=None):
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise DomainError("no values to estimate norms from")
    i = int(np.argmax(np.abs(v)))
    arg = None if points is None else as_coords(points)[i].copy()
    rms = float(np.sqrt(np.mean(v * v)))
    return NormEstimate(float(abs(v[i])), rms, i, arg, int(v.size))


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
