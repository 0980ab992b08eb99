"""Isotropic Gaussian random fields on the sphere.

A field with covariance kappa(x.x') = sum_k kappa_k Pbar_k(x.x') splits into
independent degree components; the degree-k component has covariance
kappa_k Pbar_k(x.x').  Each component is drawn exactly, by one of two routes:

* basis: an orthonormal basis psi_1..psi_N of the degree-k harmonics is
  built numerically from zonal kernel sections at fixed anchor points, and
  the component is sqrt(kappa_k / sqrt(N)) * sum_j a_j psi_j with a ~ N(0, I).
  The realization is a function, so it can be evaluated on any point set and
  draws with the same seed agree across point sets.
* dense: Cholesky factor of the n x n covariance on the declared points,
  with diagonal jitter escalation for rank-deficient matrices.

The basis route is used when N_k is small relative to the point count.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import DomainError, FactorizationFailure, FormatError, NotPositiveSemiDefinite
from .harmonics import (
    _check_dim,
    build_quadrature,
    dim_harmonics,
    legendre_coefficients,
    legendre_table,
    log_dim_harmonics,
    sqrt_dim,
)
from .seeding import derive_seed
from .sphere import PointSet, as_coords, sample_uniform_sphere, write_atomic

JITTER_SCHEDULE = (1e-12, 1e-10, 1e-8, 1e-6)
DENSE_MAX_POINTS = 20_000
BASIS_MAX_DIM = 2_000
# fixed root for basis anchor points; bases are part of the sampler, not the draw
_ANCHOR_ROOT = 0x5A3F_17C2
_ROW_CHUNK = 2048


@dataclass(frozen=True)
class KernelSpectrum:
    """Coefficients kappa_0..kappa_K of kappa in the Pbar basis."""

    d: int
    coeffs: np.ndarray
    provenance: str = "analytic"

    def __post_init__(self):
        d = _check_dim(self.d)
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise DomainError("a spectrum needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise DomainError("spectrum coefficients must be finite")
        if np.any(c < 0):
            k = int(np.argmax(c < 0))
            raise NotPositiveSemiDefinite(f"negative coefficient {c[k]!r} at degree {k}")
        c.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "coeffs", c)

    @property
    def max_degree(self):
        return self.coeffs.size - 1

    def variance_by_degree(self):
        """kappa_k * sqrt(N_k): pointwise variance of each degree component."""
        return np.array([c * sqrt_dim(self.d, k) for k, c in enumerate(self.coeffs)])

    def kappa(self, t):
        return legendre_table(self.d, max(self.max_degree, 1)).series(self.coeffs, t)

    def kappa_at_one(self):
        return float(self.variance_by_degree().sum())


def unit_spectrum(d, k):
    """Spectrum with a single unit coefficient at degree k."""
    c = np.zeros(k + 1)
    c[k] = 1.0
    return KernelSpectrum(d, c)


def power_law_spectrum(d, c, alpha, max_degree=64, floor=1e-12):
    """kappa_k = c^2 N_k^{-1/2-alpha}, cut where kappa_k sqrt(N_k) < ``floor``.

    ``max_degree`` caps the expansion; with slowly decaying spectra the floor
    alone can demand thousands of degrees.
    """
    d = _check_dim(d)
    if c <= 0 or not 0 < alpha:
        raise DomainError("power-law spectrum needs c > 0 and alpha > 0")
    coeffs = []
    for k in range(int(max_degree) + 1):
        log_n = log_dim_harmonics(d, k)
        if 2 * math.log(c) - alpha * log_n < math.log(floor):
            break
        coeffs.append(math.exp(2 * math.log(c) - (0.5 + alpha) * log_n))
    return KernelSpectrum(d, np.array(coeffs))


def spectrum_from_kappa(d, K, kappa, rule=None, rel_tol=1e-10):
    """Legendre coefficients of ``kappa`` by quadrature.

    Entries in [-rel_tol * kappa(1), 0) are treated as roundoff and zeroed
    with a warning; anything more negative raises NotPositiveSemiDefinite.
    """
    d = _check_dim(d)
    rule = rule or build_quadrature(d, K)
    coeffs = np.asarray(legendre_coefficients(rule, kappa, K), dtype=float)
    scale = abs(float(np.asarray(kappa(np.array([1.0])))[0]))
    limit = rel_tol * scale
    if np.any(coeffs < -limit):
        k = int(np.argmax(coeffs < -limit))
        raise NotPositiveSemiDefinite(f"kappa has coefficient {coeffs[k]!r} at degree {k}")
    if np.any(coeffs < 0):
        warnings.warn("clamping tiny negative spectrum coefficients to zero", RuntimeWarning)
        coeffs = np.maximum(coeffs, 0.0)
    return KernelSpectrum(d, coeffs, "quadrature-of-kappa")


def zonal_kernel(d, k, x, z):
    """N_k P_k(x . z) between the rows of ``x`` and ``z``."""
    x = as_coords(x)
    z = as_coords(z)
    n_k = dim_harmonics(d, k)
    table = legendre_table(d, max(k, 1))
    out = np.empty((x.shape[0], z.shape[0]))
    for s in range(0, x.shape[0], _ROW_CHUNK):
        g = np.clip(x[s:s + _ROW_CHUNK] @ z.T, -1.0, 1.0)
        out[s:s + _ROW_CHUNK] = table.eval(k, g)
    out *= n_k
    return out


@dataclass(frozen=True)
class DegreeBasis:
    """Orthonormal basis psi(x) = W^T k_Z(x) of the degree-k harmonics."""

    d: int
    k: int
    anchors: np.ndarray
    weights: np.ndarray

    @property
    def dim(self):
        return self.weights.shape[1]

    def features(self, points):
        """psi_j(x_i) as an n x N matrix; each row has squared norm N."""
        x = as_coords(points)
        out = np.empty((x.shape[0], self.dim))
        for s in range(0, x.shape[0], _ROW_CHUNK):
            out[s:s + _ROW_CHUNK] = zonal_kernel(self.d, self.k, x[s:s + _ROW_CHUNK], self.anchors) @ self.weights
        return out


@lru_cache(maxsize=32)
def degree_basis(d, k, oversample=1.5):
    """Numerical orthonormal basis of the degree-k harmonics on S^{d-1}.

    The zonal kernel at M > N random anchors has rank exactly N; its top-N
    eigenpairs give the Nystrom map, which is exact here because the kernel
    has finite rank.
    """
    d = _check_dim(d)
    n_k = dim_harmonics(d, k)
    m = max(n_k + 8, int(math.ceil(oversample * n_k)))
    z = sample_uniform_sphere(d, m, derive_seed(_ANCHOR_ROOT, d, k)).coords
    gram = zonal_kernel(d, k, z, z)
    evals, evecs = linalg.eigh(gram, overwrite_a=True, check_finite=False, driver="evd")
    top = evals[-n_k:]
    rest = evals[:-n_k]
    if top[0] <= 1e-8 * top[-1] or (rest.size and np.max(np.abs(rest)) > 1e-8 * top[-1]):
        raise FactorizationFailure(f"degree-{k} anchor Gram matrix lacks a clean rank-{n_k} gap")
    weights = evecs[:, -n_k:] / np.sqrt(top)
    z.setflags(write=False)
    weights.setflags(write=False)
    return DegreeBasis(d, k, z, weights)


def cholesky_with_jitter(cov, schedule=JITTER_SCHEDULE):
    """Lower Cholesky factor of ``cov`` + eps*mean(diag)*I for the first eps that works."""
    scale = float(np.mean(np.diag(cov)))
    if scale <= 0:
        raise FactorizationFailure("covariance has nonpositive mean diagonal")
    n = cov.shape[0]
    for eps in schedule:
        trial = cov + (eps * scale) * np.eye(n)
        try:
            return linalg.cholesky(trial, lower=True, overwrite_a=True, check_finite=False), eps
        except linalg.LinAlgError:
            continue
    raise FactorizationFailure(f"Cholesky failed up to jitter {schedule[-1]} x mean diagonal")


@dataclass(frozen=True)
class FieldSample:
    """A realization on ``points``; ``per_degree[k]`` holds the degree-k component."""

    spectrum: KernelSpectrum
    points: PointSet
    per_degree: np.ndarray
    total: np.ndarray
    seed: int

    def to_csv(self, path, meta=None):
        d, K = self.spectrum.d, self.spectrum.max_degree
        lines = [f"# d={d},K={K},seed={self.seed}"]
        if meta:
            lines.append("# config=" + meta)
        cols = [f"x{i}" for i in range(d)] + [f"deg{k}" for k in range(K + 1)] + ["total"]
        lines.append(",".join(cols))
        x = self.points.coords
        for i in range(self.points.n):
            vals = list(x[i]) + list(self.per_degree[:, i]) + [self.total[i]]
            lines.append(",".join(repr(float(v)) for v in vals))
        write_atomic(path, "\n".join(lines) + "\n")


def read_field_csv(path):
    """Return (header dict, coords, per_degree, total) from a FieldSample CSV."""
    header, rows, cols = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if not body.startswith("config="):
                    for part in body.split(","):
                        key, _, val = part.partition("=")
                        header[key.strip()] = val.strip()
                continue
            if cols is None:
                cols = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    try:
        d, K = int(header["d"]), int(header["K"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: missing d/K header") from exc
    arr = np.array(rows, dtype=float).reshape(-1, d + K + 2)
    return header, arr[:, :d], arr[:, d:d + K + 1].T, arr[:, -1]


class FieldSampler:
    """Factor once, draw many: samples of a spectrum on a fixed point set.

    ``method`` is "auto", "basis" or "dense".  Under "auto" a degree uses the
    basis route when N_k < n and N_k <= ``basis_max_dim``.
    """

    def __init__(self, spectrum, points, method="auto", basis_max_dim=BASIS_MAX_DIM,
                 dense_max_points=DENSE_MAX_POINTS):
        if method not in ("auto", "basis", "dense"):
            raise DomainError(f"unknown sampling method {method!r}")
        if not isinstance(points, PointSet):
            points = PointSet(points)
        if points.d != spectrum.d:
            raise DomainError(f"points live in R^{points.d}, spectrum in R^{spectrum.d}")
        self.spectrum = spectrum
        self.points = points
        self.routes = {}
        self._factors = {}
        d, n = spectrum.d, points.n
        for k, c in enumerate(spectrum.coeffs):
            if c == 0.0:
                continue
            n_k = dim_harmonics(d, k)
            use_basis = k == 0 or method == "basis" or (
                method == "auto" and n_k < n and n_k <= basis_max_dim)
            if use_basis:
                scale = math.sqrt(c / sqrt_dim(d, k))
                if k == 0:
                    feats = np.ones((n, 1))
                else:
                    feats = degree_basis(d, k).features(points)
                self._factors[k] = feats * scale
                self.routes[k] = "basis"
            else:
                if n > dense_max_points:
                    raise DomainError(f"dense sampling limited to {dense_max_points} points, got {n}")
                cov = zonal_kernel(d, k, points, points)
                cov *= c / sqrt_dim(d, k)
                self._factors[k], _ = cholesky_with_jitter(cov)
                self.routes[k] = "dense"

    def component(self, k, seed):
        """Degree-k values for ``seed``; zeros for skipped degrees."""
        if k not in self._factors:
            return np.zeros(self.points.n)
        rng = np.random.default_rng([int(seed), int(k)])
        factor = self._factors[k]
        return factor @ rng.standard_normal(factor.shape[1])

    def draw(self, seed):
        K = self.spectrum.max_degree
        per = np.zeros((K + 1, self.points.n))
        for k in self._factors:
            per[k] = self.component(k, seed)
        return FieldSample(self.spectrum, self.points, per, per.sum(axis=0), int(seed))


def sample_field(spectrum, points, seed, method="auto"):
    return FieldSampler(spectrum, points, method=method).draw(seed)


def project_degree(f_values, points, k, x, table=None):
    """Monte Carlo estimate of (Pi_k f)(x) and its standard error.

    Uses f(x) = sqrt(N_k) E_xi[f(xi) Pbar_k(x . xi)] for f in the degree-k
    space, which projects general f onto that space.
    """
    pts = as_coords(points)
    f = np.asarray(f_values, dtype=float).reshape(-1)
    d = pts.shape[1]
    table = table or legendre_table(d, max(k, 1))
    x = np.asarray(x, dtype=float).reshape(-1)
    terms = f * table.eval(k, np.clip(pts @ x, -1.0, 1.0), normalized=True)
    root = sqrt_dim(d, k)
    m = terms.size
    return root * float(terms.mean()), root * float(terms.std(ddof=1)) / math.sqrt(m)
