"""Truncated, per-degree norm-constrained kernel least squares.

The hypothesis class is the span of degree 0..k harmonics with each degree's
L2 norm bounded.  By the representer argument the minimizer over the class
has the form g = sum_l sum_i beta_{l,i} N_l P_l(. x_i), and the L2 norm of
the degree-l slice is beta_l^T K_l beta_l.  The problem is solved by block
coordinate descent over degrees; each block is a ball-constrained least
squares whose KKT point is a ridge solution with multiplier lambda_l found by
bisection.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import DegenerateData, DomainError, FactorizationFailure
from ..grf import BASIS_MAX_DIM, degree_basis
from ..harmonics import dim_harmonics, legendre_table
from ..sphere import as_coords
from .config import RecoveryConfig, truncation_threshold

log = logging.getLogger(__name__)

_ROW_CHUNK = 2048
# eigenvalues below this fraction of the largest are treated as exact zeros
_RANK_TOL = 1e-10


def degree_grams(anchors, k):
    """Stack of K_l = N_l P_l(x_i . x_j) for l = 0..k, shape (k+1, n, n)."""
    x = as_coords(anchors)
    d = x.shape[1]
    g = np.clip(x @ x.T, -1.0, 1.0)
    table = legendre_table(d, max(k, 1))
    out = table.eval_all(g, max_degree=k)
    for l in range(k + 1):
        out[l] *= dim_harmonics(d, l)
    return out


def _apply_zonal(x, anchors, coeffs):
    """sum_l N_l P_l(x . a_i) coeffs[l, i] for every row of ``x``, shape (k+1, m)."""
    k = coeffs.shape[0] - 1
    d = anchors.shape[1]
    table = legendre_table(d, max(k, 1))
    dims = [dim_harmonics(d, l) for l in range(k + 1)]
    out = np.zeros((k + 1, x.shape[0]))
    for s in range(0, x.shape[0], _ROW_CHUNK):
        t = np.clip(x[s:s + _ROW_CHUNK] @ anchors.T, -1.0, 1.0)
        prev = np.ones_like(t)
        out[0, s:s + _ROW_CHUNK] = dims[0] * (prev @ coeffs[0])
        if k == 0:
            continue
        cur = t.copy()
        out[1, s:s + _ROW_CHUNK] = dims[1] * (cur @ coeffs[1])
        for j in range(2, k + 1):
            nxt = table.a[j] * t * cur - table.b[j] * prev
            prev, cur = cur, nxt
            out[j, s:s + _ROW_CHUNK] = dims[j] * (cur @ coeffs[j])
    return out


@dataclass(frozen=True)
class KernelModel:
    """g(x) = sum_l sum_i dual_coeffs[l, i] N_l P_l(x . anchors[i])."""

    d: int
    degree: int
    anchors: np.ndarray
    dual_coeffs: np.ndarray
    config: RecoveryConfig
    multipliers: np.ndarray = None
    loss: float = float("nan")
    sweeps: int = 0

    def __post_init__(self):
        a = np.array(self.anchors, dtype=float)
        b = np.array(self.dual_coeffs, dtype=float)
        if a.ndim != 2 or a.shape[1] != self.d:
            raise DomainError("anchors must be an n x d array")
        if b.shape != (self.degree + 1, a.shape[0]):
            raise DomainError(f"dual_coeffs must have shape {(self.degree + 1, a.shape[0])}")
        lam = np.zeros(self.degree + 1) if self.multipliers is None else np.array(self.multipliers, float)
        for arr in (a, b, lam):
            arr.setflags(write=False)
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "dual_coeffs", b)
        object.__setattr__(self, "multipliers", lam)

    @property
    def n(self):
        return self.anchors.shape[0]

    def degree_values(self, x):
        """Per-degree slices (Pi_l g)(x), shape (k+1, m)."""
        return _apply_zonal(as_coords(x), self.anchors, self.dual_coeffs)

    def __call__(self, x):
        return eval_kernel_model(self, x)

    def degree_norms_sq(self, grams=None):
        """beta_l^T K_l beta_l for each degree: squared L2 norms of the slices."""
        grams = degree_grams(self.anchors, self.degree) if grams is None else grams
        return np.array([b @ g @ b for b, g in zip(self.dual_coeffs, grams)])

    def radii(self):
        return np.array([self.config.radius(self.d, l) for l in range(self.degree + 1)])

    def constraint_violation(self, grams=None):
        """max over degrees of norm^2 / radius^2 - 1 (<= 0 when feasible)."""
        return float(np.max(self.degree_norms_sq(grams) / self.radii() ** 2 - 1.0))


def eval_kernel_model(model, x):
    """Model values at a point (float) or at the rows of a point set (array)."""
    scalar = not hasattr(x, "coords") and np.ndim(x) == 1
    vals = model.degree_values(x).sum(axis=0)
    return float(vals[0]) if scalar else vals


@dataclass
class _Block:
    vecs: np.ndarray  # eigenvectors for the positive part of K_l
    vals: np.ndarray
    radius: float


def _ball_ridge(vals, proj, radius, iters=200):
    """Minimize ||r - K b||^2 s.t. b^T K b <= radius^2 in the eigenbasis of K.

    ``proj`` are the coordinates of r on the eigenvectors.  Returns
    (lambda, coefficients of b on the eigenvectors).
    """
    base = proj / vals
    norm_sq = float(np.sum(proj * base))
    r2 = radius * radius
    if norm_sq <= r2:
        return 0.0, base
    if radius == 0.0:
        return math.inf, np.zeros_like(proj)

    def size(lam):
        q = proj / (vals + lam)
        return float(np.sum(vals * q * q))

    lo, hi = 0.0, math.sqrt(float(np.sum(vals * proj * proj))) / radius
    for _ in range(iters):
        mid = 0.5 * (lo + hi) if lo == 0.0 else math.sqrt(lo * hi)
        if size(mid) > r2:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi, proj / (vals + hi)


def _blocks(x, grams, radii):
    d, n = x.shape[1], x.shape[0]
    out = []
    for l, (g, r) in enumerate(zip(grams, radii)):
        n_l = dim_harmonics(d, l)
        try:
            if n_l < n and n_l <= BASIS_MAX_DIM:
                # K_l = psi psi^T with psi the orthonormal degree-l features
                psi = np.ones((n, 1)) if l == 0 else degree_basis(d, l).features(x)
                v, sv, _ = linalg.svd(psi, full_matrices=False, check_finite=False)
                w = sv * sv
            else:
                w, v = linalg.eigh(g, check_finite=False, driver="evd")
        except linalg.LinAlgError as exc:
            raise FactorizationFailure(f"factorization of the degree-{l} Gram matrix failed: {exc}") from exc
        top = np.max(w) if w.size else 0.0
        keep = w > _RANK_TOL * max(top, 0.0)
        out.append(_Block(v[:, keep], w[keep], r))
    return out


def _objective(y, fitted):
    res = y - fitted.sum(axis=0)
    return float(res @ res)


def fit_kernel_erm(config, points, y, d=None, degree=None, warm_start=None, max_sweeps=1000, tol=1e-12):
    """Least squares over the truncated, per-degree norm-constrained class.

    ``degree`` overrides the truncation threshold computed from ``config``.
    ``warm_start`` is an optional (k+1) x n array of dual coefficients; it is
    scaled into the feasible set before use.
    """
    if not isinstance(config, RecoveryConfig):
        raise DomainError("config must be a RecoveryConfig")
    x = as_coords(points)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] == 0 or x.size == 0:
        raise DegenerateData("no training points")
    if y.size != x.shape[0]:
        raise DegenerateData(f"{x.shape[0]} points but {y.size} labels")
    if not np.all(np.isfinite(y)):
        raise DegenerateData("labels must be finite")
    d = x.shape[1] if d is None else int(d)
    if d != x.shape[1]:
        raise DomainError(f"points have dimension {x.shape[1]}, expected {d}")
    k = truncation_threshold(config, d) if degree is None else int(degree)
    if k < 0:
        raise DomainError("degree must be nonnegative")

    grams = degree_grams(x, k)
    radii = [config.radius(d, l) for l in range(k + 1)]
    blocks = _blocks(x, grams, radii)
    n = x.shape[0]

    # state kept in eigen-coordinates: beta_l = V_l @ coef_l, fitted_l = V_l @ (s_l * coef_l)
    coefs = [np.zeros(b.vals.size) for b in blocks]
    fitted = np.zeros((k + 1, n))
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        if ws.shape != (k + 1, n):
            raise DomainError(f"warm start must have shape {(k + 1, n)}")
        wcoefs, wfit = [], np.zeros((k + 1, n))
        for l, b in enumerate(blocks):
            c = b.vecs.T @ ws[l]
            nrm = math.sqrt(max(float(np.sum(b.vals * c * c)), 0.0))
            if nrm > b.radius:
                c = c * (b.radius / nrm)
            wcoefs.append(c)
            wfit[l] = b.vecs @ (b.vals * c)
        if _objective(y, wfit) < _objective(y, fitted):
            coefs, fitted = wcoefs, wfit

    lams = np.zeros(k + 1)
    obj = _objective(y, fitted)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for l, b in enumerate(blocks):
            if b.vals.size == 0:
                continue
            r = y - (fitted.sum(axis=0) - fitted[l])
            proj = b.vecs.T @ r
            lams[l], coefs[l] = _ball_ridge(b.vals, proj, b.radius)
            fitted[l] = b.vecs @ (b.vals * coefs[l])
        new = _objective(y, fitted)
        done = obj - new <= tol * max(obj, 1e-300)
        obj = min(obj, new)
        if done or k == 0:
            break
    else:
        log.warning("kernel ERM stopped after %d sweeps without meeting tol=%g", max_sweeps, tol)

    duals = np.zeros((k + 1, n))
    for l, b in enumerate(blocks):
        duals[l] = b.vecs @ coefs[l]
    model = KernelModel(d, k, x, duals, config, lams, _objective(y, fitted), sweeps)
    excess = model.constraint_violation(grams)
    if excess > 1e-6:
        raise FactorizationFailure(f"fitted model violates a degree norm constraint by {excess:.3g}")
    return model
