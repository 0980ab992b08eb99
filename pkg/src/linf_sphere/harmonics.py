"""Scalar machinery for spherical harmonics on S^{d-1}.

Dimensions of the degree-k harmonic spaces, the dimension-d Legendre
(normalized Gegenbauer) polynomials, the density of one coordinate of a
uniform point on the sphere, a quadrature rule for inner products against
that density, ReLU-Legendre coefficients and the truncated ReLU activation.

Conventions
-----------
``P_k(t)`` is normalized so that ``P_k(1) = 1``.  The orthonormal version is
``Pbar_k(t) = sqrt(N_k) * P_k(t)``, where ``N_k`` is the dimension of the
degree-k harmonic space, and ``<Pbar_j, Pbar_k> = delta_jk`` under ``mu_d``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError

#: tolerance band outside [-1, 1] that is silently clamped
CLAMP_TOL = 1e-12

#: explicit constants of the ReLU coefficient sandwich for even k >= 4
RELU_COEFF_LOWER = 2.0 ** 1.25 * math.pi ** 0.75 / math.exp(6.5)
RELU_COEFF_UPPER = math.exp(6.5) / (2.0 * math.pi ** 2)

# elements per block in the recursion; keeps the working set in cache
_CHUNK = 1 << 15


def _check_dim(d):
    if int(d) != d or d < 3:
        raise DomainError(f"dimension d must be an integer >= 3, got {d!r}")
    return int(d)


def _check_degree(k):
    if int(k) != k or k < 0:
        raise DomainError(f"degree k must be a nonnegative integer, got {k!r}")
    return int(k)


class HarmonicDim(NamedTuple):
    """Dimension of the space of degree-k spherical harmonics in d variables."""

    d: int
    k: int
    value: int

    @classmethod
    def of(cls, d, k):
        return cls(int(d), int(k), dim_harmonics(d, k))


def dim_harmonics(d, k):
    """Exact dimension N_{k,d} as a Python integer.

    N_{k,d} = C(d+k-1, d-1) - C(d+k-3, d-1), with the second term zero when
    d+k-3 < d-1.
    """
    d = _check_dim(d)
    k = _check_degree(k)
    return _dim(d, k)


@lru_cache(maxsize=4096)
def _dim(d, k):
    first = math.comb(d + k - 1, d - 1)
    second = math.comb(d + k - 3, d - 1) if k >= 2 else 0
    return first - second


def log_dim_harmonics(d, k):
    """Natural log of N_{k,d} (exact integer, then a single rounding)."""
    return math.log(dim_harmonics(d, k))


def sqrt_dim(d, k):
    """sqrt(N_{k,d}) as a float; goes through the log once N is huge."""
    n = dim_harmonics(d, k)
    if n.bit_length() < 1000:
        return math.sqrt(n)
    return math.exp(0.5 * math.log(n))


def clamp_unit(t):
    """Return ``t`` as a float array clipped to [-1, 1].

    Values beyond the 1e-12 roundoff band raise ``DomainError``.
    """
    t = np.asarray(t, dtype=float)
    if t.size and (not np.all(np.isfinite(t)) or np.max(np.abs(t)) > 1.0 + CLAMP_TOL):
        bad = np.max(np.abs(t[np.isfinite(t)])) if np.any(np.isfinite(t)) else np.nan
        raise DomainError(f"argument outside [-1, 1] (max |t| = {bad!r})")
    return np.clip(t, -1.0, 1.0)


@dataclass(frozen=True)
class LegendreTable:
    """Three-term recursion for P_{k,d} up to ``max_degree``.

    P_0 = 1, P_1 = t and P_k = a_k t P_{k-1} - b_k P_{k-2} with
    a_k = (2k+d-4)/(k+d-3), b_k = (k-1)/(k+d-3).
    """

    d: int
    max_degree: int
    a: np.ndarray = field(init=False, repr=False, compare=False)
    b: np.ndarray = field(init=False, repr=False, compare=False)
    sqrt_dims: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = _check_dim(self.d)
        K = _check_degree(self.max_degree)
        a = np.zeros(K + 1)
        b = np.zeros(K + 1)
        for k in range(2, K + 1):
            a[k] = (2 * k + d - 4) / (k + d - 3)
            b[k] = (k - 1) / (k + d - 3)
        roots = np.array([sqrt_dim(d, k) for k in range(K + 1)])
        for arr in (a, b, roots):
            arr.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "max_degree", K)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sqrt_dims", roots)

    def _degree_ok(self, k):
        k = _check_degree(k)
        if k > self.max_degree:
            raise DomainError(f"degree {k} exceeds table max_degree {self.max_degree}")
        return k

    def _single(self, t, k):
        # t is a flat, clamped chunk
        if k == 0:
            return np.ones_like(t)
        prev = np.ones_like(t)
        cur = t.copy()
        tmp = np.empty_like(t)
        for j in range(2, k + 1):
            np.multiply(cur, t, out=tmp)
            tmp *= self.a[j]
            prev *= self.b[j]
            tmp -= prev
            prev, cur, tmp = cur, tmp, prev
        return cur

    def _series(self, t, coeffs):
        # sum_l coeffs[l] * P_l(t) over a flat chunk
        K = len(coeffs) - 1
        acc = np.full_like(t, coeffs[0])
        if K == 0:
            return acc
        acc += coeffs[1] * t
        prev = np.ones_like(t)
        cur = t.copy()
        tmp = np.empty_like(t)
        for j in range(2, K + 1):
            np.multiply(cur, t, out=tmp)
            tmp *= self.a[j]
            prev *= self.b[j]
            tmp -= prev
            prev, cur, tmp = cur, tmp, prev
            if coeffs[j] != 0.0:
                acc += coeffs[j] * cur
        return acc

    def _map_chunks(self, t, fn):
        t = clamp_unit(t)
        flat = t.reshape(-1)
        out = np.empty_like(flat)
        for start in range(0, flat.size, _CHUNK):
            stop = start + _CHUNK
            out[start:stop] = fn(flat[start:stop])
        return out.reshape(t.shape)

    def eval(self, k, t, normalized=False):
        """P_{k,d}(t), or Pbar_{k,d}(t) when ``normalized``; any array shape."""
        k = self._degree_ok(k)
        out = self._map_chunks(t, lambda c: self._single(c, k))
        if normalized:
            out *= self.sqrt_dims[k]
        return out

    def eval_all(self, t, normalized=False, max_degree=None):
        """All degrees 0..K in one forward pass; shape ``(K+1,) + t.shape``."""
        K = self.max_degree if max_degree is None else self._degree_ok(max_degree)
        t = clamp_unit(t)
        out = np.empty((K + 1,) + t.shape)
        out[0] = 1.0
        if K >= 1:
            out[1] = t
        for j in range(2, K + 1):
            out[j] = self.a[j] * t * out[j - 1] - self.b[j] * out[j - 2]
        if normalized:
            out *= self.sqrt_dims[: K + 1].reshape((-1,) + (1,) * t.ndim)
        return out

    def series(self, coeffs, t, normalized=True):
        """Evaluate sum_l coeffs[l] * Pbar_l(t) (or P_l(t) if not ``normalized``)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise DomainError("coeffs must be a nonempty 1-d sequence")
        self._degree_ok(coeffs.size - 1)
        if normalized:
            coeffs = coeffs * self.sqrt_dims[: coeffs.size]
        return self._map_chunks(t, lambda c: self._series(c, coeffs))


@lru_cache(maxsize=64)
def legendre_table(d, max_degree):
    """Shared, cached ``LegendreTable``."""
    return LegendreTable(d, max_degree)


def legendre_eval(table, k, t):
    return table.eval(k, t)


def normalized_legendre_eval(table, k, t):
    return table.eval(k, t, normalized=True)


def mu_log_const(d):
    """log of Gamma(d/2) / (Gamma((d-1)/2) sqrt(pi))."""
    d = _check_dim(d)
    return math.lgamma(d / 2) - math.lgamma((d - 1) / 2) - 0.5 * math.log(math.pi)


def mu_density(d, t):
    """Density of x_1 for x uniform on S^{d-1}: const * (1-t^2)^((d-3)/2)."""
    d = _check_dim(d)
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise DomainError("mu_density is supported on [-1, 1]")
    base = np.maximum(1.0 - t * t, 0.0)
    out = math.exp(mu_log_const(d)) * base ** ((d - 3) / 2)
    return float(out) if scalar else out


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights with ``sum(w * g(t)) ~ integral of g against mu_d``.

    Gauss-Legendre nodes are placed in the polar angle theta (t = cos theta)
    on one or more panels; the sin^{d-2} Jacobian and the density constant are
    folded into the weights.  Panel boundaries at the kinks of non-smooth
    integrands (ReLU at t = 0) keep those inner products spectrally accurate.
    """

    d: int
    max_degree: int
    nodes: np.ndarray
    weights: np.ndarray
    node_count: int
    breakpoints: tuple = ()

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def build_quadrature(d, max_degree, breakpoints=()):
    d = _check_dim(d)
    K = _check_degree(max_degree)
    bps = tuple(sorted(float(x) for x in breakpoints))
    for x in bps:
        if not -1.0 < x < 1.0:
            raise DomainError(f"breakpoint {x!r} must lie in (-1, 1)")
    return _build_quadrature(d, K, bps)


@lru_cache(maxsize=128)
def _build_quadrature(d, K, bps):
    per_panel = max(200, 4 * (K + 1))
    x, w = np.polynomial.legendre.leggauss(per_panel)
    # theta is decreasing in t, so reversed breakpoints give increasing angles
    edges = [0.0] + [math.acos(b) for b in reversed(bps)] + [math.pi]
    log_c = mu_log_const(d)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        theta = lo + half * (x + 1.0)
        s = np.sin(theta)
        nodes.append(np.cos(theta))
        weights.append(half * w * np.exp(log_c) * s ** (d - 2))
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(d, K, nodes, weights, int(nodes.size), bps)


def inner_product_mu(rule, f, k, table=None):
    """Quadrature value of <f, Pbar_k> under mu_d.

    ``f`` is a vectorized callable on [-1, 1].  Accuracy is spectral for
    smooth ``f``; for ``f`` with kinks, build the rule with the kinks as
    breakpoints, otherwise expect algebraic convergence in the node count.
    """
    k = _check_degree(k)
    if k > max(rule.max_degree, 0) and k > rule.node_count // 4:
        raise DomainError(f"degree {k} too large for a rule with {rule.node_count} nodes")
    table = table or legendre_table(rule.d, max(k, 1))
    vals = np.asarray(f(rule.nodes), dtype=float) * table.eval(k, rule.nodes, normalized=True)
    return rule.integrate(vals)


def legendre_coefficients(rule, f, max_degree):
    """<f, Pbar_k> under mu_d for k = 0..max_degree in one pass."""
    K = _check_degree(max_degree)
    table = legendre_table(rule.d, K)
    fv = np.asarray(f(rule.nodes), dtype=float)
    basis = table.eval_all(rule.nodes, normalized=True)
    return basis @ (rule.weights * fv)


def relu(t):
    return np.maximum(t, 0.0)


@lru_cache(maxsize=64)
def _relu_rule(d, K):
    return build_quadrature(d, K, breakpoints=(0.0,))


def relu_coeff_quadrature(d, k):
    """<ReLU, Pbar_k> by quadrature split at the kink."""
    d = _check_dim(d)
    k = _check_degree(k)
    return inner_product_mu(_relu_rule(d, max(k, 1)), relu, k)


def _relu_mean(d):
    # Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2)) by the step d -> d+2, which multiplies
    # it by d / (d+1); odd d starts from 1/4 and stays an exact rational
    value, start = (0.25, 3) if d % 2 else (2.0 / (3.0 * math.pi), 4)
    for j in range(start, d, 2):
        value *= j / (j + 1)
    return value


def relu_coeff_closed_form(d, k):
    """tau_k = <ReLU, Pbar_{k,d}> under mu_d.

    Evaluated through log-gamma with the sign tracked separately.  tau_0 is
    E[max(x_1, 0)] = Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2)).
    """
    d = _check_dim(d)
    k = _check_degree(k)
    if k == 0:
        return _relu_mean(d)
    if k == 1:
        return 0.5 / math.sqrt(d)
    if k % 2 == 1:
        return 0.0
    log_mag = (
        0.5 * log_dim_harmonics(d, k)
        + math.lgamma(d / 2)
        + math.lgamma(k - 1)
        - k * math.log(2.0)
        - 0.5 * math.log(math.pi)
        - math.lgamma(k / 2)
        - math.lgamma((k + d + 1) / 2)
    )
    sign = -1.0 if ((k - 2) // 2) % 2 else 1.0
    return sign * math.exp(log_mag)


def relu_coeff_envelope(d, k):
    """d^{1/4} k^{-5/4} (k+d)^{-3/4}; |tau_k| sits within constant multiples of it."""
    return d ** 0.25 * k ** -1.25 * (k + d) ** -0.75


@dataclass(frozen=True)
class ReluCoeffs:
    d: int
    taus: np.ndarray

    @property
    def max_degree(self):
        return self.taus.size - 1


@lru_cache(maxsize=256)
def relu_coeffs(d, max_degree):
    taus = np.array([relu_coeff_closed_form(d, k) for k in range(_check_degree(max_degree) + 1)])
    taus.setflags(write=False)
    return ReluCoeffs(_check_dim(d), taus)


@dataclass(frozen=True)
class PolyActivation:
    """sigma_k(t) = sum_{l <= k} tau_l Pbar_l(t), the degree-k part of ReLU."""

    d: int
    k: int

    @property
    def taus(self):
        return relu_coeffs(self.d, self.k).taus

    def __call__(self, t):
        return legendre_table(self.d, max(self.k, 1)).series(self.taus, t)


def activation_sigma_k(d, k, t):
    out = PolyActivation(_check_dim(d), _check_degree(k))(t)
    return float(out) if np.ndim(out) == 0 else out


def funk_hecke_eigenvalue(d, k, coeff):
    """Eigenvalue of the inner-product kernel with Legendre coefficient ``coeff``.

    An inner-product kernel sigma(x.z) acts on degree-k harmonics as
    multiplication by coeff / sqrt(N_{k,d}).
    """
    return coeff / sqrt_dim(d, k)


__all__ = [
    "HarmonicDim",
    "LegendreTable",
    "QuadratureRule",
    "ReluCoeffs",
    "PolyActivation",
    "RELU_COEFF_LOWER",
    "RELU_COEFF_UPPER",
    "dim_harmonics",
    "log_dim_harmonics",
    "sqrt_dim",
    "clamp_unit",
    "legendre_table",
    "legendre_eval",
    "normalized_legendre_eval",
    "mu_density",
    "build_quadrature",
    "inner_product_mu",
    "legendre_coefficients",
    "relu",
    "relu_coeff_quadrature",
    "relu_coeff_closed_form",
    "relu_coeff_envelope",
    "relu_coeffs",
    "activation_sigma_k",
    "funk_hecke_eigenvalue",
]
