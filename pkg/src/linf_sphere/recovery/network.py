"""Random-feature two-layer network with the truncated ReLU activation.

Directions are drawn uniformly and frozen; only the output layer is fitted,
by projected gradient on an L1 ball.
"""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import DegenerateData, DomainError
from ..harmonics import PolyActivation
from ..sphere import as_coords
from .config import RecoveryConfig, truncation_threshold

log = logging.getLogger(__name__)

DEFAULT_MAX_WIDTH = 4096


def project_l1_ball(v, radius):
    """Euclidean projection of ``v`` onto {a : sum |a_j| <= radius}.

    Sort-based simplex projection applied to |v|, signs restored.
    """
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    rho = np.nonzero(u * idx > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def log_default_norm_bound(config, d):
    """log of 35 c1 sqrt(d) (4 c1 c2 / eps)^{3 + 4/alpha}."""
    a = config.alpha
    return (
        math.log(35.0 * config.c1)
        + 0.5 * math.log(d)
        + (3.0 + 4.0 / a) * math.log(4.0 * config.c1 * config.c2 / config.epsilon)
    )


def log_default_width(config, d, norm_bound=None):
    """log of 256 B^2 eps^{-6/alpha-2} (4 c1 c2)^{6/alpha} d^{8/alpha}."""
    a = config.alpha
    log_b = log_default_norm_bound(config, d) if norm_bound is None else math.log(norm_bound)
    return (
        math.log(256.0)
        + 2.0 * log_b
        - (6.0 / a + 2.0) * math.log(config.epsilon)
        + (6.0 / a) * math.log(4.0 * config.c1 * config.c2)
        + (8.0 / a) * math.log(d)
    )


def sampling_width(l1_norm, accuracy):
    """Neurons sufficient to approximate an infinite-width net in L2: 4 ||c||_1^2 / acc^2."""
    return int(math.ceil(4.0 * l1_norm ** 2 / accuracy ** 2))


@dataclass(frozen=True)
class NNModel:
    """g(x) = sum_j out_weights[j] * sigma_k(directions[j] . x)."""

    d: int
    degree: int
    directions: np.ndarray
    out_weights: np.ndarray
    norm_bound: float
    config: RecoveryConfig = None
    loss: float = float("nan")
    iterations: int = 0

    def __post_init__(self):
        w = np.array(self.directions, dtype=float)
        a = np.array(self.out_weights, dtype=float).reshape(-1)
        if w.ndim != 2 or w.shape[1] != self.d or w.shape[0] != a.size:
            raise DomainError("directions must be m x d with m output weights")
        for arr in (w, a):
            arr.setflags(write=False)
        object.__setattr__(self, "directions", w)
        object.__setattr__(self, "out_weights", a)

    @property
    def width(self):
        return self.out_weights.size

    def features(self, x):
        t = np.clip(as_coords(x) @ self.directions.T, -1.0, 1.0)
        return PolyActivation(self.d, self.degree)(t)

    def __call__(self, x):
        vals = self.features(x) @ self.out_weights
        return float(vals[0]) if not hasattr(x, "coords") and np.ndim(x) == 1 else vals


def _lipschitz(phi):
    # largest eigenvalue of phi^T phi through the smaller Gram matrix
    g = phi.T @ phi if phi.shape[1] <= phi.shape[0] else phi @ phi.T
    top = linalg.eigh(g, eigvals_only=True, subset_by_index=[g.shape[0] - 1, g.shape[0] - 1])
    return 2.0 * float(top[0])


def fit_nn_erm(config, points, y, d=None, width=None, norm_bound=None, degree=None, seed=0,
               max_width=DEFAULT_MAX_WIDTH, max_iter=10_000, rtol=1e-9):
    """L1-constrained least squares over frozen random polynomial-activation features.

    ``width`` and ``norm_bound`` default to the worst-case sizes derived from
    ``config``; the width is clipped to ``max_width`` with a warning because
    those sizes are astronomically large at practical epsilon.
    """
    if not isinstance(config, RecoveryConfig):
        raise DomainError("config must be a RecoveryConfig")
    x = as_coords(points)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size == 0:
        raise DegenerateData("no training points")
    if y.size != x.shape[0]:
        raise DegenerateData(f"{x.shape[0]} points but {y.size} labels")
    d = x.shape[1] if d is None else int(d)
    k = truncation_threshold(config, d) if degree is None else int(degree)
    if norm_bound is None:
        norm_bound = math.exp(min(log_default_norm_bound(config, d), 700.0))
    if not norm_bound > 0:
        raise DomainError("norm_bound must be positive")
    if width is None:
        log_m = log_default_width(config, d, norm_bound)
        if log_m > math.log(max_width):
            warnings.warn(
                f"default width exp({log_m:.1f}) clipped to {max_width}", RuntimeWarning)
            width = max_width
        else:
            width = max(1, int(math.ceil(math.exp(log_m))))
    width = int(width)
    if width < 1:
        raise DomainError("width must be at least 1")

    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((width, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    phi = PolyActivation(d, k)(np.clip(x @ dirs.T, -1.0, 1.0))

    lip = _lipschitz(phi)
    a = np.zeros(width)
    res = -y
    obj = float(res @ res)
    it = 0
    if lip > 0:
        step = 1.0 / lip
        for it in range(1, max_iter + 1):
            a = project_l1_ball(a - step * 2.0 * (phi.T @ res), norm_bound)
            res = phi @ a - y
            new = float(res @ res)
            stalled = obj - new <= rtol * max(obj, 1e-300)
            obj = new
            if stalled:
                break
    return NNModel(d, k, dirs, a, float(norm_bound), config, obj, it)
