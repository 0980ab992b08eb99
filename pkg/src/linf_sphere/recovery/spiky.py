"""Hard instances: scaled zonal ridges beta * P_k(x . u)."""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..harmonics import _check_degree, _check_dim, legendre_table, relu_coeff_closed_form, sqrt_dim
from ..sphere import as_coords, check_unit_vector


@dataclass(frozen=True)
class SpikyInstance:
    """f(x) = beta * P_{k,d}(x . u).

    Sup norm |beta| (at x = u), L2 norm |beta| / sqrt(N_k): the largest
    possible sup/L2 ratio for a degree-k function.
    """

    d: int
    k: int
    beta: float
    u: np.ndarray

    def __call__(self, x):
        t = np.clip(as_coords(x) @ self.u, -1.0, 1.0)
        vals = self.beta * legendre_table(self.d, max(self.k, 1)).eval(self.k, t)
        return float(vals[0]) if not hasattr(x, "coords") and np.ndim(x) == 1 else vals

    @property
    def linf_norm(self):
        return abs(self.beta)

    @property
    def l2_norm(self):
        return abs(self.beta) / sqrt_dim(self.d, self.k)

    @property
    def sample_budget(self):
        """N_k / beta^2: below this many samples the instance cannot be learned in sup norm."""
        return sqrt_dim(self.d, self.k) ** 2 / self.beta ** 2

    def network_weights(self, xi):
        """Output weights Pbar_k(xi . u) of the infinite-width ReLU network.

        E_xi[ReLU(xi . x) Pbar_k(xi . u)] = tau_k P_k(x . u), so the instance
        with beta = tau_k is that network, whose weights have L2 norm 1.
        """
        t = np.clip(as_coords(xi) @ self.u, -1.0, 1.0)
        return legendre_table(self.d, max(self.k, 1)).eval(self.k, t, normalized=True)


def make_spiky_instance(d, k, beta_k, u, lower_bound=True):
    """Spiky instance; ``lower_bound`` enforces k >= 4 and beta in (0, 1]."""
    d = _check_dim(d)
    k = _check_degree(k)
    u = check_unit_vector(u, d)
    if lower_bound:
        if k < 4:
            raise DomainError(f"lower-bound instances need k >= 4, got {k}")
        if not 0 < beta_k <= 1:
            raise DomainError(f"amplitude must lie in (0, 1], got {beta_k!r}")
    elif k < 4:
        warnings.warn(f"degree {k} < 4 is outside the lower-bound regime", RuntimeWarning)
    u = u / np.linalg.norm(u)
    u.setflags(write=False)
    return SpikyInstance(d, k, float(beta_k), u)


def relu_network_instance(d, k, u):
    """The instance with beta = tau_k (sign included)."""
    return make_spiky_instance(d, k, relu_coeff_closed_form(d, k), u, lower_bound=False)
