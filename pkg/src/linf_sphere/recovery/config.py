"""Recovery parameters and the truncation-degree rule."""

import math
from dataclasses import MISSING, asdict, dataclass, fields

from ..errors import ConfigError, ThresholdNotFound
from ..harmonics import _check_dim, log_dim_harmonics

# absolute slack in log space for the threshold comparison, so that the
# equality case of the scan is not lost to roundoff
_LOG_SLACK = 1e-12


@dataclass(frozen=True)
class RecoveryConfig:
    """Parameters of the truncated kernel ERM.

    alpha: decay exponent of the per-degree L2 norms, in (0, 1].
    c1, c2: constants bounding per-degree L2 norms and sup/L2 ratios.
    epsilon: target sup-norm error.
    tight_radius: constrain degree l by c1 * N_l^{-alpha/2} instead of c1.
    """

    alpha: float
    c1: float
    c2: float
    epsilon: float
    delta: float = 0.05
    noise_sigma: float = 1.0
    max_threshold_scan: int = 512
    tight_radius: bool = False

    def __post_init__(self):
        checks = {
            "alpha": 0 < self.alpha <= 1,
            "c1": self.c1 > 0,
            "c2": self.c2 > 0,
            "epsilon": self.epsilon > 0,
            "delta": 0 < self.delta < 1,
            "noise_sigma": self.noise_sigma >= 0,
            "max_threshold_scan": int(self.max_threshold_scan) == self.max_threshold_scan
            and self.max_threshold_scan >= 0,
        }
        for key, ok in checks.items():
            value = getattr(self, key)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not ok:
                raise ConfigError(f"invalid value for {key}: {value!r}", key)
        if not isinstance(self.tight_radius, bool):
            raise ConfigError("tight_radius must be a boolean", "tight_radius")

    def radius(self, d, l):
        """Norm-ball radius for degree l."""
        if self.tight_radius:
            return self.c1 * math.exp(-0.5 * self.alpha * log_dim_harmonics(d, l))
        return self.c1

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown recovery parameter {key!r}", key)
        for f in fields(cls):
            if f.default is MISSING and f.name not in data:
                raise ConfigError(f"missing required parameter {f.name!r}", f.name)
        return cls(**data)


def grf_constants(c, d, delta):
    """(c1, c2) for power-law random fields at confidence 1 - delta.

    c1 = 3 c sqrt(ln(2/delta)) bounds the per-degree L2 norms (times
    N_k^{-alpha/2}); c2 = 5 sqrt(2 ln(6/delta) + 2(d^2+1)) bounds the
    per-degree sup/L2 ratio (times sqrt(ln(k+1))).
    """
    d = _check_dim(d)
    c1 = 3.0 * c * math.sqrt(math.log(2.0 / delta))
    c2 = 5.0 * math.sqrt(2.0 * math.log(6.0 / delta) + 2.0 * (d * d + 1))
    return c1, c2


def threshold_log_gap(config, d, l):
    """log(2 c1 c2 (l+1)^{3/2} N_{l+1}^{-alpha/2}) - log(epsilon/2)."""
    lhs = (
        math.log(2.0 * config.c1 * config.c2)
        + 1.5 * math.log(l + 1)
        - 0.5 * config.alpha * log_dim_harmonics(d, l + 1)
    )
    return lhs - math.log(config.epsilon / 2.0)


def truncation_threshold(config, d):
    """Smallest l with 2 c1 c2 (l+1)^{3/2} N_{l+1,d}^{-alpha/2} <= epsilon/2."""
    d = _check_dim(d)
    for l in range(int(config.max_threshold_scan) + 1):
        if threshold_log_gap(config, d, l) <= _LOG_SLACK:
            return l
    raise ThresholdNotFound(
        f"no degree <= {config.max_threshold_scan} meets the truncation condition "
        f"at d={d}, alpha={config.alpha}, epsilon={config.epsilon}"
    )


def l2_target(config, d):
    """Degree-<=k L2 accuracy that the sup-norm guarantee asks for.

    epsilon^{3/alpha+1} (4 c1 c2)^{-3/alpha} d^{-4/alpha} / 4; loose, kept only
    as report metadata.
    """
    a = config.alpha
    log_val = (
        (3.0 / a + 1.0) * math.log(config.epsilon)
        - (3.0 / a) * math.log(4.0 * config.c1 * config.c2)
        - (4.0 / a) * math.log(d)
        - math.log(4.0)
    )
    return math.exp(log_val)
