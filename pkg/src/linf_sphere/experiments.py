"""Experiment drivers: sup/L2 ratios of random harmonics, end-to-end recovery
of random fields, and the spiky lower-bound demonstration.

Each driver returns an ``ExperimentReport`` whose rows are deterministic given
the seed; only ``wall_seconds`` varies between runs.  Summaries are pure
functions of the rows (see ``SUMMARIZERS``) so they can be recomputed from a
CSV file alone.
"""

import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ThresholdNotFound
from .grf import BASIS_MAX_DIM, FieldSampler, power_law_spectrum, unit_spectrum
from .harmonics import _check_dim, dim_harmonics, legendre_table, sqrt_dim
from .recovery import (
    RecoveryConfig,
    fit_kernel_erm,
    fit_nn_erm,
    grf_constants,
    make_spiky_instance,
    truncation_threshold,
)
from .seeding import derive_seed
from .sphere import estimate_norms, random_direction, sample_uniform_sphere, write_atomic

log = logging.getLogger(__name__)

REPORT_VERSION = "1"
DENSE_GRID_SIZE = 6000


@dataclass
class ExperimentReport:
    name: str
    params: dict
    seed: int
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    def data_lines(self):
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in self.columns))
        return lines

    def to_csv_text(self):
        meta = [
            "# meta",
            f"# version={REPORT_VERSION}",
            f"# experiment={self.name}",
            f"# seed={self.seed}",
            "# params=" + json.dumps(self.params, sort_keys=True),
            "# summary=" + json.dumps(self.summary, sort_keys=True),
            f"# wall_seconds={self.wall_seconds!r}",
        ]
        return "\n".join(meta + self.data_lines()) + "\n"

    def write_csv(self, path):
        write_atomic(path, self.to_csv_text())


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(v):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def read_report(path):
    """Parse a report CSV back into an ``ExperimentReport``."""
    meta, rows, columns = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    meta[key] = val
                continue
            if not line:
                continue
            if columns is None:
                columns = line.split(",")
                continue
            rows.append(dict(zip(columns, (_parse(v) for v in line.split(",")))))
    return ExperimentReport(
        meta.get("experiment", ""),
        json.loads(meta.get("params", "{}")),
        int(meta.get("seed", 0)),
        columns or [],
        rows,
        json.loads(meta.get("summary", "{}")),
        float(meta.get("wall_seconds", "nan")),
    )


def _quantiles(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"median": None, "q05": None, "q95": None}
    return {
        "median": float(np.median(v)),
        "q05": float(np.quantile(v, 0.05)),
        "q95": float(np.quantile(v, 0.95)),
    }


def _group(rows, keys):
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def _label(keys, values):
    return ",".join(f"{k}={_fmt(v)}" for k, v in zip(keys, values))


# ----------------------------------------------------------------------------
# ratio of sup to L2 norm for random harmonics


def random_harmonic_bound(d, k, delta):
    """Sup/L2 bound for a random degree-k harmonic in any orthonormal basis."""
    return 5.0 * math.sqrt(math.log(3.0 / delta) + 2.0 * d * d * math.log(k + 1))


def grf_ratio_bound(d, k, delta):
    """Sup/L2 bound for the degree-k component of an isotropic random field."""
    return 5.0 * math.sqrt(2.0 * math.log(6.0 / delta) + 2.0 * (d * d + 1) * math.log(k + 1))


RATIO_COLUMNS = ["d", "k", "trial", "seed", "grid_seed", "grid_size", "route", "ratio", "sup_abs",
                 "rms", "bound", "bound_grf", "worst_case", "pass", "pass_grf"]


def summarize_ratio(rows):
    out = {}
    keys = ("d", "k")
    for key, grp in sorted(_group(rows, keys).items()):
        ratios = [r["ratio"] for r in grp]
        cell = _quantiles(ratios)
        cell.update(
            trials=len(grp),
            max=float(np.max(ratios)),
            worst_case=grp[0]["worst_case"],
            pass_fraction=float(np.mean([r["pass"] for r in grp])),
            pass_fraction_grf=float(np.mean([r["pass_grf"] for r in grp])),
        )
        out[_label(keys, key)] = cell
    out["overall_pass_fraction_grf"] = float(np.mean([r["pass_grf"] for r in rows])) if rows else None
    return out


def run_ratio_experiment(d, degrees, trials=200, grid_size=20_000, delta=0.05, seed=0,
                         dense_grid_size=DENSE_GRID_SIZE, basis_max_dim=BASIS_MAX_DIM):
    """sup/rms of pure degree-k random fields on uniform grids.

    ``d`` may be an int or a list of ints.  Degrees whose harmonic space is
    too large for the basis sampler fall back to dense factorization on a grid
    of at most ``dense_grid_size`` points.
    """
    start = time.perf_counter()
    dims = [int(d)] if np.ndim(d) == 0 else [int(v) for v in d]
    degrees = [int(k) for k in degrees]
    if trials < 1 or not degrees or not dims:
        raise DomainError("need at least one dimension, one degree and one trial")
    params = dict(d=dims, degrees=degrees, trials=int(trials), grid_size=int(grid_size), delta=delta,
                  dense_grid_size=int(dense_grid_size), basis_max_dim=int(basis_max_dim))
    rows = []
    for dd in dims:
        _check_dim(dd)
        for k in degrees:
            n_k = dim_harmonics(dd, k)
            basis = n_k <= basis_max_dim
            size = grid_size if basis else min(grid_size, dense_grid_size)
            grid_seed = derive_seed(seed, 1, dd, k)
            grid = sample_uniform_sphere(dd, size, grid_seed)
            sampler = FieldSampler(unit_spectrum(dd, k), grid, method="basis" if basis else "dense",
                                   basis_max_dim=basis_max_dim)
            bound = random_harmonic_bound(dd, k, delta)
            bound_grf = grf_ratio_bound(dd, k, delta)
            worst = sqrt_dim(dd, k)
            for t in range(trials):
                ts = derive_seed(seed, 2, dd, k, t)
                est = estimate_norms(sampler.component(k, ts))
                ratio = est.ratio
                rows.append(dict(d=dd, k=k, trial=t, seed=ts, grid_seed=grid_seed, grid_size=size,
                                 route=sampler.routes[k], ratio=ratio, sup_abs=est.sup_abs, rms=est.rms,
                                 bound=bound, bound_grf=bound_grf, worst_case=worst,
                                 **{"pass": ratio <= bound, "pass_grf": ratio <= bound_grf}))
            log.info("ratio d=%d k=%d route=%s grid=%d done", dd, k, sampler.routes[k], size)
    report = ExperimentReport("ratio", params, int(seed), RATIO_COLUMNS, rows)
    report.summary = summarize_ratio(rows)
    report.wall_seconds = time.perf_counter() - start
    return report


# ----------------------------------------------------------------------------
# end-to-end recovery of power-law random fields

RECOVERY_COLUMNS = ["epsilon", "n", "trial", "seed", "grid_seed", "grid_size", "degree", "status",
                    "linf_error", "l2_error", "linf_f", "l2_f", "bound", "pass"]


def summarize_recovery(rows):
    out = {}
    keys = ("epsilon", "n")
    for key, grp in sorted(_group(rows, keys).items()):
        ok = [r for r in grp if r["status"] == "ok"]
        cell = {
            "trials": len(grp),
            "fitted": len(ok),
            "degree": ok[0]["degree"] if ok else None,
            "median_linf_error": _quantiles([r["linf_error"] for r in ok])["median"],
            "median_l2_error": _quantiles([r["l2_error"] for r in ok])["median"],
            "median_linf_f": _quantiles([r["linf_f"] for r in grp])["median"],
            "pass_fraction": float(np.mean([r["pass"] for r in grp])),
        }
        out[_label(keys, key)] = cell
    return out


def run_recovery_benchmark(d, alpha, c, epsilons, ns, trials=20, seed=0, grid_size=20_000, delta=0.05,
                           noise_sigma=1.0, spectrum_max_degree=12, degree=None, c1=None, c2=None,
                           fitter="kernel", nn_width=256, nn_norm_bound=None):
    """Sample power-law fields, fit from noisy samples, measure grid errors.

    Trials share their random field, training pool and noise across all
    (epsilon, n) cells (common random numbers): the first n pool points are
    the training set for size n.  The evaluation grid is shared by the trials
    of one epsilon row.
    """
    start = time.perf_counter()
    d = _check_dim(d)
    epsilons = [float(e) for e in epsilons]
    ns = [int(n) for n in ns]
    if not epsilons or not ns or trials < 1 or min(ns) < 1:
        raise DomainError("need nonempty epsilon and n lists, positive n and at least one trial")
    if fitter not in ("kernel", "nn"):
        raise DomainError(f"unknown fitter {fitter!r}")
    spectrum = power_law_spectrum(d, c, alpha, max_degree=spectrum_max_degree)
    auto_c1, auto_c2 = grf_constants(c, d, delta)
    c1 = auto_c1 if c1 is None else float(c1)
    c2 = auto_c2 if c2 is None else float(c2)
    params = dict(d=d, alpha=alpha, c=c, epsilon=epsilons, n=ns, trials=int(trials), grid_size=int(grid_size),
                  delta=delta, noise_sigma=noise_sigma, spectrum_max_degree=int(spectrum_max_degree),
                  spectrum_degrees=spectrum.max_degree + 1, degree=degree, c1=c1, c2=c2, fitter=fitter,
                  nn_width=int(nn_width), nn_norm_bound=nn_norm_bound)
    pool_size = max(ns)

    trial_data = []
    for t in range(trials):
        ts = derive_seed(seed, 2, t)
        pool = sample_uniform_sphere(d, pool_size, derive_seed(ts, 1))
        noise = noise_sigma * np.random.default_rng(derive_seed(ts, 2)).standard_normal(pool_size)
        field_seed = derive_seed(ts, 3)
        f_train = FieldSampler(spectrum, pool, method="basis").draw(field_seed).total
        trial_data.append((ts, pool, noise, field_seed, f_train))

    rows = []
    for e, eps in enumerate(epsilons):
        config = RecoveryConfig(alpha=alpha, c1=c1, c2=c2, epsilon=eps, delta=delta,
                                noise_sigma=noise_sigma)
        try:
            k = truncation_threshold(config, d) if degree is None else int(degree)
            status = "ok"
        except ThresholdNotFound:
            k, status = -1, "threshold_not_found"
        grid_seed = derive_seed(seed, 1, e)
        grid = sample_uniform_sphere(d, grid_size, grid_seed)
        grid_sampler = FieldSampler(spectrum, grid, method="basis")
        for t, (ts, pool, noise, field_seed, f_train) in enumerate(trial_data):
            f_grid = grid_sampler.draw(field_seed).total
            f_norm = estimate_norms(f_grid)
            for n in ns:
                row = dict(epsilon=eps, n=n, trial=t, seed=ts, grid_seed=grid_seed, grid_size=grid_size,
                           degree=k, status=status, linf_error=math.nan, l2_error=math.nan,
                           linf_f=f_norm.sup_abs, l2_f=f_norm.rms, bound=eps)
                if status == "ok":
                    x = pool.head(n)
                    y = f_train[:n] + noise[:n]
                    if fitter == "kernel":
                        model = fit_kernel_erm(config, x, y, d, degree=k)
                    else:
                        model = fit_nn_erm(config, x, y, d, width=nn_width, norm_bound=nn_norm_bound or 10.0,
                                           degree=k, seed=derive_seed(ts, 4))
                    err = estimate_norms(model(grid) - f_grid)
                    row.update(linf_error=err.sup_abs, l2_error=err.rms)
                row["pass"] = bool(row["linf_error"] <= eps)
                rows.append(row)
        log.info("recovery epsilon=%g degree=%d status=%s done", eps, k, status)
    report = ExperimentReport("recovery", params, int(seed), RECOVERY_COLUMNS, rows)
    report.summary = summarize_recovery(rows)
    report.wall_seconds = time.perf_counter() - start
    return report


# ----------------------------------------------------------------------------
# spiky lower-bound instances

LOWERBOUND_COLUMNS = ["n", "trial", "seed", "grid_seed", "fitter", "d", "k", "beta", "budget", "linf_error",
                      "threshold", "truth_sup", "signal_msq", "failed", "pass"]


def summarize_lowerbound(rows):
    out = {}
    keys = ("n", "fitter")
    for key, grp in sorted(_group(rows, keys).items()):
        sig = np.array([r["signal_msq"] for r in grp])
        out[_label(keys, key)] = {
            "trials": len(grp),
            "failure_fraction": float(np.mean([r["failed"] for r in grp])),
            "median_linf_error": _quantiles([r["linf_error"] for r in grp])["median"],
            "signal_msq_mean": float(sig.mean()),
            "signal_msq_se": float(sig.std(ddof=1) / math.sqrt(sig.size)) if sig.size > 1 else None,
            "budget": grp[0]["budget"],
        }
    return out


def run_lowerbound_demo(d, k, beta_k, ns, trials=50, seed=0, grid_size=20_000, noise_sigma=1.0, c1=1.0,
                        nn_width=64, nn_norm_bound=10.0, fitters=("kernel", "nn")):
    """Fit spiky ridges beta P_k(x . u) from n noisy samples; record sup errors.

    The fitted degree is k for both fitters; the kernel fitter bounds every
    degree's L2 norm by ``c1``.  The grid of each n row gets the trial's u
    appended so the true maximum is on it.
    """
    start = time.perf_counter()
    d = _check_dim(d)
    ns = [int(n) for n in ns]
    if not ns or min(ns) < 1 or trials < 1:
        raise DomainError("need positive sample sizes and at least one trial")
    fitters = tuple(fitters)
    for f in fitters:
        if f not in ("kernel", "nn"):
            raise DomainError(f"unknown fitter {f!r}")
    params = dict(d=d, k=int(k), beta=beta_k, n=ns, trials=int(trials), grid_size=int(grid_size),
                  noise_sigma=noise_sigma, c1=c1, nn_width=int(nn_width), nn_norm_bound=nn_norm_bound,
                  fitters=list(fitters))
    config = RecoveryConfig(alpha=1.0, c1=c1, c2=1.0, epsilon=beta_k / 4.0, noise_sigma=noise_sigma)
    table = legendre_table(d, max(k, 1))
    threshold = beta_k / 4.0
    rows = []
    for r, n in enumerate(ns):
        grid_seed = derive_seed(seed, 1, r)
        grid = sample_uniform_sphere(d, grid_size, grid_seed)
        for t in range(trials):
            ts = derive_seed(seed, 2, r, t)
            u = random_direction(d, np.random.default_rng(derive_seed(ts, 1)))
            inst = make_spiky_instance(d, k, beta_k, u)
            x = sample_uniform_sphere(d, n, derive_seed(ts, 2))
            y = inst(x) + noise_sigma * np.random.default_rng(derive_seed(ts, 3)).standard_normal(n)
            pts = grid.append(u)
            truth = inst(pts)
            signal = float(np.mean(table.eval(k, np.clip(grid.coords @ u, -1.0, 1.0)) ** 2))
            for name in fitters:
                if name == "kernel":
                    model = fit_kernel_erm(config, x, y, d, degree=k)
                else:
                    model = fit_nn_erm(config, x, y, d, width=nn_width, norm_bound=nn_norm_bound, degree=k,
                                       seed=derive_seed(ts, 4))
                err = estimate_norms(model(pts) - truth).sup_abs
                failed = err >= threshold
                rows.append(dict(n=n, trial=t, seed=ts, grid_seed=grid_seed, fitter=name, d=d, k=k,
                                 beta=beta_k, budget=inst.sample_budget, linf_error=err, threshold=threshold,
                                 truth_sup=float(np.max(np.abs(truth))), signal_msq=signal, failed=failed,
                                 **{"pass": failed}))
        log.info("lower bound n=%d done", n)
    report = ExperimentReport("lowerbound", params, int(seed), LOWERBOUND_COLUMNS, rows)
    report.summary = summarize_lowerbound(rows)
    report.wall_seconds = time.perf_counter() - start
    return report


SUMMARIZERS = {
    "ratio": summarize_ratio,
    "recovery": summarize_recovery,
    "lowerbound": summarize_lowerbound,
}
