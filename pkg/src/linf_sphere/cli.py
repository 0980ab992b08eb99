"""Command-line interface.

Exit codes: 0 success, 2 bad configuration or domain error, 3 covariance not
positive semi-definite, 4 factorization failure, 5 no truncation degree found.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments
from .errors import (
    ConfigError,
    DegenerateData,
    DomainError,
    FactorizationFailure,
    FormatError,
    NotPositiveSemiDefinite,
    ThresholdNotFound,
)
from .grf import FieldSampler, KernelSpectrum, power_law_spectrum, spectrum_from_kappa
from .harmonics import activation_sigma_k, dim_harmonics, relu_coeff_closed_form
from .recovery import RecoveryConfig, fit_kernel_erm, fit_nn_erm, read_training_csv, save_model
from .seeding import derive_seed
from .sphere import PointSet, sample_uniform_sphere, write_atomic

EXIT_OK, EXIT_CONFIG, EXIT_PSD, EXIT_FACTOR, EXIT_THRESHOLD = 0, 2, 3, 4, 5

KAPPAS = {
    "exp": np.exp,
    "exp-neg": lambda t: np.exp(-t),
    "cubic": lambda t: (1.0 + t) ** 3 / 8.0,
}

_REQUIRED = object()

# flat key -> (default or _REQUIRED, accepted python types)
_NUM = (int, float)
_LIST = (list,)
SCHEMAS = {
    "sample-grf": {
        "d": (_REQUIRED, int),
        "n": (_REQUIRED, int),
        "seed": (0, int),
        "spectrum": ("power-law", str),
        "c": (1.0, _NUM),
        "alpha": (1.0, _NUM),
        "max_degree": (12, int),
        "coeffs": (None, _LIST),
        "kappa": ("exp", str),
        "method": ("auto", str),
    },
    "recover": {
        "train": (_REQUIRED, str),
        "alpha": (_REQUIRED, _NUM),
        "c1": (_REQUIRED, _NUM),
        "c2": (_REQUIRED, _NUM),
        "epsilon": (_REQUIRED, _NUM),
        "delta": (0.05, _NUM),
        "noise_sigma": (1.0, _NUM),
        "max_threshold_scan": (512, int),
        "tight_radius": (False, bool),
        "fitter": ("kernel", str),
        "degree": (None, int),
        "width": (None, int),
        "norm_bound": (None, _NUM),
        "test": (None, str),
        "summary_out": (None, str),
        "seed": (0, int),
    },
    "ratio-exp": {
        "d": ([3, 5, 10], (int, list)),
        "degrees": ([2, 4, 8, 16], _LIST),
        "trials": (200, int),
        "grid_size": (20_000, int),
        "delta": (0.05, _NUM),
        "dense_grid_size": (experiments.DENSE_GRID_SIZE, int),
        "seed": (0, int),
    },
    "recovery-bench": {
        "d": (5, int),
        "alpha": (1.0, _NUM),
        "c": (1.0, _NUM),
        "epsilon": (_REQUIRED, (_NUM + _LIST)),
        "n": (_REQUIRED, (int, list)),
        "trials": (20, int),
        "grid_size": (20_000, int),
        "delta": (0.05, _NUM),
        "noise_sigma": (1.0, _NUM),
        "spectrum_max_degree": (12, int),
        "degree": (None, int),
        "c1": (None, _NUM),
        "c2": (None, _NUM),
        "fitter": ("kernel", str),
        "seed": (0, int),
    },
    "lowerbound-demo": {
        "d": (5, int),
        "k": (6, int),
        "beta": (1.0, _NUM),
        "n": (_REQUIRED, (int, list)),
        "trials": (50, int),
        "grid_size": (20_000, int),
        "noise_sigma": (1.0, _NUM),
        "c1": (1.0, _NUM),
        "nn_width": (64, int),
        "nn_norm_bound": (10.0, _NUM),
        "seed": (0, int),
    },
}


def resolve_config(command, raw, seed=None):
    """Fill defaults, reject unknown/missing/mistyped keys (naming the key)."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    schema = SCHEMAS[command]
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}", key)
    out = {}
    for key, (default, types) in schema.items():
        if key in raw and raw[key] is not None:
            value = raw[key]
            ok = isinstance(value, types) and not (isinstance(value, bool) and bool not in _as_tuple(types))
            if not ok:
                raise ConfigError(f"config key {key!r} has the wrong type ({type(value).__name__})", key)
            out[key] = value
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}", key)
        else:
            out[key] = default
    if seed is not None:
        out["seed"] = seed
    return out


def _as_tuple(types):
    return types if isinstance(types, tuple) else (types,)


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc


def fmt_number(x):
    """Shortest round-trip decimal; integral values print without a fraction."""
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


# ----------------------------------------------------------------------------


def cmd_harmonics(args):
    d, k = args.d, args.k
    if args.what == "dim":
        print(dim_harmonics(d, k))
    elif args.what == "tau":
        print(fmt_number(relu_coeff_closed_form(d, k)))
    else:
        if not args.t:
            raise ConfigError("--what sigma-at needs at least one --t value", "t")
        for t in args.t:
            print(fmt_number(activation_sigma_k(d, k, t)))
    return EXIT_OK


def build_spectrum(cfg):
    d = cfg["d"]
    kind = cfg["spectrum"]
    if kind == "power-law":
        return power_law_spectrum(d, cfg["c"], cfg["alpha"], max_degree=cfg["max_degree"])
    if kind == "coeffs":
        if not cfg["coeffs"]:
            raise ConfigError("spectrum 'coeffs' needs a nonempty 'coeffs' list", "coeffs")
        return KernelSpectrum(d, np.array(cfg["coeffs"], dtype=float))
    if kind == "kappa":
        if cfg["kappa"] not in KAPPAS:
            raise ConfigError(f"config key 'kappa': unknown value {cfg['kappa']!r}; choose from {sorted(KAPPAS)}",
                              "kappa")
        return spectrum_from_kappa(d, cfg["max_degree"], KAPPAS[cfg["kappa"]])
    raise ConfigError(f"config key 'spectrum': unknown value {kind!r}", "spectrum")


def cmd_sample_grf(args, cfg):
    spectrum = build_spectrum(cfg)
    points = sample_uniform_sphere(cfg["d"], cfg["n"], derive_seed(cfg["seed"], 0))
    sample = FieldSampler(spectrum, points, method=cfg["method"]).draw(derive_seed(cfg["seed"], 1))
    sample.to_csv(args.out, meta=json.dumps(cfg, sort_keys=True))
    return EXIT_OK


def cmd_recover(args, cfg):
    x, y = read_training_csv(cfg["train"])
    config = RecoveryConfig(alpha=cfg["alpha"], c1=cfg["c1"], c2=cfg["c2"], epsilon=cfg["epsilon"],
                            delta=cfg["delta"], noise_sigma=cfg["noise_sigma"],
                            max_threshold_scan=cfg["max_threshold_scan"], tight_radius=cfg["tight_radius"])
    pts = PointSet(x)
    if cfg["fitter"] == "kernel":
        model = fit_kernel_erm(config, pts, y, degree=cfg["degree"])
    elif cfg["fitter"] == "nn":
        model = fit_nn_erm(config, pts, y, width=cfg["width"], norm_bound=cfg["norm_bound"],
                           degree=cfg["degree"], seed=derive_seed(cfg["seed"], 0))
    else:
        raise ConfigError(f"config key 'fitter': unknown value {cfg['fitter']!r}", "fitter")
    save_model(model, args.out)
    resid = model(pts) - y
    summary = {"config": cfg, "degree": model.degree, "n": int(y.size), "loss": float(model.loss),
               "train_rmse": float(np.sqrt(np.mean(resid ** 2)))}
    if cfg["test"]:
        tx, ty = read_training_csv(cfg["test"])
        err = model(PointSet(tx)) - ty
        summary.update(test_rmse=float(np.sqrt(np.mean(err ** 2))), test_max_abs=float(np.max(np.abs(err))))
    text = json.dumps(summary, sort_keys=True)
    if cfg["summary_out"]:
        write_atomic(cfg["summary_out"], text + "\n")
    print(text)
    return EXIT_OK


def cmd_ratio(args, cfg):
    rep = experiments.run_ratio_experiment(cfg["d"], cfg["degrees"], trials=cfg["trials"],
                                           grid_size=cfg["grid_size"], delta=cfg["delta"], seed=cfg["seed"],
                                           dense_grid_size=cfg["dense_grid_size"])
    rep.write_csv(args.out)
    return EXIT_OK


def cmd_recovery_bench(args, cfg):
    rep = experiments.run_recovery_benchmark(
        cfg["d"], cfg["alpha"], cfg["c"], _as_list(cfg["epsilon"]), _as_list(cfg["n"]), trials=cfg["trials"],
        seed=cfg["seed"], grid_size=cfg["grid_size"], delta=cfg["delta"], noise_sigma=cfg["noise_sigma"],
        spectrum_max_degree=cfg["spectrum_max_degree"], degree=cfg["degree"], c1=cfg["c1"], c2=cfg["c2"],
        fitter=cfg["fitter"])
    rep.write_csv(args.out)
    return EXIT_OK


def cmd_lowerbound(args, cfg):
    rep = experiments.run_lowerbound_demo(
        cfg["d"], cfg["k"], cfg["beta"], _as_list(cfg["n"]), trials=cfg["trials"], seed=cfg["seed"],
        grid_size=cfg["grid_size"], noise_sigma=cfg["noise_sigma"], c1=cfg["c1"], nn_width=cfg["nn_width"],
        nn_norm_bound=cfg["nn_norm_bound"])
    rep.write_csv(args.out)
    return EXIT_OK


COMMANDS = {
    "sample-grf": cmd_sample_grf,
    "recover": cmd_recover,
    "ratio-exp": cmd_ratio,
    "recovery-bench": cmd_recovery_bench,
    "lowerbound-demo": cmd_lowerbound,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="linf-sphere", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log one line per experiment row")
    sub = parser.add_subparsers(dest="command", required=True)

    h = sub.add_parser("harmonics", help="dimension, ReLU coefficient or activation value")
    h.add_argument("--d", type=int, required=True)
    h.add_argument("--k", type=int, required=True)
    h.add_argument("--what", choices=["dim", "tau", "sigma-at"], default="dim")
    h.add_argument("--t", type=float, nargs="+", help="arguments for sigma-at")

    helps = {
        "sample-grf": "sample a random field on uniform points (CSV)",
        "recover": "fit a model to training data (JSON model)",
        "ratio-exp": "sup/L2 ratios of random harmonics (CSV report)",
        "recovery-bench": "end-to-end random-field recovery (CSV report)",
        "lowerbound-demo": "spiky lower-bound instances (CSV report)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON config file with flat keys")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--seed", type=int, help="overrides the config seed")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "harmonics":
            return cmd_harmonics(args)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative", "seed")
        cfg = resolve_config(args.command, load_config(args.config), args.seed)
        return COMMANDS[args.command](args, cfg)
    except NotPositiveSemiDefinite as exc:
        print(f"error: covariance not positive semi-definite: {exc}", file=sys.stderr)
        return EXIT_PSD
    except FactorizationFailure as exc:
        print(f"error: factorization failed: {exc}", file=sys.stderr)
        return EXIT_FACTOR
    except ThresholdNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except (DomainError, FormatError, DegenerateData, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
