"""Command-line interface: ``bayeswarp {align,simulate,template,export}``.

Exit codes: 0 success, 2 input/parse error, 3 numerical failure,
4 insufficient posterior support.
"""

import argparse
import os
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .estimators import BayesianWarpRegistration
from .exceptions import BayesWarpError, InsufficientSupportError, InvalidInputError
from .io import (
    SEED_ENV,
    RunConfig,
    ResultBundle,
    export_plot_data,
    file_digest,
    load_functions,
    read_bundle,
    save_functions,
    write_json,
)
from .model import PriorConfig
from .simulation import SIM1_WARPS, run_sim1, run_sim2, run_template_alignment

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_SUPPORT = 4


def _add_config_flags(p):
    p.add_argument("--grid-size", type=int, default=100, help="grid points N (default 100)")
    p.add_argument("--samples", type=int, default=50_000, help="importance draws S")
    p.add_argument("--resample", type=int, default=200, help="SIR resample size s")
    p.add_argument("--basis-size", type=int, default=None, help="basis size m (odd, <= N-1)")
    p.add_argument("--sigma2", type=float, default=1000.0)
    p.add_argument("--decay", choices=("quadratic", "linear", "none"), default="quadratic")
    p.add_argument("--gamma-alpha", type=float, default=1.0)
    p.add_argument("--gamma-beta", type=float, default=0.01)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--mode-threshold", type=float, default=0.30)
    p.add_argument("--n-clusters", type=int, default=None,
                   help="fix the number of posterior modes instead of selecting it")
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (falls back to ${SEED_ENV})")
    p.add_argument("--importance-mean", choices=("identity", "dp-solution", "file"),
                   default="identity")
    p.add_argument("--importance-mean-file", default=None,
                   help="CSV holding the warp used as importance mean")
    p.add_argument("--n-jobs", type=int, default=1, help="worker threads (results unchanged)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bayeswarp",
        description="Bayesian registration of functional data with posterior uncertainty.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="register f2 onto f1 and write a JSON result bundle")
    p.add_argument("f1", help="CSV with the template function")
    p.add_argument("f2", help="CSV with the function to warp")
    p.add_argument("--column1", type=int, default=0, help="function column of f1 (0-based)")
    p.add_argument("--column2", type=int, default=0, help="function column of f2 (0-based)")
    p.add_argument("-o", "--out", required=True, help="output JSON path")
    p.add_argument("--export-dir", default=None, help="also write plot CSVs here")
    _add_config_flags(p)

    p = sub.add_parser("simulate", help="run a built-in simulation study")
    p.add_argument("which", type=int, choices=(1, 2))
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--warp", action="append", choices=SIM1_WARPS + ("identity",),
                   help="true warp(s) for study 1 (default: all three)")
    p.add_argument("-o", "--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("template", help="MAP-align every function of a dataset to one of them")
    p.add_argument("dataset", help="CSV with one function per column")
    p.add_argument("--index", type=int, default=0, help="template column (0-based)")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--export-dir", default=None, help="write aligned functions and averages")
    _add_config_flags(p)

    p = sub.add_parser("export", help="write plot-ready CSVs from a result bundle")
    p.add_argument("bundle")
    p.add_argument("--out-dir", required=True)
    return parser


def resolve_seed(flag, environ=None):
    """Seed from the flag, else from the environment variable, else None."""
    if flag is not None:
        return flag
    env = (environ if environ is not None else os.environ).get(SEED_ENV)
    if env is None or env.strip() == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise InvalidInputError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def config_from_args(args):
    names = {f.name for f in fields(RunConfig)}
    kw = {k: v for k, v in vars(args).items() if k in names}
    kw["seed"] = resolve_seed(args.seed)
    return RunConfig(**kw)


def _prior(cfg):
    return PriorConfig(cfg.sigma2, cfg.decay, cfg.basis_size, cfg.gamma_alpha, cfg.gamma_beta)


def _pick(funcs, col, path):
    if not 0 <= col < len(funcs):
        raise InvalidInputError(f"{path} has {len(funcs)} function column(s); "
                                f"column {col} requested")
    return funcs[col]


def cmd_align(args):
    cfg = config_from_args(args)
    f1 = _pick(load_functions(args.f1, cfg.grid_size), args.column1, args.f1)
    f2 = _pick(load_functions(args.f2, cfg.grid_size), args.column2, args.f2)
    inputs = {"f1": {"name": os.path.basename(args.f1), "sha256": file_digest(args.f1),
                     "column": args.column1},
              "f2": {"name": os.path.basename(args.f2), "sha256": file_digest(args.f2),
                     "column": args.column2}}
    mean = cfg.importance_mean
    if mean == "file":
        mean = load_functions(cfg.importance_mean_file, cfg.grid_size)[0]
        inputs["importance_mean"] = {"name": os.path.basename(cfg.importance_mean_file),
                                     "sha256": file_digest(cfg.importance_mean_file)}
    est = BayesianWarpRegistration(
        n_samples=cfg.samples, n_resample=cfg.resample, sigma2=cfg.sigma2, decay=cfg.decay,
        n_basis=cfg.basis_size, gamma_alpha=cfg.gamma_alpha, gamma_beta=cfg.gamma_beta,
        k_max=cfg.k_max, mode_threshold=cfg.mode_threshold, n_clusters=cfg.n_clusters,
        importance_mean=mean, random_state=cfg.seed, n_jobs=args.n_jobs,
    ).fit(f1, f2)
    provenance = {"package_version": __version__, "seed": cfg.seed, "inputs": inputs}
    bundle = ResultBundle.from_estimator(est, f1, f2, cfg.to_dict(), provenance)
    write_json(bundle, args.out)
    if args.export_dir:
        export_plot_data(bundle, args.export_dir)
    k = bundle.clusters["k"]
    print(f"{k} posterior mode(s); cluster sizes {list(map(int, bundle.clusters['sizes']))}; "
          f"wrote {args.out}")


def cmd_simulate(args):
    cfg = config_from_args(args)
    prior = _prior(cfg)
    common = dict(replicates=args.replicates, n_samples=cfg.samples, n_resample=cfg.resample,
                  n_points=cfg.grid_size, prior=prior, seed=cfg.seed, n_jobs=args.n_jobs)
    if args.which == 1:
        reports = [run_sim1(w, **common) for w in (args.warp or SIM1_WARPS)]
    else:
        reports = [run_sim2(**common)]
    out = {"config": cfg.to_dict(), "package_version": __version__,
           "reports": [r.to_dict() for r in reports]}
    write_json(out, args.out)
    for r in reports:
        summ = r.summary()
        line = ", ".join(
            f"{k} {v['mean']:.4g} ({v['sd']:.2g})" for k, v in summ.items()
            if v["mean"] is not None
        )
        print(f"{r.name}: {line}")


def cmd_template(args):
    cfg = config_from_args(args)
    funcs = np.array(load_functions(args.dataset, cfg.grid_size))
    res = run_template_alignment(funcs, args.index, cfg.samples, _prior(cfg), cfg.seed,
                                 args.n_jobs)
    out = {
        "config": cfg.to_dict(),
        "package_version": __version__,
        "provenance": {"seed": cfg.seed,
                       "inputs": {"dataset": {"name": os.path.basename(args.dataset),
                                              "sha256": file_digest(args.dataset)}}},
        "template_index": res.template_index,
        "warps": res.warps,
        "aligned": res.aligned,
        "mean_before": res.mean_before,
        "mean_after": res.mean_after,
    }
    write_json(out, args.out)
    if args.export_dir:
        os.makedirs(args.export_dir, exist_ok=True)
        save_functions(os.path.join(args.export_dir, "aligned.csv"), res.aligned)
        save_functions(os.path.join(args.export_dir, "warps.csv"), res.warps)
        save_functions(os.path.join(args.export_dir, "averages.csv"),
                       [res.mean_before, res.mean_after], header=["t", "before", "after"])
    print(f"aligned {funcs.shape[0]} functions to column {args.index}; wrote {args.out}")


def cmd_export(args):
    for path in export_plot_data(read_bundle(args.bundle), args.out_dir):
        print(path)


COMMANDS = {"align": cmd_align, "simulate": cmd_simulate, "template": cmd_template,
            "export": cmd_export}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except InsufficientSupportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SUPPORT
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (BayesWarpError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
