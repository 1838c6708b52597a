"""Command-line entry point ``koopreach``.

Exit codes: 0 success, 2 verification inconclusive (still a valid run),
3 input error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..dynamics import SYSTEMS, analytic_eigenpairs_example1, generate_snapshots, get_system
from ..errors import InputError, NumericalError
from ..regions import region_from_dict
from .benchmarks import BENCHMARKS, run_benchmark
from .experiments import ExperimentGrid, count_modes, experiment_convergence, experiment_hausdorff, median_by_cell
from .persistence import load_dataset, load_json, load_model, save_dataset, save_model
from .pipeline import VerifyConfig, learn_model, verify_model

log = logging.getLogger("koopreach")

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3, 4


def _targets(values):
    if not values:
        return None
    try:
        return [complex(v.replace(" ", "").replace("i", "j")) for v in values]
    except ValueError as exc:
        raise InputError(f"cannot parse eigenvalue target: {exc}") from None


def cmd_simulate(args, config) -> int:
    system = get_system(args.system)
    domain = region_from_dict(config["domain"]) if "domain" in config else system.domain
    ds = generate_snapshots(system, domain, args.traj, args.steps, args.dt, seed=args.seed)
    out = args.out or f"{args.system}.csv"
    save_dataset(ds, out)
    print(f"wrote {len(ds)} snapshot pairs to {out} ({ds.n_dropped} dropped)")
    return EXIT_OK


def cmd_learn(args, config) -> int:
    ds = load_dataset(args.dataset)
    model = learn_model(ds, args.degree, targets=_targets(args.targets), max_residual=args.residual_threshold,
                        count=args.count, tol=args.tol)
    out = args.out or "model.json"
    save_model(model, out)
    for p in model.eigenpairs:
        print(f"lambda = {p.lambda_:.6g}  residual = {p.residual:.3g}")
    print(f"wrote model to {out}")
    return EXIT_OK


def _references(name):
    if name is None:
        return None
    if name == "example1-analytic":
        return analytic_eigenpairs_example1()
    return load_model(name).eigenpairs


def cmd_verify(args, config) -> int:
    model = load_model(args.model)
    X0 = region_from_dict(load_json(args.init))
    XF = region_from_dict(load_json(args.target))
    opts = dict(config)
    for key in ("t_max", "delta", "eps", "n_samples", "max_weight", "assumed_L", "assumed_A"):
        if getattr(args, key) is not None:
            opts[key] = getattr(args, key)
    report = verify_model(model, X0, XF, VerifyConfig.from_dict(opts), seed=args.seed,
                          references=_references(args.reference))
    out = args.out or "report.json"
    Path(out).write_text(report.to_json())
    print(report.statement)
    print(f"verdict {report.verdict}; report written to {out}")
    return EXIT_OK if report.verdict == "UnreachableCertified" else EXIT_INCONCLUSIVE


def cmd_experiment_hausdorff(args, config) -> int:
    out = args.out or "hausdorff.csv"
    study = experiment_hausdorff(n_trials=args.trials, base_seed=args.seed, out_csv=out, **config)
    d = study.distances
    if len(d):
        print(f"{len(d)} trials ok, {study.n_failed} failed; median d_H {np.median(d):.4g}, "
              f"coverage {study.coverage:.3f}, KDE modes {count_modes(d)}")
    else:
        print(f"all {study.n_failed} trials failed")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_experiment_convergence(args, config) -> int:
    grid = ExperimentGrid.from_dict({"base_seed": args.seed, **config})
    out = args.out or "convergence.csv"
    rows = experiment_convergence(grid, out_csv=out)
    for (deg, n), med in median_by_cell(rows).items():
        print(f"degree {deg:2d}  samples {n:5d}  median d_H {med:.4g}")
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_benchmark(args, config) -> int:
    outcome = run_benchmark(args.name, seed=args.seed, overrides=config or None)
    print(outcome.summary())
    if args.out:
        Path(args.out).write_text(outcome.report.to_json())
    return EXIT_OK if outcome.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: command-specific)")
    common.add_argument("--out", help="output path")
    common.add_argument("--config", help="JSON file with extra options for the command")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="koopreach",
                                     description="Data-driven reach-time bounds from Koopman eigenfunctions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a snapshot dataset")
    p.add_argument("system", choices=sorted(SYSTEMS))
    p.add_argument("--traj", type=int, default=1000)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--dt", type=float, default=0.05)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", parents=[common], help="learn principal eigenpairs from a dataset")
    p.add_argument("dataset")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--targets", nargs="*", help="approximate eigenvalues to select, e.g. -1 2.5 or -0.25+1.39i")
    p.add_argument("--residual-threshold", type=float, default=float("inf"))
    p.add_argument("--count", type=int, default=2, help="eigenpairs to keep when no targets are given")
    p.add_argument("--tol", type=float, default=0.1, help="distance to a target within which candidates qualify")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("verify", parents=[common], help="bound the reach times between two regions")
    p.add_argument("model")
    p.add_argument("--init", required=True, help="initial region JSON")
    p.add_argument("--target", required=True, help="target region JSON")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--combos", dest="max_weight", type=int, help="maximum total weight of eigenpair products")
    p.add_argument("--assumed-L", dest="assumed_L", type=float)
    p.add_argument("--assumed-A", dest="assumed_A", type=float)
    p.add_argument("--reference", help="'example1-analytic' or a model JSON used to measure error fields")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment-hausdorff", parents=[common], help="Hausdorff-distance study on the example1 system")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_experiment_hausdorff)

    p = sub.add_parser("experiment-convergence", parents=[common], help="degree and sample-count study on the duffing system")
    p.set_defaults(func=cmd_experiment_convergence)

    p = sub.add_parser("benchmark", parents=[common], help="run a canned benchmark and check its thresholds")
    p.add_argument("name", choices=sorted(BENCHMARKS))
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is reserved for inconclusive verdicts
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_json(args.config) if args.config else {}
        if args.seed is None:
            args.seed = 0 if args.command != "benchmark" else None
        return args.func(args, config)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
