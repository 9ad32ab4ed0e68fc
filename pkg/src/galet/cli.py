"""Command line entry point: ``galet {run,sweep,summarize,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiment
from .config import ConfigError, load_config
from .errors import InvalidInputError, UnsupportedDiagnosticError
from .oracle import check_interface, check_pl_inequality, fd_verify
from .problems import make_problem, PROBLEMS
from .rng import RNG_NAME, make_rng
from .verify import rank_probe


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_run(args, sweep=False):
    try:
        cfg = _load(args)
        if cfg.is_sweep() and not sweep:
            raise ConfigError("solver lists more than one value; use `galet sweep`", args.config)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return experiment.EXIT_INVALID
    code, summary = experiment.run_experiment(cfg, out_dir=args.out, fmt=args.format, workers=args.workers)
    c = summary["counts"]
    print(f"{c['traces']} runs: {c['converged']} converged, {c['diverged']} diverged "
          f"-> {args.out or cfg.out_dir}")
    return code


def cmd_summarize(args):
    summary = experiment.summarize(args.dir)
    text = json.dumps(summary, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return experiment.EXIT_OK if summary["runs"] else experiment.EXIT_INVALID


def _parse_params(pairs):
    params = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise InvalidInputError(f"expected key=value, got {pair!r}")
        for conv in (int, float, str):
            try:
                params[key.strip()] = conv(raw)
                break
            except ValueError:
                continue
    return params


def cmd_verify(args):
    try:
        problem = make_problem(args.problem, **_parse_params(args.param))
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return experiment.EXIT_INVALID
    seed = 0 if args.seed is None else args.seed
    rng = make_rng(seed)
    points = [problem.sample_point(rng) for _ in range(args.points)]
    report = {"problem": problem.name, "seed": seed, "rng": RNG_NAME, "points": args.points}
    ok = True

    fd = fd_verify(problem, points, rng=make_rng(seed + 1))
    report["fd_verify"] = {"max_rel_err": fd.max_rel_err, "rel_tol": args.rel_tol,
                           "passed": fd.passed(args.rel_tol)}
    ok &= fd.passed(args.rel_tol)

    iface = check_interface(problem, points, rng=make_rng(seed + 2))
    report["interface"] = {k: float(v) for k, v in vars(iface).items()}

    mu = problem.constants.mu_g
    if problem.has_g_star and mu is not None:
        pl = check_pl_inequality(problem, mu, points)
        n_pass = sum(p.passed for p in pl)
        report["pl_check"] = {"mu_g": mu, "passed": n_pass, "failed": len(pl) - n_pass}
        ok &= n_pass == len(pl)
    else:
        report["pl_check"] = "skipped: needs g* and a known mu_g"

    try:
        ranks = rank_probe(problem, points)
        hist = {}
        for r in ranks:
            key = f"{r.rank_augmented}/{r.rank_yy}"
            hist[key] = hist.get(key, 0) + 1
        report["rank_probe"] = {"augmented/yy": hist}
    except UnsupportedDiagnosticError as exc:
        report["rank_probe"] = f"skipped: {exc}"

    report["passed"] = bool(ok)
    print(json.dumps(report, indent=1, sort_keys=True, default=float))
    return experiment.EXIT_OK if ok else experiment.EXIT_PARTIAL


def build_parser():
    parser = argparse.ArgumentParser(prog="galet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, with_format=True):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (or file for summarize)")
        p.add_argument("--workers", type=int, default=None)
        if with_format:
            p.add_argument("--format", choices=("csv", "json"), default=None)

    for verb in ("run", "sweep"):
        p = sub.add_parser(verb, help=f"{verb} the experiment described by a config file")
        p.add_argument("config")
        common(p)
    p = sub.add_parser("summarize", help="summarise a directory of traces")
    p.add_argument("dir")
    common(p)
    p = sub.add_parser("verify", help="derivative, PL and rank checks for a problem")
    p.add_argument("problem", choices=sorted(PROBLEMS))
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--param", action="append", help="problem parameter key=value")
    common(p)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verb == "run":
        return cmd_run(args)
    if args.verb == "sweep":
        return cmd_run(args, sweep=True)
    if args.verb == "summarize":
        return cmd_summarize(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
