"""Command-line entry point.

    shelora run --config cfg.json [--seed N] [--strategy S] [--out DIR] [--rounds R]
    shelora negotiate-only --config cfg.json
    shelora metrics --curve max|min|random --gammas 0.1,0.2 [--seed N]
    shelora default-config

Log verbosity comes from ``SHELORA_LOG_LEVEL`` (default ``WARNING``).
Exit codes: 0 success, 1 a round or computation failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .errors import SheLoraError, ValidationError
from .metrics import STRATEGIES as CURVES
from .metrics import leakage_curve, planted_matrix
from .orchestrator import STRATEGIES, Experiment, ExperimentConfig, load_config, write_reports
from .sensitivity import channel_importance

LOG_ENV = "SHELORA_LOG_LEVEL"


def _parser():
    p = argparse.ArgumentParser(prog="shelora", description="Selective-encryption federated LoRA simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a federated experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--rounds", type=int)
    run.add_argument("--out", default="out")

    neg = sub.add_parser("negotiate-only", help="print the round-0 negotiation result")
    neg.add_argument("--config", required=True)
    neg.add_argument("--seed", type=int)

    met = sub.add_parser("metrics", help="leakage curve as CSV on a planted-heavy-column matrix")
    met.add_argument("--curve", choices=CURVES, required=True)
    met.add_argument("--gammas", required=True, help="comma-separated ascending budgets in [0, 1]")
    met.add_argument("--seed", type=int, default=0)
    met.add_argument("--rows", type=int, default=32)
    met.add_argument("--cols", type=int, default=64)
    met.add_argument("--heavy", type=int, default=5)

    sub.add_parser("default-config", help="print the default configuration")
    return p


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "strategy", None):
        changes["strategy"] = args.strategy
    if getattr(args, "rounds", None) is not None:
        changes["rounds"] = args.rounds
    return cfg.with_(**changes) if changes else cfg


def _cmd_run(args, out):
    cfg = _config(args)
    exp = Experiment(cfg)
    reports = exp.run()
    write_reports(reports, args.out, cfg)
    last = reports[-1] if reports else None
    if last is not None and last.status != "ok":
        print(f"error: round {last.round} aborted: {last.error}", file=sys.stderr)
        return 1
    loss = f"{last.loss:.6g}" if last is not None else "n/a"
    print(f"{len(reports)} rounds, final loss {loss}, reports in {args.out}", file=out)
    return 0


def _cmd_negotiate(args, out):
    exp = Experiment(_config(args))
    exp.renegotiate(0)
    res = exp.negotiation
    doc = {
        "res": list(res.res),
        "k": res.k,
        "coefficients": list(res.coefficients) if res.coefficients is not None else None,
        "group_coefficients": {str(k): list(v) for k, v in sorted(res.group_coefficients.items())},
        "score": res.score,
        "shortfall": res.shortfall,
        "perm": exp.plan.perm.tolist(),
    }
    out.write(json.dumps(doc, sort_keys=True) + "\n")
    return 0


def _cmd_metrics(args, out):
    try:
        gammas = [float(g) for g in args.gammas.split(",") if g.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --gammas: {exc}") from exc
    w = planted_matrix(args.rows, args.cols, args.heavy, args.seed)
    scores = channel_importance(w, np.eye(args.cols))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["gamma", "mi_bits"])
    for g, mi in leakage_curve(w, scores, args.curve, gammas, seed=args.seed):
        writer.writerow([repr(g), repr(mi)])
    return 0


def main(argv=None, out=None):
    out = out or sys.stdout
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, out)
        if args.command == "negotiate-only":
            return _cmd_negotiate(args, out)
        if args.command == "metrics":
            return _cmd_metrics(args, out)
        out.write(ExperimentConfig().to_json())
        return 0
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SheLoraError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
