"""Command-line harness: single runs, the cost-regime study, the gamma sweep,
and CSV report summaries."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .runner import (
    DEFAULT_REGIMES,
    DEFAULT_STRATEGIES,
    RunConfig,
    run_cost_study,
    run_gamma_sweep,
    run_once,
    run_many,
    write_results,
)
from .strategies import CostModel, Strategy


def _parse_seeds(text: str) -> list[int]:
    """'0:20' (half-open range) or '0,1,5'."""
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return [int(s) for s in text.split(",") if s.strip()]


def _base_config(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    cfg = RunConfig.from_dict(overrides) if overrides else RunConfig()
    updates: dict = {}
    if args.benchmark:
        updates["benchmark"] = args.benchmark
    if args.strategy:
        updates["strategy"] = Strategy.parse(args.strategy)
    if args.gamma_true is not None:
        updates["gamma_true"] = args.gamma_true
    if args.sigma is not None:
        updates["sigma"] = args.sigma
    if args.oracle_kind:
        updates["oracle_kind"] = args.oracle_kind
    if args.n_init is not None:
        updates["n_init"] = args.n_init
    if args.gamma_mode:
        updates["gamma_mode"] = args.gamma_mode
    if args.scale_preset:
        updates["scale_preset"] = args.scale_preset
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "iterations", None) is not None:
        updates["iterations"] = args.iterations
        updates["budget"] = None
    if getattr(args, "budget", None) is not None:
        updates["budget"] = args.budget
        updates["iterations"] = None
    if args.cost_production is not None or args.cost_evaluation is not None:
        cm = cfg.cost_model
        updates["cost_model"] = CostModel(
            c_p=args.cost_production if args.cost_production is not None else cm.c_p,
            c_e=args.cost_evaluation if args.cost_evaluation is not None else cm.c_e,
        )
    return replace(cfg, **updates) if updates else cfg


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--benchmark")
    p.add_argument("--strategy", help="standard | consecutive | multiple:L")
    p.add_argument("--gamma-true", dest="gamma_true", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--oracle-kind", dest="oracle_kind", choices=["three-outcome", "binary"])
    p.add_argument("--n-init", dest="n_init", type=int)
    p.add_argument("--gamma-mode", dest="gamma_mode", choices=["learnable", "frozen-zero"])
    p.add_argument("--scale-preset", dest="scale_preset", choices=["full", "desk"])
    p.add_argument("--cost-production", dest="cost_production", type=float)
    p.add_argument("--cost-evaluation", dest="cost_evaluation", type=float)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--workers", type=int, default=4)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="prefbo")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single optimization run")
    _add_run_flags(p_run)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--iterations", type=int)
    p_run.add_argument("--budget", type=float)

    p_study = sub.add_parser("study", help="multi-run studies")
    study_sub = p_study.add_subparsers(dest="study_kind", required=True)

    p_cost = study_sub.add_parser("cost", help="cost-regime x strategy grid")
    _add_run_flags(p_cost)
    p_cost.add_argument("--budget", type=float, default=30.0)
    p_cost.add_argument("--seeds", default="0:5")

    p_gamma = study_sub.add_parser("gamma", help="gamma_true sweep")
    _add_run_flags(p_gamma)
    p_gamma.add_argument("--iterations", type=int)
    p_gamma.add_argument("--gammas", default="0,0.02,0.04,0.1")
    p_gamma.add_argument("--seeds", default="0:5")

    p_report = sub.add_parser("report", help="summarize an aggregate CSV")
    p_report.add_argument("csv", help="aggregate CSV emitted by a study")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: run failed: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        cfg = _base_config(args)
        result = run_once(cfg)
        write_results([result.to_json_dict()], args.out, "run")
        m = result.final_metrics
        print(
            f"{cfg.benchmark} {cfg.strategy.label()} seed={cfg.seed}: "
            f"inference_regret={m['inference_regret']:.4f} "
            f"ordinal_accuracy={m['ordinal_accuracy']:.3f} "
            f"gamma_hat={result.gamma_trajectory[-1]:.4f}"
        )
        return 0
    if args.command == "study" and args.study_kind == "cost":
        base = _base_config(args)
        base = replace(base, budget=args.budget, iterations=None)
        results = run_cost_study(
            base,
            budget=args.budget,
            seeds=_parse_seeds(args.seeds),
            max_workers=args.workers,
        )
        path = write_results(results, args.out, "cost")
        print(f"wrote {len(results)} runs; aggregate: {path}")
        return 0
    if args.command == "study" and args.study_kind == "gamma":
        base = _base_config(args)
        gammas = [float(g) for g in args.gammas.split(",") if g.strip()]
        results, summary = run_gamma_sweep(
            base, gammas, _parse_seeds(args.seeds), max_workers=args.workers
        )
        path = write_results(results, args.out, "gamma")
        with open(os.path.join(args.out, "gamma_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
        for row in summary:
            print(
                f"gamma_true={row['gamma_true']}: regret {row['inference_regret_mean']:.4f}"
                f" +- {row['inference_regret_se']:.4f} (se), E[~]={row['expected_indifference']:.3f}"
            )
        print(f"aggregate: {path}")
        return 0
    if args.command == "report":
        _print_report(args.csv)
        return 0
    raise ValueError(f"unknown command {args.command}")


def _print_report(csv_path: str) -> None:
    import csv as csvmod
    from collections import defaultdict

    final_rows: dict[tuple, dict[int, dict]] = defaultdict(dict)
    with open(csv_path) as fh:
        for row in csvmod.DictReader(fh):
            key = (row["benchmark"], row["strategy"], row["gamma_true"])
            seed = int(row["seed"])
            prev = final_rows[key].get(seed)
            if prev is None or int(row["iteration"]) > int(prev["iteration"]):
                final_rows[key][seed] = row
    header = f"{'benchmark':<14}{'strategy':<14}{'gamma':<8}{'n':<4}{'inf_regret':<18}{'ordinal':<14}"
    print(header)
    print("-" * len(header))
    for key in sorted(final_rows):
        rows = list(final_rows[key].values())
        inf = np.array([float(r["inference_regret"]) for r in rows])
        ordv = np.array([float(r["ordinal_acc"]) for r in rows])
        print(
            f"{key[0]:<14}{key[1]:<14}{key[2]:<8}{len(rows):<4}"
            f"{inf.mean():.4f} +- {inf.std(ddof=1) if len(rows) > 1 else 0:.4f}   "
            f"{ordv.mean():.3f} +- {ordv.std(ddof=1) if len(rows) > 1 else 0:.3f}"
        )


if __name__ == "__main__":
    sys.exit(main())
