"""Experiment harness: full optimization runs against simulated oracles.

A run seeds an initial Latin-hypercube design whose candidates are compared
consecutively, then alternates surrogate refits, acquisition maximization,
production, and oracle labeling until the candidate count or the cost budget
is exhausted. Results serialize to a stable JSON document (per run) and an
aggregate CSV (per study).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    maximize_acquisition,
    maximize_pair_acquisition,
)
from .benchmarks import get_utility, latin_hypercube
from .metrics import MetricReport, metric_report, recommend
from .preference import (
    LikelihoodParams,
    PreferenceDataset,
    expected_indifference_ratio,
    sample_response_binary,
    sample_response_three,
)
from .strategies import CONSECUTIVE, STANDARD, CostLedger, CostModel, Strategy, comparisons_for_step, iteration_cost
from .surrogate import SurrogateModel, TrainingConfig, fit, model_to_document

Array = np.ndarray

ORACLE_THREE = "three-outcome"
ORACLE_BINARY = "binary"

# role tags for deriving independent, reproducible seed streams
_ROLE_DESIGN = 1
_ROLE_ORACLE = 2
_ROLE_ACQ = 3
_ROLE_TRAIN = 4
_ROLE_METRIC = 5


@dataclass(frozen=True)
class RunConfig:
    benchmark: str = "branin"
    strategy: Strategy = Strategy(CONSECUTIVE)
    cost_model: CostModel = CostModel(1.0, 1.0)
    budget: Optional[float] = None
    iterations: Optional[int] = 30
    gamma_true: float = 0.04
    sigma: float = 0.04
    oracle_kind: str = ORACLE_THREE
    n_init: int = 4
    seed: int = 0
    gamma_mode: str = "learnable"
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    scale_preset: str = "full"
    metric_pairs: int = 2000

    def __post_init__(self) -> None:
        if (self.budget is None) == (self.iterations is None):
            raise ValueError("set exactly one of budget / iterations")
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.iterations is not None and self.iterations < self.n_init:
            raise ValueError("iterations must be >= n_init (it counts all produced candidates)")
        if self.oracle_kind not in (ORACLE_THREE, ORACLE_BINARY):
            raise ValueError(f"oracle_kind must be '{ORACLE_THREE}' or '{ORACLE_BINARY}'")
        if self.gamma_mode not in ("learnable", "frozen-zero"):
            raise ValueError("gamma_mode must be 'learnable' or 'frozen-zero'")
        if self.scale_preset not in ("full", "desk"):
            raise ValueError("scale_preset must be 'full' or 'desk'")
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive")

    def effective_acquisition(self) -> AcquisitionConfig:
        return self.acquisition.desk() if self.scale_preset == "desk" else self.acquisition

    def effective_training(self) -> TrainingConfig:
        if self.scale_preset == "desk":
            return replace(self.training, mc_samples=max(1, self.training.mc_samples // 5))
        return self.training

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.label()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if isinstance(d.get("strategy"), str):
            d["strategy"] = Strategy.parse(d["strategy"])
        elif isinstance(d.get("strategy"), dict):
            d["strategy"] = Strategy(**d["strategy"])
        if isinstance(d.get("cost_model"), dict):
            d["cost_model"] = CostModel(**d["cost_model"])
        if isinstance(d.get("acquisition"), dict):
            d["acquisition"] = AcquisitionConfig(**d["acquisition"])
        if isinstance(d.get("training"), dict):
            d["training"] = TrainingConfig(**d["training"])
        return cls(**d)


@dataclass
class RunResult:
    config: RunConfig
    produced: list[list[float]]
    steps: list[dict]
    fits: list[dict]
    final_metrics: dict
    recommendation: list[float]
    gamma_trajectory: list[float]
    checkpoint: dict
    ledger: dict
    labels: list[int]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "produced": self.produced,
            "steps": self.steps,
            "fits": self.fits,
            "final_metrics": self.final_metrics,
            "recommendation": self.recommendation,
            "gamma_trajectory": self.gamma_trajectory,
            "checkpoint": self.checkpoint,
            "ledger": self.ledger,
            "labels": self.labels,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def _role_rng(seed: int, role: int, index: int | None = None) -> np.random.Generator:
    key = [seed, role] if index is None else [seed, role, index]
    return np.random.default_rng(np.random.SeedSequence(key))


def _role_seed(seed: int, role: int, index: int | None = None) -> int:
    key = [seed, role] if index is None else [seed, role, index]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _oracle(cfg: RunConfig, rng: np.random.Generator):
    params = LikelihoodParams(sigma=cfg.sigma, gamma=cfg.gamma_true)
    sampler = sample_response_three if cfg.oracle_kind == ORACLE_THREE else sample_response_binary
    return lambda delta: sampler(float(delta), params, rng)


def run_once(cfg: RunConfig) -> RunResult:
    """One full optimization run; fully deterministic given cfg.seed."""
    utility = get_utility(cfg.benchmark)
    dim = utility.dim
    acq_cfg = cfg.effective_acquisition()
    train_base = cfg.effective_training()
    oracle_rng = _role_rng(cfg.seed, _ROLE_ORACLE)
    oracle = _oracle(cfg, oracle_rng)

    design = latin_hypercube(cfg.n_init, dim, seed=_role_seed(cfg.seed, _ROLE_DESIGN))
    produced: list[Array] = [design[i].copy() for i in range(cfg.n_init)]
    f_true = [float(utility.eval(x[None])[0]) for x in produced]
    dataset = PreferenceDataset(dim=dim)
    idx = [dataset.add_config(x) for x in produced]
    labels: list[int] = []
    for i in range(1, cfg.n_init):
        r = oracle(f_true[i] - f_true[i - 1])
        dataset.add_comparison(idx[i - 1], idx[i], r)
        labels.append(r)

    ledger = CostLedger(budget=cfg.budget if cfg.budget is not None else math.inf)
    steps: list[dict] = []
    fits: list[dict] = []
    gamma_traj: list[float] = []

    def fit_and_score(t: int) -> SurrogateModel:
        train_cfg = replace(train_base, seed=_role_seed(cfg.seed, _ROLE_TRAIN, t))
        model = fit(
            dataset,
            train_cfg,
            sigma=cfg.sigma,
            gamma_mode=cfg.gamma_mode,
        )
        report = metric_report(
            model,
            utility,
            np.stack(produced),
            cfg.gamma_true,
            cfg.sigma,
            n_pairs=cfg.metric_pairs,
            pair_rng_seed=_role_seed(cfg.seed, _ROLE_METRIC, t),
        )
        gamma_traj.append(model.gamma)
        fits.append(
            {
                "iteration": t,
                "gamma_hat": model.gamma,
                "best_loss": model.best_loss,
                "best_loss_iteration": model.best_iteration,
                "cumulative_cost": ledger.spent,
                "metrics": report.to_dict(),
            }
        )
        return model

    model: SurrogateModel | None = None
    while True:
        t = len(produced)
        if cfg.iterations is not None and t >= cfg.iterations:
            break
        if cfg.budget is not None and ledger.spent + iteration_cost(cfg.strategy, cfg.cost_model) > cfg.budget + 1e-12:
            break
        model = fit_and_score(t)
        acq_rng = _role_rng(cfg.seed, _ROLE_ACQ, t)
        n_new, refs = comparisons_for_step(cfg.strategy, t)
        if cfg.strategy.kind == STANDARD:
            x_a, x_b, telemetry = maximize_pair_acquisition(model, acq_cfg, acq_rng)
            new_configs = [x_a, x_b]
            comparisons = [(x_a, x_b)]
        else:
            result = maximize_acquisition(model, produced[-1], acq_cfg, acq_rng)
            telemetry = result.telemetry
            new_configs = [result.config]
            comparisons = [(produced[r], result.config) for r in refs]
        if not ledger.try_charge(cfg.strategy, cfg.cost_model, produced=tuple(new_configs)):
            break
        ledger.log_retrieval(sum(1 for r in refs if r != t - 1))
        new_indices = []
        for x in new_configs:
            produced.append(x)
            f_true.append(float(utility.eval(x[None])[0]))
            new_indices.append(dataset.add_config(x))
        step_labels = []
        for prev_x, curr_x in comparisons:
            i_prev = dataset.add_config(prev_x)
            i_curr = dataset.add_config(curr_x)
            d_true = float(utility.eval(curr_x[None])[0] - utility.eval(prev_x[None])[0])
            r = oracle(d_true)
            dataset.add_comparison(i_prev, i_curr, r)
            step_labels.append(r)
            labels.append(r)
        steps.append(
            {
                "iteration": t,
                "produced": [x.tolist() for x in new_configs],
                "references": refs,
                "labels": step_labels,
                "cumulative_cost": ledger.spent,
                "telemetry": telemetry,
            }
        )

    final_model = fit_and_score(len(produced))
    final = fits[-1]
    return RunResult(
        config=cfg,
        produced=[x.tolist() for x in produced],
        steps=steps,
        fits=fits,
        final_metrics=final["metrics"],
        recommendation=final["metrics"]["recommendation"],
        gamma_trajectory=gamma_traj,
        checkpoint=model_to_document(final_model),
        ledger=ledger.to_dict(),
        labels=labels,
    )


def _run_cell(cfg_dict: dict) -> dict:
    import torch

    torch.set_num_threads(1)
    result = run_once(RunConfig.from_dict(cfg_dict))
    return result.to_json_dict()


def run_many(configs: Sequence[RunConfig], max_workers: int = 4) -> list[dict]:
    """Run independent cells in parallel worker processes; deterministic order."""
    cfg_dicts = [c.to_dict() for c in configs]
    if max_workers <= 1 or len(configs) <= 1:
        return [_run_cell(d) for d in cfg_dicts]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_run_cell, cfg_dicts))


CSV_COLUMNS = [
    "benchmark",
    "strategy",
    "gamma_true",
    "seed",
    "iteration",
    "cumulative_cost",
    "simple_regret",
    "inference_regret",
    "ordinal_acc",
    "choice_acc",
    "gamma_hat",
]


def result_rows(result: dict) -> list[dict]:
    """Per-fit CSV rows for one run-result document."""
    cfg = result["config"]
    rows = []
    for f in result["fits"]:
        m = f["metrics"]
        rows.append(
            {
                "benchmark": cfg["benchmark"],
                "strategy": cfg["strategy"],
                "gamma_true": cfg["gamma_true"],
                "seed": cfg["seed"],
                "iteration": f["iteration"],
                "cumulative_cost": f["cumulative_cost"],
                "simple_regret": m["simple_regret"],
                "inference_regret": m["inference_regret"],
                "ordinal_acc": m["ordinal_accuracy"],
                "choice_acc": m["choice_accuracy"],
                "gamma_hat": f["gamma_hat"],
            }
        )
    return rows


def write_results(results: Sequence[dict], out_dir: str, study: str) -> str:
    """One JSON per run plus one aggregate CSV; returns the CSV path."""
    os.makedirs(out_dir, exist_ok=True)
    rows: list[dict] = []
    for res in results:
        cfg = res["config"]
        name = (
            f"{study}_{cfg['benchmark']}_{cfg['strategy'].replace(':', '')}"
            f"_g{cfg['gamma_true']}_m{cfg['gamma_mode']}_s{cfg['seed']}.json"
        )
        with open(os.path.join(out_dir, name), "w") as fh:
            json.dump(res, fh, sort_keys=True, separators=(",", ":"))
        rows.extend(result_rows(res))
    csv_path = os.path.join(out_dir, f"{study}.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return csv_path


DEFAULT_REGIMES: tuple[CostModel, ...] = (
    CostModel(0.0, 1.0),
    CostModel(1.0, 1.0),
    CostModel(1.0, 0.0),
)

DEFAULT_STRATEGIES: tuple[Strategy, ...] = (
    Strategy(STANDARD),
    Strategy(CONSECUTIVE),
    Strategy("multiple", L=5),
)


def run_cost_study(
    base: RunConfig,
    regimes: Sequence[CostModel] = DEFAULT_REGIMES,
    strategies: Sequence[Strategy] = DEFAULT_STRATEGIES,
    budget: float = 30.0,
    seeds: Sequence[int] = (0,),
    max_workers: int = 4,
) -> list[dict]:
    """Grid of (cost regime, strategy, seed) runs under one budget."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    configs = [
        replace(base, cost_model=regime, strategy=strategy, budget=budget, iterations=None, seed=seed)
        for regime in regimes
        for strategy in strategies
        for seed in seeds
    ]
    return run_many(configs, max_workers=max_workers)


def run_gamma_sweep(
    base: RunConfig,
    gamma_values: Sequence[float],
    seeds: Sequence[int],
    max_workers: int = 4,
) -> tuple[list[dict], list[dict]]:
    """Runs per (gamma_true, seed) plus per-gamma aggregate rows.

    Aggregates report mean and standard error of the final inference regret
    and the expected indifference ratio of the oracle at that gamma.
    """
    if not gamma_values or not seeds:
        raise ValueError("gamma_values and seeds must be non-empty")
    configs = [
        replace(base, gamma_true=g, seed=s) for g in gamma_values for s in seeds
    ]
    results = run_many(configs, max_workers=max_workers)
    utility = get_utility(base.benchmark)
    summary = []
    for g in gamma_values:
        cell = [r for r in results if r["config"]["gamma_true"] == g]
        regrets = np.array([r["final_metrics"]["inference_regret"] for r in cell])
        gammas = np.array([r["gamma_trajectory"][-1] for r in cell])
        e_ind = expected_indifference_ratio(
            utility,
            LikelihoodParams(sigma=base.sigma, gamma=g),
            n_pairs=20000,
            rng=_role_rng(base.seed, 7),
        )
        summary.append(
            {
                "gamma_true": g,
                "n_runs": len(cell),
                "inference_regret_mean": float(regrets.mean()),
                "inference_regret_se": float(regrets.std(ddof=1) / math.sqrt(len(cell))) if len(cell) > 1 else 0.0,
                "gamma_hat_mean": float(gammas.mean()),
                "expected_indifference": e_ind,
            }
        )
    return results, summary
