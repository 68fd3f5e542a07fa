import json
import math

import numpy as np
import pytest
import torch

from prefbo.acquisition import AcquisitionConfig
from prefbo.runner import (
    RunConfig,
    RunResult,
    result_rows,
    run_cost_study,
    run_gamma_sweep,
    run_once,
    write_results,
)
from prefbo.strategies import CostModel, Strategy
from prefbo.surrogate import TrainingConfig

torch.set_num_threads(1)

TINY_ACQ = AcquisitionConfig(
    n_candidate_grid=64,
    n_gumbel_samples=500,
    n_bins=8,
    n_trunc_samples=48,
    n_uncond_samples=48,
    n_optim_init=4,
    n_optim_steps=3,
)
TINY_TRAIN = TrainingConfig(iterations=60, mc_samples=8)


def tiny_config(**overrides) -> RunConfig:
    base = dict(
        benchmark="branin",
        iterations=8,
        n_init=3,
        seed=0,
        acquisition=TINY_ACQ,
        training=TINY_TRAIN,
        metric_pairs=100,
    )
    base.update(overrides)
    return RunConfig(**base)


class TestRunOnce:
    def test_consecutive_protocol_counts(self):
        res = run_once(tiny_config())
        assert len(res.produced) == 8
        # every post-init candidate compared once with its predecessor
        assert len(res.labels) == (3 - 1) + (8 - 3)
        assert len(res.steps) == 5
        assert len(res.fits) == 5 + 1  # one per acquisition plus the final fit
        for k, step in enumerate(res.steps):
            assert step["references"] == [3 + k - 1]

    def test_gamma_zero_three_outcome_never_indifferent(self):
        res = run_once(tiny_config(gamma_true=0.0))
        assert 0 not in res.labels

    def test_determinism_byte_identical(self):
        a = run_once(tiny_config(seed=5)).to_json()
        b = run_once(tiny_config(seed=5)).to_json()
        assert a == b

    def test_seeds_differ(self):
        a = run_once(tiny_config(seed=1)).to_json()
        b = run_once(tiny_config(seed=2)).to_json()
        assert a != b

    def test_binary_oracle_labels(self):
        res = run_once(tiny_config(oracle_kind="binary", gamma_true=10.0))
        assert set(res.labels) <= {-1, 1}

    def test_frozen_gamma_trajectory(self):
        res = run_once(tiny_config(gamma_mode="frozen-zero"))
        assert all(g == 0.0 for g in res.gamma_trajectory)

    def test_budget_mode_consecutive(self):
        res = run_once(tiny_config(iterations=None, budget=6.0, cost_model=CostModel(1.0, 1.0)))
        # 3 post-init iterations at cost 2 each
        assert len(res.steps) == 3
        assert res.ledger["spent"] == 6.0

    def test_multiple_strategy_references(self):
        res = run_once(tiny_config(strategy=Strategy("multiple", L=3)))
        step = res.steps[-1]
        t = step["iteration"]
        assert step["references"] == [t - 1, t - 2, t - 3]
        assert len(step["labels"]) == 3

    def test_standard_strategy_produces_pairs(self):
        res = run_once(tiny_config(strategy=Strategy("standard"), iterations=7))
        for step in res.steps:
            assert len(step["produced"]) == 2
            assert len(step["labels"]) == 1
        assert len(res.produced) == 7  # 3 init + 2 steps x 2 configs

    def test_telemetry_recorded(self):
        res = run_once(tiny_config())
        t = res.steps[0]["telemetry"]
        assert "gumbel" in t and t["gumbel"]["scale"] > 0
        assert abs(sum(b["weight"] for b in t["bins"]) - 1) < 1e-9
        assert "fallback_count" in t
        assert len(t["optimizer_trace"]) == TINY_ACQ.optimizer_budget

    def test_cumulative_cost_matches_iteration_costs(self):
        res = run_once(tiny_config(cost_model=CostModel(2.0, 3.0)))
        per_iter = 2.0 + 3.0
        assert res.ledger["spent"] == pytest.approx(per_iter * len(res.steps))

    def test_validation(self):
        with pytest.raises(ValueError):
            tiny_config(iterations=None, budget=None)
        with pytest.raises(ValueError):
            tiny_config(budget=5.0)  # both set
        with pytest.raises(ValueError):
            tiny_config(n_init=1)
        with pytest.raises(ValueError):
            tiny_config(oracle_kind="other")

    def test_config_round_trip(self):
        cfg = tiny_config(strategy=Strategy("multiple", L=4))
        assert RunConfig.from_dict(cfg.to_dict()) == cfg


class TestStudies:
    def test_cost_study_grid_shape(self, tmp_path):
        base = tiny_config()
        results = run_cost_study(
            base,
            regimes=[CostModel(1.0, 1.0)],
            strategies=[Strategy("consecutive"), Strategy("standard")],
            budget=6.0,
            seeds=[0, 1],
            max_workers=1,
        )
        assert len(results) == 4
        csv_path = write_results(results, str(tmp_path), "cost")
        text = open(csv_path).read().strip().splitlines()
        assert text[0].startswith("benchmark,strategy")
        assert len(text) > 4

    def test_consecutive_beats_standard_iteration_count(self):
        base = tiny_config()
        results = run_cost_study(
            base,
            regimes=[CostModel(1.0, 1.0)],
            strategies=[Strategy("consecutive"), Strategy("standard")],
            budget=6.0,
            seeds=[0],
            max_workers=1,
        )
        by_strategy = {r["config"]["strategy"]: r for r in results}
        assert len(by_strategy["consecutive"]["steps"]) == 3  # 6 / 2
        assert len(by_strategy["standard"]["steps"]) == 2  # 6 / 3

    def test_simple_regret_curves_monotone(self):
        res = run_once(tiny_config(seed=3))
        regrets = [f["metrics"]["simple_regret"] for f in res.fits]
        assert all(a >= b - 1e-12 for a, b in zip(regrets, regrets[1:]))

    def test_gamma_sweep_shapes(self):
        base = tiny_config()
        results, summary = run_gamma_sweep(base, [0.0, 0.05], seeds=[0, 1], max_workers=1)
        assert len(results) == 4
        assert [row["gamma_true"] for row in summary] == [0.0, 0.05]
        for row in summary:
            assert row["n_runs"] == 2
            assert "expected_indifference" in row
        assert summary[0]["expected_indifference"] == 0.0

    def test_result_rows_columns(self):
        res = run_once(tiny_config()).to_json_dict()
        rows = result_rows(res)
        assert len(rows) == len(res["fits"])
        assert set(rows[0]) == {
            "benchmark", "strategy", "gamma_true", "seed", "iteration",
            "cumulative_cost", "simple_regret", "inference_regret",
            "ordinal_acc", "choice_acc", "gamma_hat",
        }


class TestCli:
    def test_run_command(self, tmp_path, capsys):
        from prefbo.cli import main

        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps(tiny_config().to_dict()))
        code = main(["run", "--config", str(cfg_file), "--seed", "4", "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "inference_regret" in out
        assert (tmp_path / "out" / "run.csv").exists()

    def test_invalid_config_exit_code(self, tmp_path):
        from prefbo.cli import main

        code = main(["run", "--benchmark", "does-not-exist", "--out", str(tmp_path)])
        assert code == 2

    def test_report_command(self, tmp_path, capsys):
        from prefbo.cli import main

        res = run_once(tiny_config()).to_json_dict()
        csv_path = write_results([res], str(tmp_path), "run")
        assert main(["report", csv_path]) == 0
        out = capsys.readouterr().out
        assert "branin" in out
