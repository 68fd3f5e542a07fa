"""Evaluation metrics: simple/inference regret, ordinal and choice accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmarks import NormalizedUtility, sobol_points
from .preference import LikelihoodParams
from .surrogate import SurrogateModel

Array = np.ndarray

POLISH_BUDGET = 100


@dataclass(frozen=True)
class MetricReport:
    simple_regret: float
    inference_regret: float
    ordinal_accuracy: float
    choice_accuracy: float
    recommendation: Array

    def to_dict(self) -> dict:
        return {
            "simple_regret": self.simple_regret,
            "inference_regret": self.inference_regret,
            "ordinal_accuracy": self.ordinal_accuracy,
            "choice_accuracy": self.choice_accuracy,
            "recommendation": np.asarray(self.recommendation).tolist(),
        }


def simple_regret(utility: NormalizedUtility, produced: Array) -> float:
    """Gap between the optimum (1 under normalization) and the best produced config."""
    produced = np.atleast_2d(np.asarray(produced, dtype=float))
    if produced.shape[0] == 0:
        raise ValueError("produced must be non-empty")
    return float(1.0 - np.max(utility.eval(produced)))


def recommend(model: SurrogateModel, grid_resolution: int | None = None) -> Array:
    """Argmax of the posterior mean: dense Sobol scan plus a coordinate polish.

    Deterministic: unscrambled Sobol grid, first-index tie-break on the flat
    prior, greedy coordinate steps with a halving step size (100 evaluations).
    """
    d = model.dim
    n_grid = grid_resolution or (2**14 if d <= 3 else 2**16)
    grid = sobol_points(n_grid, d)
    means = model.posterior_mean(grid)
    best_idx = int(np.argmax(means))
    best = grid[best_idx].copy()
    best_val = means[best_idx]
    evals = 0
    step = 1.0 / 64.0
    while evals < POLISH_BUDGET and step > 1e-6:
        improved = False
        for axis in range(d):
            if evals >= POLISH_BUDGET:
                break
            cands = []
            for direction in (-1.0, 1.0):
                cand = best.copy()
                cand[axis] = min(1.0, max(0.0, cand[axis] + direction * step))
                cands.append(cand)
            vals = model.posterior_mean(np.stack(cands))
            evals += len(cands)
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val = vals[k]
                best = cands[k]
                improved = True
        if not improved:
            step /= 2.0
    return best


def inference_regret(utility: NormalizedUtility, model: SurrogateModel) -> float:
    return float(1.0 - utility.eval(recommend(model))[0])


def ordinal_accuracy(
    model: SurrogateModel,
    utility: NormalizedUtility,
    n_pairs: int = 2000,
    rng: np.random.Generator | None = None,
) -> float:
    """Fraction of random pairs whose posterior-mean ordering matches the truth.

    Exact ties in the true utility (measure zero) count as correct.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = rng or np.random.default_rng(0)
    a = rng.uniform(size=(n_pairs, model.dim))
    b = rng.uniform(size=(n_pairs, model.dim))
    mu = model.posterior_mean(np.vstack([a, b]))
    pred = np.sign(mu[:n_pairs] - mu[n_pairs:])
    true = np.sign(utility.eval(a) - utility.eval(b))
    return float(np.mean((pred == true) | (true == 0)))


def choice_accuracy(
    model: SurrogateModel,
    utility: NormalizedUtility,
    gamma_true: float,
    sigma: float,
    n_pairs: int = 2000,
    rng: np.random.Generator | None = None,
) -> float:
    """Three-outcome prediction accuracy over random pairs.

    The true outcome thresholds the noiseless true-utility difference at
    gamma_true; the prediction thresholds the posterior-mean difference at the
    learned gamma. A model with no indifference notion (gamma == 0) is counted
    wrong on every pair whose true outcome is 0.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = rng or np.random.default_rng(0)
    a = rng.uniform(size=(n_pairs, model.dim))
    b = rng.uniform(size=(n_pairs, model.dim))
    delta_true = utility.eval(a) - utility.eval(b)
    true = np.where(delta_true > gamma_true, 1, np.where(delta_true < -gamma_true, -1, 0))
    mu = model.posterior_mean(np.vstack([a, b]))
    delta_pred = mu[:n_pairs] - mu[n_pairs:]
    g = model.gamma
    pred = np.where(delta_pred > g, 1, np.where(delta_pred < -g, -1, 0))
    correct = pred == true
    if g == 0.0:
        correct = correct & (true != 0)
    return float(np.mean(correct))


def metric_report(
    model: SurrogateModel,
    utility: NormalizedUtility,
    produced: Array,
    gamma_true: float,
    sigma: float,
    n_pairs: int = 2000,
    rng: np.random.Generator | None = None,
    pair_rng_seed: int | None = None,
) -> MetricReport:
    """All metrics for one fitted model; pair draws share one stream."""
    if pair_rng_seed is not None:
        rng = np.random.default_rng(pair_rng_seed)
    rng = rng or np.random.default_rng(0)
    rec = recommend(model)
    ord_rng, choice_rng = rng.spawn(2)
    return MetricReport(
        simple_regret=simple_regret(utility, produced),
        inference_regret=float(1.0 - utility.eval(rec)[0]),
        ordinal_accuracy=ordinal_accuracy(model, utility, n_pairs, ord_rng),
        choice_accuracy=choice_accuracy(model, utility, gamma_true, sigma, n_pairs, choice_rng),
        recommendation=rec,
    )
