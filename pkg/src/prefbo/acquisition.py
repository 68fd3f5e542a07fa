"""Information-gain acquisition for consecutive three-outcome comparisons.

The acquisition is the mutual information between the next preference label
and the unknown posterior maximum f*: the f* distribution is approximated by
a Gumbel fit to posterior-max samples over a candidate grid, the expectation
over f* is collapsed onto binned representatives, and each conditional label
distribution is estimated from truncated bivariate posterior samples at the
query/reference pair. Conditional and marginal estimates share per-bin random
streams so the information gain at the reference point itself is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .benchmarks import sobol_points
from .preference import LikelihoodParams, outcome_probabilities
from .surrogate import SurrogateModel, _chol_with_escalation, sample_posterior

Array = np.ndarray


@dataclass(frozen=True)
class GumbelFit:
    """Location/scale of the fitted distribution of the posterior maximum."""

    location: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.scale > 0):
            raise ValueError("Gumbel scale must be positive")

    def quantile(self, rank: float | Array) -> Array:
        return self.location - self.scale * np.log(-np.log(rank))

    def cdf(self, y: float | Array) -> Array:
        return np.exp(-np.exp(-(np.asarray(y) - self.location) / self.scale))


@dataclass(frozen=True)
class AcquisitionConfig:
    n_candidate_grid: int = 1024
    n_gumbel_samples: int = 25000
    n_bins: int = 20
    n_trunc_samples: int = 1000
    n_uncond_samples: int = 1000
    rank_clip: float = 0.01
    prob_floor: float = 1e-5
    max_rejection_rounds: int = 50
    n_optim_init: int = 10
    n_optim_steps: int = 25

    def __post_init__(self) -> None:
        counts = (
            self.n_candidate_grid,
            self.n_gumbel_samples,
            self.n_bins,
            self.n_trunc_samples,
            self.n_uncond_samples,
            self.max_rejection_rounds,
            self.n_optim_init,
            self.n_optim_steps,
        )
        if any(c < 1 for c in counts):
            raise ValueError("all counts must be positive")
        if not (0.0 < self.rank_clip < 0.5):
            raise ValueError("rank_clip must be in (0, 0.5)")

    @property
    def optimizer_budget(self) -> int:
        return self.n_optim_init + self.n_optim_steps

    def desk(self) -> "AcquisitionConfig":
        """Reduced Monte Carlo widths (counts / 5) for desk-scale runs."""
        return replace(
            self,
            n_gumbel_samples=max(1, self.n_gumbel_samples // 5),
            n_trunc_samples=max(1, self.n_trunc_samples // 5),
            n_uncond_samples=max(1, self.n_uncond_samples // 5),
        )


def zero_center(samples: Array) -> Array:
    """Subtract each sample's mean across the batch axis (rows are samples)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] < 1:
        raise ValueError("samples must have at least one column")
    return samples - samples.mean(axis=1, keepdims=True)


def gumbel_from_quantiles(y1: float, y2: float, y3: float) -> GumbelFit:
    """Closed-form fit from the 25th (y1), 75th (y2), and median (y3) values."""
    if y1 == y2:
        raise ValueError(f"degenerate quantiles: 25th == 75th == {y1}")
    r1, r2, r3 = 0.25, 0.75, 0.50
    b = (y1 - y2) / (math.log(-math.log(r2)) - math.log(-math.log(r1)))
    a = y3 + b * math.log(-math.log(r3))
    return GumbelFit(location=a, scale=b)


def fit_gumbel(
    model: SurrogateModel,
    candidate_grid: Array,
    rng: np.random.Generator,
    n_samples: int = 1000,
) -> GumbelFit:
    """Fit the posterior-max distribution over a candidate grid.

    Joint posterior draws are zero-centered per sample before taking the
    per-sample maximum; the fit uses the empirical 25/75/50 quantiles.
    """
    candidate_grid = np.atleast_2d(np.asarray(candidate_grid, dtype=float))
    if candidate_grid.shape[0] == 0:
        raise ValueError("candidate grid must be non-empty")
    draws = sample_posterior(model, candidate_grid, n_samples, rng)
    maxima = zero_center(draws).max(axis=1)
    y1, y3, y2 = np.quantile(maxima, [0.25, 0.50, 0.75])
    return gumbel_from_quantiles(float(y1), float(y2), float(y3))


def sample_maxima(fit: GumbelFit, n: int, rank_clip: float, rng: np.random.Generator) -> Array:
    """Draw f* values by inverting the CDF at ranks uniform on the clipped interval."""
    ranks = rng.uniform(rank_clip, 1.0 - rank_clip, size=n)
    return fit.quantile(ranks)


def bin_maxima(samples: Array, n_bins: int) -> list[tuple[float, float]]:
    """Collapse f* samples onto equally spaced bins: (in-bin mean, frequency weight).

    Empty bins are dropped; weights sum to one; bins are returned in ascending
    order (the deterministic reduction order).
    """
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    lo, hi = float(samples.min()), float(samples.max())
    if lo == hi:
        return [(lo, 1.0)]
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.digitize(samples, edges) - 1, 0, n_bins - 1)
    out: list[tuple[float, float]] = []
    total = samples.size
    for j in range(n_bins):
        mask = idx == j
        count = int(mask.sum())
        if count:
            out.append((float(samples[mask].mean()), count / total))
    return out


def _pair_moments(model: SurrogateModel, x: Array, x_ref: Array) -> tuple[Array, Array, bool]:
    """Bivariate posterior mean/cov at (x, x_ref); flags bitwise-identical points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x_ref = np.asarray(x_ref, dtype=float).reshape(-1)
    identical = x.tobytes() == x_ref.tobytes()
    if identical:
        mean, cov = model.posterior_joint(x[None, :])
        mean2 = np.array([mean[0], mean[0]])
        v = cov[0, 0]
        return mean2, np.array([[v, v], [v, v]]), True
    mean, cov = model.posterior_joint(np.stack([x, x_ref]))
    return mean, cov, False


def _draw_pairs(
    mean: Array, cov: Array, identical: bool, n: int, rng: np.random.Generator
) -> Array:
    """Zero-centered draws from the bivariate posterior, shape (n, 2).

    Identical points share one latent draw so the pair difference is exactly 0.
    """
    z = rng.standard_normal((n, 2))
    if identical:
        f = mean[0] + math.sqrt(max(cov[0, 0], 0.0)) * z[:, 0]
        pairs = np.stack([f, f], axis=1)
    else:
        chol = _chol_with_escalation(cov, 1e-12)
        pairs = mean[None, :] + z @ chol.T
    return zero_center(pairs)


def truncated_pair_samples(
    model: SurrogateModel,
    x: Array,
    x_ref: Array,
    f_star: float,
    n: int,
    rng: np.random.Generator,
    max_rejection_rounds: int = 50,
) -> tuple[Array, int]:
    """n pairs (f(x), f(x_ref)) with max <= f_star, via rejection sampling.

    Rejection proceeds in rounds of n draws; once the round budget is spent,
    remaining slots are filled by clamping unaccepted draws to f_star
    component-wise. Returns (pairs, number of clamped fills).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mean, cov, identical = _pair_moments(model, x, x_ref)
    accepted: list[Array] = []
    have = 0
    last_batch: Array | None = None
    for _ in range(max_rejection_rounds):
        batch = _draw_pairs(mean, cov, identical, n, rng)
        last_batch = batch
        ok = batch.max(axis=1) <= f_star
        if ok.any():
            take = batch[ok][: n - have]
            accepted.append(take)
            have += take.shape[0]
        if have >= n:
            return np.vstack(accepted), 0
    short = n - have
    assert last_batch is not None
    clamped = np.minimum(last_batch[:short], f_star)
    parts = accepted + [clamped]
    return np.vstack(parts), short


def _floor_and_normalize(triple: Array, floor: float) -> Array:
    p = np.maximum(np.asarray(triple, dtype=float), floor)
    return p / p.sum()


def predictive_response_dist(
    model: SurrogateModel,
    x: Array,
    x_ref: Array,
    n_samples: int,
    rng: np.random.Generator,
    f_star: Optional[float] = None,
    prob_floor: float = 1e-5,
    max_rejection_rounds: int = 50,
) -> tuple[Array, int]:
    """Monte Carlo label distribution (p_plus, p_zero, p_minus) for the pair.

    Pairs come from the zero-centered bivariate posterior, truncated at f_star
    when given; the mean triple is floored at prob_floor and renormalized.
    Returns (triple, clamped-fill count).
    """
    fallback = 0
    if f_star is None or not np.isfinite(f_star):
        mean, cov, identical = _pair_moments(model, x, x_ref)
        pairs = _draw_pairs(mean, cov, identical, n_samples, rng)
    else:
        pairs, fallback = truncated_pair_samples(
            model, x, x_ref, f_star, n_samples, rng, max_rejection_rounds
        )
    delta = pairs[:, 0] - pairs[:, 1]
    params = LikelihoodParams(sigma=model.sigma, gamma=model.gamma)
    p_plus, p_zero, p_minus = outcome_probabilities(delta, params)
    triple = np.array([p_plus.mean(), p_zero.mean(), p_minus.mean()])
    return _floor_and_normalize(triple, prob_floor), fallback


def _entropy(triple: Array) -> float:
    return float(-np.sum(triple * np.log(triple)))


@dataclass
class AcquisitionDesign:
    """Per-iteration reusable state: the f* fit, its bins, and shared streams.

    Reusing one design across every candidate evaluated in an iteration gives
    common random numbers per bin, which cancels most Monte Carlo noise when
    ranking candidates.
    """

    gumbel: GumbelFit
    bins: list[tuple[float, float]]
    marginal_seed: int
    bin_seeds: tuple[int, ...]
    fallback_count: int = 0

    def telemetry(self) -> dict:
        return {
            "gumbel": {"location": self.gumbel.location, "scale": self.gumbel.scale},
            "bins": [{"f_star": f, "weight": w} for f, w in self.bins],
            "fallback_count": self.fallback_count,
        }


def build_design(
    model: SurrogateModel, cfg: AcquisitionConfig, rng: np.random.Generator
) -> AcquisitionDesign:
    """Fit the Gumbel over a fresh Sobol candidate grid and bin its samples."""
    grid_seed = int(rng.integers(2**31 - 1))
    grid = sobol_points(cfg.n_candidate_grid, model.dim, seed=grid_seed)
    gumbel = fit_gumbel(model, grid, rng, n_samples=cfg.n_uncond_samples)
    maxima = sample_maxima(gumbel, cfg.n_gumbel_samples, cfg.rank_clip, rng)
    bins = bin_maxima(maxima, cfg.n_bins)
    seeds = rng.integers(2**31 - 1, size=len(bins) + 1)
    return AcquisitionDesign(
        gumbel=gumbel,
        bins=bins,
        marginal_seed=int(seeds[0]),
        bin_seeds=tuple(int(s) for s in seeds[1:]),
    )


def information_gain(
    model: SurrogateModel,
    x: Array,
    x_ref: Array,
    cfg: AcquisitionConfig,
    rng: np.random.Generator,
    design: Optional[AcquisitionDesign] = None,
) -> float:
    """Mutual information between the next label and f* (natural-log entropies).

    The per-bin streams (and the marginal stream) are fixed in the design and
    reused for every candidate evaluated against it, so candidate ranking
    shares common random numbers; at x = x_ref the identical-pair handling
    makes every term coincide and the gain is exactly zero.
    """
    if design is None:
        design = build_design(model, cfg, rng)
    marginal, _ = predictive_response_dist(
        model,
        x,
        x_ref,
        cfg.n_uncond_samples,
        np.random.default_rng(design.marginal_seed),
        prob_floor=cfg.prob_floor,
    )
    h_marginal = _entropy(marginal)
    h_cond = 0.0
    for (f_star, weight), seed in zip(design.bins, design.bin_seeds):
        triple, fallback = predictive_response_dist(
            model,
            x,
            x_ref,
            cfg.n_trunc_samples,
            np.random.default_rng(seed),
            f_star=f_star,
            prob_floor=cfg.prob_floor,
            max_rejection_rounds=cfg.max_rejection_rounds,
        )
        design.fallback_count += fallback
        h_cond += weight * _entropy(triple)
    return h_marginal - h_cond


# --- inner optimizer: small Matern-5/2 GP with expected improvement ---


def _matern52(X: Array, X2: Array, lengthscale: float) -> Array:
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(X2 * X2, axis=1)[None, :]
        - 2.0 * X @ X2.T
    )
    r = np.sqrt(np.maximum(d2, 0.0)) / lengthscale
    s5 = math.sqrt(5.0) * r
    return (1.0 + s5 + 5.0 * r * r / 3.0) * np.exp(-s5)


def _ei_surrogate_propose(
    X: Array, y: Array, pool: Array, rng: np.random.Generator
) -> Array:
    """Next candidate by expected improvement under a small Matern-5/2 GP.

    Hyperparameters come from a coarse marginal-likelihood grid; observation
    noise is kept in the model because information-gain values are noisy.
    """
    y_std = y.std()
    if y_std < 1e-12:
        return pool[int(rng.integers(pool.shape[0]))]
    yz = (y - y.mean()) / y_std
    best_ll = -np.inf
    best = None
    n = X.shape[0]
    eye = np.eye(n)
    for ls in (0.05, 0.1, 0.2, 0.4, 0.8, 1.6):
        K = _matern52(X, X, ls)
        for noise in (1e-4, 1e-2, 1e-1):
            try:
                chol = np.linalg.cholesky(K + noise * eye)
            except np.linalg.LinAlgError:
                continue
            alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, yz))
            ll = -0.5 * yz @ alpha - np.sum(np.log(np.diag(chol)))
            if ll > best_ll:
                best_ll = ll
                best = (ls, noise, chol, alpha)
    assert best is not None
    ls, noise, chol, alpha = best
    Kp = _matern52(pool, X, ls)
    mu = Kp @ alpha
    v = np.linalg.solve(chol, Kp.T)
    var = np.maximum(1.0 + noise - np.sum(v * v, axis=0), 1e-12)
    sd = np.sqrt(var)
    incumbent = yz.max()
    z = (mu - incumbent) / sd
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    ei = (mu - incumbent) * ndtr(z) + sd * pdf
    return pool[int(np.argmax(ei))]


@dataclass(frozen=True)
class AcquisitionResult:
    config: Array
    value: float
    telemetry: dict


def maximize_acquisition(
    model: SurrogateModel,
    x_ref: Array,
    cfg: AcquisitionConfig,
    rng: np.random.Generator,
    design: Optional[AcquisitionDesign] = None,
) -> AcquisitionResult:
    """Best-observed maximization of the information gain over the unit cube.

    A Sobol space-filling batch (n_optim_init points) is followed by
    n_optim_steps surrogate-guided proposals; the Gumbel fit and bins are
    computed once and shared across every evaluation.
    """
    d = model.dim
    if design is None:
        design = build_design(model, cfg, rng)
    init_seed = int(rng.integers(2**31 - 1))
    X = sobol_points(cfg.n_optim_init, d, seed=init_seed)
    values = [information_gain(model, x, x_ref, cfg, rng, design=design) for x in X]
    X = list(X)
    for _ in range(cfg.n_optim_steps):
        best_x = X[int(np.argmax(values))]
        pool = np.vstack(
            [
                rng.uniform(size=(192, d)),
                np.clip(best_x[None, :] + 0.10 * rng.standard_normal((48, d)), 0.0, 1.0),
                np.clip(best_x[None, :] + 0.02 * rng.standard_normal((16, d)), 0.0, 1.0),
            ]
        )
        cand = _ei_surrogate_propose(np.vstack(X), np.asarray(values), pool, rng)
        X.append(cand)
        values.append(information_gain(model, cand, x_ref, cfg, rng, design=design))
    k = int(np.argmax(values))
    telemetry = design.telemetry()
    telemetry["optimizer_trace"] = [
        {"config": x.tolist(), "value": float(v)} for x, v in zip(X, values)
    ]
    return AcquisitionResult(config=X[k].copy(), value=float(values[k]), telemetry=telemetry)


def maximize_pair_acquisition(
    model: SurrogateModel,
    cfg: AcquisitionConfig,
    rng: np.random.Generator,
) -> tuple[Array, Array, dict]:
    """Two fresh configs maximizing pairwise information gain.

    Coordinate-alternating scheme: fix one config, maximize over the other,
    then swap once. The Gumbel design is shared across both passes.
    """
    design = build_design(model, cfg, rng)
    x_b = rng.uniform(size=model.dim)
    res_a = maximize_acquisition(model, x_b, cfg, rng, design=design)
    res_b = maximize_acquisition(model, res_a.config, cfg, rng, design=design)
    telemetry = design.telemetry()
    telemetry["optimizer_trace"] = (
        res_a.telemetry["optimizer_trace"] + res_b.telemetry["optimizer_trace"]
    )
    return res_a.config, res_b.config, telemetry


def indifference_probability_map(
    model: SurrogateModel,
    x_ref: Array,
    grid: Array,
    n_samples: int,
    rng: np.random.Generator,
    prob_floor: float = 1e-5,
) -> Array:
    """p_zero of the (untruncated) predictive label distribution per grid point.

    Vectorized over the grid through the bivariate posterior statistics of
    each (grid point, reference) pair.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    stats = model.pair_stats(grid, x_ref)
    n_pts = grid.shape[0]
    l11 = np.sqrt(np.maximum(stats["var_x"], 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        l21 = np.where(l11 > 0, stats["cov_xr"] / np.where(l11 > 0, l11, 1.0), 0.0)
    l22sq = np.maximum(stats["var_r"] - l21 * l21, 0.0)
    l22 = np.sqrt(l22sq)
    z = rng.standard_normal((n_samples, 2))
    f_x = stats["mu_x"][None, :] + np.outer(z[:, 0], l11)
    f_r = stats["mu_r"] + np.outer(z[:, 0], l21) + np.outer(z[:, 1], l22)
    delta = f_x - f_r  # zero-centering the pair leaves the difference unchanged
    ref_key = np.asarray(x_ref, dtype=float).reshape(-1).tobytes()
    same = np.fromiter((grid[i].tobytes() == ref_key for i in range(n_pts)), dtype=bool)
    delta[:, same] = 0.0
    params = LikelihoodParams(sigma=model.sigma, gamma=model.gamma)
    p_plus, p_zero, p_minus = outcome_probabilities(delta, params)
    out = np.empty(n_pts)
    for i in range(n_pts):
        triple = np.array([p_plus[:, i].mean(), p_zero[:, i].mean(), p_minus[:, i].mean()])
        out[i] = _floor_and_normalize(triple, prob_floor)[1]
    return out
