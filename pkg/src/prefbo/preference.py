"""Three-outcome pairwise preference model with an indifference threshold.

A comparison of two candidates yields a label in {-1, 0, +1}: +1 means the
current (new) candidate is preferred, -1 the previous one, and 0 that the
noisy utility difference fell inside the threshold band [-gamma, +gamma].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

Array = np.ndarray

LABELS = (-1, 0, 1)
LOG_STABILIZER = 1e-5


@dataclass(frozen=True)
class LikelihoodParams:
    """Perceptual noise scale sigma (> 0) and indifference threshold gamma (>= 0)."""

    sigma: float = 0.04
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


def outcome_probabilities(
    delta_f: float | Array, params: LikelihoodParams
) -> tuple[Array, Array, Array]:
    """(P(+1), P(0), P(-1)) for a latent utility difference delta_f.

    Each candidate carries independent N(0, sigma^2) perceptual noise, so the
    perceived difference is delta_f + N(0, 2 sigma^2) thresholded at +-gamma.
    Vectorized over delta_f; the triple sums to one.
    """
    delta_f = np.asarray(delta_f, dtype=float)
    if not np.all(np.isfinite(delta_f)):
        raise ValueError("delta_f must be finite")
    scale = np.sqrt(2.0) * params.sigma
    g = params.gamma
    p_plus = ndtr((delta_f - g) / scale)
    p_minus = ndtr((-delta_f - g) / scale)
    p_zero = ndtr((g - delta_f) / scale) - ndtr((-g - delta_f) / scale)
    return p_plus, p_zero, p_minus


@dataclass(frozen=True)
class Comparison:
    """One preference observation: ordered config pair plus a label.

    Label +1 means x_curr is preferred over x_prev (the difference that enters
    the likelihood is f(x_curr) - f(x_prev)).
    """

    x_prev: Array
    x_curr: Array
    label: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_prev", np.asarray(self.x_prev, dtype=float))
        object.__setattr__(self, "x_curr", np.asarray(self.x_curr, dtype=float))
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")
        for x in (self.x_prev, self.x_curr):
            if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
                raise ValueError("configs must lie in the unit hypercube")


class PreferenceDataset:
    """Ordered comparisons over a deduplicated config list.

    Configs are keyed by exact coordinates; comparisons store indices into
    the config table so latent-utility vectors align positionally.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self._configs: list[Array] = []
        self._keys: dict[bytes, int] = {}
        self.pairs: list[tuple[int, int, int]] = []  # (prev_idx, curr_idx, label)

    def add_config(self, x: Array) -> int:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError("config dimension mismatch")
        key = x.tobytes()
        if key in self._keys:
            return self._keys[key]
        idx = len(self._configs)
        self._configs.append(x)
        self._keys[key] = idx
        return idx

    def add_comparison(self, prev_idx: int, curr_idx: int, label: int) -> None:
        n = len(self._configs)
        if not (0 <= prev_idx < n and 0 <= curr_idx < n):
            raise IndexError("comparison references unknown config")
        if label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")
        self.pairs.append((prev_idx, curr_idx, label))

    @classmethod
    def from_comparisons(cls, comparisons: list[Comparison]) -> "PreferenceDataset":
        if not comparisons:
            raise ValueError("need at least one comparison")
        ds = cls(dim=comparisons[0].x_prev.shape[0])
        for c in comparisons:
            i = ds.add_config(c.x_prev)
            j = ds.add_config(c.x_curr)
            ds.add_comparison(i, j, c.label)
        return ds

    @property
    def configs(self) -> Array:
        if not self._configs:
            return np.zeros((0, self.dim))
        return np.stack(self._configs)

    @property
    def comparisons(self) -> list[Comparison]:
        return [
            Comparison(self._configs[i], self._configs[j], r) for i, j, r in self.pairs
        ]

    def __len__(self) -> int:
        return len(self.pairs)

    def label_arrays(self) -> tuple[Array, Array, Array]:
        """(prev_idx, curr_idx, label) as integer arrays."""
        if not self.pairs:
            z = np.zeros(0, dtype=int)
            return z, z.copy(), z.copy()
        arr = np.asarray(self.pairs, dtype=int)
        return arr[:, 0], arr[:, 1], arr[:, 2]


def log_likelihood(dataset: PreferenceDataset, f_values: Array, params: LikelihoodParams) -> float:
    """Sum of log(P(label | delta_f) + eps) over the dataset's comparisons."""
    f_values = np.asarray(f_values, dtype=float).reshape(-1)
    if f_values.shape[0] != dataset.configs.shape[0]:
        raise ValueError("f_values must cover every config in the dataset")
    prev, curr, labels = dataset.label_arrays()
    if prev.size == 0:
        return 0.0
    delta = f_values[curr] - f_values[prev]
    p_plus, p_zero, p_minus = outcome_probabilities(delta, params)
    probs = np.where(labels == 1, p_plus, np.where(labels == 0, p_zero, p_minus))
    return float(np.sum(np.log(probs + LOG_STABILIZER)))


def sample_response_three(
    delta_f: float, params: LikelihoodParams, rng: np.random.Generator
) -> int:
    """Draw a three-outcome label by thresholding the noisy difference."""
    perceived = delta_f + rng.normal(0.0, np.sqrt(2.0) * params.sigma)
    if perceived > params.gamma:
        return 1
    if perceived < -params.gamma:
        return -1
    return 0


def sample_response_binary(
    delta_f: float, params: LikelihoodParams, rng: np.random.Generator
) -> int:
    """Binary oracle: in-band differences resolve to a uniform random +-1."""
    label = sample_response_three(delta_f, params, rng)
    if label == 0:
        return 1 if rng.random() < 0.5 else -1
    return label


def expected_indifference_ratio(
    utility, params: LikelihoodParams, n_pairs: int, rng: np.random.Generator
) -> float:
    """Expected fraction of indifferent outcomes over uniformly random pairs.

    Ground truth follows the noiseless convention used by the accuracy
    metrics: a pair is indifferent when |f(a) - f(b)| <= gamma on the true
    utility. This is the quantity the calibration tables report.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if params.gamma == 0.0:
        return 0.0
    a = rng.uniform(size=(n_pairs, utility.dim))
    b = rng.uniform(size=(n_pairs, utility.dim))
    delta = utility.eval(a) - utility.eval(b)
    return float(np.mean(np.abs(delta) <= params.gamma))
