"""Synthetic utility benchmarks, normalization to [0, 1], and space-filling designs.

All optimization-facing code works in the unit hypercube; native coordinates
appear only here (benchmark formulas) and in the live session service.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

Array = np.ndarray


@dataclass(frozen=True)
class BenchmarkFunction:
    """A raw test function in its native coordinates.

    ``raw_eval`` takes an (n, dim) array of native-space points and returns an
    (n,) array. ``sense`` is the orientation of the raw form ("min" for the
    classical test functions). ``optima`` lists catalogued global optimizers
    in native coordinates; they are force-included when estimating extremes.
    """

    name: str
    dim: int
    bounds: tuple[tuple[float, float], ...]
    raw_eval: Callable[[Array], Array]
    sense: str = "min"
    optima: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if len(self.bounds) != self.dim:
            raise ValueError("bounds length must equal dim")
        for low, high in self.bounds:
            if not (np.isfinite(low) and np.isfinite(high) and low < high):
                raise ValueError(f"invalid bounds for {self.name}: ({low}, {high})")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")

    @property
    def lows(self) -> Array:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def highs(self) -> Array:
        return np.array([b[1] for b in self.bounds], dtype=float)

    def to_native(self, u: Array) -> Array:
        """Map unit-cube points (n, dim) to native coordinates."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return self.lows + u * (self.highs - self.lows)

    def to_unit(self, x: Array) -> Array:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.lows) / (self.highs - self.lows)


def evaluate_raw(fn: BenchmarkFunction, x: Array) -> Array:
    """Evaluate the textbook formula at native-space points, with validation."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != fn.dim:
        raise ValueError(f"{fn.name} expects dim {fn.dim}, got {x.shape[1]}")
    if np.any(x < fn.lows - 1e-12) or np.any(x > fn.highs + 1e-12):
        raise ValueError(f"point outside {fn.name} bounds")
    return np.asarray(fn.raw_eval(x), dtype=float)


@dataclass(frozen=True)
class NormalizedUtility:
    """Maximization-oriented utility on the unit cube with range [0, 1].

    Raw minima map to utility 1. ``min_est``/``max_est`` are the estimated raw
    extremes used for the affine rescale; the catalogued optimizer is included
    in the estimation so utility is exactly 1 there.
    """

    base: BenchmarkFunction
    min_est: float
    max_est: float

    def eval(self, u: Array) -> Array:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        raw = evaluate_raw(self.base, self.base.to_native(u))
        span = self.max_est - self.min_est
        if self.base.sense == "min":
            return (self.max_est - raw) / span
        return (raw - self.min_est) / span

    @property
    def dim(self) -> int:
        return self.base.dim

    def __call__(self, u: Array) -> Array:
        return self.eval(u)


def _dense_grid(fn: BenchmarkFunction, per_axis: int) -> Array:
    axes = [np.linspace(low, high, per_axis) for low, high in fn.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sobol_points(n: int, dim: int, seed: int | None = None) -> Array:
    """First n points of a Sobol sequence in the unit cube.

    Unseeded calls use the unscrambled sequence, which is fully deterministic.
    """
    import warnings

    sampler = qmc.Sobol(d=dim, scramble=seed is not None, seed=seed)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="The balance properties of Sobol")
        return sampler.random(n)


def normalize(fn: BenchmarkFunction, grid_resolution: int | None = None) -> NormalizedUtility:
    """Estimate raw extremes and return the [0, 1]-rescaled utility.

    Dense grid for dim <= 3 (1001 per axis for dim <= 2, 101 for dim 3);
    2^16 Sobol points for higher dimensions. Catalogued optima are appended
    so the rescale is exact at the optimum.
    """
    if grid_resolution is not None and grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    if fn.dim <= 2:
        pts = _dense_grid(fn, grid_resolution or 1001)
    elif fn.dim == 3:
        pts = _dense_grid(fn, grid_resolution or 101)
    else:
        pts = fn.to_native(sobol_points(2**16, fn.dim))
    if fn.optima:
        pts = np.vstack([pts, np.array(fn.optima, dtype=float)])
    vals = evaluate_raw(fn, pts)
    min_est, max_est = float(vals.min()), float(vals.max())
    if max_est - min_est <= 0.0:
        raise ValueError(f"degenerate function {fn.name}: constant over the sample")
    return NormalizedUtility(base=fn, min_est=min_est, max_est=max_est)


def latin_hypercube(n: int, dim: int, seed: int) -> Array:
    """n-point Latin hypercube in the unit cube, one point per stratum per axis."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sampler = qmc.LatinHypercube(d=dim, seed=seed)
    return sampler.random(n)


# --- benchmark formulas (inputs (n, d) native, outputs (n,)) ---


def _branin(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    a, b, c = 1.0, 5.1 / (4 * np.pi**2), 5.0 / np.pi
    r, s, t = 6.0, 10.0, 1.0 / (8 * np.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


def _six_hump(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


def _bohachevsky(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    return x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1) - 0.4 * np.cos(4 * np.pi * x2) + 0.7


def _levy13(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    return (
        np.sin(3 * np.pi * x1) ** 2
        + (x1 - 1) ** 2 * (1 + np.sin(3 * np.pi * x2) ** 2)
        + (x2 - 1) ** 2 * (1 + np.sin(2 * np.pi * x2) ** 2)
    )


def _bukin6(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    return 100 * np.sqrt(np.abs(x2 - 0.01 * x1**2)) + 0.01 * np.abs(x1 + 10)


def _cross_in_tray(x: Array) -> Array:
    x1, x2 = x[:, 0], x[:, 1]
    inner = np.abs(100 - np.sqrt(x1**2 + x2**2) / np.pi)
    return -0.0001 * (np.abs(np.sin(x1) * np.sin(x2) * np.exp(inner)) + 1) ** 0.1


def _ackley(x: Array) -> Array:
    a, b, c = 20.0, 0.2, 2 * np.pi
    d = x.shape[1]
    s1 = np.sqrt(np.sum(x**2, axis=1) / d)
    s2 = np.sum(np.cos(c * x), axis=1) / d
    return -a * np.exp(-b * s1) - np.exp(s2) + a + np.e


def _alpine1(x: Array) -> Array:
    return np.sum(np.abs(x * np.sin(x) + 0.1 * x), axis=1)


def _levy(x: Array) -> Array:
    w = 1 + (x - 1) / 4
    head = np.sin(np.pi * w[:, 0]) ** 2
    mid = np.sum((w[:, :-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:, :-1] + 1) ** 2), axis=1)
    tail = (w[:, -1] - 1) ** 2 * (1 + np.sin(2 * np.pi * w[:, -1]) ** 2)
    return head + mid + tail


_CROSS_OPT = 1.349406685353340

_CATALOG: dict[str, BenchmarkFunction] = {}


def _register(fn: BenchmarkFunction, *aliases: str) -> None:
    for key in (fn.name, *aliases):
        _CATALOG[key.lower()] = fn


_register(
    BenchmarkFunction(
        name="branin",
        dim=2,
        bounds=((-5.0, 10.0), (0.0, 15.0)),
        raw_eval=_branin,
        optima=((-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)),
    )
)
_register(
    BenchmarkFunction(
        name="sixhump",
        dim=2,
        bounds=((-3.0, 3.0), (-2.0, 2.0)),
        raw_eval=_six_hump,
        optima=((0.0898, -0.7126), (-0.0898, 0.7126)),
    ),
    "six-hump",
    "sixhumpcamel",
)
_register(
    BenchmarkFunction(
        name="bohachevsky",
        dim=2,
        bounds=((-100.0, 100.0), (-100.0, 100.0)),
        raw_eval=_bohachevsky,
        optima=((0.0, 0.0),),
    )
)
_register(
    BenchmarkFunction(
        name="levy13",
        dim=2,
        bounds=((-10.0, 10.0), (-10.0, 10.0)),
        raw_eval=_levy13,
        optima=((1.0, 1.0),),
    )
)
_register(
    BenchmarkFunction(
        name="bukin6",
        dim=2,
        bounds=((-15.0, -5.0), (-3.0, 3.0)),
        raw_eval=_bukin6,
        optima=((-10.0, 1.0),),
    )
)
_register(
    BenchmarkFunction(
        name="crossintray",
        dim=2,
        bounds=((-10.0, 10.0), (-10.0, 10.0)),
        raw_eval=_cross_in_tray,
        optima=tuple(
            (sx * _CROSS_OPT, sy * _CROSS_OPT) for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)
        ),
    ),
    "cross-tray",
    "crosstray",
)
# Restricted Ackley domain; the full [-32.768, 32.768] square is almost
# entirely flat shelf, which makes the normalized utility degenerate for
# preference feedback.
_register(
    BenchmarkFunction(
        name="ackley",
        dim=2,
        bounds=((-15.0, 15.0), (-15.0, 15.0)),
        raw_eval=_ackley,
        optima=((0.0, 0.0),),
    )
)
_register(
    BenchmarkFunction(
        name="alpine6",
        dim=6,
        bounds=tuple(((-10.0, 10.0),) * 6),
        raw_eval=_alpine1,
        optima=((0.0,) * 6,),
    ),
    "alpine1-6d",
)
_register(
    BenchmarkFunction(
        name="levy6",
        dim=6,
        bounds=tuple(((-10.0, 10.0),) * 6),
        raw_eval=_levy,
        optima=((1.0,) * 6,),
    ),
    "levy-6d",
)

_NORMALIZED_CACHE: dict[str, NormalizedUtility] = {}


def register_benchmark(fn: BenchmarkFunction, *aliases: str) -> None:
    """Registration hook for additional test functions."""
    _register(fn, *aliases)


def get_benchmark(name: str) -> BenchmarkFunction:
    key = name.lower()
    if key not in _CATALOG:
        raise KeyError(f"unknown benchmark '{name}' (have: {sorted(set(f.name for f in _CATALOG.values()))})")
    return _CATALOG[key]


def get_utility(name: str) -> NormalizedUtility:
    """Normalized utility for a catalogued benchmark, cached per name."""
    fn = get_benchmark(name)
    if fn.name not in _NORMALIZED_CACHE:
        _NORMALIZED_CACHE[fn.name] = normalize(fn)
    return _NORMALIZED_CACHE[fn.name]


def benchmark_names() -> list[str]:
    return sorted(set(f.name for f in _CATALOG.values()))
