"""Cost regimes, per-strategy iteration cost, and budget accounting.

Each iteration produces w_p new candidates and performs w_e pairwise
evaluations; the charge is c_p * w_p + c_e * w_e. Production is charged once
per unique produced config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

STANDARD = "standard"
CONSECUTIVE = "consecutive"
MULTIPLE = "multiple"


@dataclass(frozen=True)
class CostModel:
    """Production, evaluation, and (recorded-only) retrieval cost."""

    c_p: float = 1.0
    c_e: float = 1.0
    c_r: float = 0.0

    def __post_init__(self) -> None:
        if self.c_p < 0 or self.c_e < 0 or self.c_r < 0:
            raise ValueError("costs must be nonnegative")


@dataclass(frozen=True)
class Strategy:
    """Comparison-scheduling strategy: standard, consecutive, or multiple(L)."""

    kind: str
    L: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (STANDARD, CONSECUTIVE, MULTIPLE):
            raise ValueError(f"unknown strategy kind '{self.kind}'")
        if self.kind == MULTIPLE and self.L < 2:
            raise ValueError("multiple strategy requires L >= 2")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Parse 'standard', 'consecutive', or 'multiple:L'."""
        text = text.strip().lower()
        if text.startswith(MULTIPLE):
            _, _, arg = text.partition(":")
            return cls(MULTIPLE, L=int(arg or 5))
        return cls(text)

    def weights(self) -> tuple[int, int]:
        """(w_p, w_e): productions and evaluations per iteration."""
        if self.kind == STANDARD:
            return 2, 1
        if self.kind == CONSECUTIVE:
            return 1, 1
        return 1, self.L

    def label(self) -> str:
        return f"{MULTIPLE}:{self.L}" if self.kind == MULTIPLE else self.kind


def iteration_cost(strategy: Strategy, cost_model: CostModel) -> float:
    w_p, w_e = strategy.weights()
    return cost_model.c_p * w_p + cost_model.c_e * w_e


def comparisons_for_step(strategy: Strategy, history_length: int) -> tuple[int, list[int]]:
    """(number of new configs, reference indices into the produced history).

    Consecutive references the latest config; multiple(L) the last min(L, t);
    standard proposes two fresh configs compared against each other (no
    history reference).
    """
    t = history_length
    if t < 1:
        raise ValueError("no history; use the initial design first")
    if strategy.kind == STANDARD:
        return 2, []
    if strategy.kind == CONSECUTIVE:
        return 1, [t - 1]
    n_refs = min(strategy.L, t)
    return 1, [t - 1 - k for k in range(n_refs)]


class BudgetExhausted(Exception):
    """Signal (not a failure): the next charge would exceed the budget."""


@dataclass
class CostLedger:
    """Running account of charges against a budget.

    Productions are keyed by the exact bytes of the config coordinates so a
    re-produced config is never charged twice. Retrievals of non-latest
    references are counted but never charged (no in-scope strategy pays c_r).
    """

    budget: float
    spent: float = 0.0
    entries: list[dict] = field(default_factory=list)
    retrieval_events: int = 0
    _produced_keys: set[bytes] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not (self.budget > 0):
            raise ValueError("budget must be positive")

    def try_charge(
        self,
        strategy: Strategy,
        cost_model: CostModel,
        produced: tuple[Array, ...] | None = None,
    ) -> bool:
        """Charge one iteration; False (no mutation) if it would bust the budget."""
        w_p, w_e = strategy.weights()
        if produced is None:
            n_new = w_p
            keys: list[bytes] = []
        else:
            keys = [np.asarray(x, dtype=float).tobytes() for x in produced]
            n_new = sum(1 for k in keys if k not in self._produced_keys)
        charge = cost_model.c_p * n_new + cost_model.c_e * w_e
        if self.spent + charge > self.budget + 1e-12:
            return False
        self.spent += charge
        self._produced_keys.update(keys)
        self.entries.append(
            {"strategy": strategy.label(), "charge": charge, "cumulative": self.spent}
        )
        return True

    def charge(self, strategy: Strategy, cost_model: CostModel, produced=None) -> None:
        if not self.try_charge(strategy, cost_model, produced):
            raise BudgetExhausted(
                f"charge would exceed budget ({self.spent} spent of {self.budget})"
            )

    def log_retrieval(self, count: int = 1) -> None:
        """Record would-be retrievals of stored candidates (never charged)."""
        self.retrieval_events += count

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "spent": self.spent,
            "entries": self.entries,
            "retrieval_events": self.retrieval_events,
        }
