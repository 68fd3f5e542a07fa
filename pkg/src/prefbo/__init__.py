"""Preference-based Bayesian optimization with consecutive comparisons.

Core pieces: normalized synthetic benchmarks, a three-outcome preference
likelihood with an indifference threshold, a variational GP surrogate, an
information-gain acquisition over consecutive comparisons, cost-aware
strategies, evaluation metrics, an experiment harness, and a live session
service.
"""

__version__ = "0.1.0"
