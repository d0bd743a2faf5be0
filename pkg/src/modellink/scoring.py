"""Proper scoring rules and the prediction-efficiency ratio."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateDenominator, ShapeError, UnsupportedRule
from .predictive import PredictiveDistribution

__all__ = ["Score", "score", "squared_error", "efficiency_ratio", "RULES"]

RULES = ("log", "brier")


@dataclass(frozen=True, eq=False)
class Score:
    """Mean score over a test set (lower is better) and the per-point values."""

    rule: str
    value: float
    values: np.ndarray = field(repr=False)


def _brier(pred: PredictiveDistribution, y: np.ndarray, X: np.ndarray) -> np.ndarray:
    if not pred.discrete:
        raise UnsupportedRule("the Brier score is only defined here for discrete families")
    support, table = pred.pmf_table(X)
    yi = y.astype(np.intp)
    inside = (y == np.round(y)) & (yi >= 0) & (yi < support.shape[0])
    p_obs = np.zeros(y.shape[0])
    p_obs[inside] = table[np.flatnonzero(inside), yi[inside]]
    return -p_obs + 0.5 * np.sum(table**2, axis=1)


def score(rule: str, predictive: PredictiveDistribution, y, X) -> Score:
    """Score ``predictive`` on observed ``(y, X)`` rows.

    ``log``: ``-log p(y|x)``.  ``brier``: ``-p(y|x) + 0.5 * sum_k p(k|x)^2``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, predictive.width)
    if X.shape[0] != y.shape[0]:
        raise ShapeError("y and X differ in length")
    if rule == "log":
        vals = -predictive.logpdf(y, X)
    elif rule == "brier":
        vals = _brier(predictive, y, X)
    else:
        raise UnsupportedRule(f"unknown rule {rule!r}; valid: {RULES}")
    value = float(np.mean(vals)) if vals.size else float("nan")
    return Score(rule, value, vals)


def squared_error(predictive: PredictiveDistribution, y, X) -> float:
    """Mean squared error of the predictive mean against held-out responses."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return float(np.mean((predictive.mean(X) - y) ** 2))


def efficiency_ratio(
    candidate: PredictiveDistribution,
    reference: PredictiveDistribution,
    truth: PredictiveDistribution,
    y,
    X,
    rule: str = "log",
) -> float:
    """Excess score of ``reference`` divided by excess score of ``candidate``.

    Excess is measured against ``truth`` on the same test rows, so values
    near one mean the candidate predicts as well as the reference.  A
    candidate that is the reference object itself scores exactly one.
    """
    if candidate is reference:
        return 1.0
    oracle = score(rule, truth, y, X).value
    ref = score(rule, reference, y, X).value - oracle
    cand = score(rule, candidate, y, X).value - oracle
    if cand < 1e-12:
        raise DegenerateDenominator(f"candidate excess score {cand:.3g} is not positive")
    return ref / cand
