"""Input checks shared by the estimator wrappers and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import ShapeError, ValidationError
from .graph import LinkageGraph
from .models import Dataset, Family, Prior

__all__ = ["check_learner_data", "check_priors", "check_assisted", "check_rows"]


def _as_2d(X, name: str) -> np.ndarray:
    try:
        return check_array(X, ensure_2d=False, ensure_min_samples=1, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from exc


def check_learner_data(X_list, y_list, g: LinkageGraph) -> list[Dataset]:
    """Turn per-learner ``(X, y)`` sequences into validated datasets."""
    if len(X_list) != g.M or len(y_list) != g.M:
        raise ShapeError(f"graph has {g.M} learners, got {len(X_list)} X and {len(y_list)} y blocks")
    out = []
    for m, (X, y) in enumerate(zip(X_list, y_list)):
        X = _as_2d(X, f"learner {m + 1} X")
        y = _as_2d(y, f"learner {m + 1} y").reshape(-1)
        out.append(Dataset(y, X))
    return out


def check_priors(priors, M: int) -> list:
    """One prior spec per learner: a single prior is broadcast to all."""
    if isinstance(priors, Prior):
        return [priors] * M
    priors = list(priors)
    if len(priors) != M:
        raise ShapeError(f"expected {M} prior entries, got {len(priors)}")
    return priors


def check_families(families, M: int) -> list[Family]:
    if isinstance(families, Family):
        return [families] * M
    families = list(families)
    if len(families) != M or not all(isinstance(f, Family) for f in families):
        raise ValidationError(f"expected {M} Family instances")
    return families


def check_assisted(assisted, M: int) -> int:
    if isinstance(assisted, bool) or not isinstance(assisted, (int, np.integer)):
        raise ValidationError(f"assisted must be an integer id, got {assisted!r}")
    if not 0 <= assisted < M:
        raise ValidationError(f"assisted learner {assisted} outside [0, {M})")
    return int(assisted)


def check_rows(X, width: int) -> np.ndarray:
    """Prediction rows of the expected width; zero rows are allowed."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, width) if X.size else np.zeros((0, width))
    if X.ndim != 2 or X.shape[1] != width:
        raise ShapeError(f"expected rows with {width} covariates, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("prediction rows contain non-finite values")
    return X
