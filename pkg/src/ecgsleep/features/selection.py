"""Recursive feature elimination down to a fixed feature budget.

Each round fits the importance backend (a random forest, Gini
importance), drops the lowest-importance 10% of the surviving features,
and stops at exactly the target count. Deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import StratifiedKFold, cross_val_score

DEFAULT_TARGET = 30
DROP_FRACTION = 0.1


@dataclass(frozen=True)
class RfeSelection:
    kept_names: tuple[str, ...]
    elimination_trace: tuple[tuple[int, tuple[str, ...], float], ...]


def rfe_select(
    X,
    y,
    feature_names,
    target_k: int = DEFAULT_TARGET,
    seed: int = 0,
    drop_fraction: float = DROP_FRACTION,
    n_estimators: int = 100,
    trace_cv_folds: int = 3,
) -> RfeSelection:
    """Eliminate features down to exactly ``target_k``.

    Ties in importance break deterministically by column order. The
    trace records (round, dropped_names, cv_score) where cv_score is the
    backend's stratified CV accuracy on the surviving features.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    feature_names = tuple(feature_names)
    if X.shape[1] != len(feature_names):
        raise ValueError("feature_names length must match X columns")
    if X.shape[0] < 50:
        raise ValueError(f"need at least 50 training vectors, have {X.shape[0]}")
    if np.isnan(X).any():
        raise ValueError("X contains NaN; impute before selection")
    if target_k >= len(feature_names):
        raise ValueError(
            f"target_k ({target_k}) must be below the feature count ({len(feature_names)})"
        )

    active = list(range(len(feature_names)))
    trace = []
    round_no = 0
    while len(active) > target_k:
        round_no += 1
        rf = RandomForestClassifier(n_estimators=n_estimators, random_state=seed)
        rf.fit(X[:, active], y)
        importances = rf.feature_importances_
        score = _cv_score(X[:, active], y, seed, n_estimators, trace_cv_folds)

        n_drop = min(
            max(1, int(drop_fraction * len(active))), len(active) - target_k
        )
        # lexsort: primary key importance, secondary key column order
        order = np.lexsort((np.arange(len(active)), importances))
        drop_positions = set(order[:n_drop])
        dropped = tuple(
            feature_names[active[p]] for p in sorted(drop_positions)
        )
        active = [a for p, a in enumerate(active) if p not in drop_positions]
        trace.append((round_no, dropped, score))

    return RfeSelection(
        kept_names=tuple(feature_names[a] for a in active),
        elimination_trace=tuple(trace),
    )


def _cv_score(X, y, seed, n_estimators, folds) -> float:
    if folds < 2:
        return float("nan")
    cv = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    rf = RandomForestClassifier(n_estimators=n_estimators, random_state=seed)
    return float(np.mean(cross_val_score(rf, X, y, cv=cv)))


class RfeSelector(BaseEstimator, TransformerMixin):
    """sklearn-style wrapper around :func:`rfe_select`."""

    def __init__(self, target_k: int = DEFAULT_TARGET, seed: int = 0,
                 drop_fraction: float = DROP_FRACTION, feature_names=None):
        self.target_k = target_k
        self.seed = seed
        self.drop_fraction = drop_fraction
        self.feature_names = feature_names

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        names = (
            tuple(self.feature_names)
            if self.feature_names is not None
            else tuple(f"f{i}" for i in range(X.shape[1]))
        )
        self.selection_ = rfe_select(
            X, y, names, target_k=self.target_k, seed=self.seed,
            drop_fraction=self.drop_fraction,
        )
        kept = set(self.selection_.kept_names)
        self.support_ = np.array([n in kept for n in names])
        return self

    def transform(self, X):
        if not hasattr(self, "support_"):
            raise RuntimeError("selector not fitted")
        return np.asarray(X)[:, self.support_]

    def get_support(self):
        return self.support_
