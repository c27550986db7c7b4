"""Wanda-style sensitivities, channel importance and budgeted column selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .linalg import as_matrix


@dataclass(frozen=True)
class ChannelScores:
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise ValidationError("channel scores must be a vector")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValidationError("channel scores must be finite and nonnegative")
        object.__setattr__(self, "scores", s)

    @property
    def n(self):
        return self.scores.size


@dataclass(frozen=True)
class SubsetSelection:
    columns: tuple
    k: int
    gamma: float


def _check(w, x):
    w = as_matrix(w, "w")
    x = as_matrix(x, "x")
    if w.shape[1] != x.shape[1]:
        raise ShapeError(f"w has {w.shape[1]} columns but x has {x.shape[1]}")
    return w, x


def wanda_scores(w, x):
    """Element sensitivity ``|w_ij| * ||x_j||_2`` for calibration input ``x`` (L x n)."""
    w, x = _check(w, x)
    return np.abs(w) * np.linalg.norm(x, axis=0)


def channel_importance(w, x):
    return ChannelScores(wanda_scores(w, x).sum(axis=0))


def budget_count(n, gamma):
    """``floor(n * gamma)``, robust to products like ``0.29 * 100``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    return min(n, int(math.floor(n * gamma + 1e-9)))


def rank_columns(scores):
    """Column indices by descending score, lower index first on ties."""
    s = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(s.size), -s))


def select_subset(scores, gamma):
    if not isinstance(scores, ChannelScores):
        scores = ChannelScores(scores)
    k = budget_count(scores.n, gamma)
    cols = tuple(int(j) for j in rank_columns(scores.scores)[:k])
    return SubsetSelection(columns=cols, k=k, gamma=float(gamma))
