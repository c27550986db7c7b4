"""Sequential model-based search for the list-mixing coefficients.

The objective only depends on ``(a, b)`` through the column set it selects,
so candidates are the lattice points ``(i/lam, j/lam)`` of the simplex,
de-duplicated by the set they produce.  A Gaussian-process surrogate with
expected improvement decides which untried set to score next.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .negotiation import objective_score, select_mixed

LENGTH_SCALE = 0.25
JITTER = 1e-6
XI = 0.01


@dataclass
class SearchResult:
    a: float
    b: float
    c: float
    score: float
    history: list = field(default_factory=list)

    @property
    def coefficients(self):
        return (self.a, self.b, self.c)


def _kernel(x1, x2):
    d = x1[:, None, :] - x2[None, :, :]
    return np.exp(-0.5 * np.einsum("ijk,ijk->ij", d, d) / LENGTH_SCALE**2)


def _posterior(xs, ys, cand):
    mu0, sd0 = ys.mean(), ys.std()
    if sd0 < 1e-12:
        return np.full(len(cand), mu0), np.full(len(cand), 1e-9)
    z = (ys - mu0) / sd0
    k = _kernel(xs, xs) + JITTER * np.eye(len(xs))
    chol = np.linalg.cholesky(k)
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, z))
    ks = _kernel(cand, xs)
    mean = ks @ alpha
    v = np.linalg.solve(chol, ks.T)
    var = np.clip(1.0 - np.einsum("ij,ij->j", v, v), 1e-12, None)
    return mu0 + sd0 * mean, sd0 * np.sqrt(var)


def expected_improvement(mean, std, best, xi=XI):
    gap = mean - best - xi
    z = gap / std
    return gap * norm.cdf(z) + std * norm.pdf(z)


def candidate_classes(lam, res, clients, lists, seed=0):
    """Representatives ``(a, b)`` of each distinct selection, centre first."""
    pts = [(i / lam, j / lam) for i in range(lam + 1) for j in range(lam + 1 - i)]
    order = np.random.default_rng(seed).permutation(len(pts))
    pts = [(1.0 / 3.0, 1.0 / 3.0)] + [pts[i] for i in order]
    seen = {}
    for a, b in pts:
        sel = frozenset(select_mixed(a, b, lam, res, clients, lists))
        seen.setdefault(sel, (a, b))
    return [(ab, sel) for sel, ab in seen.items()]


def search_coefficients(lam, res, clients, lists, bids, n_opt=50, seed=0):
    classes = candidate_classes(lam, res, clients, lists, seed)
    base = set(res)
    pts = np.array([ab for ab, _ in classes], dtype=np.float64)
    scores = np.full(len(classes), np.nan)
    history = []
    nxt = 0
    for _ in range(max(1, int(n_opt))):
        sel = classes[nxt][1]
        scores[nxt] = objective_score(base | sel, bids)
        history.append((float(pts[nxt, 0]), float(pts[nxt, 1]), float(scores[nxt])))
        todo = np.flatnonzero(np.isnan(scores))
        if todo.size == 0:
            break
        done = np.flatnonzero(~np.isnan(scores))
        mean, std = _posterior(pts[done], scores[done], pts[todo])
        ei = expected_improvement(mean, std, scores[done].max())
        nxt = int(todo[int(np.argmax(ei))])
    best = int(np.nanargmax(scores))
    a, b = float(pts[best, 0]), float(pts[best, 1])
    return SearchResult(a, b, max(0.0, 1.0 - a - b), float(scores[best]), history)


def optimize_coefficients(lam, res, clients, lists, bids, n_opt=50, seed=0):
    """Best ``(a, b, c)`` with ``a + b + c = 1`` found within ``n_opt`` evaluations."""
    return search_coefficients(lam, res, clients, lists, bids, n_opt, seed).coefficients
