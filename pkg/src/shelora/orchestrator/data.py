"""Toy teacher-student regression task and non-IID client partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class ToyTask:
    """``y = (W0 + D) x`` with a frozen ``W0`` and a low-rank teacher ``D``."""

    w0: np.ndarray
    teacher: np.ndarray
    x: np.ndarray
    y: np.ndarray
    clusters: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def make_toy_task(m, n, n_samples, n_test, n_clusters=10, teacher_rank=4, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_clusters, n))
    w0 = rng.normal(scale=1.0 / np.sqrt(n), size=(m, n))
    u = rng.normal(size=(m, teacher_rank))
    # teacher rows mix the cluster centres so the data excites them
    v = rng.normal(size=(teacher_rank, n_clusters)) @ centers / np.sqrt(n_clusters)
    teacher = u @ v / np.sqrt(m * n)

    def draw(count):
        labels = np.arange(count) % n_clusters
        rng.shuffle(labels)
        x = (centers[labels] + 0.5 * rng.normal(size=(count, n))) / np.sqrt(n)
        return x, x @ (w0 + teacher).T, labels

    x, y, labels = draw(n_samples)
    x_test, y_test, _ = draw(n_test)
    return ToyTask(w0, teacher, x, y, labels, x_test, y_test)


def _apportion(total, weights):
    """Largest-remainder integer split of ``total`` by ``weights``."""
    raw = total * np.asarray(weights, dtype=np.float64)
    base = np.floor(raw).astype(np.int64)
    left = total - int(base.sum())
    if left > 0:
        order = np.lexsort((np.arange(raw.size), -(raw - base)))
        base[order[:left]] += 1
    return base


def partition_noniid(n_samples, n_clients, rho, seed=0, clusters=None, n_clusters=10):
    """Split sample ids among clients with Dirichlet(``rho``) cluster mixes.

    ``clusters`` gives each sample's feature cluster (default: balanced
    round-robin labels).  Clients get near-equal sample counts; each draws
    its cluster proportions and takes samples cluster by cluster, topping up
    from the fullest remaining clusters once a preferred one runs dry.
    The result is exhaustive and disjoint.
    """
    if rho <= 0:
        raise ValidationError("rho must be positive")
    if n_clients < 1:
        raise ValidationError("need at least one client")
    if n_clients > n_samples:
        raise ValidationError(f"{n_clients} clients but only {n_samples} samples")
    rng = np.random.default_rng(seed)
    if clusters is None:
        clusters = np.arange(n_samples) % n_clusters
    clusters = np.asarray(clusters)
    if clusters.size != n_samples:
        raise ValidationError("cluster labels must cover every sample")
    ids = np.unique(clusters)
    pools = [list(rng.permutation(np.flatnonzero(clusters == c))) for c in ids]
    sizes = _apportion(n_samples, np.full(n_clients, 1.0 / n_clients))
    out = []
    for size in sizes:
        want = _apportion(int(size), rng.dirichlet(np.full(ids.size, float(rho))))
        mine = []
        for pool, w in zip(pools, want):
            take = min(int(w), len(pool))
            mine.extend(pool[:take])
            del pool[:take]
        while len(mine) < size:
            pool = max(pools, key=len)
            take = min(int(size) - len(mine), len(pool))
            mine.extend(pool[:take])
            del pool[:take]
        out.append(np.sort(np.array(mine, dtype=np.int64)))
    return out


def cluster_shares(part, clusters, n_clusters):
    """Fraction of each client's samples in each cluster."""
    clusters = np.asarray(clusters)
    return np.array([np.bincount(clusters[p], minlength=n_clusters) / max(len(p), 1) for p in part])
