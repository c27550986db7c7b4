from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from shelora import kernels


@pytest.mark.parametrize("n", [2, 3, 6, 7, 10])
def test_schedule_covers_every_pair_once(n):
    sched = kernels.round_robin_schedule(n)
    seen = []
    for rnd in sched:
        live = [tuple(p) for p in rnd if p[0] >= 0]
        flat = [i for p in live for i in p]
        assert len(flat) == len(set(flat))  # disjoint within a round
        seen.extend(live)
    assert sorted(seen) == list(itertools.combinations(range(n), 2))


def test_schedule_trivial_sizes():
    assert kernels.round_robin_schedule(0).size == 0
    assert kernels.round_robin_schedule(1).size == 0


@pytest.mark.parametrize("use_numba", [True, False])
def test_jacobi_orthogonalizes(rng, use_numba):
    a = rng.normal(size=(9, 6))
    rot, v, sweeps = kernels.jacobi_orthogonalize(a, use_numba=use_numba)
    assert sweeps >= 1
    np.testing.assert_allclose(a @ v, rot, atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(6), atol=1e-12)
    gram = rot.T @ rot
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-10 * np.abs(gram).max()


def test_jacobi_does_not_modify_input(rng):
    a = rng.normal(size=(5, 4))
    before = a.copy()
    kernels.jacobi_orthogonalize(a)
    np.testing.assert_array_equal(a, before)


def test_jacobi_paths_agree_on_full_rank(rng):
    a = rng.normal(size=(20, 12))
    r1, v1, _ = kernels.jacobi_orthogonalize(a, use_numba=True)
    r2, v2, _ = kernels.jacobi_orthogonalize(a, use_numba=False)
    n1 = np.sort(np.linalg.norm(r1, axis=0))
    n2 = np.sort(np.linalg.norm(r2, axis=0))
    np.testing.assert_allclose(n1, n2, rtol=1e-12)


def _kde_oracle(points, queries, h):
    out = []
    d = points.shape[1]
    norm = (2 * math.pi * h * h) ** (d / 2)
    for q in queries:
        s = sum(math.exp(-float(np.sum((q - p) ** 2)) / (2 * h * h)) for p in points)
        out.append(math.log(s / (len(points) * norm)))
    return np.array(out)


@pytest.mark.parametrize("use_numba", [True, False])
@pytest.mark.parametrize("dim", [1, 2])
def test_kde_matches_direct_sum(rng, use_numba, dim):
    pts = rng.normal(size=(40, dim))
    qs = rng.normal(size=(7, dim))
    got = kernels.kde_log_density(pts, qs, 0.3, use_numba=use_numba)
    np.testing.assert_allclose(got, _kde_oracle(pts, qs, 0.3), rtol=1e-10, atol=1e-12)


def test_kde_far_query_is_finite(rng):
    pts = rng.normal(size=(10, 1))
    got = kernels.kde_log_density(pts, np.array([[1e3]]), 0.2)
    assert np.isfinite(got).all()


@pytest.mark.parametrize("use_numba", [True, False])
def test_permuted_inner_products(rng, use_numba):
    q = rng.normal(size=(3, 8))
    g = rng.normal(size=(3, 8))
    perms = np.array([rng.permutation(8) for _ in range(5)])
    got = kernels.permuted_inner_products(q, g, perms, use_numba=use_numba)
    want = [np.sum(q * (g[:, p] - g)) for p in perms]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_backend_name():
    assert kernels.backend_name() in ("numba", "numpy")
