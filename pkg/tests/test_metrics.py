from __future__ import annotations

import math

import numpy as np
import pytest

from shelora.errors import ShapeError, ValidationError
from shelora.metrics import (
    BoundInputs,
    crlb_bound,
    hoeffding_variance,
    joint_permutation_variance,
    kde_mutual_info,
    leakage_curve,
    permutation_noise_check,
    planted_matrix,
    strategy_order,
)
from shelora.sensitivity import channel_importance

# ---------------------------------------------------------------------------
# mutual information
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mi_independent(seed):
    r = np.random.default_rng(seed)
    est = kde_mutual_info(r.normal(size=10_000), r.normal(size=10_000), seed=seed)
    assert abs(est.value) < 0.05
    assert est.sample_count == 10_000 and est.bandwidth == 0.2 and est.units == "bits"


def test_mi_identical():
    x = np.random.default_rng(0).normal(size=4000)
    assert kde_mutual_info(x, x).value > 1.0


def test_mi_constant():
    x = np.random.default_rng(0).normal(size=4000)
    assert abs(kde_mutual_info(x, np.zeros_like(x)).value) < 1e-9


def test_mi_symmetric(rng):
    x = rng.normal(size=3000)
    y = x + rng.normal(size=3000)
    assert abs(kde_mutual_info(x, y, seed=4).value - kde_mutual_info(y, x, seed=4).value) < 1e-9


def test_mi_units_and_cap(rng):
    x = rng.normal(size=500)
    y = x + 0.5 * rng.normal(size=500)
    bits = kde_mutual_info(x, y, cap=200)
    nats = kde_mutual_info(x, y, cap=200, units="nats")
    assert bits.sample_count == 200
    assert bits.value == pytest.approx(nats.value / math.log(2), rel=1e-12)


def test_mi_errors():
    with pytest.raises(ValidationError):
        kde_mutual_info([1.0], [1.0])
    with pytest.raises(ShapeError):
        kde_mutual_info([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        kde_mutual_info([1.0, np.nan], [1.0, 2.0])
    with pytest.raises(ValidationError):
        kde_mutual_info([1.0, 2.0], [1.0, 2.0], units="dits")


# ---------------------------------------------------------------------------
# leakage curves
# ---------------------------------------------------------------------------


def test_strategy_order():
    s = np.array([0.5, 3.0, 1.0, 3.0])
    assert list(strategy_order(s, "max")) == [1, 3, 2, 0]
    assert list(strategy_order(s, "Min")) == [0, 2, 1, 3]
    assert sorted(strategy_order(s, "random", seed=1)) == [0, 1, 2, 3]
    with pytest.raises(ValidationError):
        strategy_order(s, "median")


def test_leakage_curve_endpoints():
    w = planted_matrix(16, 32, 4, seed=0)
    scores = channel_importance(w, np.eye(32))
    curve = leakage_curve(w, scores, "max", [0.0, 0.25, 0.5, 1.0])
    values = [v for _, v in curve]
    assert [g for g, _ in curve] == [0.0, 0.25, 0.5, 1.0]
    assert values[0] == max(values)
    assert abs(values[-1]) < 1e-9
    with pytest.raises(ValidationError):
        leakage_curve(w, scores, "max", [0.5, 0.25])


def _at_budget(seed, strategy, heavy=5, cols=64):
    w = planted_matrix(32, cols, heavy, seed=seed)
    scores = channel_importance(w, np.eye(cols))
    return leakage_curve(w, scores, strategy, [heavy / cols], seed=seed)[0][1]


def test_planted_ordering():
    hits = 0
    for seed in range(6):
        mx, rd, mn = (_at_budget(seed, s) for s in ("max", "random", "min"))
        hits += mx < rd < mn
    assert hits >= 5


def test_max_curve_monotone_median():
    gammas = [0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0]
    curves = []
    for seed in range(20):
        w = planted_matrix(16, 32, 4, seed=seed)
        scores = channel_importance(w, np.eye(32))
        curves.append([v for _, v in leakage_curve(w, scores, "max", gammas, seed=seed)])
    med = np.median(np.array(curves), axis=0)
    assert np.all(np.diff(med) <= 1e-9)


# ---------------------------------------------------------------------------
# Cramer-Rao bound
# ---------------------------------------------------------------------------


def test_crlb_examples():
    assert abs(crlb_bound(BoundInputs(2, 10, 0.5, 1, 1, 0)) - 0.8) < 1e-12
    assert crlb_bound(BoundInputs(2, 10, 1.0, 1, 1, 0.5)) == pytest.approx(4 / 0.5)
    assert crlb_bound(BoundInputs(2, 10, 0.5, 1, 0, 0)) == math.inf
    with pytest.raises(ValidationError):
        BoundInputs(2, 10, 1.5, 1, 1)
    with pytest.raises(ValidationError):
        BoundInputs(-1, 10, 0.5, 1, 1)


def test_crlb_monotone():
    grid = np.linspace(0.0, 1.0, 11)
    for lam in (0.0, 0.3):
        by_gamma = [crlb_bound(BoundInputs(3, 20, g, 0.7, 2.0, lam)) for g in grid]
        assert all(b >= a for a, b in zip(by_gamma, by_gamma[1:]))
        by_s2 = [crlb_bound(BoundInputs(3, 20, 0.3, s, 2.0, lam)) for s in np.linspace(0.1, 5, 11)]
        assert all(b >= a for a, b in zip(by_s2, by_s2[1:]))
        by_grad = [crlb_bound(BoundInputs(3, 20, 0.3, 0.7, q, lam)) for q in np.linspace(0.1, 5, 11)]
        assert all(b <= a for a, b in zip(by_grad, by_grad[1:]))


# ---------------------------------------------------------------------------
# permutation noise
# ---------------------------------------------------------------------------


def test_permutation_constant_rows():
    g = np.repeat(np.arange(3.0)[:, None], 10, axis=1)
    q = np.random.default_rng(0).normal(size=(3, 10))
    res = permutation_noise_check(g, q, 200)
    assert res.analytic_var == 0 and not res.samples.any()
    assert res.relative_error == 0.0


def test_permutation_small_matches_joint_variance():
    # one permutation is shared by all rows, so cross-row terms matter at n=64
    g = np.random.default_rng(3).normal(size=(4, 64))
    res = permutation_noise_check(g, g, 10_000, seed=1)
    assert abs(res.empirical_var - joint_permutation_variance(g, g)) < 0.05 * joint_permutation_variance(g, g)


def test_joint_variance_reduces_to_rowwise_for_one_row(rng):
    g, q = rng.normal(size=(1, 30)), rng.normal(size=(1, 30))
    assert joint_permutation_variance(g, q) == pytest.approx(hoeffding_variance(g, q))


def test_analytic_variance_centering(rng):
    g, q = rng.normal(size=(3, 20)), rng.normal(size=(3, 20))
    base = hoeffding_variance(g, q)
    shift = rng.normal(size=(3, 1)) * 10
    assert hoeffding_variance(g + shift, q) == pytest.approx(base, rel=1e-10)
    assert hoeffding_variance(g, q - shift) == pytest.approx(base, rel=1e-10)


def test_permutation_gaussian_large_n():
    g = np.random.default_rng(11).normal(size=(4, 1024))
    res = permutation_noise_check(g, g, 10_000, seed=2)
    assert res.relative_error < 0.05
    assert abs(res.skewness) < 0.1 and abs(res.excess_kurtosis) < 0.2


def test_permutation_errors(rng):
    with pytest.raises(ValidationError):
        permutation_noise_check(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)), 10)
    with pytest.raises(ShapeError):
        permutation_noise_check(rng.normal(size=(2, 5)), rng.normal(size=(3, 5)), 10)
