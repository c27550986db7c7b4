"""Privacy-leakage measurements.

* KDE mutual information between a weight matrix and its partially
  zeroed copy, plus leakage curves under Max/Min/Random column selection.
* A Bayesian Cramer-Rao lower bound on reconstruction error.
* A Monte Carlo check that column-permutation noise behaves like Gaussian
  noise with the combinatorial (Hoeffding) variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .errors import ShapeError, ValidationError
from .sensitivity import ChannelScores, budget_count, rank_columns

SAMPLE_CAP = 10_000
DEFAULT_BANDWIDTH = 0.2


@dataclass(frozen=True)
class MiEstimate:
    value: float
    sample_count: int
    bandwidth: float
    units: str = "bits"


def kde_mutual_info(x, y, bandwidth=DEFAULT_BANDWIDTH, cap=SAMPLE_CAP, seed=0, units="bits"):
    """Plug-in MI estimate from Gaussian KDEs of the marginals and the joint.

    Inputs are flattened and treated as paired samples.  At most ``cap``
    pairs are used, drawn without replacement under ``seed``.  The density
    estimates are evaluated on the same points they are fitted on.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"paired samples differ in length: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValidationError("need at least two samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("samples must be finite")
    if units not in ("bits", "nats"):
        raise ValidationError("units must be 'bits' or 'nats'")
    n = x.size
    take = min(cap, n)
    idx = np.random.default_rng(seed).choice(n, take, replace=False)
    xs, ys = x[idx, None], y[idx, None]
    xy = np.hstack([xs, ys])
    log_px = kernels.kde_log_density(xs, xs, bandwidth)
    log_py = kernels.kde_log_density(ys, ys, bandwidth)
    log_pxy = kernels.kde_log_density(xy, xy, bandwidth)
    nats = float(np.mean(log_pxy - log_px - log_py))
    value = nats / math.log(2.0) if units == "bits" else nats
    return MiEstimate(value, take, float(bandwidth), units)


STRATEGIES = ("max", "min", "random")


def strategy_order(scores, strategy, seed=0):
    s = scores.scores if isinstance(scores, ChannelScores) else np.asarray(scores, dtype=np.float64)
    strategy = strategy.lower()
    if strategy == "max":
        return rank_columns(s)
    if strategy == "min":
        return np.lexsort((np.arange(s.size), s))
    if strategy == "random":
        return np.random.default_rng(seed).permutation(s.size)
    raise ValidationError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def planted_matrix(rows, cols, heavy, seed=0, scale=6.0):
    """Gaussian matrix (sd 0.3) with ``heavy`` random columns scaled by ``scale``."""
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.3, size=(rows, cols))
    w[:, rng.choice(cols, heavy, replace=False)] *= scale
    return w


def leakage_curve(w, scores, strategy, gammas, seed=0, bandwidth=DEFAULT_BANDWIDTH, cap=SAMPLE_CAP):
    """MI between ``w`` and ``w`` with the strategy's first ``floor(n*gamma)``
    columns zeroed, for each ``gamma``."""
    w = np.asarray(w, dtype=np.float64)
    gammas = [float(g) for g in gammas]
    if any(g < 0 or g > 1 for g in gammas) or gammas != sorted(gammas):
        raise ValidationError("gammas must be ascending within [0, 1]")
    order = strategy_order(scores, strategy, seed)
    if order.size != w.shape[1]:
        raise ShapeError("scores length differs from column count")
    out = []
    for g in gammas:
        k = budget_count(w.shape[1], g)
        masked = w.copy()
        masked[:, order[:k]] = 0.0
        out.append((g, kde_mutual_info(w, masked, bandwidth, cap, seed=seed).value))
    return out


@dataclass(frozen=True)
class BoundInputs:
    d: float
    n: float
    gamma: float
    s2: float
    grad_max_sq: float
    lambda_e: float = 0.0

    def __post_init__(self):
        for name in ("d", "n", "s2", "grad_max_sq", "lambda_e"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must lie in [0, 1]")


def crlb_bound(inputs):
    """``d^2 / (n (1 - gamma) / s^2 * grad_max_sq + lambda_e)``; ``inf`` if the
    denominator vanishes."""
    exposure = inputs.n * (1.0 - inputs.gamma) * inputs.grad_max_sq
    if exposure > 0:
        if inputs.s2 == 0:
            return 0.0
        exposure /= inputs.s2
    denom = exposure + inputs.lambda_e
    if denom <= 0:
        return math.inf
    return inputs.d**2 / denom


@dataclass(frozen=True)
class PermutationNoise:
    empirical_var: float
    analytic_var: float
    skewness: float
    excess_kurtosis: float
    samples: np.ndarray

    @property
    def relative_error(self):
        if self.analytic_var == 0:
            return 0.0 if self.empirical_var == 0 else math.inf
        return abs(self.empirical_var - self.analytic_var) / self.analytic_var


def hoeffding_variance(g, q):
    """Row-wise combinatorial variance of the permuted inner product."""
    g = np.asarray(g, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = g.shape[1]
    gc = g - g.mean(axis=1, keepdims=True)
    qc = q - q.mean(axis=1, keepdims=True)
    return float(np.sum((qc**2).sum(axis=1) * (gc**2).sum(axis=1)) / (n - 1))


def permutation_noise_check(g, q, trials, seed=0, batch=1000):
    """Sample ``<Q, G(P - I)>`` over uniform column permutations ``P``."""
    g = np.asarray(g, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if g.shape != q.shape or g.ndim != 2:
        raise ShapeError("G and Q must be matrices of the same shape")
    n = g.shape[1]
    if n < 3:
        raise ValidationError("need at least three columns")
    rng = np.random.default_rng(seed)
    base = np.arange(n)
    chunks = []
    left = int(trials)
    while left > 0:
        t = min(batch, left)
        perms = rng.permuted(np.broadcast_to(base, (t, n)), axis=1)
        chunks.append(kernels.permuted_inner_products(q, g, perms))
        left -= t
    samples = np.concatenate(chunks) if chunks else np.zeros(0)
    analytic = hoeffding_variance(g, q)
    emp = float(samples.var()) if samples.size else 0.0
    if emp > 0 and samples.size > 3:
        skew = float(stats.skew(samples))
        kurt = float(stats.kurtosis(samples))
    else:
        skew = kurt = 0.0
    return PermutationNoise(emp, analytic, skew, kurt, samples)


def joint_permutation_variance(g, q):
    """Exact variance when one permutation is shared by all rows.

    Adds the cross-row covariances that :func:`hoeffding_variance` omits;
    the two agree when the rows' centred cross products vanish.
    """
    g = np.asarray(g, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = g.shape[1]
    gc = g - g.mean(axis=1, keepdims=True)
    qc = q - q.mean(axis=1, keepdims=True)
    return float(np.sum((qc @ qc.T) * (gc @ gc.T)) / (n - 1))
