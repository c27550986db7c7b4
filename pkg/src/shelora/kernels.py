"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``SHELORA_DISABLE_NUMBA`` is unset (or ``0``/``false``).  Both
paths follow the same arithmetic schedule; they agree to rounding but are
not guaranteed bit-identical to each other.  Each path is deterministic.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import logsumexp

_FLAG = "SHELORA_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by " + _FLAG)
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# one-sided Jacobi
# ---------------------------------------------------------------------------


def round_robin_schedule(n):
    """Brent-Luk tournament ordering of all column pairs of ``n`` columns.

    Returns an int array of shape (rounds, pairs, 2).  Within a round the
    pairs are disjoint, so their rotations commute.  Pairs touching the
    padding column (odd ``n``) are marked with ``-1``.
    """
    if n < 2:
        return np.zeros((0, 0, 2), dtype=np.int64)
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p >= n or q >= n:
                pairs.append((-1, -1))
            else:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0]] + [players[-1]] + players[1:-1]
    return np.asarray(rounds, dtype=np.int64)


def _rotation(alpha, beta, gamma):
    zeta = (beta - alpha) / (2.0 * gamma)
    if abs(zeta) > 1e150:
        t = 0.5 / zeta
    else:
        sgn = 1.0 if zeta >= 0.0 else -1.0
        t = sgn / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t


_rotation_nb = njit(cache=True)(_rotation)


@njit(cache=True)
def _jacobi_numba(at, vt, schedule, tol, max_sweeps):
    # operates on transposes so each column is a contiguous row
    rows = at.shape[1]
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        rotated = False
        for rnd in range(schedule.shape[0]):
            for k in range(schedule.shape[1]):
                p = schedule[rnd, k, 0]
                q = schedule[rnd, k, 1]
                if p < 0:
                    continue
                ap = at[p]
                aq = at[q]
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(rows):
                    alpha += ap[i] * ap[i]
                    beta += aq[i] * aq[i]
                    gamma += ap[i] * aq[i]
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                c, s = _rotation_nb(alpha, beta, gamma)
                for i in range(rows):
                    x = ap[i]
                    y = aq[i]
                    ap[i] = c * x - s * y
                    aq[i] = s * x + c * y
                vp = vt[p]
                vq = vt[q]
                for i in range(vt.shape[1]):
                    x = vp[i]
                    y = vq[i]
                    vp[i] = c * x - s * y
                    vq[i] = s * x + c * y
        if not rotated:
            break
    return sweeps


def _jacobi_numpy(a, v, schedule, tol, max_sweeps):
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        rotated = False
        for rnd in schedule:
            live = rnd[rnd[:, 0] >= 0]
            if live.size == 0:
                continue
            p, q = live[:, 0], live[:, 1]
            ap, aq = a[:, p], a[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            act = (gamma != 0.0) & (np.abs(gamma) > tol * np.sqrt(alpha * beta))
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            g = gamma[act]
            with np.errstate(over="ignore"):
                zeta = (beta[act] - alpha[act]) / (2.0 * g)
                sgn = np.where(zeta >= 0.0, 1.0, -1.0)
                big = np.abs(zeta) > 1e150
                safe = np.where(big, 0.0, zeta)
                t = np.where(big, 0.5 / zeta, sgn / (np.abs(safe) + np.sqrt(1.0 + safe * safe)))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (a, v):
                xp, xq = mat[:, p].copy(), mat[:, q]
                mat[:, p] = c * xp - s * xq
                mat[:, q] = s * xp + c * xq
        if not rotated:
            break
    return sweeps


def jacobi_orthogonalize(a, tol=1e-12, max_sweeps=100, use_numba=None):
    """Rotate the columns of ``a`` until they are mutually orthogonal.

    Returns ``(a_rot, v, sweeps)`` with ``a @ v == a_rot`` and ``v``
    orthogonal.  The input is not modified.
    """
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    n = a.shape[1]
    v = np.eye(n)
    schedule = round_robin_schedule(n)
    if n < 2:
        return a, v, 0
    fast = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if fast:
        at, vt = np.ascontiguousarray(a.T), np.ascontiguousarray(v.T)
        sweeps = _jacobi_numba(at, vt, schedule, float(tol), int(max_sweeps))
        a, v = np.ascontiguousarray(at.T), np.ascontiguousarray(vt.T)
    else:
        sweeps = _jacobi_numpy(a, v, schedule, float(tol), int(max_sweeps))
    return a, v, int(sweeps)


# ---------------------------------------------------------------------------
# Gaussian kernel density
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kde_numba(points, queries, bandwidth):
    n = points.shape[0]
    d = points.shape[1]
    inv = 1.0 / (2.0 * bandwidth * bandwidth)
    out = np.empty(queries.shape[0])
    buf = np.empty(n)
    for qi in range(queries.shape[0]):
        best = -np.inf
        for k in range(n):
            s = 0.0
            for j in range(d):
                diff = queries[qi, j] - points[k, j]
                s += diff * diff
            val = -s * inv
            buf[k] = val
            if val > best:
                best = val
        acc = 0.0
        for k in range(n):
            acc += np.exp(buf[k] - best)
        out[qi] = best + np.log(acc)
    return out


def _kde_numpy(points, queries, bandwidth, block=512):
    inv = 1.0 / (2.0 * bandwidth * bandwidth)
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], block):
        q = queries[start : start + block]
        diff = q[:, None, :] - points[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        out[start : start + block] = logsumexp(-sq * inv, axis=1)
    return out


def kde_log_density(points, queries, bandwidth, use_numba=None):
    """Log of a Gaussian kernel density estimate fitted on ``points``.

    Both arrays are (samples, dims).  Matches the normalisation used by
    scikit-learn's ``KernelDensity(kernel="gaussian").score_samples``.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if queries.ndim == 1:
        queries = queries[:, None]
    n, d = points.shape
    fast = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if fast:
        lse = _kde_numba(points, queries, float(bandwidth))
    else:
        lse = _kde_numpy(points, queries, float(bandwidth))
    return lse - np.log(n) - 0.5 * d * np.log(2.0 * np.pi * bandwidth * bandwidth)


# ---------------------------------------------------------------------------
# permuted linear statistic
# ---------------------------------------------------------------------------


@njit(cache=True)
def _perm_stat_numba(cross, perms):
    n = cross.shape[0]
    base = 0.0
    for k in range(n):
        base += cross[k, k]
    out = np.empty(perms.shape[0])
    for t in range(perms.shape[0]):
        s = 0.0
        for k in range(n):
            s += cross[k, perms[t, k]]
        out[t] = s - base
    return out


def _perm_stat_numpy(cross, perms):
    n = cross.shape[0]
    return cross[np.arange(n), perms].sum(axis=1) - np.trace(cross)


def permuted_inner_products(q, g, perms, use_numba=None):
    """``<Q, G P_t> - <Q, G>`` for each permutation row of ``perms``.

    With ``P_t`` the permutation matrix sending column ``k`` to
    ``perms[t, k]``, the statistic reduces to a sum over the ``n x n``
    cross-Gram matrix ``Q^T G``.
    """
    cross = np.ascontiguousarray(np.asarray(q, dtype=np.float64).T @ np.asarray(g, dtype=np.float64))
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    fast = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if fast:
        return _perm_stat_numba(cross, perms)
    return _perm_stat_numpy(cross, perms)
