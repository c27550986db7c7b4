"""Dense matrix substrate: products, column permutations, padding and SVD.

Matrices are plain 2-D ``float64`` numpy arrays.  All functions return new
arrays and leave their inputs untouched.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DomainError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

FLUSH_RATIO = 1e-12
JACOBI_TOL = 1e-12


def as_matrix(m, name="matrix"):
    """Coerce to a 2-D float64 array, checking finiteness."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.vt


def _complete_basis(cols, keep):
    """Replace columns where ``keep`` is False by an orthonormal completion.

    Standard basis vectors are tried in order and Gram-Schmidt'ed (twice)
    against the columns found so far; those with residual norm > 0.5 are kept.
    """
    m, p = cols.shape
    out = np.zeros_like(cols)
    out[:, keep] = cols[:, keep]
    missing = np.flatnonzero(~keep)
    if missing.size == 0:
        return out
    basis = np.zeros((m, p))
    have = int(keep.sum())
    basis[:, :have] = cols[:, keep]
    fill = iter(missing)
    for e in range(m):
        vec = np.zeros(m)
        vec[e] = 1.0
        for _ in range(2):
            vec -= basis[:, :have] @ (basis[:, :have].T @ vec)
        norm = np.linalg.norm(vec)
        if norm > 0.5:
            vec /= norm
            out[:, next(fill)] = vec
            basis[:, have] = vec
            have += 1
            if have == p:
                return out
    raise RuntimeError("basis completion failed")  # pragma: no cover - p <= m


def svd(m):
    """Thin SVD by one-sided Jacobi rotations.

    Returns ``u`` (rows x p), ``sigma`` (p,) and ``vt`` (p x cols) with
    ``p = min(rows, cols)``.  Singular values are sorted descending and
    those below ``1e-12 * sigma_max`` are set to exactly zero.  Each left
    singular vector is signed so that its largest-magnitude entry (first
    such index on ties) is nonnegative.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    p = min(rows, cols)
    if p == 0:
        return SvdResult(np.zeros((rows, 0)), np.zeros(0), np.zeros((0, cols)))

    # Hestenes orthogonalises columns; work on the tall orientation.
    transposed = rows < cols
    work = m.T if transposed else m
    rotated, v, _ = kernels.jacobi_orthogonalize(work, tol=JACOBI_TOL)

    norms = np.sqrt(np.einsum("ij,ij->j", rotated, rotated))
    order = np.argsort(-norms, kind="stable")
    sigma = norms[order]
    rotated = rotated[:, order]
    v = v[:, order]

    smax = sigma[0] if sigma.size else 0.0
    keep = sigma > FLUSH_RATIO * smax if smax > 0 else np.zeros(p, dtype=bool)
    sigma = np.where(keep, sigma, 0.0)
    left = np.zeros_like(rotated)
    left[:, keep] = rotated[:, keep] / sigma[keep]
    left = _complete_basis(left, keep)

    # left spans the tall side, v the short side
    if transposed:
        u, vt = v, left.T
    else:
        u, vt = left, v.T

    idx = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[idx, np.arange(p)] < 0, -1.0, 1.0)
    u = u * signs
    vt = vt * signs[:, None]
    return SvdResult(np.ascontiguousarray(u), sigma, np.ascontiguousarray(vt))


def factors_from_svd(res, r):
    """Split a (possibly truncated) SVD into ``B = U sqrt(S)``, ``A = sqrt(S) Vt``."""
    root = np.sqrt(res.sigma[:r])
    b = res.u[:, :r] * root
    a = root[:, None] * res.vt[:r, :]
    return b, a


def clamp_rank(r, rows, cols, what="rank"):
    if r < 1:
        raise ValidationError(f"{what} must be >= 1, got {r}")
    limit = min(rows, cols)
    if r > limit:
        logger.warning("%s %d clamped to %d for a %dx%d matrix", what, r, limit, rows, cols)
        return limit
    return r


def low_rank_factor(m, r):
    """Best rank-``r`` factorisation ``m ~= b @ a`` with balanced factors.

    A rank larger than ``min(m.shape)`` is clamped (and logged); ``b`` and
    ``a`` then have that smaller inner dimension.
    """
    m = as_matrix(m)
    r = clamp_rank(r, *m.shape)
    return factors_from_svd(svd(m), r)


def inverse_permutation(perm):
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def validate_permutation(perm, n):
    perm = np.asarray(perm)
    if perm.ndim != 1 or perm.size != n:
        raise ValidationError(f"permutation must have length {n}")
    if not np.issubdtype(perm.dtype, np.integer):
        if not np.all(np.equal(np.mod(perm, 1), 0)):
            raise ValidationError("permutation entries must be integers")
        perm = perm.astype(np.int64)
    if np.any(np.sort(perm) != np.arange(n)):
        raise ValidationError("permutation is not a bijection on [0, n)")
    return perm.astype(np.int64)


def permute_cols(m, perm):
    """``out[:, j] = m[:, perm[j]]``."""
    m = np.asarray(m, dtype=np.float64)
    perm = validate_permutation(perm, m.shape[1])
    return m[:, perm]


_PLACEMENTS = ("left", "right", "top", "bottom")


def zero_pad(m, target_rows, target_cols, placement):
    """Embed ``m`` in a zero matrix of the target shape.

    ``placement`` names where the original block sits: ``left`` keeps it in
    the leading columns, ``right`` in the trailing columns, ``top`` in the
    leading rows and ``bottom`` in the trailing rows.
    """
    m = np.asarray(m, dtype=np.float64)
    if placement not in _PLACEMENTS:
        raise ValidationError(f"placement must be one of {_PLACEMENTS}")
    rows, cols = m.shape
    if target_rows < rows or target_cols < cols:
        raise ShapeError(f"cannot pad {m.shape} down to ({target_rows}, {target_cols})")
    out = np.zeros((target_rows, target_cols))
    r0 = target_rows - rows if placement == "bottom" else 0
    c0 = target_cols - cols if placement == "right" else 0
    out[r0 : r0 + rows, c0 : c0 + cols] = m
    return out


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------


def dumps_matrix(m):
    m = np.asarray(m, dtype=np.float64)
    buf = io.StringIO()
    buf.write(f"{m.shape[0]},{m.shape[1]}\n")
    for row in m:
        buf.write(",".join(f"{x:.17g}" for x in row))
        buf.write("\n")
    return buf.getvalue()


def loads_matrix(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty matrix document")
    try:
        rows, cols = (int(x) for x in lines[0].split(","))
    except ValueError as exc:
        raise ValidationError(f"bad matrix header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows and not (cols == 0 and len(body) == 0):
        raise ValidationError(f"expected {rows} rows, found {len(body)}")
    if cols == 0 or rows == 0:
        return np.zeros((rows, cols))
    data = np.array([[float(x) for x in ln.split(",")] for ln in body], dtype=np.float64)
    if data.shape != (rows, cols):
        raise ValidationError(f"matrix body has shape {data.shape}, header says {(rows, cols)}")
    return data.reshape(rows, cols)


def write_matrix_csv(path, m):
    Path(path).write_text(dumps_matrix(m))


def read_matrix_csv(path):
    return loads_matrix(Path(path).read_text())
