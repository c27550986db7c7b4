"""Column-aware aggregation of plaintext and encrypted weight updates.

Plaintext updates are left-aligned (client ``i`` holds the first
``n - k_i`` swapped columns) and encrypted ones right-aligned (the last
``k_i``).  Each column is averaged over the clients that actually hold it.
Encrypted blocks live on a right-anchored grid of a single chunk width, so
block ``t`` counted from the right edge lines up across clients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import linalg
from ..crypto.he import DEFAULT_BACKEND, CipherBlockList, column_blocks
from ..errors import IncompatibleError, ShapeError, ValidationError
from ..messages import PlainSlice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AggregatedPlain:
    matrix: np.ndarray
    counts: np.ndarray

    @property
    def width(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class AggregatedCipher:
    blocks: CipherBlockList
    counts: np.ndarray
    chunk: int

    @property
    def width(self):
        return self.counts.size


def aggregate_plain(updates):
    mats = [np.asarray(u, dtype=np.float64) for u in updates]
    if not mats:
        raise ValidationError("nothing to aggregate")
    rows = {m.shape[0] for m in mats}
    if len(rows) != 1:
        raise ShapeError(f"plaintext updates disagree on row count: {sorted(rows)}")
    (m,) = rows
    width = max(x.shape[1] for x in mats)
    total = np.zeros((m, width))
    counts = np.zeros(width, dtype=np.int64)
    for x in mats:
        c = x.shape[1]
        total[:, :c] += x
        counts[:c] += 1
    out = total.copy()
    live = counts > 0
    # reciprocal product, as in the cipher path, so both agree bit for bit
    out[:, live] = total[:, live] * (1.0 / counts[live])
    return AggregatedPlain(out, counts)


def lift_cipher(b_plain, blocks, backend=None):
    """``B_i`` times each ``r_i``-row block: the encrypted weight update."""
    backend = backend or DEFAULT_BACKEND
    return CipherBlockList(backend.plain_matmul(b_plain, c) for c in blocks)


def aggregate_cipher(updates, chunk, backend=None):
    """Homomorphic column-aware average of right-aligned encrypted updates.

    ``updates`` are per-client :class:`CipherBlockList` of equal row count,
    each chunked on the shared grid.  Narrow leading blocks are rotated into
    grid position before summation; the per-column average is a final mask
    product with ``1 / counts``.
    """
    backend = backend or DEFAULT_BACKEND
    updates = [CipherBlockList(u) for u in updates]
    widths = [u.width for u in updates]
    k_star = max(widths) if widths else 0
    counts = np.zeros(k_star, dtype=np.int64)
    if k_star == 0:
        return AggregatedCipher(CipherBlockList(), counts, chunk)

    grid = column_blocks(k_star, chunk)
    slots = [[] for _ in grid]
    for upd, k in zip(updates, widths):
        if k == 0:
            continue
        spans = column_blocks(k, chunk)
        if [e - s for s, e in spans] != upd.widths:
            raise IncompatibleError(f"client blocks {upd.widths} are not on the {chunk}-wide grid")
        counts[k_star - k :] += 1
        # pair blocks from the right edge
        for t, blk in enumerate(reversed(upd.blocks)):
            gi = len(grid) - 1 - t
            gs, ge = grid[gi]
            gw = ge - gs
            if blk.width < gw:
                blk = backend.place(blk, gw, gw - blk.width)
            slots[gi].append(blk)

    params = {b.params for s in slots for b in s}
    if len(params) != 1:
        raise IncompatibleError("cipher updates were produced under different parameters")
    rows = {b.rows for s in slots for b in s}
    if len(rows) != 1:
        raise ShapeError(f"cipher updates disagree on row count: {sorted(rows)}")

    out = []
    for gi, contrib in enumerate(slots):
        floor_level = min(b.level for b in contrib)
        acc = None
        for blk in contrib:
            blk = backend.mod_switch(blk, floor_level)
            acc = blk if acc is None else backend.add(acc, blk)
        gs, ge = grid[gi]
        acc = backend.mask_mul(acc, 1.0 / counts[gs:ge])
        out.append(acc)
    return AggregatedCipher(CipherBlockList(out), counts, chunk)


def truncate_cipher(agg, k, backend=None):
    """Blocks covering the rightmost ``k`` aggregated columns.

    Block boundaries are kept; in a block straddling the cut, columns left
    of the cut are zeroed by a mask product (the server holds no key).
    """
    backend = backend or DEFAULT_BACKEND
    k_star = agg.width
    if k < 0 or k > k_star:
        raise ValidationError(f"k={k} outside [0, {k_star}]")
    if k == 0:
        return CipherBlockList()
    cut = k_star - k
    grid = column_blocks(k_star, agg.chunk)
    out = []
    for (gs, ge), blk in zip(grid, agg.blocks):
        if ge <= cut:
            continue
        if gs < cut:
            mask = np.zeros(ge - gs)
            mask[cut - gs :] = 1.0
            blk = backend.mask_mul(blk, mask)
        out.append(blk)
    return CipherBlockList(out)


def svd_and_slice(agg, ranks):
    """One SVD of the plaintext aggregate, sliced to each client's rank."""
    mat = agg.matrix if isinstance(agg, AggregatedPlain) else np.asarray(agg, dtype=np.float64)
    mat = linalg.as_matrix(mat, "aggregate")
    m, width = mat.shape
    res = linalg.svd(mat)
    p = res.sigma.size
    out = []
    for r in ranks:
        if r < 1:
            raise ValidationError("ranks must be >= 1")
        use = min(r, p)
        if use < r:
            logger.warning("rank %d clamped to %d for a %dx%d aggregate", r, use, m, width)
        out.append(PlainSlice(res.u[:, :use].copy(), res.sigma[:use].copy(), res.vt[:use, :].copy(), clamped=use < r))
    return out
