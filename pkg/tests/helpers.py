"""Independent brute-force oracles shared by several test modules."""

from __future__ import annotations

import numpy as np


def column_aware_mean(mats, align):
    """Per-column mean over the matrices that have the column (loops only)."""
    rows = mats[0].shape[0]
    width = max(m.shape[1] for m in mats)
    out = np.zeros((rows, width))
    for j in range(width):
        got = []
        for m in mats:
            w = m.shape[1]
            if align == "left" and j < w:
                got.append(m[:, j])
            elif align == "right" and j >= width - w:
                got.append(m[:, j - (width - w)])
        if got:
            out[:, j] = np.sum(got, axis=0) / len(got)
    return out


def client_target(deltas, ks, k_i, n):
    """What client ``i`` should hold after a round, in swapped coordinates.

    Plain aggregate over the left ``n - k_j`` columns (left-aligned) plus the
    cipher aggregate truncated to the client's own ``k_i`` right columns.
    """
    plain = column_aware_mean([d[:, : n - k] for d, k in zip(deltas, ks)], "left")
    target = np.zeros((deltas[0].shape[0], n))
    target[:, : plain.shape[1]] += plain
    enc = [d[:, n - k :] for d, k in zip(deltas, ks) if k > 0]
    if enc and k_i > 0:
        cipher = column_aware_mean(enc, "right")
        target[:, n - k_i :] += cipher[:, cipher.shape[1] - k_i :]
    return target
