"""Keyed order-preserving encoding of real values.

Values are quantised to a signed fixed-point integer in ``domain_bits``
bits, then pushed through a keyed strictly increasing map.  The map is a
tree of cumulative sums of pseudorandom positive gaps, one byte of the
quantised value per tree level, so codes are roughly proportional to the
input while revealing nothing beyond order at the granularity of a gap.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

_DIGIT_BITS = 8
_FANOUT = 1 << _DIGIT_BITS
_LEAF_GAP_HI = 16


@dataclass(frozen=True)
class OpeKey:
    seed: int
    domain_bits: int = 40
    frac_bits: int = 24

    def __post_init__(self):
        if not 0 < self.frac_bits < self.domain_bits <= 48:
            raise ValidationError("need 0 < frac_bits < domain_bits <= 48")

    @property
    def levels(self):
        return -(-self.domain_bits // _DIGIT_BITS)

    @property
    def limit(self):
        """Largest magnitude representable before quantisation overflows."""
        return float(2 ** (self.domain_bits - 1 - self.frac_bits))


@functools.lru_cache(maxsize=None)
def _spans(levels):
    # spans[l] bounds the code range of one node at depth l
    spans = [0] * levels
    spans[levels - 1] = _FANOUT * _LEAF_GAP_HI
    for lvl in range(levels - 2, -1, -1):
        spans[lvl] = (2 * _FANOUT + 1) * spans[lvl + 1]
    return tuple(spans)


@functools.lru_cache(maxsize=1 << 16)
def _node_offsets(seed, levels, level, prefix):
    spans = _spans(levels)
    if level == levels - 1:
        lo, hi = 1, _LEAF_GAP_HI
    else:
        lo, hi = spans[level + 1], 2 * spans[level + 1]
    ss = np.random.SeedSequence(
        [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF, level, prefix & 0xFFFFFFFF, prefix >> 32]
    )
    gaps = np.random.Generator(np.random.PCG64(ss)).integers(lo, hi, size=_FANOUT, dtype=np.int64)
    return np.cumsum(gaps)


def quantize(values, key):
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValidationError("OPE input must be finite")
    if np.any(np.abs(v) >= key.limit):
        raise ValidationError(f"OPE input magnitude must stay below {key.limit}")
    q = np.floor(v * float(1 << key.frac_bits)).astype(np.int64)
    return q + (1 << (key.domain_bits - 1))


def ope_encode(values, key):
    """Encode reals to nonnegative integer codes preserving their order.

    Equal inputs give equal codes; inputs closer than ``2**-frac_bits`` may
    collide.  Returns an ``int64`` array shaped like ``values``.
    """
    q = quantize(values, key)
    shape = q.shape
    q = q.ravel()
    levels = key.levels
    seed = int(key.seed) & 0xFFFFFFFFFFFFFFFF
    codes = np.zeros(q.size, dtype=np.int64)
    for level in range(levels):
        shift = _DIGIT_BITS * (levels - 1 - level)
        digit = (q >> shift) & (_FANOUT - 1)
        prefix = q >> (shift + _DIGIT_BITS)
        nodes, inverse = np.unique(prefix, return_inverse=True)
        table = np.stack([_node_offsets(seed, levels, level, int(p)) for p in nodes])
        codes += table[inverse.ravel(), digit]
    return codes.reshape(shape)
