"""Additively homomorphic block encryption behind a small backend interface.

:class:`SimulatedBackend` is exact: a ciphertext carries its plaintext
block and the 16-byte token of the key it was produced under, while sizes
and depth are charged as for a CKKS ciphertext of the configured ring.
Protocol code only ever talks to the :class:`HeBackend` surface, so a
lattice implementation can replace it without touching callers.

Blocks are packed column-major: a ``rows x width`` block fills the first
``rows * width`` slots, and column ``j`` occupies slots
``[j*rows, (j+1)*rows)``.  Moving columns (:meth:`place`) is therefore a
slot rotation, which needs public Galois keys but no depth.
"""

from __future__ import annotations

import hashlib
import math
import secrets
import struct
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..errors import (
    AuthenticationError,
    CapacityError,
    DepthError,
    IncompatibleError,
    ShapeError,
    ValidationError,
)

TOKEN_BYTES = 16


@dataclass(frozen=True)
class HeParams:
    poly_degree: int = 8192
    moduli_bits: tuple = (60, 40, 60)
    noise_epsilon: float = 0.0

    def __post_init__(self):
        d = self.poly_degree
        if d < 1024 or d & (d - 1):
            raise ValidationError(f"poly_degree must be a power of two >= 1024, got {d}")
        bits = tuple(int(b) for b in self.moduli_bits)
        if len(bits) < 2 or any(b <= 0 for b in bits):
            raise ValidationError("moduli_bits needs at least two positive entries")
        if not 0.0 <= self.noise_epsilon < 1.0:
            raise ValidationError("noise_epsilon must lie in [0, 1)")
        object.__setattr__(self, "moduli_bits", bits)

    @property
    def slots(self):
        return self.poly_degree // 2

    @property
    def depth(self):
        """Rescales available: one per prime between the first and the special prime."""
        return len(self.moduli_bits) - 2

    @property
    def ciphertext_bytes(self):
        return 2 * self.poly_degree * sum(self.moduli_bits) // 8

    @property
    def params_id(self):
        text = f"{self.poly_degree}|{','.join(map(str, self.moduli_bits))}"
        return hashlib.blake2b(text.encode(), digest_size=8).digest()


@dataclass(frozen=True)
class PublicKey:
    params: HeParams
    token: bytes = field(repr=False)


@dataclass(frozen=True)
class SecretKey:
    params: HeParams
    token: bytes = field(repr=False)


@dataclass(frozen=True)
class CipherBlock:
    rows: int
    width: int
    level: int
    params: HeParams
    payload: bytes = field(repr=False)

    @property
    def n_ciphertexts(self):
        return max(1, math.ceil(self.rows * self.width / self.params.slots))

    @property
    def byte_size(self):
        return self.n_ciphertexts * self.params.ciphertext_bytes


@dataclass(frozen=True)
class CipherBlockList:
    """Blocks covering consecutive column ranges, left to right."""

    blocks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    @property
    def widths(self):
        return [b.width for b in self.blocks]

    @property
    def width(self):
        return sum(self.widths)

    @property
    def byte_size(self):
        return sum(b.byte_size for b in self.blocks)


def chunk_width(slots, rows):
    """Widest column slab of a ``rows``-row matrix that fits in one ciphertext."""
    if rows < 1:
        raise ValidationError("rows must be >= 1")
    chunk = slots // rows
    if chunk < 1:
        raise CapacityError(f"a single column of {rows} rows exceeds {slots} slots")
    return chunk


def column_blocks(k, chunk):
    """Split ``k`` trailing columns into ``ceil(k / chunk)`` spans.

    The grid is anchored at the right edge, so the narrow remainder block
    (if any) comes first.  Spans are ``(start, stop)`` offsets into the
    ``k``-wide region, listed left to right.
    """
    if chunk < 1:
        raise ValidationError("chunk must be >= 1")
    spans = []
    stop = k
    while stop > 0:
        start = max(0, stop - chunk)
        spans.append((start, stop))
        stop = start
    return spans[::-1]


class HeBackend(Protocol):
    def keygen(self, params: HeParams, seed=None) -> tuple: ...

    def encrypt(self, block, pk: PublicKey) -> CipherBlock: ...

    def decrypt(self, c: CipherBlock, sk: SecretKey) -> np.ndarray: ...

    def add(self, c1: CipherBlock, c2: CipherBlock) -> CipherBlock: ...

    def plain_matmul(self, p, c: CipherBlock) -> CipherBlock: ...

    def mask_mul(self, c: CipherBlock, mask: Sequence[float]) -> CipherBlock: ...

    def place(self, c: CipherBlock, width: int, offset: int) -> CipherBlock: ...

    def mod_switch(self, c: CipherBlock, level: int) -> CipherBlock: ...


class SimulatedBackend:
    """Exact reference backend; see the module docstring."""

    name = "simulated"

    # payload layout: row-major little-endian float64 block, then key token

    @staticmethod
    def _pack(data, token):
        return np.ascontiguousarray(data, dtype="<f8").tobytes() + token

    @staticmethod
    def _unpack(c):
        body, token = c.payload[:-TOKEN_BYTES], c.payload[-TOKEN_BYTES:]
        data = np.frombuffer(body, dtype="<f8").reshape(c.rows, c.width).astype(np.float64)
        return data, token

    def _new(self, data, level, params, token):
        rows, width = data.shape
        return CipherBlock(rows, width, level, params, self._pack(data, token))

    def keygen(self, params, seed=None):
        if not isinstance(params, HeParams):
            raise ValidationError("keygen expects HeParams")
        if seed is None:
            material = secrets.token_bytes(16)
        else:
            material = int(seed).to_bytes(16, "little", signed=True)
        token = hashlib.blake2b(material + params.params_id, digest_size=TOKEN_BYTES).digest()
        return PublicKey(params, token), SecretKey(params, token)

    def encrypt(self, block, pk):
        data = np.asarray(block, dtype=np.float64)
        if data.ndim != 2 or data.size == 0:
            raise ShapeError("can only encrypt a non-empty 2-D block")
        if not np.all(np.isfinite(data)):
            raise ValidationError("block contains non-finite entries")
        if data.size > pk.params.slots:
            raise CapacityError(f"{data.shape} block needs {data.size} slots, only {pk.params.slots} available")
        return self._new(data, pk.params.depth, pk.params, pk.token)

    def decrypt(self, c, sk):
        if c.params != sk.params:
            raise AuthenticationError("secret key was generated for different parameters")
        data, token = self._unpack(c)
        if token != sk.token:
            raise AuthenticationError("ciphertext was not produced under this key")
        eps = c.params.noise_epsilon
        if eps > 0:
            digest = hashlib.blake2b(c.payload, digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            data = data * (1.0 + rng.uniform(-eps, eps, size=data.shape))
        return data

    def _compatible(self, c1, c2):
        if c1.params != c2.params:
            raise IncompatibleError("ciphertexts use different parameters")
        if (c1.rows, c1.width) != (c2.rows, c2.width):
            raise IncompatibleError(f"shape {(c1.rows, c1.width)} vs {(c2.rows, c2.width)}")
        if c1.level != c2.level:
            raise IncompatibleError(f"level {c1.level} vs {c2.level}; mod-switch first")

    def add(self, c1, c2):
        self._compatible(c1, c2)
        a, t1 = self._unpack(c1)
        b, t2 = self._unpack(c2)
        if t1 != t2:
            raise IncompatibleError("ciphertexts were produced under different keys")
        return self._new(a + b, c1.level, c1.params, t1)

    def plain_matmul(self, p, c):
        p = np.asarray(p, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != c.rows:
            raise ShapeError(f"cannot multiply {p.shape} by a {c.rows}-row ciphertext")
        if c.level < 1:
            raise DepthError("no multiplicative depth left for a plaintext product")
        data, token = self._unpack(c)
        return self._new(p @ data, c.level - 1, c.params, token)

    def mask_mul(self, c, mask):
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != (c.width,):
            raise ShapeError(f"mask length {mask.shape} does not match width {c.width}")
        if c.level < 1:
            raise DepthError("no multiplicative depth left for a mask product")
        data, token = self._unpack(c)
        return self._new(data * mask, c.level - 1, c.params, token)

    def place(self, c, width, offset):
        if offset < 0 or offset + c.width > width:
            raise ShapeError(f"cannot place {c.width} columns at {offset} in width {width}")
        data, token = self._unpack(c)
        out = np.zeros((c.rows, width))
        out[:, offset : offset + c.width] = data
        return self._new(out, c.level, c.params, token)

    def mod_switch(self, c, level):
        if level > c.level or level < 0:
            raise IncompatibleError(f"cannot switch level {c.level} to {level}")
        if level == c.level:
            return c
        data, token = self._unpack(c)
        return self._new(data, level, c.params, token)

    def zeros_like(self, c, width=None):
        """Encryption of zero in the shape/key of ``c`` (uses ``c``'s token)."""
        data, token = self._unpack(c)
        w = c.width if width is None else width
        return self._new(np.zeros((c.rows, w)), c.level, c.params, token)


DEFAULT_BACKEND = SimulatedBackend()


def he_keygen(params, seed=None, backend=None):
    return (backend or DEFAULT_BACKEND).keygen(params, seed)


def encrypt_block(block, pk, backend=None):
    return (backend or DEFAULT_BACKEND).encrypt(block, pk)


def decrypt_block(c, sk, backend=None):
    return (backend or DEFAULT_BACKEND).decrypt(c, sk)


def he_add(c1, c2, backend=None):
    return (backend or DEFAULT_BACKEND).add(c1, c2)


def he_plain_matmul(p, c, backend=None):
    return (backend or DEFAULT_BACKEND).plain_matmul(p, c)


def he_plain_mask_mul(c, mask, backend=None):
    return (backend or DEFAULT_BACKEND).mask_mul(c, mask)


# ---------------------------------------------------------------------------
# wire form
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIi8sI")
_MAGIC = b"SHEC"


def block_to_bytes(c):
    """Header ``{magic, rows, width, level, params_id, payload_len}`` + payload."""
    return _HEADER.pack(_MAGIC, c.rows, c.width, c.level, c.params.params_id, len(c.payload)) + c.payload


def block_from_bytes(data, params, offset=0):
    """Decode one block; returns ``(block, next_offset)``."""
    try:
        magic, rows, width, level, pid, plen = _HEADER.unpack_from(data, offset)
    except struct.error as exc:
        raise ValidationError("truncated cipher block header") from exc
    if magic != _MAGIC:
        raise ValidationError("not a cipher block")
    if pid != params.params_id:
        raise IncompatibleError("cipher block was produced under different parameters")
    start = offset + _HEADER.size
    payload = bytes(data[start : start + plen])
    if len(payload) != plen or plen != rows * width * 8 + TOKEN_BYTES:
        raise ValidationError("cipher block payload length mismatch")
    return CipherBlock(rows, width, level, params, payload), start + plen


def blocks_to_bytes(blocks):
    blocks = list(blocks)
    return struct.pack("<I", len(blocks)) + b"".join(block_to_bytes(b) for b in blocks)


def blocks_from_bytes(data, params, offset=0):
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    out = []
    for _ in range(count):
        blk, offset = block_from_bytes(data, params, offset)
        out.append(blk)
    return CipherBlockList(out), offset
