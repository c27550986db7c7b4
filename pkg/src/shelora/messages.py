"""Messages exchanged between clients and the server, with their wire forms.

* bid: one JSON object ``{client_id, r_i, k_i, columns: [[col, code], ...]}``
* uplink (:class:`ClientUpdate`) and downlink (:class:`Downlink`): a JSON
  header line, then length-prefixed sections.  Matrix sections use the CSV
  form from :mod:`shelora.linalg`; the last section is a cipher block
  stream (``u32`` count followed by blocks in the wire form of
  :mod:`shelora.crypto.he`).  All integers are little-endian.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .crypto.he import CipherBlockList, HeParams, blocks_from_bytes, blocks_to_bytes
from .errors import ValidationError
from .linalg import dumps_matrix, loads_matrix


@dataclass(frozen=True)
class SensitivityBid:
    """Column ids in clear with OPE-coded sensitivities, descending."""

    client_id: int
    rank: int
    k: int
    columns: tuple
    codes: tuple

    def __post_init__(self):
        cols = tuple(int(c) for c in self.columns)
        codes = tuple(int(c) for c in self.codes)
        if len(cols) != len(codes):
            raise ValidationError("columns and codes must align")
        if len(set(cols)) != len(cols):
            raise ValidationError("duplicate columns in bid")
        if self.k < 0 or self.k > len(cols):
            raise ValidationError(f"k={self.k} outside [0, {len(cols)}]")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "codes", codes)

    @property
    def code_of(self):
        return dict(zip(self.columns, self.codes))

    def to_json(self):
        return json.dumps(
            {
                "client_id": self.client_id,
                "r_i": self.rank,
                "k_i": self.k,
                "columns": [[c, s] for c, s in zip(self.columns, self.codes)],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        pairs = d.get("columns", [])
        return cls(
            client_id=int(d["client_id"]),
            rank=int(d["r_i"]),
            k=int(d["k_i"]),
            columns=tuple(p[0] for p in pairs),
            codes=tuple(p[1] for p in pairs),
        )


@dataclass(frozen=True)
class ClientUpdate:
    b_plain: np.ndarray
    a_plain: np.ndarray
    cipher_blocks: CipherBlockList
    k: int
    client_id: int = 0
    round: int = 0

    @property
    def rank(self):
        return self.b_plain.shape[1]

    @property
    def n(self):
        return self.a_plain.shape[1] + self.k

    @property
    def cipher_bytes(self):
        return self.cipher_blocks.byte_size


@dataclass(frozen=True)
class PlainSlice:
    """Rank-sliced SVD of the aggregated plaintext update."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray
    clamped: bool = False

    @property
    def rank(self):
        return self.sigma.size


@dataclass(frozen=True)
class Downlink:
    plain: PlainSlice
    cipher_blocks: CipherBlockList
    k: int
    client_id: int = 0
    round: int = 0
    extra: dict = field(default_factory=dict)


def _params_dict(p):
    return {"poly_degree": p.poly_degree, "moduli_bits": list(p.moduli_bits), "noise_epsilon": p.noise_epsilon}


def _section(data):
    return struct.pack("<Q", len(data)) + data


def _read_section(buf, offset):
    (length,) = struct.unpack_from("<Q", buf, offset)
    start = offset + 8
    if start + length > len(buf):
        raise ValidationError("truncated message section")
    return bytes(buf[start : start + length]), start + length


def _split_header(buf):
    nl = buf.index(b"\n")
    return json.loads(buf[:nl].decode()), nl + 1


def encode_update(update, params):
    header = {
        "client_id": update.client_id,
        "round": update.round,
        "r": update.rank,
        "n": update.n,
        "k": update.k,
        "params": _params_dict(params),
    }
    return (
        json.dumps(header, sort_keys=True).encode()
        + b"\n"
        + _section(dumps_matrix(update.b_plain).encode())
        + _section(dumps_matrix(update.a_plain).encode())
        + blocks_to_bytes(update.cipher_blocks)
    )


def decode_update(buf):
    header, off = _split_header(buf)
    params = HeParams(
        header["params"]["poly_degree"], tuple(header["params"]["moduli_bits"]), header["params"]["noise_epsilon"]
    )
    b_txt, off = _read_section(buf, off)
    a_txt, off = _read_section(buf, off)
    blocks, off = blocks_from_bytes(buf, params, off)
    update = ClientUpdate(
        b_plain=loads_matrix(b_txt.decode()),
        a_plain=loads_matrix(a_txt.decode()),
        cipher_blocks=blocks,
        k=int(header["k"]),
        client_id=int(header["client_id"]),
        round=int(header["round"]),
    )
    if update.rank != header["r"] or update.n != header["n"]:
        raise ValidationError("update header disagrees with its body")
    return update, params


def encode_downlink(down, params):
    header = {
        "client_id": down.client_id,
        "round": down.round,
        "r": down.plain.rank,
        "k": down.k,
        "params": _params_dict(params),
    }
    return (
        json.dumps(header, sort_keys=True).encode()
        + b"\n"
        + _section(dumps_matrix(down.plain.u).encode())
        + _section(dumps_matrix(np.diag(down.plain.sigma)).encode())
        + _section(dumps_matrix(down.plain.vt).encode())
        + blocks_to_bytes(down.cipher_blocks)
    )


def decode_downlink(buf):
    header, off = _split_header(buf)
    params = HeParams(
        header["params"]["poly_degree"], tuple(header["params"]["moduli_bits"]), header["params"]["noise_epsilon"]
    )
    u_txt, off = _read_section(buf, off)
    s_txt, off = _read_section(buf, off)
    v_txt, off = _read_section(buf, off)
    blocks, off = blocks_from_bytes(buf, params, off)
    plain = PlainSlice(
        u=loads_matrix(u_txt.decode()),
        sigma=np.diag(loads_matrix(s_txt.decode())).copy(),
        vt=loads_matrix(v_txt.decode()),
    )
    return (
        Downlink(plain=plain, cipher_blocks=blocks, k=int(header["k"]), client_id=int(header["client_id"]), round=int(header["round"])),
        params,
    )
