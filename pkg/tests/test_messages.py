from __future__ import annotations

import numpy as np
import pytest

from shelora.crypto import CipherBlockList, encrypt_block
from shelora.errors import ValidationError
from shelora.messages import (
    ClientUpdate,
    Downlink,
    PlainSlice,
    SensitivityBid,
    decode_downlink,
    decode_update,
    encode_downlink,
    encode_update,
)


def test_bid_json_round_trip():
    bid = SensitivityBid(client_id=3, rank=8, k=2, columns=(5, 1, 9), codes=(900, 500, 20))
    text = bid.to_json()
    assert set(__import__("json").loads(text)) == {"client_id", "r_i", "k_i", "columns"}
    assert SensitivityBid.from_json(text) == bid
    assert bid.code_of == {5: 900, 1: 500, 9: 20}


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(columns=(1, 2), codes=(3,), k=1),
        dict(columns=(1, 1), codes=(3, 4), k=1),
        dict(columns=(1,), codes=(3,), k=2),
    ],
)
def test_bid_validation(kwargs):
    with pytest.raises(ValidationError):
        SensitivityBid(client_id=0, rank=1, **kwargs)


def test_update_round_trip(keys, rng):
    pk, _ = keys
    blocks = CipherBlockList([encrypt_block(rng.normal(size=(3, w)), pk) for w in (1, 2)])
    upd = ClientUpdate(rng.normal(size=(5, 3)), rng.normal(size=(3, 7)), blocks, k=3, client_id=4, round=9)
    back, params = decode_update(encode_update(upd, pk.params))
    assert params == pk.params
    assert back.b_plain.tobytes() == upd.b_plain.tobytes()
    assert back.a_plain.tobytes() == upd.a_plain.tobytes()
    assert list(back.cipher_blocks) == list(blocks)
    assert (back.k, back.client_id, back.round, back.n, back.rank) == (3, 4, 9, 10, 3)
    assert back.cipher_bytes == 2 * pk.params.ciphertext_bytes


def test_downlink_round_trip(keys, rng):
    pk, _ = keys
    plain = PlainSlice(rng.normal(size=(4, 2)), np.array([3.0, 1.0]), rng.normal(size=(2, 6)))
    blocks = CipherBlockList([encrypt_block(rng.normal(size=(4, 2)), pk)])
    down = Downlink(plain, blocks, k=2, client_id=1, round=2)
    back, _ = decode_downlink(encode_downlink(down, pk.params))
    for name in ("u", "sigma", "vt"):
        assert getattr(back.plain, name).tobytes() == getattr(plain, name).tobytes()
    assert list(back.cipher_blocks) == list(blocks)
    assert (back.k, back.client_id, back.round) == (2, 1, 2)


def test_truncated_message_rejected(keys, rng):
    pk, _ = keys
    upd = ClientUpdate(rng.normal(size=(2, 2)), rng.normal(size=(2, 3)), CipherBlockList(), k=0)
    data = encode_update(upd, pk.params)
    with pytest.raises(ValidationError):
        decode_update(data[:-40])
