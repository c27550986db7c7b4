"""Client side of a round: local training, bidding, swapping, encryption and
reparameterisation of the server's reply into fresh rank-r adapters."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .crypto import ope_encode
from .crypto.he import DEFAULT_BACKEND, CipherBlockList, chunk_width, column_blocks
from .errors import ShapeError, TrainingError, ValidationError
from .messages import ClientUpdate, SensitivityBid
from .sensitivity import ChannelScores, select_subset

logger = logging.getLogger(__name__)

DIVERGENCE_LOSS = 1e6


@dataclass(frozen=True)
class DeviceProfile:
    type_id: int
    rank: int
    gamma: float
    gflops: float = 0.0

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("rank must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class AdapterPair:
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        a = np.asarray(self.a, dtype=np.float64)
        if b.ndim != 2 or a.ndim != 2 or b.shape[1] != a.shape[0]:
            raise ShapeError(f"adapter factors {b.shape} and {a.shape} do not chain")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def rank(self):
        return self.a.shape[0]

    @property
    def delta(self):
        return self.b @ self.a


def init_adapter(m, n, rank, rng, std=0.02):
    """Standard LoRA start: ``A ~ N(0, std^2)``, ``B = 0``."""
    return AdapterPair(np.zeros((m, rank)), rng.normal(0.0, std, size=(rank, n)))


# ---------------------------------------------------------------------------
# local training
# ---------------------------------------------------------------------------


def toy_loss(w0, adapter, x, y):
    """Half mean squared error of ``y ~ (W0 + BA) x`` over rows of ``x``."""
    err = x @ (w0 + adapter.delta).T - y
    return 0.5 * float(np.einsum("ij,ij->", err, err)) / x.shape[0]


def local_train(adapter, w0, x, y, steps, lr, return_losses=False):
    """Full-batch gradient descent on the adapter factors only.

    ``x`` is (samples, n) and ``y`` is (samples, m).  Raises
    :class:`TrainingError` when the loss exceeds ``1e6``.
    """
    w0 = np.asarray(w0, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = w0.shape
    if adapter.b.shape[0] != m or adapter.a.shape[1] != n:
        raise ShapeError(f"adapter {adapter.b.shape}x{adapter.a.shape} does not fit W0 {w0.shape}")
    if x.shape[1] != n or y.shape != (x.shape[0], m):
        raise ShapeError("dataset shapes do not match W0")
    b, a = adapter.b.copy(), adapter.a.copy()
    count = x.shape[0]
    losses = []
    for _ in range(int(steps)):
        err = x @ (w0 + b @ a).T - y
        loss = 0.5 * float(np.einsum("ij,ij->", err, err)) / count
        losses.append(loss)
        if not np.isfinite(loss) or loss > DIVERGENCE_LOSS:
            raise TrainingError(f"local training diverged at step {len(losses) - 1}: loss={loss:.3e}", losses)
        grad_w = err.T @ x / count
        grad_b = grad_w @ a.T
        grad_a = b.T @ grad_w
        b -= lr * grad_b
        a -= lr * grad_a
    out = AdapterPair(b, a)
    if return_losses:
        losses.append(toy_loss(w0, out, x, y))
        return out, losses
    return out


# ---------------------------------------------------------------------------
# bidding and swapping
# ---------------------------------------------------------------------------


def build_bid(scores, profile, ope_key, client_id=0):
    if not isinstance(scores, ChannelScores):
        scores = ChannelScores(scores)
    sel = select_subset(scores, profile.gamma)
    values = scores.scores[list(sel.columns)]
    codes = ope_encode(values, ope_key) if sel.k else np.zeros(0, dtype=np.int64)
    return SensitivityBid(client_id=client_id, rank=profile.rank, k=sel.k, columns=sel.columns, codes=tuple(codes))


@dataclass(frozen=True)
class SwapPlan:
    perm: np.ndarray
    n_plain: int
    encrypted_columns: tuple

    @property
    def n(self):
        return self.perm.size

    @property
    def inverse(self):
        return linalg.inverse_permutation(self.perm)


def make_swap_plan(n, res):
    """Plain columns first, then the negotiated columns, each ascending."""
    enc = sorted({int(j) for j in res})
    if any(j < 0 or j >= n for j in enc):
        raise ValidationError(f"encrypted column outside [0, {n})")
    chosen = set(enc)
    plain = [j for j in range(n) if j not in chosen]
    perm = np.array(plain + enc, dtype=np.int64)
    return SwapPlan(perm=perm, n_plain=len(plain), encrypted_columns=tuple(enc))


def apply_swap(adapter, plan):
    return AdapterPair(adapter.b, linalg.permute_cols(adapter.a, plan.perm))


def undo_swap(adapter, plan):
    return AdapterPair(adapter.b, linalg.permute_cols(adapter.a, plan.inverse))


# ---------------------------------------------------------------------------
# selective encryption
# ---------------------------------------------------------------------------


def encrypt_update(adapter, k, pk, chunk=None, client_id=0, round=0, backend=None):
    """Encrypt the rightmost ``k`` columns of the (already swapped) ``A``.

    The encrypted slab is split on a right-anchored grid of ``chunk``-wide
    blocks (default ``slots // r``), so a narrower remainder block leads.
    """
    backend = backend or DEFAULT_BACKEND
    a = adapter.a
    r, n = a.shape
    if not 0 <= k <= n:
        raise ValidationError(f"k={k} outside [0, {n}]")
    if chunk is None:
        chunk = chunk_width(pk.params.slots, r)
    elif chunk * r > pk.params.slots:
        raise ValidationError(f"chunk {chunk} overflows {pk.params.slots} slots at rank {r}")
    slab = a[:, n - k :]
    blocks = [backend.encrypt(slab[:, s:e], pk) for s, e in column_blocks(k, chunk)]
    return ClientUpdate(
        b_plain=adapter.b.copy(),
        a_plain=a[:, : n - k].copy(),
        cipher_blocks=CipherBlockList(blocks),
        k=k,
        client_id=client_id,
        round=round,
    )


def decrypt_slab(blocks, sk, backend=None):
    backend = backend or DEFAULT_BACKEND
    parts = [backend.decrypt(b, sk) for b in blocks]
    if not parts:
        return None
    return np.hstack(parts)


# ---------------------------------------------------------------------------
# reparameterisation
# ---------------------------------------------------------------------------


def reparameterize(plain, cipher_blocks, sk, plan, rank, backend=None):
    """Merge plaintext SVD factors and decrypted cipher columns into ``(B, A)``.

    ``plain`` holds the server's rank-sliced ``U, S, Vt`` over the leading
    plaintext columns; the decrypted blocks cover trailing columns.  Both
    are lifted to full width in swapped coordinates, stacked as
    ``B_g = [B_p B_c]``, ``A_g = [A_p; A_c]``, and the product is
    re-factored at ``rank`` before ``A`` is returned to original order.
    """
    n = plan.n
    m = plain.u.shape[0]
    if plain.vt.shape[1] > n:
        raise ShapeError("plaintext factors wider than the layer")

    root = np.sqrt(plain.sigma)
    b_p = plain.u * root
    a_p = linalg.zero_pad(root[:, None] * plain.vt, plain.rank, n, "left")

    slab = decrypt_slab(cipher_blocks, sk, backend)
    if slab is not None and slab.shape[1] > 0:
        if slab.shape[0] != m:
            raise ShapeError(f"cipher slab has {slab.shape[0]} rows, expected {m}")
        # a slab narrower than the rank is the normal case, not worth a warning
        r_c = min(rank, *slab.shape)
        b_c, a_c = linalg.factors_from_svd(linalg.svd(slab), r_c)
        a_c = linalg.zero_pad(a_c, r_c, n, "right")
    else:
        b_c, a_c = np.zeros((m, 0)), np.zeros((0, n))

    b_g = np.hstack([b_p, b_c])
    a_g = np.vstack([a_p, a_c])
    if b_g.shape[1] == 0:
        merged = np.zeros((m, n))
    else:
        merged = b_g @ a_g
    b_hat, a_hat = linalg.low_rank_factor(merged, rank)
    return undo_swap(AdapterPair(b_hat, a_hat), plan)
