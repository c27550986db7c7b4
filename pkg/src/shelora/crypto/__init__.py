"""Order-preserving bid encoding and homomorphic block encryption."""

from .he import (
    DEFAULT_BACKEND,
    CipherBlock,
    CipherBlockList,
    HeBackend,
    HeParams,
    PublicKey,
    SecretKey,
    SimulatedBackend,
    block_from_bytes,
    block_to_bytes,
    blocks_from_bytes,
    blocks_to_bytes,
    chunk_width,
    column_blocks,
    decrypt_block,
    encrypt_block,
    he_add,
    he_keygen,
    he_plain_mask_mul,
    he_plain_matmul,
)
from .ope import OpeKey, ope_encode

__all__ = [
    "DEFAULT_BACKEND",
    "CipherBlock",
    "CipherBlockList",
    "HeBackend",
    "HeParams",
    "OpeKey",
    "PublicKey",
    "SecretKey",
    "SimulatedBackend",
    "block_from_bytes",
    "block_to_bytes",
    "blocks_from_bytes",
    "blocks_to_bytes",
    "chunk_width",
    "column_blocks",
    "decrypt_block",
    "encrypt_block",
    "he_add",
    "he_keygen",
    "he_plain_mask_mul",
    "he_plain_matmul",
    "ope_encode",
]
