"""Keccak-256 as used by Ethereum (pre-FIPS padding)."""

from __future__ import annotations

from Crypto.Hash import keccak as _keccak

DIGEST_SIZE = 32


def keccak256(message: bytes) -> bytes:
    """Return the 32-byte Keccak-256 digest of ``message``.

    This is the original Keccak submission padding (``0x01``), not the
    NIST SHA3-256 padding (``0x06``), so ``hashlib.sha3_256`` is not a
    substitute.
    """
    return _keccak.new(digest_bits=256, data=bytes(message)).digest()
