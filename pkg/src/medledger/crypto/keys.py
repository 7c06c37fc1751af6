"""secp256k1 keys, recoverable signatures and Ethereum address handling."""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from functools import cached_property

import coincurve

from . import rlp
from .hashing import keccak256

SECP256K1_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
HALF_N = SECP256K1_N // 2

ADDRESS_SIZE = 20
SIGNATURE_SIZE = 65
ZERO_ADDRESS = bytes(ADDRESS_SIZE)

PERSONAL_MESSAGE_PREFIX = b"\x19Ethereum Signed Message:\n"


class InvalidKey(ValueError):
    pass


class InvalidSignature(ValueError):
    pass


class InvalidAddress(ValueError):
    pass


@dataclass(frozen=True)
class PublicKey:
    """Uncompressed curve point, 64 bytes ``x || y`` with no ``0x04`` prefix."""

    point: bytes

    def __post_init__(self):
        if len(self.point) != 64:
            raise InvalidKey("public key must be 64 bytes")
        try:
            coincurve.PublicKey(b"\x04" + self.point)
        except ValueError as exc:
            raise InvalidKey("point is not on secp256k1") from exc

    @property
    def address(self) -> bytes:
        return derive_address(self)


@dataclass(frozen=True)
class PrivateKey:
    scalar: int

    def __post_init__(self):
        if not isinstance(self.scalar, int) or not 1 <= self.scalar < SECP256K1_N:
            raise InvalidKey("private key scalar must lie in [1, n-1]")

    @classmethod
    def from_bytes(cls, raw: bytes) -> PrivateKey:
        if len(raw) != 32:
            raise InvalidKey("private key must be 32 bytes")
        return cls(int.from_bytes(raw, "big"))

    @classmethod
    def from_hex(cls, text: str) -> PrivateKey:
        return cls.from_bytes(bytes.fromhex(_strip_0x(text)))

    @classmethod
    def generate(cls) -> PrivateKey:
        return cls(secrets.randbelow(SECP256K1_N - 1) + 1)

    def to_bytes(self) -> bytes:
        return self.scalar.to_bytes(32, "big")

    @cached_property
    def public_key(self) -> PublicKey:
        return derive_public(self)

    @property
    def address(self) -> bytes:
        return self.public_key.address

    def __repr__(self):
        return f"PrivateKey(address={to_checksum_address(self.address)})"


@dataclass(frozen=True)
class Signature:
    """Recoverable ECDSA signature; ``v`` is the recovery id in {0, 1}."""

    v: int
    r: int
    s: int

    def to_bytes(self) -> bytes:
        """Wire form ``r || s || (27 + v)``."""
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big") + bytes([27 + self.v])

    @classmethod
    def from_bytes(cls, raw: bytes) -> Signature:
        if len(raw) != SIGNATURE_SIZE:
            raise InvalidSignature(f"signature must be {SIGNATURE_SIZE} bytes")
        v = raw[64]
        if v >= 27:
            v -= 27
        return cls(v=v, r=int.from_bytes(raw[:32], "big"), s=int.from_bytes(raw[32:64], "big"))

    def hex(self) -> str:
        return "0x" + self.to_bytes().hex()

    @classmethod
    def from_hex(cls, text: str) -> Signature:
        try:
            raw = bytes.fromhex(_strip_0x(text))
        except ValueError as exc:
            raise InvalidSignature("signature is not valid hex") from exc
        return cls.from_bytes(raw)


def derive_public(priv: PrivateKey | int) -> PublicKey:
    if not isinstance(priv, PrivateKey):
        priv = PrivateKey(priv)
    point = coincurve.PrivateKey(priv.to_bytes()).public_key.format(compressed=False)[1:]
    return PublicKey(point)


def derive_address(pub: PublicKey) -> bytes:
    return keccak256(pub.point)[12:]


def sign(digest: bytes, priv: PrivateKey) -> Signature:
    """Deterministic (RFC 6979) low-s recoverable signature over a 32-byte digest."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    if not isinstance(priv, PrivateKey):
        raise InvalidKey("expected a PrivateKey")
    raw = coincurve.PrivateKey(priv.to_bytes()).sign_recoverable(digest, hasher=None)
    sig = Signature(v=raw[64], r=int.from_bytes(raw[:32], "big"), s=int.from_bytes(raw[32:64], "big"))
    # libsecp256k1 already normalizes; keep the bound explicit.
    if sig.s > HALF_N:
        sig = Signature(v=sig.v ^ 1, r=sig.r, s=SECP256K1_N - sig.s)
    return sig


def recover_public(digest: bytes, sig: Signature) -> PublicKey:
    if len(digest) != 32:
        raise InvalidSignature("digest must be 32 bytes")
    if sig.v not in (0, 1):
        raise InvalidSignature("recovery id must be 0 or 1")
    if not 1 <= sig.r < SECP256K1_N:
        raise InvalidSignature("r out of range")
    if not 1 <= sig.s <= HALF_N:
        raise InvalidSignature("s out of range (high-s signatures are rejected)")
    raw = sig.r.to_bytes(32, "big") + sig.s.to_bytes(32, "big") + bytes([sig.v])
    try:
        pub = coincurve.PublicKey.from_signature_and_message(raw, digest, hasher=None)
    except Exception as exc:  # coincurve raises bare Exception on failed recovery
        raise InvalidSignature("public key recovery failed") from exc
    return PublicKey(pub.format(compressed=False)[1:])


def recover(digest: bytes, sig: Signature) -> bytes:
    """Address of the key that produced ``sig`` over ``digest``."""
    return derive_address(recover_public(digest, sig))


def verify(digest: bytes, sig: Signature, address: bytes) -> bool:
    try:
        return recover(digest, sig) == address
    except InvalidSignature:
        return False


def encode_personal_message(body: bytes) -> bytes:
    return PERSONAL_MESSAGE_PREFIX + str(len(body)).encode("ascii") + bytes(body)


def personal_message_digest(body: bytes) -> bytes:
    return keccak256(encode_personal_message(body))


def contract_address(sender: bytes, account_nonce_after_send: int) -> bytes:
    """Address of a contract created by ``sender``.

    ``account_nonce_after_send`` is the sender's nonce once the creating
    transaction has been applied, so the hashed nonce is one less.
    """
    if account_nonce_after_send < 1:
        raise ValueError("account nonce after a creating transaction is at least 1")
    return keccak256(rlp.encode([to_address(sender), account_nonce_after_send - 1]))[12:]


def _strip_0x(text: str) -> str:
    return text[2:] if text[:2] in ("0x", "0X") else text


def to_address(value: bytes | str) -> bytes:
    """Parse a 20-byte address from raw bytes or 40 hex digits (optional ``0x``).

    Mixed-case hex is treated as an EIP-55 checksum and must be correct;
    all-lower and all-upper input is accepted as-is.
    """
    if isinstance(value, (bytes, bytearray)):
        if len(value) != ADDRESS_SIZE:
            raise InvalidAddress(f"address must be {ADDRESS_SIZE} bytes, got {len(value)}")
        return bytes(value)
    if not isinstance(value, str):
        raise InvalidAddress(f"cannot interpret {type(value).__name__} as an address")
    digits = _strip_0x(value)
    if len(digits) != 2 * ADDRESS_SIZE:
        raise InvalidAddress(f"address must have 40 hex digits: {value!r}")
    try:
        raw = bytes.fromhex(digits)
    except ValueError as exc:
        raise InvalidAddress(f"address is not hex: {value!r}") from exc
    if digits != digits.lower() and digits != digits.upper():
        if to_checksum_address(raw)[2:] != digits:
            raise InvalidAddress(f"bad checksum casing: {value!r}")
    return raw


def to_checksum_address(address: bytes) -> str:
    hexaddr = address.hex()
    mask = keccak256(hexaddr.encode("ascii")).hex()
    return "0x" + "".join(c.upper() if int(m, 16) >= 8 else c for c, m in zip(hexaddr, mask))


def to_hex_address(address: bytes) -> str:
    return "0x" + address.hex()
