from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from ..crypto import (
    InvalidSignature,
    PrivateKey,
    Signature,
    keccak256,
    recover,
    rlp,
    sign,
    to_address,
)
from ..crypto.rlp import RLPError
from ..trustsuite import ContractCall


class MalformedTransaction(ValueError):
    pass


@dataclass(frozen=True)
class Transaction:
    """A value transfer or contract call; ``to=None`` would be contract creation."""

    nonce: int
    gas_price: int
    gas_limit: int
    to: bytes | None
    value: int = 0
    payload: bytes = b""
    signature: Signature | None = None

    def __post_init__(self):
        for name in ("nonce", "gas_price", "gas_limit", "value"):
            number = getattr(self, name)
            if not isinstance(number, int) or isinstance(number, bool) or number < 0:
                raise MalformedTransaction(f"{name} must be a non-negative integer")
        if self.to is not None:
            object.__setattr__(self, "to", to_address(self.to))

    @classmethod
    def for_call(cls, nonce: int, gas_price: int, gas_limit: int, to: bytes,
             call: ContractCall, value: int = 0) -> Transaction:
        return cls(nonce, gas_price, gas_limit, to, value, call.encode())

    def unsigned_fields(self) -> list:
        return [self.nonce, self.gas_price, self.gas_limit, self.to or b"", self.value,
                self.payload]

    def signing_digest(self) -> bytes:
        return keccak256(rlp.encode(self.unsigned_fields()))

    def sign(self, key: PrivateKey) -> Transaction:
        return replace(self, signature=sign(self.signing_digest(), key))

    @cached_property
    def sender(self) -> bytes:
        if self.signature is None:
            raise InvalidSignature("transaction is unsigned")
        return recover(self.signing_digest(), self.signature)

    def encode(self) -> bytes:
        if self.signature is None:
            raise InvalidSignature("cannot serialize an unsigned transaction")
        sig = self.signature
        return rlp.encode(self.unsigned_fields() + [27 + sig.v, sig.r, sig.s])

    @cached_property
    def hash(self) -> bytes:
        return keccak256(self.encode())

    @classmethod
    def decode(cls, raw: bytes) -> Transaction:
        try:
            fields = rlp.decode(raw)
            if not isinstance(fields, list) or len(fields) != 9:
                raise MalformedTransaction("signed transaction must have 9 fields")
            if not all(isinstance(f, bytes) for f in fields):
                raise MalformedTransaction("transaction fields must be byte strings")
            nonce, gas_price, gas_limit = (rlp.decode_int(f) for f in fields[:3])
            to = fields[3] or None
            if to is not None and len(to) != 20:
                raise MalformedTransaction("recipient must be 20 bytes or empty")
            value = rlp.decode_int(fields[4])
            v, r, s = (rlp.decode_int(f) for f in fields[6:])
        except RLPError as exc:
            raise MalformedTransaction(str(exc)) from exc
        if v not in (27, 28):
            raise MalformedTransaction("v must be 27 or 28")
        tx = cls(nonce, gas_price, gas_limit, to, value, fields[5], Signature(v - 27, r, s))
        if tx.encode() != bytes(raw):
            raise MalformedTransaction("non-canonical transaction encoding")
        return tx

    @cached_property
    def contract_call(self) -> ContractCall | None:
        return ContractCall.decode(self.payload) if self.payload else None

    def to_json(self) -> dict:
        out = {
            "hash": "0x" + self.hash.hex(),
            "nonce": self.nonce,
            "gas_price": str(self.gas_price),
            "gas_limit": self.gas_limit,
            "to": "0x" + self.to.hex() if self.to else None,
            "value": str(self.value),
            "payload": "0x" + self.payload.hex(),
        }
        try:
            out["from"] = "0x" + self.sender.hex()
        except InvalidSignature:
            out["from"] = None
        return out
