"""Call-data layout for the five contracts.

Every call is ``rlp([contract, method, [arg, ...]])`` with arguments in the
fixed order listed in ``METHODS``. Argument wire forms:

=============  ===========================================================
address        20 raw bytes
uint           minimal big-endian integer (RLP scalar)
bool           RLP scalar 0 or 1
bytes32        32 raw bytes
opt_bytes32    32 raw bytes, or the empty string for "absent"
text           UTF-8 bytes
signature      65 bytes ``r || s || 27+v``
=============  ===========================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..crypto import Signature, rlp, to_address
from ..crypto.rlp import RLPError

AUTHORITY_MANAGER = "AuthorityManager"
TREATMENT_PROVIDER = "TreatmentProvider"
LICENSE = "License"
TREATMENT = "Treatment"
MEASURE = "Measure"

CONTRACTS = (AUTHORITY_MANAGER, TREATMENT_PROVIDER, LICENSE, TREATMENT, MEASURE)

METHODS: dict[tuple[str, str], tuple[tuple[str, str], ...]] = {
    (AUTHORITY_MANAGER, "propose"): (("action", "text"), ("target", "address")),
    (AUTHORITY_MANAGER, "vote"): (("proposal_id", "uint"),),
    (AUTHORITY_MANAGER, "enact"): (("proposal_id", "uint"),),
    (TREATMENT_PROVIDER, "register"): (),
    (TREATMENT_PROVIDER, "set_trust"): (("subject", "address"), ("trusted", "bool")),
    (LICENSE, "register"): (("kind", "text"),),
    (LICENSE, "set_trust"): (("kind", "text"), ("subject", "address"), ("trusted", "bool")),
    (LICENSE, "issue"): (("holder", "address"),),
    (LICENSE, "propose_move"): (("kind", "text"), ("holder", "address"), ("destination", "address")),
    (LICENSE, "approve_move"): (("kind", "text"), ("holder", "address")),
    (TREATMENT, "create"): (("patient", "address"), ("data_hash", "bytes32"), ("data_url", "text")),
    (TREATMENT, "approve"): (("treatment_id", "uint"), ("consent", "signature")),
    (MEASURE, "submit"): (("treatment_id", "uint"), ("rating", "uint"), ("comment_hash", "opt_bytes32")),
}


class CallDataError(ValueError):
    pass


def coerce(kind: str, value: Any) -> Any:
    """Normalize a Python/JSON value to the canonical in-memory form of ``kind``."""
    try:
        if kind == "address":
            return to_address(value)
        if kind == "uint":
            if isinstance(value, bool) or not isinstance(value, (int, str)):
                raise CallDataError(f"expected an integer, got {value!r}")
            number = int(value, 0) if isinstance(value, str) else value
            if number < 0:
                raise CallDataError("uint arguments must be non-negative")
            return number
        if kind == "bool":
            if isinstance(value, bool):
                return value
            if value in (0, 1):
                return bool(value)
            raise CallDataError(f"expected a boolean, got {value!r}")
        if kind in ("bytes32", "opt_bytes32"):
            if value is None or value == b"" or value == "":
                if kind == "opt_bytes32":
                    return None
                raise CallDataError("bytes32 argument is required")
            raw = bytes.fromhex(value[2:] if value.startswith("0x") else value) \
                if isinstance(value, str) else bytes(value)
            if len(raw) != 32:
                raise CallDataError("expected 32 bytes")
            return raw
        if kind == "text":
            if isinstance(value, bytes):
                return value.decode("utf-8")
            if not isinstance(value, str):
                raise CallDataError(f"expected text, got {value!r}")
            return value
        if kind == "signature":
            if isinstance(value, Signature):
                return value
            if isinstance(value, str):
                return Signature.from_hex(value)
            return Signature.from_bytes(bytes(value))
    except CallDataError:
        raise
    except (ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CallDataError(f"bad {kind} argument: {exc}") from exc
    raise CallDataError(f"unknown argument type {kind}")


def _to_wire(kind: str, value: Any):
    if kind == "bool":
        return int(value)
    if kind == "opt_bytes32":
        return value or b""
    if kind == "text":
        return value.encode("utf-8")
    if kind == "signature":
        return value.to_bytes()
    return value


def _from_wire(kind: str, raw) -> Any:
    if not isinstance(raw, bytes):
        raise CallDataError(f"{kind} argument must be a byte string")
    if kind == "uint":
        return rlp.decode_int(raw)
    if kind == "bool":
        number = rlp.decode_int(raw)
        if number not in (0, 1):
            raise CallDataError("bool must be 0 or 1")
        return bool(number)
    return coerce(kind, raw)


@dataclass(frozen=True)
class ContractCall:
    target: str
    method: str
    args: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        schema = METHODS.get((self.target, self.method))
        if schema is None:
            raise CallDataError(f"unknown method {self.target}.{self.method}")
        names = {name for name, _ in schema}
        extra = set(self.args) - names
        if extra:
            raise CallDataError(f"unexpected arguments for {self.target}.{self.method}: {sorted(extra)}")
        normalized = {}
        for name, kind in schema:
            if name not in self.args and kind != "opt_bytes32":
                raise CallDataError(f"missing argument {name!r} for {self.target}.{self.method}")
            normalized[name] = coerce(kind, self.args.get(name))
        object.__setattr__(self, "args", normalized)

    @property
    def schema(self):
        return METHODS[(self.target, self.method)]

    def encode(self) -> bytes:
        wire = [_to_wire(kind, self.args[name]) for name, kind in self.schema]
        return rlp.encode([self.target.encode(), self.method.encode(), wire])

    @classmethod
    def decode(cls, payload: bytes) -> ContractCall:
        try:
            item = rlp.decode(payload)
        except RLPError as exc:
            raise CallDataError(f"call data is not valid RLP: {exc}") from exc
        if not (isinstance(item, list) and len(item) == 3 and isinstance(item[0], bytes)
                and isinstance(item[1], bytes) and isinstance(item[2], list)):
            raise CallDataError("call data must be [contract, method, [args]]")
        try:
            target, method = item[0].decode(), item[1].decode()
        except UnicodeDecodeError as exc:
            raise CallDataError("contract and method names must be UTF-8") from exc
        schema = METHODS.get((target, method))
        if schema is None:
            raise CallDataError(f"unknown method {target}.{method}")
        if len(item[2]) != len(schema):
            raise CallDataError(f"{target}.{method} takes {len(schema)} arguments")
        try:
            args = {name: _from_wire(kind, raw) for (name, kind), raw in zip(schema, item[2])}
        except RLPError as exc:
            raise CallDataError(f"bad argument encoding: {exc}") from exc
        call = cls(target, method, args)
        if call.encode() != bytes(payload):
            raise CallDataError("non-canonical call data")
        return call

    def to_json(self) -> dict:
        return {"contract": self.target, "method": self.method,
                "args": {k: json_value(v) for k, v in self.args.items()}}


def json_value(value: Any) -> Any:
    if isinstance(value, Signature):
        return value.hex()
    if isinstance(value, bytes):
        return "0x" + value.hex()
    return value
