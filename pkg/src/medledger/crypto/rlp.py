"""Recursive Length Prefix serialization.

Items are ``bytes`` or (nested) lists of items. Non-negative ``int`` values are
accepted on encode and written as minimal big-endian byte strings, which is
how Ethereum serializes scalars.
"""

from __future__ import annotations

from typing import Union

RLPItem = Union[bytes, int, list, tuple]


class RLPError(ValueError):
    pass


def _int_to_bytes(value: int) -> bytes:
    if value < 0:
        raise RLPError(f"cannot encode negative integer {value}")
    return value.to_bytes((value.bit_length() + 7) // 8, "big")


def _length_prefix(length: int, short_base: int, long_base: int) -> bytes:
    if length < 56:
        return bytes([short_base + length])
    encoded = _int_to_bytes(length)
    return bytes([long_base + len(encoded)]) + encoded


def encode(item: RLPItem) -> bytes:
    if isinstance(item, bool):
        item = int(item)
    if isinstance(item, int):
        item = _int_to_bytes(item)
    if isinstance(item, (bytes, bytearray, memoryview)):
        data = bytes(item)
        if len(data) == 1 and data[0] < 0x80:
            return data
        return _length_prefix(len(data), 0x80, 0xB7) + data
    if isinstance(item, (list, tuple)):
        body = b"".join(encode(x) for x in item)
        return _length_prefix(len(body), 0xC0, 0xF7) + body
    raise TypeError(f"cannot RLP-encode {type(item).__name__}")


def decode(data: bytes) -> bytes | list:
    """Decode a single RLP item, rejecting trailing bytes and non-canonical forms."""
    item, end = _decode_at(bytes(data), 0)
    if end != len(data):
        raise RLPError(f"trailing bytes after offset {end}")
    return item


def _read_length(data: bytes, pos: int, n: int) -> int:
    if pos + n > len(data):
        raise RLPError("truncated length")
    raw = data[pos:pos + n]
    if raw[0] == 0:
        raise RLPError("length has leading zero")
    length = int.from_bytes(raw, "big")
    if length < 56:
        raise RLPError("long form used for short payload")
    return length


def _decode_at(data: bytes, pos: int) -> tuple[bytes | list, int]:
    if pos >= len(data):
        raise RLPError("unexpected end of input")
    prefix = data[pos]
    if prefix < 0x80:
        return data[pos:pos + 1], pos + 1
    if prefix <= 0xB7:
        length = prefix - 0x80
        start = pos + 1
        if length == 1 and start < len(data) and data[start] < 0x80:
            raise RLPError("single byte below 0x80 must not be prefixed")
        kind = "bytes"
    elif prefix <= 0xBF:
        n = prefix - 0xB7
        length = _read_length(data, pos + 1, n)
        start = pos + 1 + n
        kind = "bytes"
    elif prefix <= 0xF7:
        length = prefix - 0xC0
        start = pos + 1
        kind = "list"
    else:
        n = prefix - 0xF7
        length = _read_length(data, pos + 1, n)
        start = pos + 1 + n
        kind = "list"
    end = start + length
    if end > len(data):
        raise RLPError("payload exceeds input")
    if kind == "bytes":
        return data[start:end], end
    items = []
    cursor = start
    while cursor < end:
        item, cursor = _decode_at(data, cursor)
        items.append(item)
    if cursor != end:
        raise RLPError("list payload overrun")
    return items, end


def decode_int(data: bytes) -> int:
    if not isinstance(data, bytes):
        raise RLPError("expected a byte string for an integer")
    if data[:1] == b"\x00":
        raise RLPError("integer has leading zero byte")
    return int.from_bytes(data, "big")
