"""Reference RLP encoder written directly from the length-prefix rules.

Deliberately naive (string concatenation over hex) so it shares no code
shape with the package encoder.
"""


def _hexlen(n: int) -> str:
    h = format(n, "x")
    return h if len(h) % 2 == 0 else "0" + h


def encode_hex(item) -> str:
    if isinstance(item, int):
        item = b"" if item == 0 else bytes.fromhex(_hexlen(item))
    if isinstance(item, str):
        item = item.encode()
    if isinstance(item, (bytes, bytearray)):
        body = bytes(item).hex()
        if len(item) == 1 and item[0] < 0x80:
            return body
        return _prefix(len(item), 0x80) + body
    body = "".join(encode_hex(x) for x in item)
    return _prefix(len(body) // 2, 0xC0) + body


def _prefix(length: int, base: int) -> str:
    if length <= 55:
        return format(base + length, "02x")
    size = _hexlen(length)
    return format(base + 55 + len(size) // 2, "02x") + size


def encode(item) -> bytes:
    return bytes.fromhex(encode_hex(item))
