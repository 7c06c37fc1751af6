import pytest
from hypothesis import given
from hypothesis import strategies as st

from medledger.crypto import rlp
from oracles import rlp_ref

VECTORS = [
    (b"", "80"),
    (b"dog", "83646f67"),
    ([], "c0"),
    (0, "80"),
    (15, "0f"),
    (1024, "820400"),
    ([b"cat", b"dog"], "c88363617483646f67"),
    ([[], [[]], [[], [[]]]], "c7c0c1c0c3c0c1c0"),
    (b"\x00", "00"),
    (b"\x7f", "7f"),
    (b"\x80", "8180"),
]


@pytest.mark.parametrize("item,expected", VECTORS)
def test_reference_vectors(item, expected):
    assert rlp.encode(item).hex() == expected
    assert rlp_ref.encode_hex(item) == expected


@pytest.mark.parametrize("n", [0, 1, 2, 55, 56, 255, 256, 1024])
def test_string_length_boundaries(n):
    data = b"a" * n
    assert rlp.encode(data) == rlp_ref.encode(data)
    assert rlp.decode(rlp.encode(data)) == data


def test_long_list_boundary():
    short = [b"x" * 54]  # item encodes to 55 bytes
    long = [b"x" * 55]  # item encodes to 56 bytes
    assert rlp.encode(short)[0] == 0xC0 + 55
    assert rlp.encode(long)[:2] == bytes([0xF8, 56])
    assert rlp.encode(long) == rlp_ref.encode(long)


items = st.recursive(st.binary(max_size=80), lambda inner: st.lists(inner, max_size=6), max_leaves=20)


@given(items)
def test_round_trip_and_oracle_agreement(item):
    encoded = rlp.encode(item)
    assert encoded == rlp_ref.encode(item)
    assert rlp.decode(encoded) == item


@given(st.integers(min_value=0, max_value=2**256))
def test_integers(n):
    assert rlp.encode(n) == rlp_ref.encode(n)
    assert rlp.decode_int(rlp.decode(rlp.encode(n))) == n


@pytest.mark.parametrize("raw", [
    "8100",          # single byte below 0x80 must not be prefixed
    "b800",          # long form for a short string
    "820004",        # fine as bytes, but not as a canonical int (checked below)
    "c3",            # truncated list
    "83646f",        # truncated string
    "8080",          # trailing bytes
    "",              # nothing at all
])
def test_non_canonical_or_truncated_input(raw):
    data = bytes.fromhex(raw)
    if raw == "820004":
        with pytest.raises(rlp.RLPError):
            rlp.decode_int(rlp.decode(data))
        return
    with pytest.raises(rlp.RLPError):
        rlp.decode(data)


def test_negative_integers_are_not_encodable():
    with pytest.raises((ValueError, TypeError)):
        rlp.encode(-1)
