"""Word-addressed contract storage with Solidity-like slot derivation.

A slot is keccak256(rlp(key parts)); strings are UTF-8, integers big-endian,
addresses their raw 20 bytes. Reads and writes can be traced so the
micro-op gas mode can price them.
"""

from __future__ import annotations

from functools import lru_cache

from ..crypto import keccak256, rlp
from ..state import WorldState

SLOAD = "sload"
SSET = "sset"
SRESET = "sreset"
JUMPDEST = "jumpdest"


@lru_cache(maxsize=1 << 16)
def slot(key: tuple) -> bytes:
    return keccak256(rlp.encode([p.encode() if isinstance(p, str) else p for p in key]))


def addr_to_word(address: bytes) -> int:
    return int.from_bytes(address, "big")


def word_to_addr(word: int) -> bytes:
    return word.to_bytes(20, "big")


class StorageView:
    """Storage of one contract account; ``view[k1, k2] = value``."""

    __slots__ = ("state", "address", "trace")

    def __init__(self, state: WorldState, address: bytes, trace: list[str] | None = None):
        self.state = state
        self.address = address
        self.trace = trace

    @staticmethod
    def _key(key) -> tuple:
        return key if isinstance(key, tuple) else (key,)

    def __getitem__(self, key) -> int:
        if self.trace is not None:
            self.trace.append(SLOAD)
        return self.state.storage_get(self.address, slot(self._key(key)))

    def __setitem__(self, key, value: int) -> None:
        value = int(value)
        k = slot(self._key(key))
        if self.trace is not None:
            old = self.state.storage_get(self.address, k)
            self.trace.append(SSET if old == 0 and value != 0 else SRESET)
        self.state.storage_set(self.address, k, value)

    # typed helpers

    def get_address(self, *key) -> bytes | None:
        word = self[key]
        return word_to_addr(word) if word else None

    def set_address(self, address: bytes | None, *key) -> None:
        self[key] = addr_to_word(address) if address else 0

    def get_flag(self, *key) -> bool:
        return self[key] != 0

    def set_flag(self, flag: bool, *key) -> None:
        self[key] = 1 if flag else 0

    def push(self, value: int, *key) -> int:
        length = self[key + ("len",)]
        self[key + (length,)] = value
        self[key + ("len",)] = length + 1
        return length

    def items(self, *key) -> list[int]:
        length = self[key + ("len",)]
        return [self[key + (i,)] for i in range(length)]

    def set_bytes(self, data: bytes, *key) -> None:
        self[key + ("len",)] = len(data)
        for i in range(0, len(data), 32):
            self[key + (i // 32,)] = int.from_bytes(data[i:i + 32].ljust(32, b"\0"), "big")

    def get_bytes(self, *key) -> bytes:
        length = self[key + ("len",)]
        chunks = [self[key + (i,)].to_bytes(32, "big") for i in range((length + 31) // 32)]
        return b"".join(chunks)[:length]
