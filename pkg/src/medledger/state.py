"""World state: accounts, contract storage, journaled snapshots and state roots.

Accounts that are entirely zero (nonce 0, balance 0, no storage) are never
materialized, so an untouched address and a drained-but-never-used one hash
identically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .crypto import keccak256, rlp

WORD_MAX = (1 << 256) - 1

_handle_ids = itertools.count(1)


class StateError(Exception):
    pass


class InsufficientBalance(StateError):
    pass


class StaleSnapshot(StateError):
    pass


@dataclass(frozen=True, slots=True)
class AccountState:
    nonce: int = 0
    balance: int = 0


EMPTY_ACCOUNT = AccountState()


@dataclass(frozen=True)
class SnapshotHandle:
    owner: int
    serial: int


class WorldState:
    def __init__(self, balances: dict[bytes, int] | None = None):
        self._accounts: dict[bytes, AccountState] = {}
        self._storage: dict[bytes, dict[bytes, int]] = {}
        self._journal: list[tuple] = []
        self._snapshots: list[tuple[int, int]] = []
        self._id = next(_handle_ids)
        for address, balance in (balances or {}).items():
            self.set_balance(address, balance)

    # -- accounts ---------------------------------------------------------

    def account(self, address: bytes) -> AccountState:
        return self._accounts.get(address, EMPTY_ACCOUNT)

    def balance(self, address: bytes) -> int:
        return self.account(address).balance

    def nonce(self, address: bytes) -> int:
        return self.account(address).nonce

    def _put_account(self, address: bytes, account: AccountState) -> None:
        if self._snapshots:
            self._journal.append(("account", address, self._accounts.get(address)))
        if account == EMPTY_ACCOUNT:
            self._accounts.pop(address, None)
        else:
            self._accounts[address] = account

    def set_balance(self, address: bytes, balance: int) -> None:
        if balance < 0:
            raise InsufficientBalance(f"balance of {address.hex()} would become negative")
        current = self.account(address)
        self._put_account(address, AccountState(current.nonce, balance))

    def credit(self, address: bytes, amount: int) -> None:
        if amount < 0:
            raise ValueError("credit amount must be non-negative")
        if amount:
            self.set_balance(address, self.balance(address) + amount)

    def debit(self, address: bytes, amount: int) -> None:
        if amount < 0:
            raise ValueError("debit amount must be non-negative")
        balance = self.balance(address)
        if balance < amount:
            raise InsufficientBalance(
                f"{address.hex()} holds {balance} wei, cannot debit {amount}")
        if amount:
            self.set_balance(address, balance - amount)

    def transfer(self, sender: bytes, recipient: bytes, amount: int) -> None:
        # Check first so a failed transfer leaves no trace.
        if self.balance(sender) < amount:
            raise InsufficientBalance(
                f"{sender.hex()} holds {self.balance(sender)} wei, cannot send {amount}")
        self.debit(sender, amount)
        self.credit(recipient, amount)

    def increment_nonce(self, address: bytes) -> int:
        current = self.account(address)
        self._put_account(address, AccountState(current.nonce + 1, current.balance))
        return current.nonce + 1

    def addresses(self) -> Iterator[bytes]:
        return iter(sorted(set(self._accounts) | set(self._storage)))

    def total_supply(self) -> int:
        return sum(acc.balance for acc in self._accounts.values())

    # -- storage ----------------------------------------------------------

    def storage_get(self, address: bytes, key: bytes) -> int:
        slots = self._storage.get(address)
        if slots is None:
            return 0
        return slots.get(key, 0)

    def storage_set(self, address: bytes, key: bytes, value: int) -> None:
        if not 0 <= value <= WORD_MAX:
            raise ValueError("storage values are 256-bit unsigned words")
        slots = self._storage.get(address)
        old = 0 if slots is None else slots.get(key, 0)
        if old == value:
            return
        if self._snapshots:
            self._journal.append(("storage", address, key, old))
        self._write_slot(address, key, value)

    def _write_slot(self, address: bytes, key: bytes, value: int) -> None:
        if value:
            self._storage.setdefault(address, {})[key] = value
        else:
            slots = self._storage.get(address)
            if slots is not None:
                slots.pop(key, None)
                if not slots:
                    del self._storage[address]

    def storage_items(self, address: bytes) -> list[tuple[bytes, int]]:
        return sorted(self._storage.get(address, {}).items())

    # -- snapshots --------------------------------------------------------

    def snapshot(self) -> SnapshotHandle:
        handle = SnapshotHandle(self._id, next(_handle_ids))
        self._snapshots.append((handle.serial, len(self._journal)))
        return handle

    def _pop_to(self, handle: SnapshotHandle) -> int:
        if handle.owner != self._id:
            raise StaleSnapshot("snapshot belongs to a different state")
        for depth in range(len(self._snapshots) - 1, -1, -1):
            if self._snapshots[depth][0] == handle.serial:
                mark = self._snapshots[depth][1]
                del self._snapshots[depth:]
                return mark
        raise StaleSnapshot("snapshot was already reverted or committed")

    def revert(self, handle: SnapshotHandle) -> WorldState:
        """Undo every change since ``handle``; inner snapshots become stale."""
        mark = self._pop_to(handle)
        while len(self._journal) > mark:
            entry = self._journal.pop()
            if entry[0] == "account":
                _, address, previous = entry
                if previous is None:
                    self._accounts.pop(address, None)
                else:
                    self._accounts[address] = previous
            else:
                _, address, key, old = entry
                self._write_slot(address, key, old)
        if not self._snapshots:
            self._journal.clear()
        return self

    def commit(self, handle: SnapshotHandle) -> None:
        """Drop ``handle`` (and any inner snapshot) while keeping the changes."""
        self._pop_to(handle)
        if not self._snapshots:
            self._journal.clear()

    # -- views ------------------------------------------------------------

    def copy(self) -> WorldState:
        """Detached copy without snapshot history, safe to share read-only."""
        clone = WorldState()
        clone._accounts = dict(self._accounts)
        clone._storage = {addr: dict(slots) for addr, slots in self._storage.items()}
        return clone

    def contents(self) -> tuple[dict[bytes, AccountState], dict[bytes, dict[bytes, int]]]:
        return dict(self._accounts), {a: dict(s) for a, s in self._storage.items()}

    def root(self) -> bytes:
        return compute_state_root(self)

    def __eq__(self, other):
        if not isinstance(other, WorldState):
            return NotImplemented
        return self._accounts == other._accounts and self._storage == other._storage

    __hash__ = None


def apply_transfer(state: WorldState, sender: bytes, recipient: bytes, amount: int) -> WorldState:
    state.transfer(sender, recipient, amount)
    return state


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    """Binary Keccak Merkle root; an unpaired node is carried up unchanged."""
    if not leaves:
        return keccak256(b"")
    level = [keccak256(leaf) for leaf in leaves]
    while len(level) > 1:
        nxt = [keccak256(level[i] + level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def storage_root(state: WorldState, address: bytes) -> bytes:
    return merkle_root([key + value.to_bytes(32, "big")
                        for key, value in state.storage_items(address)])


def account_encoding(state: WorldState, address: bytes) -> bytes:
    acc = state.account(address)
    return rlp.encode([acc.nonce, acc.balance, storage_root(state, address)])


def compute_state_root(state: WorldState) -> bytes:
    leaves = [address + keccak256(account_encoding(state, address))
              for address in state.addresses()]
    return merkle_root(leaves)
