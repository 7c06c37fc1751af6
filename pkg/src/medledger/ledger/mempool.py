"""Pending-transaction pool and admission rules."""

from __future__ import annotations

import enum
import threading
from typing import Iterator

from ..crypto import InvalidSignature
from ..state import WorldState
from .gas import TRANSFER_GAS
from .transaction import Transaction


class RejectReason(str, enum.Enum):
    INVALID_SIGNATURE = "invalid signature"
    NONCE_TOO_LOW = "nonce too low"
    NONCE_GAP = "nonce too high"
    INSUFFICIENT_FUNDS = "insufficient balance for gas"
    INTRINSIC_GAS = "intrinsic gas too low"
    EXCEEDS_BLOCK_GAS = "gas limit exceeds block gas limit"
    UNDERPRICED_REPLACEMENT = "replacement transaction underpriced"
    CONTRACT_CREATION = "contract creation is not supported"
    MALFORMED = "malformed transaction"

    @property
    def code(self) -> str:
        return self.name.lower()


class TxRejected(Exception):
    def __init__(self, reason: RejectReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason


class Mempool:
    def __init__(self):
        self._by_sender: dict[bytes, dict[int, Transaction]] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return sum(len(q) for q in self._by_sender.values())

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.pending())

    def pending(self) -> list[Transaction]:
        return [tx for sender in sorted(self._by_sender)
                for _, tx in sorted(self._by_sender[sender].items())]

    def get(self, sender: bytes, nonce: int) -> Transaction | None:
        return self._by_sender.get(sender, {}).get(nonce)

    def next_nonce(self, state: WorldState, sender: bytes) -> int:
        """First nonce after the sender's contiguous run of pending transactions."""
        nonce = state.nonce(sender)
        queued = self._by_sender.get(sender, {})
        while nonce in queued:
            nonce += 1
        return nonce

    def add(self, state: WorldState, tx: Transaction, *, block_gas_limit: int) -> bytes:
        with self._lock:
            validate_for_mempool(state, tx, self, block_gas_limit=block_gas_limit)
            self._by_sender.setdefault(tx.sender, {})[tx.nonce] = tx
        return tx.hash

    def remove(self, tx: Transaction) -> None:
        queue = self._by_sender.get(tx.sender)
        if queue is not None and queue.get(tx.nonce) == tx:
            del queue[tx.nonce]
            if not queue:
                del self._by_sender[tx.sender]

    def heads(self) -> list[Transaction]:
        return [q[min(q)] for q in self._by_sender.values()]

    def drop_stale(self, state: WorldState) -> list[Transaction]:
        stale = [tx for q in self._by_sender.values() for tx in q.values()
                 if tx.nonce < state.nonce(tx.sender)]
        for tx in stale:
            self.remove(tx)
        return stale


def validate_for_mempool(state: WorldState, tx: Transaction, mempool: Mempool | None = None,
                         *, block_gas_limit: int) -> None:
    """Raise TxRejected unless ``tx`` may be queued against ``state``.

    The sender must afford ``gas_price * gas_limit``; the nonce must be the
    next one after the sender's on-chain nonce and already-queued run, or
    replace a queued transaction at a strictly higher gas price.
    """
    try:
        sender = tx.sender
    except InvalidSignature as exc:
        raise TxRejected(RejectReason.INVALID_SIGNATURE, str(exc)) from exc
    if tx.to is None:
        raise TxRejected(RejectReason.CONTRACT_CREATION)
    if tx.gas_limit < TRANSFER_GAS:
        raise TxRejected(RejectReason.INTRINSIC_GAS, f"need at least {TRANSFER_GAS}")
    if tx.gas_limit > block_gas_limit:
        raise TxRejected(RejectReason.EXCEEDS_BLOCK_GAS, f"block limit is {block_gas_limit}")
    current = state.nonce(sender)
    if tx.nonce < current:
        raise TxRejected(RejectReason.NONCE_TOO_LOW, f"account nonce is {current}")
    expected = mempool.next_nonce(state, sender) if mempool is not None else current
    if tx.nonce > expected:
        raise TxRejected(RejectReason.NONCE_GAP, f"expected nonce {expected}")
    max_cost = tx.gas_price * tx.gas_limit
    if max_cost > state.balance(sender):
        raise TxRejected(RejectReason.INSUFFICIENT_FUNDS,
                         f"needs {max_cost} wei, balance is {state.balance(sender)}")
    if mempool is not None:
        queued = mempool.get(sender, tx.nonce)
        if queued is not None and tx.gas_price <= queued.gas_price:
            raise TxRejected(RejectReason.UNDERPRICED_REPLACEMENT,
                             f"queued transaction pays {queued.gas_price} per gas")
