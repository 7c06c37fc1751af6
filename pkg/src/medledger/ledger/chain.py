"""Transaction execution, block production and the single-sequencer chain."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

from ..crypto import ZERO_ADDRESS, keccak256, rlp
from ..state import InsufficientBalance, WorldState, merkle_root
from ..trustsuite import CallDataError, ContractCall, ContractError, LogEntry, TrustSuite
from .config import ChainConfig, Genesis
from .gas import TRANSFER_GAS, GasSchedule
from .mempool import Mempool, RejectReason, TxRejected, validate_for_mempool
from .transaction import MalformedTransaction, Transaction

SUCCEEDED = "succeeded"
FAILED = "failed"


class InvalidTransaction(Exception):
    """A transaction that cannot be included at all (as opposed to one that fails)."""


@dataclass
class Receipt:
    tx_hash: bytes
    status: str
    gas_used: int
    cumulative_gas: int
    logs: list[LogEntry] = field(default_factory=list)
    error: str | None = None
    gas_key: str | None = None

    @property
    def succeeded(self) -> bool:
        return self.status == SUCCEEDED

    def encode(self) -> bytes:
        logs = [[log.contract.encode(), log.event.encode(),
                 json.dumps(log.to_json()["args"], sort_keys=True).encode()]
                for log in self.logs]
        return rlp.encode([self.tx_hash, 1 if self.succeeded else 0, self.gas_used,
                           self.cumulative_gas, logs])

    def to_json(self) -> dict:
        return {
            "tx_hash": "0x" + self.tx_hash.hex(),
            "status": self.status,
            "gas_used": self.gas_used,
            "cumulative_gas": self.cumulative_gas,
            "gas_key": self.gas_key,
            "error": self.error,
            "logs": [log.to_json() for log in self.logs],
        }


@dataclass(frozen=True)
class Block:
    number: int
    timestamp: int
    parent_hash: bytes
    tx_root: bytes
    state_root: bytes
    receipt_root: bytes
    gas_used: int
    gas_limit: int
    coinbase: bytes
    transactions: tuple[Transaction, ...] = ()

    def header_fields(self) -> list:
        return [self.number, self.timestamp, self.parent_hash, self.tx_root, self.state_root,
                self.receipt_root, self.gas_used, self.gas_limit, self.coinbase]

    @property
    def hash(self) -> bytes:
        return keccak256(rlp.encode(self.header_fields()))

    def to_json(self, receipts: list[Receipt] | None = None) -> dict:
        out = {
            "number": self.number,
            "hash": "0x" + self.hash.hex(),
            "timestamp": self.timestamp,
            "parent_hash": "0x" + self.parent_hash.hex(),
            "tx_root": "0x" + self.tx_root.hex(),
            "state_root": "0x" + self.state_root.hex(),
            "receipt_root": "0x" + self.receipt_root.hex(),
            "gas_used": self.gas_used,
            "gas_limit": self.gas_limit,
            "coinbase": "0x" + self.coinbase.hex(),
            "transactions": [tx.to_json() for tx in self.transactions],
        }
        if receipts is not None:
            out["receipts"] = [r.to_json() for r in receipts]
        return out


@dataclass
class ExecutionContext:
    suite: TrustSuite
    gas: GasSchedule = field(default_factory=GasSchedule)
    coinbase: bytes = ZERO_ADDRESS


@dataclass
class MessageResult:
    status: str
    gas_used: int
    logs: list[LogEntry]
    error: str | None
    gas_key: str | None
    value: object = None


def apply_message(state: WorldState, ctx: ExecutionContext, sender: bytes, to: bytes,
                  value: int, payload: bytes, gas_limit: int) -> MessageResult:
    """Value transfer plus contract dispatch, atomically.

    Any failure (bad call data, contract revert, out of gas, unaffordable
    value) rolls back everything done here. Gas for a failure that exceeds
    ``gas_limit`` is capped at ``gas_limit``. Nonces and fees are the
    caller's business.
    """
    snap = state.snapshot()
    trace: list[str] = []
    gas_key = None
    result = None
    logs: list[LogEntry] = []
    error = None
    target = ctx.suite.contract_at(to)
    try:
        state.transfer(sender, to, value)
        if target is None:
            if payload:
                raise CallDataError("call data sent to an account without a contract")
            gas_key = "transfer"
        else:
            call = ContractCall.decode(payload) if payload else None
            if call is None:
                raise CallDataError("plain value transfers to contracts are not accepted")
            if call.target != target:
                raise CallDataError(f"call for {call.target} sent to the {target} contract")
            outcome = ctx.suite.invoke(state, sender, call, trace)
            gas_key, logs, result = outcome.gas_key, outcome.logs, outcome.value
    except ContractError as exc:
        gas_key = exc.gas_key
        error = f"{exc.code}: {exc}"
    except (CallDataError, InsufficientBalance) as exc:
        error = str(exc)
    if gas_key == "transfer":
        gas = TRANSFER_GAS
    else:
        gas = ctx.gas.call_cost(gas_key, trace)
    if error is None and gas > gas_limit:
        error = f"out of gas: needs {gas}, limit {gas_limit}"
    if error is not None:
        state.revert(snap)
        return MessageResult(FAILED, min(gas, gas_limit), [], error, gas_key)
    state.commit(snap)
    return MessageResult(SUCCEEDED, gas, logs, None, gas_key, result)


def execute_transaction(state: WorldState, tx: Transaction, ctx: ExecutionContext,
                        cumulative_gas: int = 0) -> Receipt:
    """Apply ``tx`` to ``state`` in place and return its receipt.

    The full ``gas_limit * gas_price`` is escrowed up front; the unused part
    is refunded and the used part goes to the coinbase, failed or not.
    """
    sender = tx.sender
    if tx.to is None:
        raise InvalidTransaction("contract creation is not supported")
    if tx.nonce != state.nonce(sender):
        raise InvalidTransaction(f"nonce {tx.nonce} != account nonce {state.nonce(sender)}")
    escrow = tx.gas_price * tx.gas_limit
    if state.balance(sender) < escrow:
        raise InvalidTransaction("balance does not cover gas_limit * gas_price")
    if tx.gas_limit < TRANSFER_GAS:
        raise InvalidTransaction("gas limit below intrinsic cost")
    state.debit(sender, escrow)
    state.increment_nonce(sender)
    msg = apply_message(state, ctx, sender, tx.to, tx.value, tx.payload, tx.gas_limit)
    state.credit(sender, (tx.gas_limit - msg.gas_used) * tx.gas_price)
    state.credit(ctx.coinbase, msg.gas_used * tx.gas_price)
    return Receipt(tx.hash, msg.status, msg.gas_used, cumulative_gas + msg.gas_used,
                   msg.logs, msg.error, msg.gas_key)


def _priority(tx: Transaction):
    return (-tx.gas_price, tx.sender, tx.nonce)


def produce_block(state: WorldState, mempool: Mempool, ctx: ExecutionContext,
                  parent: Block, *, block_gas_limit: int,
                  interval: int) -> tuple[Block, list[Receipt]]:
    """Pack and execute transactions from ``mempool`` on top of ``parent``.

    Selection is greedy by descending gas price (ties: lower sender, then
    lower nonce), taking each sender's lowest pending nonce first, and stops
    at the first transaction whose gas limit no longer fits.
    """
    included: list[Transaction] = []
    receipts: list[Receipt] = []
    used = 0
    mempool.drop_stale(state)
    while True:
        ready = []
        for head in mempool.heads():
            if head.nonce != state.nonce(head.sender):
                continue
            if state.balance(head.sender) < head.gas_price * head.gas_limit:
                mempool.remove(head)
                continue
            ready.append(head)
        if not ready:
            break
        tx = min(ready, key=_priority)
        if used + tx.gas_limit > block_gas_limit:
            break
        mempool.remove(tx)
        receipt = execute_transaction(state, tx, ctx, used)
        used = receipt.cumulative_gas
        included.append(tx)
        receipts.append(receipt)
    block = Block(
        number=parent.number + 1,
        timestamp=parent.timestamp + interval,
        parent_hash=parent.hash,
        tx_root=merkle_root([tx.encode() for tx in included]),
        state_root=state.root(),
        receipt_root=merkle_root([r.encode() for r in receipts]),
        gas_used=used,
        gas_limit=block_gas_limit,
        coinbase=ctx.coinbase,
        transactions=tuple(included),
    )
    return block, receipts


class Chain:
    """One sequencer: world state, mempool, block history and receipts."""

    def __init__(self, genesis: Genesis, config: ChainConfig | None = None):
        self.config = config or ChainConfig()
        self.genesis = genesis
        self.state = WorldState(dict(genesis.accounts))
        self.suite = TrustSuite.deploy(self.state, genesis.bootstrap_authority)
        self.genesis_supply = self.state.total_supply()
        coinbase = self.config.coinbase or genesis.coinbase or ZERO_ADDRESS
        self.ctx = ExecutionContext(
            suite=self.suite,
            gas=GasSchedule.with_overrides(self.config.gas_mode, self.config.gas_table),
            coinbase=coinbase,
        )
        self.mempool = Mempool()
        self.blocks: list[Block] = [Block(
            number=0,
            timestamp=genesis.timestamp,
            parent_hash=bytes(32),
            tx_root=merkle_root([]),
            state_root=self.state.root(),
            receipt_root=merkle_root([]),
            gas_used=0,
            gas_limit=self.config.block_gas_limit,
            coinbase=coinbase,
        )]
        self.block_receipts: list[list[Receipt]] = [[]]
        self.receipts: dict[bytes, Receipt] = {}
        self._lock = threading.RLock()

    @classmethod
    def from_config(cls, config: ChainConfig) -> Chain:
        if config.genesis is None:
            raise ValueError("configuration does not name a genesis file")
        return cls(config.genesis, config)

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def submit(self, tx: Transaction) -> bytes:
        with self._lock:
            return self.mempool.add(self.state, tx, block_gas_limit=self.config.block_gas_limit)

    def submit_raw(self, raw: bytes) -> bytes:
        try:
            tx = Transaction.decode(raw)
        except MalformedTransaction as exc:
            raise TxRejected(RejectReason.MALFORMED, str(exc)) from exc
        return self.submit(tx)

    def validate(self, tx: Transaction) -> None:
        validate_for_mempool(self.state, tx, self.mempool,
                             block_gas_limit=self.config.block_gas_limit)

    def next_nonce(self, address: bytes) -> int:
        return self.mempool.next_nonce(self.state, address)

    def produce_block(self) -> tuple[Block, list[Receipt]]:
        with self._lock:
            block, receipts = produce_block(
                self.state, self.mempool, self.ctx, self.head,
                block_gas_limit=self.config.block_gas_limit,
                interval=self.config.block_interval_seconds)
            self.blocks.append(block)
            self.block_receipts.append(receipts)
            for receipt in receipts:
                self.receipts[receipt.tx_hash] = receipt
            return block, receipts

    def block(self, number: int) -> Block | None:
        if 0 <= number < len(self.blocks):
            return self.blocks[number]
        return None

    def receipt(self, tx_hash: bytes) -> Receipt | None:
        return self.receipts.get(tx_hash)

    def dump_blocks(self) -> list[dict]:
        return [b.to_json(r) for b, r in zip(self.blocks, self.block_receipts)]
