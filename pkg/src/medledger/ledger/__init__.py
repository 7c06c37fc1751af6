"""Transactions, mempool admission, gas metering, execution and block production."""

from ..trustsuite import ContractCall, LogEntry
from .chain import (
    FAILED,
    SUCCEEDED,
    Block,
    Chain,
    ExecutionContext,
    InvalidTransaction,
    MessageResult,
    Receipt,
    apply_message,
    execute_transaction,
    produce_block,
)
from .config import ETHER, ChainConfig, ConfigError, Genesis, parse_wei
from .gas import MEASURED_GAS, MICRO_OP_GAS, TRANSFER_GAS, GasMode, GasSchedule, micro_gas_cost
from .mempool import Mempool, RejectReason, TxRejected, validate_for_mempool
from .transaction import MalformedTransaction, Transaction

__all__ = [
    "ContractCall", "LogEntry", "FAILED", "SUCCEEDED", "Block", "Chain", "ExecutionContext",
    "InvalidTransaction", "MessageResult", "Receipt", "apply_message", "execute_transaction",
    "produce_block", "ETHER", "ChainConfig", "ConfigError", "Genesis", "parse_wei",
    "MEASURED_GAS", "MICRO_OP_GAS", "TRANSFER_GAS", "GasMode", "GasSchedule", "micro_gas_cost",
    "Mempool", "RejectReason", "TxRejected", "validate_for_mempool", "MalformedTransaction",
    "Transaction",
]
