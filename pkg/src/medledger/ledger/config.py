"""Chain configuration and genesis files (JSON)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Mapping

from ..crypto import to_address
from .gas import GasMode

DEFAULT_BLOCK_GAS_LIMIT = 9_991_391
DEFAULT_BLOCK_INTERVAL = 20
ETHER = 10**18


class ConfigError(ValueError):
    pass


def parse_wei(value: Any) -> int:
    """Accept ints, decimal strings, or strings like ``"1.5 ether"`` / ``"20 gwei"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not an amount: {value!r}")
    if isinstance(value, int):
        amount = value
    elif isinstance(value, str):
        parts = value.split()
        units = {"wei": 1, "gwei": 10**9, "ether": ETHER, "eth": ETHER}
        if len(parts) == 2 and parts[1].lower() in units:
            try:
                scaled = Decimal(parts[0]) * units[parts[1].lower()]
            except InvalidOperation as exc:
                raise ConfigError(f"not an amount: {value!r}") from exc
            if scaled != scaled.to_integral_value():
                raise ConfigError(f"amount is not a whole number of wei: {value!r}")
            amount = int(scaled)
        elif len(parts) == 1:
            try:
                amount = int(parts[0], 0)
            except ValueError as exc:
                raise ConfigError(f"not an amount: {value!r}") from exc
        else:
            raise ConfigError(f"not an amount: {value!r}")
    else:
        raise ConfigError(f"not an amount: {value!r}")
    if amount < 0:
        raise ConfigError("amounts must be non-negative")
    return amount


@dataclass
class Genesis:
    accounts: dict[bytes, int]
    bootstrap_authority: bytes
    coinbase: bytes | None = None
    timestamp: int = 0

    @property
    def supply(self) -> int:
        return sum(self.accounts.values())

    @classmethod
    def from_json(cls, data: Any) -> Genesis:
        """Either a bare list of ``{address, balance_wei}`` or an object with
        ``accounts``, ``coinbase``, ``bootstrap_authority`` and ``timestamp``.
        The bootstrap authority defaults to the first listed account."""
        if isinstance(data, list):
            data = {"accounts": data}
        if not isinstance(data, dict) or not isinstance(data.get("accounts"), list):
            raise ConfigError("genesis must be a list of accounts or an object with 'accounts'")
        accounts: dict[bytes, int] = {}
        try:
            for entry in data["accounts"]:
                address = to_address(entry["address"])
                if address in accounts:
                    raise ConfigError(f"duplicate genesis account {entry['address']}")
                accounts[address] = parse_wei(entry.get("balance_wei", 0))
            authority = data.get("bootstrap_authority")
            if authority is not None:
                authority = to_address(authority)
            elif accounts:
                authority = next(iter(accounts))
            else:
                raise ConfigError("genesis needs a bootstrap authority")
            coinbase = to_address(data["coinbase"]) if data.get("coinbase") else None
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid genesis entry: {exc}") from exc
        return cls(accounts, authority, coinbase, int(data.get("timestamp", 0)))

    @classmethod
    def load(cls, path: str | Path) -> Genesis:
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {
            "accounts": [{"address": "0x" + a.hex(), "balance_wei": str(b)}
                         for a, b in self.accounts.items()],
            "bootstrap_authority": "0x" + self.bootstrap_authority.hex(),
            "coinbase": "0x" + self.coinbase.hex() if self.coinbase else None,
            "timestamp": self.timestamp,
        }


@dataclass
class ChainConfig:
    block_gas_limit: int = DEFAULT_BLOCK_GAS_LIMIT
    block_interval_seconds: int = DEFAULT_BLOCK_INTERVAL
    gas_mode: GasMode = GasMode.MEASURED
    gas_table: dict[str, int] = field(default_factory=dict)
    coinbase: bytes | None = None
    genesis: Genesis | None = None

    _KEYS = ("block_gas_limit", "block_interval_seconds", "gas_mode", "gas_table", "coinbase",
             "genesis")

    @classmethod
    def from_json(cls, data: Mapping[str, Any], base_dir: str | Path = ".") -> ChainConfig:
        unknown = set(data) - set(cls._KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            config = cls(
                block_gas_limit=int(data.get("block_gas_limit", DEFAULT_BLOCK_GAS_LIMIT)),
                block_interval_seconds=int(data.get("block_interval_seconds",
                                                    DEFAULT_BLOCK_INTERVAL)),
                gas_mode=GasMode(data.get("gas_mode", GasMode.MEASURED.value)),
                gas_table=dict(data.get("gas_table") or {}),
                coinbase=to_address(data["coinbase"]) if data.get("coinbase") else None,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if config.block_gas_limit <= 0 or config.block_interval_seconds <= 0:
            raise ConfigError("block gas limit and interval must be positive")
        genesis = data.get("genesis")
        if isinstance(genesis, str):
            config.genesis = Genesis.load(Path(base_dir) / genesis)
        elif genesis is not None:
            config.genesis = Genesis.from_json(genesis)
        return config

    @classmethod
    def load(cls, path: str | Path) -> ChainConfig:
        path = Path(path)
        with open(path) as fh:
            return cls.from_json(json.load(fh), base_dir=path.parent)
