"""Deterministic single-node ledger simulator with a healthcare trust-registry protocol."""

__version__ = "0.1.0"
