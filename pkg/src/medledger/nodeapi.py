"""HTTP/JSON front end for a running chain: zero-gas queries and transaction submission.

GET   /account/{addr}  /trust/{kind}/{addr}  /license/{addr}
      /treatments/{addr}  /evidence/{addr}  /block/{n}  /status
POST  /tx    {"raw": "<hex of a signed transaction>"}
POST  /mine  (test mode only)

Reads are served from a copy of the state taken after the latest block, so
they never observe a half-executed block and never touch the live state.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .crypto import InvalidAddress, to_address, to_checksum_address
from .ledger import Chain, TxRejected
from .state import WorldState
from .trustsuite import TRUST_KINDS, TreatmentRecord

log = logging.getLogger(__name__)

PORT_ENV = "MEDLEDGER_PORT"
CONFIG_ENV = "MEDLEDGER_CONFIG"
DEFAULT_PORT = 8545
MAX_BODY_BYTES = 1 << 20


@dataclass(frozen=True)
class ApiConfig:
    port: int = DEFAULT_PORT
    read_only: bool = False
    test_mode: bool = False
    host: str = "127.0.0.1"

    def __post_init__(self):
        if not 1 <= self.port <= 65535 and self.port != 0:
            raise ValueError(f"port {self.port} is outside 1-65535")

    @classmethod
    def from_env(cls, **overrides: Any) -> ApiConfig:
        if overrides.get("port") is None and os.environ.get(PORT_ENV):
            overrides["port"] = int(os.environ[PORT_ENV])
        return cls(**{k: v for k, v in overrides.items() if v is not None})


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status, self.code, self.message = status, code, message

    def body(self) -> dict:
        return {"error": self.code, "message": self.message}


def _address(text: str) -> bytes:
    try:
        return to_address(text)
    except (InvalidAddress, ValueError) as exc:
        raise ApiError(400, "invalid_address", str(exc)) from exc


def _hex(value: bytes | None) -> str | None:
    return None if value is None else to_checksum_address(value)


def _number(value: Fraction | None):
    if value is None:
        return None
    return int(value) if value.denominator == 1 else float(value)


def _treatment_view(rec: TreatmentRecord) -> dict:
    return {
        "id": rec.id,
        "treatment_provider": _hex(rec.treatment_provider),
        "patient": _hex(rec.patient),
        "data_hash": "0x" + rec.data_hash.hex(),
        "data_url": rec.data_url,
        "approving_license": _hex(rec.approving_license),
        "approved": rec.approved,
    }


class NodeService:
    """Request handling without any HTTP; the server below is a thin shell."""

    def __init__(self, chain: Chain, config: ApiConfig | None = None):
        self.chain = chain
        self.config = config or ApiConfig()
        self._refresh()

    def _refresh(self) -> None:
        with self.chain.lock:
            self._view: tuple[int, WorldState] = (self.chain.head.number, self.chain.state.copy())

    def mine(self) -> dict:
        with self.chain.lock:
            block, receipts = self.chain.produce_block()
            self._refresh()
        log.info("block %d: %d txs, %d gas", block.number, len(block.transactions), block.gas_used)
        return block.to_json(receipts)

    # -- reads --------------------------------------------------------------

    def get(self, path: str) -> dict:
        parts = [p for p in path.split("?")[0].split("/") if p]
        height, state = self._view
        suite = self.chain.suite
        match parts:
            case ["status"]:
                return {"height": height, "state_root": "0x" + state.root().hex(),
                        "pending": len(self.chain.mempool)}
            case ["account", addr]:
                address = _address(addr)
                return {"address": _hex(address), "nonce": state.nonce(address),
                        "balance": str(state.balance(address))}
            case ["trust", kind, addr]:
                if kind not in (*TRUST_KINDS, "authority"):
                    raise ApiError(400, "unknown_kind", f"unknown trust kind {kind!r}")
                address = _address(addr)
                return {"address": _hex(address), "kind": kind,
                        "trusted": suite.query_trust(state, address, kind)}
            case ["license", addr]:
                holder = _address(addr)
                lic = suite.license(state, holder)
                return {
                    "holder": _hex(holder),
                    "issuer": _hex(lic.issuer) if lic else None,
                    "provider": _hex(lic.provider) if lic else None,
                    "pending_moves": {k: {"destination": _hex(d), "proposer": _hex(p)}
                                      for k, (d, p) in (lic.pending_moves.items() if lic else ())},
                    "trusted": suite.query_license_trust(state, holder),
                }
            case ["treatments", addr]:
                holder = _address(addr)
                return {"holder": _hex(holder),
                        "treatments": [_treatment_view(t) for t in suite.treatments_by(state, holder)]}
            case ["evidence", addr]:
                holder = _address(addr)
                ev = suite.query_evidence(state, holder)
                return {"holder": _hex(holder), "count": ev.experience_count,
                        "ratings": list(ev.ratings), "mean": _number(ev.mean_rating)}
            case ["block", number]:
                try:
                    n = int(number)
                except ValueError:
                    raise ApiError(400, "invalid_block_number", f"not a block number: {number!r}")
                if not 0 <= n <= height:
                    raise ApiError(404, "unknown_block", f"no block {n}")
                return self.chain.blocks[n].to_json(self.chain.block_receipts[n])
        raise ApiError(404, "not_found", f"no such endpoint: {path}")

    # -- writes -------------------------------------------------------------

    def post(self, path: str, body: bytes) -> dict:
        if path == "/mine":
            if not self.config.test_mode:
                raise ApiError(404, "not_found", "/mine is only available in test mode")
            return self.mine()
        if path != "/tx":
            raise ApiError(404, "not_found", f"no such endpoint: {path}")
        if self.config.read_only:
            raise ApiError(403, "read_only", "this node does not accept transactions")
        try:
            raw_hex = json.loads(body)["raw"]
            raw = bytes.fromhex(raw_hex[2:] if raw_hex.startswith("0x") else raw_hex)
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise ApiError(400, "parse_error", f"expected {{\"raw\": hex}}: {exc}") from exc
        try:
            tx_hash = self.chain.submit_raw(raw)
        except TxRejected as exc:
            raise ApiError(400, exc.reason.code, str(exc)) from exc
        return {"hash": "0x" + tx_hash.hex()}


def _encode(body: dict) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


class _Handler(BaseHTTPRequestHandler):
    server: NodeServer
    protocol_version = "HTTP/1.1"

    def _reply(self, status: int, body: dict) -> None:
        data = _encode(body)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _dispatch(self, fn, *args) -> None:
        try:
            self._reply(200, fn(*args))
        except ApiError as exc:
            self._reply(exc.status, exc.body())
        except Exception:  # keep serving; the traceback goes to the log
            log.exception("unhandled error for %s %s", self.command, self.path)
            self._reply(500, {"error": "internal", "message": "internal error"})

    def do_GET(self) -> None:
        self._dispatch(self.server.service.get, self.path)

    def do_POST(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            self._reply(413, {"error": "too_large", "message": "request body too large"})
            return
        self._dispatch(self.server.service.post, self.path, self.rfile.read(length))

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)


class NodeServer(ThreadingHTTPServer):
    """Threaded HTTP server; mines on a timer unless in test mode."""

    daemon_threads = True

    def __init__(self, chain: Chain, config: ApiConfig | None = None):
        self.api_config = config or ApiConfig()
        self.service = NodeService(chain, self.api_config)
        super().__init__((self.api_config.host, self.api_config.port), _Handler)
        self._stop = threading.Event()
        self._workers: list[threading.Thread] = []

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def _mine_loop(self) -> None:
        interval = self.service.chain.config.block_interval_seconds
        while not self._stop.wait(interval):
            self.service.mine()

    def start(self) -> NodeServer:
        """Serve in background threads; returns self."""
        self._workers.append(threading.Thread(target=self.serve_forever, daemon=True))
        if not self.api_config.test_mode:
            self._workers.append(threading.Thread(target=self._mine_loop, daemon=True))
        for t in self._workers:
            t.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self.shutdown()
        self.server_close()
        for t in self._workers:
            t.join(timeout=5)

    def run_forever(self) -> None:
        if not self.api_config.test_mode:
            threading.Thread(target=self._mine_loop, daemon=True).start()
        try:
            self.serve_forever()
        finally:
            self._stop.set()
            self.server_close()
