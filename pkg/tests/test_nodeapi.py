import json
import threading
import urllib.error
import urllib.request

import pytest
from conftest import GWEI, Driver, make_chain

from medledger.crypto import PrivateKey, keccak256, to_checksum_address
from medledger.ledger import Transaction
from medledger.nodeapi import ApiConfig, ApiError, NodeServer, NodeService


def _request(url, method="GET", body=None):
    data = None if body is None else (body if isinstance(body, bytes) else json.dumps(body).encode())
    req = urllib.request.Request(url, data=data, method=method)
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


class Node:
    def __init__(self, chain, **cfg):
        self.server = NodeServer(chain, ApiConfig(port=0, **cfg)).start()

    def get(self, path):
        status, raw = _request(self.server.url + path)
        return status, json.loads(raw)

    def post(self, path, body=b""):
        status, raw = _request(self.server.url + path, "POST", body)
        return status, json.loads(raw)


@pytest.fixture
def setup():
    chain, keys = make_chain()
    d = Driver(chain, keys)
    node = Node(chain, test_mode=True)
    yield d, node
    node.server.stop()


def _raw_transfer(d, who, to, value, *, gas_price=GWEI, nonce=None):
    key = d.keys[who] if isinstance(who, str) else who
    n = d.chain.next_nonce(key.address) if nonce is None else nonce
    return Transaction(n, gas_price, 21_000, to, value).sign(key).encode()


def test_submit_valid_transfer_returns_hash(setup):
    d, node = setup
    raw = _raw_transfer(d, "admin", d.addr("rogue"), 5)
    status, body = node.post("/tx", {"raw": "0x" + raw.hex()})
    assert status == 200
    assert body == {"hash": "0x" + keccak256(raw).hex()}
    before = int(node.get(f"/account/{d.addr('rogue').hex()}")[1]["balance"])
    status, block = node.post("/mine")
    assert status == 200 and len(block["transactions"]) == 1
    after = node.get(f"/account/0x{d.addr('rogue').hex()}")[1]
    assert int(after["balance"]) == before + 5


def test_underfunded_sender_is_rejected(setup):
    d, node = setup
    poor = PrivateKey(0xBEEF)
    d.transfer("admin", poor.address, 21_000 * GWEI - 1)
    d.mine()
    raw = _raw_transfer(d, poor, d.addr("admin"), 0)
    status, body = node.post("/tx", {"raw": raw.hex()})
    assert status == 400
    assert body["error"] == "insufficient_funds"
    assert body["message"].startswith("insufficient balance for gas")


@pytest.mark.parametrize("payload", [
    b'{"raw": "0xzz"}', b'{"raw": 5}', b"not json", b"{}", b'{"raw": "0x01"}',
])
def test_malformed_bodies_are_400(setup, payload):
    _, node = setup
    status, body = node.post("/tx", payload)
    assert status == 400
    assert body["error"] in ("parse_error", "malformed")


def test_fresh_account_and_untrusted_entity(setup):
    _, node = setup
    fresh = "0x" + "ab" * 20
    assert node.get(f"/account/{fresh}") == (200, {
        "address": to_checksum_address(bytes.fromhex("ab" * 20)), "nonce": 0, "balance": "0"})
    status, body = node.get(f"/trust/treatment-provider/{fresh}")
    assert status == 200 and body["trusted"] is False
    assert node.get(f"/trust/astrologer/{fresh}")[0] == 400
    assert node.get("/account/0x1234")[0] == 400


def test_domain_reads(setup):
    d, node = setup
    d.onboard()
    d.treat(rating=7)
    d.treat(rating=9)
    node.server.service._refresh()  # blocks were mined outside the service
    doctor = d.addr("doctor").hex()
    assert node.get(f"/evidence/{doctor}")[1]["count"] == 2
    assert node.get(f"/evidence/{doctor}")[1]["mean"] == 8
    assert node.get(f"/license/{doctor}")[1]["trusted"] is True
    treatments = node.get(f"/treatments/{doctor}")[1]["treatments"]
    assert [t["approved"] for t in treatments] == [True, True]
    assert {t["treatment_provider"] for t in treatments} == {to_checksum_address(d.addr("clinic"))}
    assert node.get(f"/trust/authority/{d.addr('admin').hex()}")[1]["trusted"] is True
    status, blk = node.get("/block/1")
    assert status == 200 and blk["number"] == 1
    assert node.get("/block/999")[0] == 404
    assert node.get("/block/x")[0] == 400
    assert node.get("/nothing")[0] == 404


def test_concurrent_reads_are_pure(setup):
    d, node = setup
    d.onboard()
    node.server.service._refresh()
    root = d.chain.state.root()
    paths = ["/status", f"/account/{d.addr('admin').hex()}",
             f"/license/{d.addr('doctor').hex()}", f"/evidence/{d.addr('doctor').hex()}",
             f"/trust/license-issuer/{d.addr('board').hex()}"]
    first = {p: _request(node.server.url + p) for p in paths}
    seen: list = []

    def storm():
        for _ in range(20):
            for p in paths:
                seen.append((p, _request(node.server.url + p)))

    threads = [threading.Thread(target=storm) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(seen) == 8 * 20 * len(paths)
    assert all(resp == first[p] for p, resp in seen)
    assert d.chain.state.root() == root


def test_read_only_and_mine_gating():
    chain, keys = make_chain()
    d = Driver(chain, keys)
    node = Node(chain, read_only=True, test_mode=True)
    try:
        raw = _raw_transfer(d, "admin", d.addr("rogue"), 1)
        status, body = node.post("/tx", {"raw": raw.hex()})
        assert status == 403 and body["error"] == "read_only"
        assert len(chain.mempool) == 0
    finally:
        node.server.stop()
    service = NodeService(chain, ApiConfig(test_mode=False))
    with pytest.raises(ApiError) as info:
        service.post("/mine", b"")
    assert info.value.status == 404


def test_api_config():
    with pytest.raises(ValueError):
        ApiConfig(port=70000)
    assert ApiConfig.from_env(port=None).port == 8545


def test_api_config_env(monkeypatch):
    monkeypatch.setenv("MEDLEDGER_PORT", "9001")
    assert ApiConfig.from_env().port == 9001
    assert ApiConfig.from_env(port=9002).port == 9002


def test_timer_mines_blocks():
    from medledger.ledger import ChainConfig
    chain, keys = make_chain(ChainConfig(block_interval_seconds=1))
    server = NodeServer(chain, ApiConfig(port=0)).start()
    try:
        for _ in range(100):
            if chain.head.number >= 1:
                break
            threading.Event().wait(0.05)
        assert chain.head.number >= 1
        assert json.loads(_request(server.url + "/status")[1])["height"] >= 1
    finally:
        server.stop()
