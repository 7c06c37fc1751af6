from __future__ import annotations

import pytest

from medledger.crypto import PrivateKey
from medledger.ledger import ETHER, Chain, ChainConfig, ContractCall, Genesis, Transaction
from medledger.state import WorldState
from medledger.trustsuite import ContractError, TrustSuite, sign_consent

GWEI = 10**9
ROLES = ("admin", "auth2", "auth3", "clinic", "board", "board2", "hospital", "doctor",
         "rogue", "miner")


def role_key(name: str) -> PrivateKey:
    return PrivateKey(0x1000 + sum(ord(c) * 131**i for i, c in enumerate(name)))


class Driver:
    """Submit-and-mine helper around a chain."""

    def __init__(self, chain: Chain, keys: dict[str, PrivateKey]):
        self.chain = chain
        self.keys = keys
        self.patients = 0

    def addr(self, name: str) -> bytes:
        return self.keys[name].address

    def tx(self, who: str, contract: str, method: str, *, gas_price: int = GWEI,
           gas_limit: int = 500_000, **args) -> Transaction:
        key = self.keys[who]
        return Transaction.for_call(
            nonce=self.chain.next_nonce(key.address), gas_price=gas_price, gas_limit=gas_limit,
            to=self.chain.suite.addresses[contract], call=ContractCall(contract, method, args),
        ).sign(key)

    def submit(self, who: str, contract: str, method: str, **kw) -> bytes:
        return self.chain.submit(self.tx(who, contract, method, **kw))

    def transfer(self, who: str, to: bytes, value: int, *, gas_price: int = GWEI) -> bytes:
        key = self.keys[who]
        tx = Transaction(self.chain.next_nonce(key.address), gas_price, 21_000, to, value).sign(key)
        return self.chain.submit(tx)

    def mine(self):
        receipts = self.chain.produce_block()[1]
        # every block of every driven test must conserve the genesis supply
        assert self.chain.state.total_supply() == self.chain.genesis_supply
        return receipts

    def do(self, who: str, contract: str, method: str, **kw):
        tx_hash = self.submit(who, contract, method, **kw)
        self.mine()
        return self.chain.receipt(tx_hash)

    def new_patient(self) -> str:
        self.patients += 1
        name = f"patient{self.patients}"
        self.keys[name] = PrivateKey(0x9000 + self.patients)
        self.transfer("admin", self.keys[name].address, ETHER)
        self.mine()
        return name

    def onboard(self, holder: str = "doctor") -> None:
        """Trusted clinic, issuer and provider; ``holder`` gets a trusted license."""
        suite, state = self.chain.suite, self.chain.state
        for who, kind, contract, args in [
            ("clinic", "treatment-provider", "TreatmentProvider", {}),
            ("board", "license-issuer", "License", {"kind": "issuer"}),
            ("hospital", "license-provider", "License", {"kind": "provider"}),
        ]:
            if not suite.is_registered(state, self.addr(who), kind):
                assert self.do(who, contract, "register", **args).succeeded
        assert self.do("admin", "TreatmentProvider", "set_trust",
                       subject=self.addr("clinic"), trusted=True).succeeded
        assert self.do("admin", "License", "set_trust", kind="issuer",
                       subject=self.addr("board"), trusted=True).succeeded
        assert self.do("admin", "License", "set_trust", kind="provider",
                       subject=self.addr("hospital"), trusted=True).succeeded
        assert self.do("board", "License", "issue", holder=self.addr(holder)).succeeded
        assert self.do(holder, "License", "propose_move", kind="provider",
                       holder=self.addr(holder), destination=self.addr("hospital")).succeeded
        assert self.do("hospital", "License", "approve_move", kind="provider",
                       holder=self.addr(holder)).succeeded

    def treat(self, holder: str = "doctor", rating: int | None = None) -> int:
        """Create and approve a treatment for a fresh patient; optionally evaluate it."""
        patient = self.new_patient()
        r = self.do("clinic", "Treatment", "create", patient=self.addr(patient),
                    data_hash=b"\x11" * 32, data_url="https://records.example/x")
        assert r.succeeded, r.error
        tid = r.logs[0].args["treatment_id"]
        consent = sign_consent(tid, self.addr(holder), self.keys[patient])
        assert self.do(holder, "Treatment", "approve", treatment_id=tid, consent=consent).succeeded
        if rating is not None:
            assert self.do(patient, "Measure", "submit", treatment_id=tid, rating=rating).succeeded
        return tid


def make_chain(config: ChainConfig | None = None, extra: dict[bytes, int] | None = None):
    keys = {name: role_key(name) for name in ROLES}
    accounts = {k.address: 100 * ETHER for n, k in keys.items() if n != "miner"}
    accounts.update(extra or {})
    genesis = Genesis(accounts=accounts, bootstrap_authority=keys["admin"].address,
                      coinbase=keys["miner"].address)
    return Chain(genesis, config), keys


class Env:
    """The contracts on a bare world state, no chain: calls revert on error and re-raise."""

    def __init__(self):
        self.keys = {name: role_key(name) for name in ROLES}
        self.state = WorldState()
        self.suite = TrustSuite.deploy(self.state, self.keys["admin"].address)

    def a(self, name: str) -> bytes:
        if name not in self.keys:
            self.keys[name] = role_key(name)
        return self.keys[name].address

    def call(self, who: str, contract: str, method: str, **args):
        snap = self.state.snapshot()
        try:
            result = self.suite.invoke(self.state, self.a(who), ContractCall(contract, method, args))
        except ContractError:
            self.state.revert(snap)
            raise
        self.state.commit(snap)
        return result

    def trusted(self, name: str, kind: str) -> bool:
        return self.suite.query_trust(self.state, self.a(name), kind)

    def setup_license(self, holder: str = "doctor", issuer: str = "board",
                      provider: str = "hospital", trust: bool = True) -> None:
        self.call(issuer, "License", "register", kind="issuer")
        self.call(provider, "License", "register", kind="provider")
        if trust:
            self.call("admin", "License", "set_trust", kind="issuer", subject=self.a(issuer),
                      trusted=True)
            self.call("admin", "License", "set_trust", kind="provider", subject=self.a(provider),
                      trusted=True)
        self.call(issuer, "License", "issue", holder=self.a(holder))
        self.call(holder, "License", "propose_move", kind="provider", holder=self.a(holder),
                  destination=self.a(provider))
        self.call(provider, "License", "approve_move", kind="provider", holder=self.a(holder))

    def setup_provider(self, name: str = "clinic") -> None:
        self.call(name, "TreatmentProvider", "register")
        self.call("admin", "TreatmentProvider", "set_trust", subject=self.a(name), trusted=True)

    def create(self, patient: str, provider: str = "clinic") -> int:
        return self.call(provider, "Treatment", "create", patient=self.a(patient),
                         data_hash=b"\x01" * 32, data_url="https://records.example/t").value

    def approve(self, tid: int, patient: str, holder: str = "doctor"):
        self.a(patient)
        consent = sign_consent(tid, self.a(holder), self.keys[patient])
        return self.call(holder, "Treatment", "approve", treatment_id=tid, consent=consent)


@pytest.fixture
def env() -> Env:
    return Env()


@pytest.fixture
def driver() -> Driver:
    chain, keys = make_chain()
    return Driver(chain, keys)
