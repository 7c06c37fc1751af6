"""Declarative JSON scenarios replayed through a fresh chain.

A scenario names its actors by alias; private keys are derived from the
scenario seed and the alias, so replays are bit-for-bit repeatable. See
``README.md`` for the document format.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from ..crypto import SECP256K1_N, PrivateKey, keccak256, to_address
from ..ledger import (
    ChainConfig,
    ConfigError,
    ContractCall,
    Genesis,
    Receipt,
    Transaction,
    TxRejected,
    parse_wei,
)
from ..ledger.chain import Chain
from ..trustsuite import CallDataError, sign_consent

log = logging.getLogger(__name__)

DEFAULT_GAS_PRICE = 20 * 10**9
DEFAULT_CALL_GAS_LIMIT = 500_000
TRANSFER_GAS_LIMIT = 21_000

STEP_KINDS = ("create-key", "fund", "contract-call", "produce-block", "sign-consent")
QUERIES = ("receipt", "trust", "license_trust", "authority", "evidence", "balance",
           "treatment", "evaluation", "protocol_transactions", "conservation",
           "distinct_patients", "gas_table")


class ScenarioError(ValueError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(f"step {step}: {message}" if step is not None else message)


def derive_key(seed: str, alias: str) -> PrivateKey:
    digest = keccak256(f"{seed}/{alias}".encode())
    return PrivateKey(int.from_bytes(digest, "big") % (SECP256K1_N - 1) + 1)


@dataclass(frozen=True)
class Step:
    kind: str
    actor: str | None = None
    params: dict = field(default_factory=dict)
    label: str | None = None


@dataclass(frozen=True)
class Assertion:
    query: str
    args: dict
    expected: Any


@dataclass
class Scenario:
    name: str
    steps: list[Step]
    assertions: list[Assertion] = field(default_factory=list)
    accounts: dict[str, int] = field(default_factory=dict)
    bootstrap_authority: str = "admin"
    coinbase: str | None = None
    seed: str = "medledger"
    gas_price: int = DEFAULT_GAS_PRICE
    config: dict = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_json(cls, data: Any) -> Scenario:
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        try:
            genesis = data.get("genesis", {})
            accounts = {alias: parse_wei(v) for alias, v in genesis.get("accounts", {}).items()}
            scenario = cls(
                name=str(data["name"]),
                steps=[],
                accounts=accounts,
                bootstrap_authority=genesis.get("bootstrap_authority", "admin"),
                coinbase=genesis.get("coinbase"),
                seed=str(data.get("seed", "medledger")),
                gas_price=parse_wei(data.get("gas_price_wei", DEFAULT_GAS_PRICE)),
                config=dict(data.get("config", {})),
                description=str(data.get("description", "")),
            )
        except (KeyError, TypeError, AttributeError, ConfigError) as exc:
            raise ScenarioError(f"bad scenario header: {exc}") from exc
        declared = set(accounts) | {scenario.bootstrap_authority}
        if scenario.coinbase:
            declared.add(scenario.coinbase)
        variables: set[str] = set()
        labels: set[str] = set()
        for i, raw in enumerate(data.get("steps", [])):
            step = _parse_step(raw, i)
            _check_refs(step, i, declared, variables)
            if step.label:
                if step.label in labels:
                    raise ScenarioError(f"duplicate label {step.label!r}", i)
                labels.add(step.label)
            if step.kind == "create-key":
                declared.add(step.actor)
            elif step.kind == "sign-consent":
                variables.add(step.label)
            for var in step.params.get("capture", {}):
                variables.add(var)
            scenario.steps.append(step)
        for i, raw in enumerate(data.get("assertions", [])):
            if not isinstance(raw, dict) or raw.get("query") not in QUERIES or "expected" not in raw:
                raise ScenarioError(f"assertion {i} needs a known 'query' and an 'expected' value")
            scenario.assertions.append(Assertion(raw["query"], dict(raw.get("args", {})),
                                                 raw["expected"]))
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_json(data)


def _parse_step(raw: Any, index: int) -> Step:
    if not isinstance(raw, dict):
        raise ScenarioError("step must be an object", index)
    kind = raw.get("kind")
    if kind not in STEP_KINDS:
        raise ScenarioError(f"unknown step kind {kind!r}", index)
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError("params must be an object", index)
    actor = raw.get("actor")
    if kind != "produce-block" and not actor:
        raise ScenarioError(f"{kind} step needs an actor", index)
    label = raw.get("label")
    if kind == "sign-consent" and not label:
        raise ScenarioError("sign-consent step needs a label to store the signature under", index)
    if kind == "contract-call":
        if "contract" not in params or "method" not in params:
            raise ScenarioError("contract-call needs params.contract and params.method", index)
    if kind == "fund" and "to" not in params:
        raise ScenarioError("fund step needs params.to", index)
    return Step(kind, actor, params, label)


def _walk_refs(value: Any):
    if isinstance(value, str) and value[:1] in ("@", "$"):
        yield value
    elif isinstance(value, dict):
        for v in value.values():
            yield from _walk_refs(v)
    elif isinstance(value, list):
        for v in value:
            yield from _walk_refs(v)


def _check_refs(step: Step, index: int, declared: set[str], variables: set[str]) -> None:
    if step.actor and step.kind != "create-key" and step.actor not in declared:
        raise ScenarioError(f"actor {step.actor!r} is not declared before use", index)
    refs = list(_walk_refs({k: v for k, v in step.params.items() if k != "capture"}))
    if step.kind == "fund":
        refs.append("@" + step.params["to"].lstrip("@"))
    if step.kind == "sign-consent":
        refs.append("@" + str(step.params.get("license", "")).lstrip("@"))
    for ref in refs:
        name = ref[1:]
        if ref[0] == "@" and name not in declared:
            raise ScenarioError(f"key {name!r} is referenced before it is declared", index)
        if ref[0] == "$" and name not in variables:
            raise ScenarioError(f"variable {name!r} is referenced before it is set", index)


@dataclass
class Outcome:
    """What happened to one labelled transaction."""

    status: str  # succeeded | failed | rejected | pending
    receipt: Receipt | None = None
    reason: str | None = None
    tx_hash: bytes | None = None

    def view(self) -> dict:
        out = {"status": self.status}
        if self.receipt is not None:
            out.update(gas_used=self.receipt.gas_used, gas_key=self.receipt.gas_key,
                       error=self.receipt.error,
                       error_code=self.receipt.error.split(":")[0] if self.receipt.error else None)
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass
class AssertionResult:
    index: int
    query: str
    args: dict
    expected: Any
    actual: Any
    passed: bool

    @property
    def diff(self) -> str:
        if self.passed:
            return ""
        return f"expected {self.expected!r}, got {self.actual!r}"


@dataclass
class ScenarioResult:
    name: str
    state_root: bytes
    chain: Chain
    outcomes: dict[str, Outcome]
    receipts: list[Receipt]
    assertions: list[AssertionResult]
    keys: dict[str, PrivateKey]
    protocol_transactions: int
    conservation: list[bool]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    @property
    def blocks(self):
        return self.chain.blocks


class _Runner:
    def __init__(self, scenario: Scenario, config: ChainConfig | None):
        self.scenario = scenario
        self.keys: dict[str, PrivateKey] = {}
        for alias in [scenario.bootstrap_authority, *scenario.accounts, scenario.coinbase]:
            if alias and alias not in self.keys:
                self.keys[alias] = derive_key(scenario.seed, alias)
        genesis = Genesis(
            accounts={self.keys[a].address: wei for a, wei in scenario.accounts.items()},
            bootstrap_authority=self.keys[scenario.bootstrap_authority].address,
            coinbase=self.keys[scenario.coinbase].address if scenario.coinbase else None,
        )
        if config is None:
            try:
                config = ChainConfig.from_json(scenario.config)
            except ConfigError as exc:
                raise ScenarioError(f"bad scenario config: {exc}") from exc
        self.chain = Chain(genesis, config)
        self.vars: dict[str, Any] = {}
        self.outcomes: dict[str, Outcome] = {}
        self.captures: list[tuple[int, bytes, dict]] = []
        self.protocol_txs = 0
        self.conservation: list[bool] = []
        self._by_hash: dict[bytes, str] = {}

    def resolve(self, value: Any, index: int | None = None) -> Any:
        if isinstance(value, str) and value.startswith("@"):
            alias = value[1:]
            if alias not in self.keys:
                raise ScenarioError(f"unknown key {alias!r}", index)
            return self.keys[alias].address
        if isinstance(value, str) and value.startswith("$"):
            if value[1:] not in self.vars:
                raise ScenarioError(f"variable {value[1:]!r} has no value yet", index)
            return self.vars[value[1:]]
        if isinstance(value, dict):
            return {k: self.resolve(v, index) for k, v in value.items()}
        if isinstance(value, list):
            return [self.resolve(v, index) for v in value]
        return value

    def _submit(self, index: int, step: Step, tx: Transaction) -> None:
        label = step.label or f"step-{index}"
        try:
            tx_hash = self.chain.submit(tx)
        except TxRejected as exc:
            self.outcomes[label] = Outcome("rejected", reason=exc.reason.code)
            return
        self.outcomes[label] = Outcome("pending", tx_hash=tx_hash)
        self._by_hash[tx_hash] = label
        if step.params.get("capture"):
            self.captures.append((index, tx_hash, step.params["capture"]))

    def run_step(self, index: int, step: Step) -> None:
        scenario = self.scenario
        if step.kind == "create-key":
            self.keys[step.actor] = derive_key(scenario.seed, step.actor)
        elif step.kind == "fund":
            key = self.keys[step.actor]
            to = self.resolve("@" + step.params["to"].lstrip("@"), index)
            tx = Transaction(
                nonce=self.chain.next_nonce(key.address),
                gas_price=parse_wei(step.params.get("gas_price_wei", scenario.gas_price)),
                gas_limit=int(step.params.get("gas_limit", TRANSFER_GAS_LIMIT)),
                to=to,
                value=parse_wei(step.params.get("value_wei", 0)),
            ).sign(key)
            self._submit(index, step, tx)
        elif step.kind == "contract-call":
            key = self.keys[step.actor]
            params = step.params
            try:
                call = ContractCall(params["contract"], params["method"],
                                    self.resolve(params.get("args", {}), index))
            except CallDataError as exc:
                raise ScenarioError(str(exc), index) from exc
            tx = Transaction.for_call(
                nonce=self.chain.next_nonce(key.address),
                gas_price=parse_wei(params.get("gas_price_wei", scenario.gas_price)),
                gas_limit=int(params.get("gas_limit", DEFAULT_CALL_GAS_LIMIT)),
                to=self.chain.suite.addresses[call.target],
                call=call,
                value=parse_wei(params.get("value_wei", 0)),
            ).sign(key)
            self._submit(index, step, tx)
        elif step.kind == "produce-block":
            self._produce()
        elif step.kind == "sign-consent":
            patient = self.keys[step.actor]
            tid = self.resolve(step.params.get("treatment_id"), index)
            if not isinstance(tid, int):
                raise ScenarioError("treatment_id must resolve to an integer", index)
            holder = self.resolve("@" + str(step.params["license"]).lstrip("@"), index)
            self.vars[step.label] = sign_consent(tid, holder, patient).hex()

    def _produce(self) -> None:
        block, receipts = self.chain.produce_block()
        self.conservation.append(self.chain.state.total_supply() == self.chain.genesis_supply)
        for receipt in receipts:
            label = self._by_hash.get(receipt.tx_hash)
            if label is not None:
                self.outcomes[label] = Outcome(receipt.status, receipt, tx_hash=receipt.tx_hash)
            tx = next(t for t in block.transactions if t.hash == receipt.tx_hash)
            if tx.payload and receipt.succeeded:
                self.protocol_txs += 1
        for index, tx_hash, capture in list(self.captures):
            receipt = self.chain.receipt(tx_hash)
            if receipt is None:
                continue
            self.captures.remove((index, tx_hash, capture))
            for var, where in capture.items():
                event, _, arg = where.partition(".")
                found = [entry.args[arg] for entry in receipt.logs
                         if entry.event == event and arg in entry.args]
                if not found:
                    raise ScenarioError(f"capture {var!r}: no {where} in receipt logs", index)
                self.vars[var] = found[0]

    # -- assertions -------------------------------------------------------

    def evaluate(self, index: int, assertion: Assertion) -> AssertionResult:
        chain, suite, state = self.chain, self.chain.suite, self.chain.state
        args = self.resolve(assertion.args)
        expected = self.resolve(assertion.expected)
        q = assertion.query
        try:
            if q == "receipt":
                outcome = self.outcomes.get(args["label"])
                actual = outcome.view() if outcome else None
                passed = actual is not None and _subset(expected, actual)
            else:
                actual = self._query(q, args, chain, suite, state)
                if isinstance(expected, dict) and isinstance(actual, dict):
                    passed = _subset(expected, actual)
                else:
                    passed = _equal(expected, actual)
        except (KeyError, ValueError, TypeError) as exc:
            actual, passed = f"error: {exc}", False
        return AssertionResult(index, q, assertion.args, assertion.expected,
                               _jsonable(actual), passed)

    def _query(self, q, args, chain, suite, state):
        if q == "trust":
            return suite.query_trust(state, to_address(args["entity"]), args["kind"])
        if q == "license_trust":
            return suite.query_license_trust(state, to_address(args["holder"]))
        if q == "authority":
            return suite.is_authority(state, to_address(args["address"]))
        if q == "evidence":
            ev = suite.query_evidence(state, to_address(args["holder"]))
            return {"count": ev.experience_count, "ratings": list(ev.ratings),
                    "mean": ev.mean_rating}
        if q == "balance":
            return state.balance(to_address(args["account"]))
        if q == "treatment":
            rec = suite.treatment(state, int(args["id"]))
            if rec is None:
                return None
            return {"approved": rec.approved, "patient": rec.patient,
                    "provider": rec.treatment_provider,
                    "approving_license": rec.approving_license, "data_url": rec.data_url}
        if q == "evaluation":
            rec = suite.evaluation(state, int(args["treatment_id"]))
            return None if rec is None else {"rating": rec.rating}
        if q == "protocol_transactions":
            return self.protocol_txs
        if q == "conservation":
            return all(self.conservation)
        if q == "distinct_patients":
            patients = [t.patient for t in suite.treatments(state)]
            return len(patients) == len(set(patients))
        if q == "gas_table":
            table: dict[str, int] = {}
            for receipts in chain.block_receipts:
                for r in receipts:
                    if r.gas_key and r.gas_key != "transfer":
                        table.setdefault(r.gas_key, r.gas_used)
            return table
        raise ScenarioError(f"unknown query {q!r}")

    def run(self) -> ScenarioResult:
        for index, step in enumerate(self.scenario.steps):
            self.run_step(index, step)
        results = [self.evaluate(i, a) for i, a in enumerate(self.scenario.assertions)]
        receipts = [r for rs in self.chain.block_receipts for r in rs]
        return ScenarioResult(
            name=self.scenario.name,
            state_root=self.chain.state.root(),
            chain=self.chain,
            outcomes=self.outcomes,
            receipts=receipts,
            assertions=results,
            keys=self.keys,
            protocol_transactions=self.protocol_txs,
            conservation=self.conservation,
        )


def run_scenario(scenario: Scenario, config: ChainConfig | None = None) -> ScenarioResult:
    """Replay ``scenario`` on a fresh chain.

    ``config`` replaces the scenario's own ``config`` block when given; the
    genesis always comes from the scenario.
    """
    log.debug("running scenario %s", scenario.name)
    return _Runner(scenario, config).run()


def _equal(expected, actual) -> bool:
    if isinstance(actual, bytes) and isinstance(expected, (bytes, str)):
        try:
            return to_address(expected) == actual
        except ValueError:
            return False
    if isinstance(actual, Fraction) and isinstance(expected, (int, float, str)):
        return actual == Fraction(str(expected))
    if isinstance(expected, list) and isinstance(actual, list):
        return len(expected) == len(actual) and all(map(_equal, expected, actual))
    return expected == actual


def _subset(expected: dict, actual: dict) -> bool:
    return all(k in actual and _equal(v, actual[k]) for k, v in expected.items())


def _jsonable(value: Any) -> Any:
    if isinstance(value, bytes):
        return "0x" + value.hex()
    if isinstance(value, Fraction):
        return float(value) if value.denominator != 1 else int(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    return value
