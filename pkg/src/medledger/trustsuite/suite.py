from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

from ..crypto import contract_address
from ..state import WorldState
from .abi import (
    AUTHORITY_MANAGER,
    CONTRACTS,
    LICENSE,
    MEASURE,
    TREATMENT,
    TREATMENT_PROVIDER,
    ContractCall,
)
from .contracts import (
    CallContext,
    Evidence,
    LicenseView,
    LogEntry,
    MeasureRecord,
    Proposal,
    TreatmentRecord,
    TRUST_KINDS,
)
from .errors import ContractError, InvalidArgument


@dataclass(frozen=True)
class CallResult:
    value: Any
    logs: list[LogEntry]
    gas_key: str


class TrustSuite:
    """The deployed set of contracts, addressed by the deployer's creation nonces."""

    def __init__(self, deployer: bytes):
        self.deployer = deployer
        self.addresses: Mapping[str, bytes] = {
            name: contract_address(deployer, i + 1) for i, name in enumerate(CONTRACTS)
        }
        self._names = {addr: name for name, addr in self.addresses.items()}

    @classmethod
    def deploy(cls, state: WorldState, deployer: bytes) -> TrustSuite:
        """Create the contracts from ``deployer`` (nonces 0..4) and seat it as sole authority."""
        if state.nonce(deployer) != 0:
            raise ValueError("the deployer must be a fresh account")
        suite = cls(deployer)
        for _ in CONTRACTS:
            state.increment_nonce(deployer)
        suite._ctx(state).contract(AUTHORITY_MANAGER).bootstrap(deployer)
        return suite

    def contract_at(self, address: bytes | None) -> str | None:
        return self._names.get(address)

    def _ctx(self, state, sender=None, trace=None) -> CallContext:
        return CallContext(state, self.addresses, sender, trace)

    def invoke(self, state: WorldState, sender: bytes, call: ContractCall,
               trace: list[str] | None = None) -> CallResult:
        """Run one method as ``sender``. Raises ContractError; the caller reverts."""
        ctx = self._ctx(state, sender, trace)
        contract = ctx.contract(call.target)
        try:
            value = getattr(contract, call.method)(**call.args)
        except ContractError as exc:
            if exc.gas_key is None:
                exc.gas_key = ctx.gas_key
            raise
        return CallResult(value, ctx.logs, ctx.gas_key)

    # -- zero-gas queries -------------------------------------------------

    def is_authority(self, state: WorldState, address: bytes) -> bool:
        return self._ctx(state).contract(AUTHORITY_MANAGER).is_member(address)

    def authorities(self, state: WorldState) -> list[bytes]:
        return self._ctx(state).contract(AUTHORITY_MANAGER).members()

    def proposal(self, state: WorldState, proposal_id: int) -> Proposal | None:
        return self._ctx(state).contract(AUTHORITY_MANAGER).proposal(proposal_id)

    def _registry_for(self, ctx: CallContext, kind: str):
        if kind not in TRUST_KINDS:
            raise InvalidArgument(f"unknown trust kind {kind!r}")
        return ctx.contract(TREATMENT_PROVIDER if kind == "treatment-provider" else LICENSE)

    def is_registered(self, state: WorldState, entity: bytes, kind: str) -> bool:
        ctx = self._ctx(state)
        return self._registry_for(ctx, kind).is_registered(kind, entity)

    def query_trust(self, state: WorldState, entity: bytes, kind: str) -> bool:
        """Effective trust of ``entity`` in role ``kind``; ``"authority"`` checks membership."""
        if kind == "authority":
            return self.is_authority(state, entity)
        ctx = self._ctx(state)
        return self._registry_for(ctx, kind).is_trusted(kind, entity)

    def endorsers(self, state: WorldState, entity: bytes, kind: str) -> list[bytes]:
        ctx = self._ctx(state)
        return self._registry_for(ctx, kind).endorsers(kind, entity)

    def query_license_trust(self, state: WorldState, holder: bytes) -> bool:
        return self._ctx(state).contract(LICENSE).is_license_trusted(holder)

    def license(self, state: WorldState, holder: bytes) -> LicenseView | None:
        return self._ctx(state).contract(LICENSE).license(holder)

    def license_holders(self, state: WorldState) -> list[bytes]:
        return self._ctx(state).contract(LICENSE).holders()

    def treatment(self, state: WorldState, treatment_id: int) -> TreatmentRecord | None:
        return self._ctx(state).contract(TREATMENT).record(treatment_id)

    def treatment_count(self, state: WorldState) -> int:
        return self._ctx(state).contract(TREATMENT).count()

    def treatments(self, state: WorldState) -> list[TreatmentRecord]:
        log = self._ctx(state).contract(TREATMENT)
        return [log.record(tid) for tid in range(1, log.count() + 1)]

    def treatments_by(self, state: WorldState, holder: bytes) -> list[TreatmentRecord]:
        log = self._ctx(state).contract(TREATMENT)
        return [log.record(tid) for tid in log.approved_by(holder)]

    def evaluation(self, state: WorldState, treatment_id: int) -> MeasureRecord | None:
        return self._ctx(state).contract(MEASURE).record(treatment_id)

    def query_evidence(self, state: WorldState, holder: bytes) -> Evidence:
        """Experience (approved treatment count) and competence (their ratings)."""
        ctx = self._ctx(state)
        ids = ctx.contract(TREATMENT).approved_by(holder)
        measures = ctx.contract(MEASURE)
        ratings = tuple(r.rating for r in map(measures.record, ids) if r is not None)
        mean = Fraction(sum(ratings), len(ratings)) if ratings else None
        return Evidence(len(ids), ratings, mean)
