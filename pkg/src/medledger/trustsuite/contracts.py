"""Native state machines for the five trust contracts.

Each contract class wraps a ``CallContext`` and keeps all of its data in its
own account's storage, so snapshots, reverts and state roots cover it like
any other state. Contracts reach each other through ``ctx.contract(name)``,
which mirrors an inter-contract call (and is priced as a jump in micro-op
gas mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..crypto import InvalidSignature, Signature, personal_message_digest, recover, rlp
from ..state import WorldState
from .abi import AUTHORITY_MANAGER, LICENSE, MEASURE, TREATMENT, TREATMENT_PROVIDER, json_value
from .errors import (
    Conflict,
    ConsentInvalid,
    InsufficientMajority,
    InvalidArgument,
    NotFound,
    PreconditionFailed,
    Unauthorized,
)
from .storage import JUMPDEST, StorageView, addr_to_word, word_to_addr

TREATMENT_PROVIDER_KIND = "treatment-provider"
LICENSE_ISSUER_KIND = "license-issuer"
LICENSE_PROVIDER_KIND = "license-provider"
TRUST_KINDS = (TREATMENT_PROVIDER_KIND, LICENSE_ISSUER_KIND, LICENSE_PROVIDER_KIND)

# License contract arguments name the leg, not the full kind.
LICENSE_LEGS = {"issuer": LICENSE_ISSUER_KIND, "provider": LICENSE_PROVIDER_KIND}

ADD, REMOVE = "add", "remove"
_ACTION_CODES = {ADD: 1, REMOVE: 2}
_ACTION_NAMES = {v: k for k, v in _ACTION_CODES.items()}

MAX_DATA_URL_BYTES = 128
MIN_RATING, MAX_RATING = 1, 10


@dataclass(frozen=True)
class LogEntry:
    contract: str
    event: str
    args: dict[str, Any]

    def to_json(self) -> dict:
        return {"contract": self.contract, "event": self.event,
                "args": {k: json_value(v) for k, v in self.args.items()}}


class CallContext:
    def __init__(self, state: WorldState, addresses, sender: bytes | None,
                 trace: list[str] | None = None):
        self.state = state
        self.addresses = addresses
        self.sender = sender
        self.trace = trace
        self.logs: list[LogEntry] = []
        self.gas_key: str | None = None

    def storage(self, name: str) -> StorageView:
        return StorageView(self.state, self.addresses[name], self.trace)

    def contract(self, name: str):
        if self.trace is not None:
            self.trace.append(JUMPDEST)
        return CONTRACT_TYPES[name](self)

    def emit(self, contract: str, event: str, **args) -> None:
        self.logs.append(LogEntry(contract, event, args))


class _Contract:
    name = ""

    def __init__(self, ctx: CallContext):
        self.ctx = ctx
        self.store = ctx.storage(self.name)

    @property
    def caller(self) -> bytes:
        return self.ctx.sender

    def emit(self, event: str, **args) -> None:
        self.ctx.emit(self.name, event, **args)

    def _require_authority(self) -> None:
        if not self.ctx.contract(AUTHORITY_MANAGER).is_member(self.caller):
            raise Unauthorized("caller is not an authority")


# -- governance -------------------------------------------------------------


@dataclass(frozen=True)
class Proposal:
    id: int
    action: str
    target: bytes
    votes: tuple[bytes, ...]
    valid_votes: int
    enacted: bool


class AuthorityManager(_Contract):
    name = AUTHORITY_MANAGER

    def bootstrap(self, authority: bytes) -> None:
        self._add_member(authority)

    def is_member(self, address: bytes | None) -> bool:
        return address is not None and self.store.get_flag("member", address)

    def member_count(self) -> int:
        return self.store["member_count"]

    def members(self) -> list[bytes]:
        listed = (word_to_addr(w) for w in self.store.items("members"))
        return [a for a in listed if self.is_member(a)]

    def _add_member(self, address: bytes) -> None:
        self.store.set_flag(True, "member", address)
        self.store["member_count"] = self.member_count() + 1
        if not self.store.get_flag("listed", address):
            self.store.set_flag(True, "listed", address)
            self.store.push(addr_to_word(address), "members")

    def _remove_member(self, address: bytes) -> None:
        self.store.set_flag(False, "member", address)
        self.store["member_count"] = self.member_count() - 1

    def _require_member(self) -> None:
        if not self.is_member(self.caller):
            raise Unauthorized("only authorities may take part in governance")

    def _tally(self, pid: int) -> int:
        voters = self.store.items("proposal", pid, "voters")
        return sum(1 for w in voters if self.is_member(word_to_addr(w)))

    def _cast(self, pid: int, voter: bytes) -> None:
        if not self.store.get_flag("proposal", pid, "voted", voter):
            self.store.set_flag(True, "proposal", pid, "voted", voter)
            self.store.push(addr_to_word(voter), "proposal", pid, "voters")

    def _open_proposal(self, pid: int) -> None:
        if not 1 <= pid <= self.store["proposal_count"]:
            raise NotFound(f"no proposal {pid}")
        if self.store.get_flag("proposal", pid, "enacted"):
            raise Conflict(f"proposal {pid} is closed")

    def propose(self, action: str, target: bytes) -> int:
        self.ctx.gas_key = "authority_propose_remove" if action == REMOVE else "authority_propose_add"
        self._require_member()
        if action not in _ACTION_CODES:
            raise InvalidArgument(f"unknown governance action {action!r}")
        if action == ADD and self.is_member(target):
            raise Conflict("target is already an authority")
        if action == REMOVE:
            if not self.is_member(target):
                raise NotFound("target is not an authority")
            if self.member_count() == 1:
                raise Conflict("the last authority cannot be removed")
        if self.store["live", action, target]:
            raise Conflict("an open proposal already exists for this change")
        pid = self.store["proposal_count"] + 1
        self.store["proposal_count"] = pid
        self.store["proposal", pid, "action"] = _ACTION_CODES[action]
        self.store.set_address(target, "proposal", pid, "target")
        self.store["live", action, target] = pid
        self._cast(pid, self.caller)
        self.emit("ProposalCreated", proposal_id=pid, action=action, target=target,
                  proposer=self.caller)
        # A sole authority's own vote is already a strict majority.
        if 2 * self._tally(pid) > self.member_count():
            self._apply(pid)
        return pid

    def vote(self, proposal_id: int) -> int:
        self.ctx.gas_key = "authority_vote"
        self._require_member()
        self._open_proposal(proposal_id)
        self._cast(proposal_id, self.caller)
        count = self._tally(proposal_id)
        self.emit("VoteCast", proposal_id=proposal_id, voter=self.caller, votes=count)
        return count

    def enact(self, proposal_id: int) -> bool:
        self.ctx.gas_key = "authority_enact_failed"
        self._require_member()
        self._open_proposal(proposal_id)
        votes, members = self._tally(proposal_id), self.member_count()
        if 2 * votes <= members:
            raise InsufficientMajority(f"{votes} of {members} votes is not a strict majority")
        action = self._apply(proposal_id)
        self.ctx.gas_key = f"authority_enact_{action}"
        return True

    def _apply(self, pid: int) -> str:
        action = _ACTION_NAMES[self.store["proposal", pid, "action"]]
        target = self.store.get_address("proposal", pid, "target")
        if action == ADD:
            if self.is_member(target):
                raise Conflict("target is already an authority")
            self._add_member(target)
        else:
            if not self.is_member(target):
                raise NotFound("target is no longer an authority")
            if self.member_count() == 1:
                raise Conflict("the last authority cannot be removed")
            self._remove_member(target)
        self.store.set_flag(True, "proposal", pid, "enacted")
        self.store["live", action, target] = 0
        self.emit("ProposalEnacted", proposal_id=pid, action=action, target=target)
        return action

    def proposal(self, pid: int) -> Proposal | None:
        if not 1 <= pid <= self.store["proposal_count"]:
            return None
        return Proposal(
            id=pid,
            action=_ACTION_NAMES[self.store["proposal", pid, "action"]],
            target=self.store.get_address("proposal", pid, "target"),
            votes=tuple(word_to_addr(w) for w in self.store.items("proposal", pid, "voters")),
            valid_votes=self._tally(pid),
            enacted=self.store.get_flag("proposal", pid, "enacted"),
        )


# -- registries shared by TreatmentProvider and License ----------------------


class _Registry(_Contract):
    def is_registered(self, kind: str, subject: bytes | None) -> bool:
        return subject is not None and self.store.get_flag("registered", kind, subject)

    def _register(self, kind: str) -> None:
        if self.is_registered(kind, self.caller):
            raise Conflict(f"already registered as {kind}")
        self.store.set_flag(True, "registered", kind, self.caller)
        self.emit("Registered", kind=kind, subject=self.caller)

    def _set_trust(self, kind: str, subject: bytes, trusted: bool) -> None:
        self._require_authority()
        if not self.is_registered(kind, subject):
            raise NotFound(f"{subject.hex()} is not a registered {kind}")
        authority = self.caller
        if trusted and not self.store.get_flag("endorser_listed", kind, subject, authority):
            self.store.set_flag(True, "endorser_listed", kind, subject, authority)
            self.store.push(addr_to_word(authority), "endorsers", kind, subject)
        self.store.set_flag(trusted, "endorsed", kind, subject, authority)
        self.emit("TrustAdded" if trusted else "TrustRemoved",
                  kind=kind, subject=subject, authority=authority)

    def endorsers(self, kind: str, subject: bytes) -> list[bytes]:
        listed = (word_to_addr(w) for w in self.store.items("endorsers", kind, subject))
        return [a for a in listed if self.store.get_flag("endorsed", kind, subject, a)]

    def is_trusted(self, kind: str, subject: bytes | None) -> bool:
        """Registered and endorsed by at least one *current* authority."""
        if not self.is_registered(kind, subject):
            return False
        authorities = self.ctx.contract(AUTHORITY_MANAGER)
        return any(authorities.is_member(a) for a in self.endorsers(kind, subject))


class TreatmentProviderRegistry(_Registry):
    name = TREATMENT_PROVIDER

    def register(self) -> bool:
        self.ctx.gas_key = "register_treatment_provider"
        self._register(TREATMENT_PROVIDER_KIND)
        return True

    def set_trust(self, subject: bytes, trusted: bool) -> bool:
        self.ctx.gas_key = ("trust_add_treatment_provider" if trusted
                            else "trust_remove_treatment_provider")
        self._set_trust(TREATMENT_PROVIDER_KIND, subject, trusted)
        return trusted


# -- licenses -----------------------------------------------------------------


@dataclass(frozen=True)
class LicenseView:
    holder: bytes
    issuer: bytes
    provider: bytes | None
    pending_moves: dict[str, tuple[bytes, bytes]] = field(default_factory=dict)


def _leg(kind: str) -> str:
    if kind not in LICENSE_LEGS:
        raise InvalidArgument(f"license kind must be 'issuer' or 'provider', not {kind!r}")
    return LICENSE_LEGS[kind]


class LicenseRegistry(_Registry):
    name = LICENSE

    def register(self, kind: str) -> bool:
        self.ctx.gas_key = "register_license_provider" if kind == "provider" else "register_license_issuer"
        self._register(_leg(kind))
        return True

    def set_trust(self, kind: str, subject: bytes, trusted: bool) -> bool:
        leg = "license_provider" if kind == "provider" else "license_issuer"
        self.ctx.gas_key = f"trust_{'add' if trusted else 'remove'}_{leg}"
        self._set_trust(_leg(kind), subject, trusted)
        return trusted

    def issue(self, holder: bytes) -> bool:
        self.ctx.gas_key = "license_issue"
        if not self.is_registered(LICENSE_ISSUER_KIND, self.caller):
            raise Unauthorized("only registered license issuers may issue licenses")
        if self.store.get_address("license", holder, "issuer"):
            raise Conflict("holder already has a license")
        self.store.set_address(self.caller, "license", holder, "issuer")
        self.store.push(addr_to_word(holder), "licenses")
        self.emit("LicenseIssued", holder=holder, issuer=self.caller)
        return True

    def _issuer_of(self, holder: bytes) -> bytes:
        issuer = self.store.get_address("license", holder, "issuer")
        if issuer is None:
            raise NotFound(f"{holder.hex()} holds no license")
        return issuer

    def propose_move(self, kind: str, holder: bytes, destination: bytes) -> bool:
        by_holder = self.caller == holder
        self.ctx.gas_key = "license_propose_move_holder" if by_holder else "license_propose_move_issuer"
        leg = _leg(kind)
        issuer = self._issuer_of(holder)
        if not by_holder and self.caller != issuer:
            raise Unauthorized("only the holder or the current issuer may propose a move")
        if not self.is_registered(leg, destination):
            raise NotFound(f"{destination.hex()} is not a registered {leg}")
        self.store.set_address(destination, "move", holder, kind, "destination")
        self.store.set_address(self.caller, "move", holder, kind, "proposer")
        self.emit("LicenseMoveProposed", holder=holder, kind=kind, destination=destination,
                  proposer=self.caller)
        return True

    def approve_move(self, kind: str, holder: bytes) -> bool:
        self.ctx.gas_key = ("license_approve_provider_move" if kind == "provider"
                            else "license_approve_issuer_move")
        _leg(kind)
        self._issuer_of(holder)
        destination = self.store.get_address("move", holder, kind, "destination")
        if destination is None:
            raise NotFound(f"no pending {kind} move for this license")
        if self.caller != destination:
            raise Unauthorized("only the destination may approve a move")
        self.store.set_address(destination, "license", holder, kind)
        self.store.set_address(None, "move", holder, kind, "destination")
        self.store.set_address(None, "move", holder, kind, "proposer")
        self.emit("LicenseMoved", holder=holder, kind=kind, destination=destination)
        return True

    def license(self, holder: bytes) -> LicenseView | None:
        issuer = self.store.get_address("license", holder, "issuer")
        if issuer is None:
            return None
        pending = {}
        for kind in LICENSE_LEGS:
            dest = self.store.get_address("move", holder, kind, "destination")
            if dest is not None:
                pending[kind] = (dest, self.store.get_address("move", holder, kind, "proposer"))
        return LicenseView(holder, issuer, self.store.get_address("license", holder, "provider"),
                           pending)

    def holders(self) -> list[bytes]:
        return [word_to_addr(w) for w in self.store.items("licenses")]

    def is_license_trusted(self, holder: bytes | None) -> bool:
        """Both legs hold: a trusted issuer issued it and a trusted provider hosts it."""
        if holder is None:
            return False
        issuer = self.store.get_address("license", holder, "issuer")
        provider = self.store.get_address("license", holder, "provider")
        return (issuer is not None and provider is not None
                and self.is_trusted(LICENSE_ISSUER_KIND, issuer)
                and self.is_trusted(LICENSE_PROVIDER_KIND, provider))


# -- treatments and evaluations ----------------------------------------------


@dataclass(frozen=True)
class TreatmentRecord:
    id: int
    treatment_provider: bytes
    patient: bytes
    data_hash: bytes
    data_url: str
    approving_license: bytes | None
    approved: bool


def consent_message(treatment_id: int, license_holder: bytes) -> bytes:
    return rlp.encode([treatment_id, license_holder])


def consent_digest(treatment_id: int, license_holder: bytes) -> bytes:
    return personal_message_digest(consent_message(treatment_id, license_holder))


class TreatmentLog(_Contract):
    name = TREATMENT

    def create(self, patient: bytes, data_hash: bytes, data_url: str) -> int:
        self.ctx.gas_key = "treatment_create"
        providers = self.ctx.contract(TREATMENT_PROVIDER)
        if not providers.is_trusted(TREATMENT_PROVIDER_KIND, self.caller):
            raise Unauthorized("only trusted treatment providers may publish treatments")
        url = data_url.encode("utf-8")
        if len(url) > MAX_DATA_URL_BYTES:
            raise InvalidArgument(f"data_url exceeds {MAX_DATA_URL_BYTES} bytes")
        if not any(patient):
            raise InvalidArgument("patient address must be non-zero")
        tid = self.store["count"] + 1
        self.store["count"] = tid
        self.store.set_address(self.caller, "treatment", tid, "provider")
        self.store.set_address(patient, "treatment", tid, "patient")
        self.store["treatment", tid, "data_hash"] = int.from_bytes(data_hash, "big")
        self.store.set_bytes(url, "treatment", tid, "url")
        self.emit("TreatmentCreated", treatment_id=tid, provider=self.caller, patient=patient,
                  data_hash=data_hash)
        return tid

    def exists(self, tid: int) -> bool:
        return 1 <= tid <= self.store["count"]

    def patient_of(self, tid: int) -> bytes | None:
        return self.store.get_address("treatment", tid, "patient")

    def is_approved(self, tid: int) -> bool:
        return self.store.get_flag("treatment", tid, "approved")

    def approve(self, treatment_id: int, consent: Signature) -> bool:
        self.ctx.gas_key = "treatment_approve"
        if not self.ctx.contract(LICENSE).is_license_trusted(self.caller):
            raise Unauthorized("caller does not hold a trusted license")
        if not self.exists(treatment_id):
            raise NotFound(f"no treatment {treatment_id}")
        if self.is_approved(treatment_id):
            raise Conflict(f"treatment {treatment_id} is already approved")
        patient = self.patient_of(treatment_id)
        try:
            signer = recover(consent_digest(treatment_id, self.caller), consent)
        except InvalidSignature as exc:
            raise ConsentInvalid(f"consent signature rejected: {exc}") from exc
        if signer != patient:
            raise ConsentInvalid("consent was not signed by the treatment's patient")
        self.store.set_flag(True, "treatment", treatment_id, "approved")
        self.store.set_address(self.caller, "treatment", treatment_id, "license")
        self.store.push(treatment_id, "by_license", self.caller)
        self.emit("TreatmentApproved", treatment_id=treatment_id, license=self.caller)
        return True

    def record(self, tid: int) -> TreatmentRecord | None:
        if not self.exists(tid):
            return None
        return TreatmentRecord(
            id=tid,
            treatment_provider=self.store.get_address("treatment", tid, "provider"),
            patient=self.patient_of(tid),
            data_hash=self.store["treatment", tid, "data_hash"].to_bytes(32, "big"),
            data_url=self.store.get_bytes("treatment", tid, "url").decode("utf-8"),
            approving_license=self.store.get_address("treatment", tid, "license"),
            approved=self.is_approved(tid),
        )

    def count(self) -> int:
        return self.store["count"]

    def approved_by(self, holder: bytes) -> list[int]:
        return self.store.items("by_license", holder)


@dataclass(frozen=True)
class MeasureRecord:
    treatment_id: int
    rating: int
    comment_hash: bytes | None


class MeasureLog(_Contract):
    name = MEASURE

    def submit(self, treatment_id: int, rating: int, comment_hash: bytes | None = None) -> bool:
        self.ctx.gas_key = "measure_submit"
        treatments = self.ctx.contract(TREATMENT)
        if not treatments.exists(treatment_id):
            raise NotFound(f"no treatment {treatment_id}")
        if self.caller != treatments.patient_of(treatment_id):
            raise Unauthorized("only the treatment's patient may evaluate it")
        if not treatments.is_approved(treatment_id):
            raise PreconditionFailed("treatment has not been approved")
        if self.store["rating", treatment_id]:
            raise Conflict("treatment has already been evaluated")
        if not MIN_RATING <= rating <= MAX_RATING:
            raise InvalidArgument(f"rating must be in {MIN_RATING}..{MAX_RATING}")
        self.store["rating", treatment_id] = rating
        if comment_hash:
            self.store["comment", treatment_id] = int.from_bytes(comment_hash, "big")
        self.store["count"] = self.store["count"] + 1
        self.emit("EvaluationSubmitted", treatment_id=treatment_id, rating=rating)
        return True

    def record(self, tid: int) -> MeasureRecord | None:
        rating = self.store["rating", tid]
        if not rating:
            return None
        comment = self.store["comment", tid]
        return MeasureRecord(tid, rating, comment.to_bytes(32, "big") if comment else None)


@dataclass(frozen=True)
class Evidence:
    experience_count: int
    ratings: tuple[int, ...]
    mean_rating: Fraction | None


CONTRACT_TYPES = {
    AUTHORITY_MANAGER: AuthorityManager,
    TREATMENT_PROVIDER: TreatmentProviderRegistry,
    LICENSE: LicenseRegistry,
    TREATMENT: TreatmentLog,
    MEASURE: MeasureLog,
}
