from fractions import Fraction

import pytest

from medledger.crypto import PrivateKey, Signature, contract_address, rlp
from medledger.state import WorldState
from medledger.trustsuite import (
    CONTRACTS,
    METHODS,
    CallDataError,
    Conflict,
    ConsentInvalid,
    ContractCall,
    Evidence,
    InvalidArgument,
    NotFound,
    PreconditionFailed,
    TrustSuite,
    Unauthorized,
    consent_message,
    sign_consent,
)
from medledger.crypto import encode_personal_message, keccak256, recover

# -- deployment and call data -----------------------------------------------------


def test_contracts_live_at_creation_addresses(env):
    admin = env.a("admin")
    for i, name in enumerate(CONTRACTS):
        assert env.suite.addresses[name] == contract_address(admin, i + 1)
    assert env.state.nonce(admin) == 5
    assert env.suite.authorities(env.state) == [admin]


def test_deploy_needs_fresh_deployer():
    state = WorldState()
    state.increment_nonce(PrivateKey(9).address)
    with pytest.raises(ValueError):
        TrustSuite.deploy(state, PrivateKey(9).address)


SAMPLE_ARGS = {
    "action": "add", "target": b"\x01" * 20, "proposal_id": 3, "subject": b"\x02" * 20,
    "trusted": True, "kind": "issuer", "holder": b"\x03" * 20, "destination": b"\x04" * 20,
    "patient": b"\x05" * 20, "data_hash": b"\x06" * 32, "data_url": "https://x",
    "treatment_id": 7, "consent": Signature(1, 5, 6), "rating": 8, "comment_hash": b"\x07" * 32,
}


@pytest.mark.parametrize("target,method", sorted(METHODS))
def test_call_data_round_trip(target, method):
    args = {name: SAMPLE_ARGS[name] for name, _ in METHODS[(target, method)]}
    call = ContractCall(target, method, args)
    assert ContractCall.decode(call.encode()) == call


def test_call_data_wire_layout():
    call = ContractCall("Measure", "submit", {"treatment_id": 1, "rating": 9})
    assert rlp.decode(call.encode()) == [b"Measure", b"submit", [b"\x01", b"\x09", b""]]
    assert call.args["comment_hash"] is None


@pytest.mark.parametrize("target,method,args", [
    ("Nope", "x", {}),
    ("Measure", "submit", {"treatment_id": 1}),
    ("Measure", "submit", {"treatment_id": 1, "rating": 2, "extra": 1}),
    ("Measure", "submit", {"treatment_id": -1, "rating": 2}),
    ("TreatmentProvider", "set_trust", {"subject": b"\x01" * 20, "trusted": 2}),
    ("Treatment", "create", {"patient": b"\x01" * 20, "data_hash": b"\x01", "data_url": ""}),
])
def test_bad_call_arguments(target, method, args):
    with pytest.raises(CallDataError):
        ContractCall(target, method, args)


@pytest.mark.parametrize("payload", [
    b"\x01",
    rlp.encode([b"Measure", b"submit"]),
    rlp.encode([b"Measure", b"submit", [b"\x01"]]),
    rlp.encode([b"Measure", b"submit", [b"\x01", b"\x02", b"\x01"]]),
    rlp.encode([b"TreatmentProvider", b"set_trust", [b"\x01" * 20, b"\x02"]]),
    rlp.encode([b"Measure", b"submit", [b"\x00\x01", b"\x02", b""]]),
])
def test_malformed_call_data(payload):
    with pytest.raises(CallDataError):
        ContractCall.decode(payload)


# -- registries and trust -----------------------------------------------------------


def test_registration_is_not_trust(env):
    env.call("clinic", "TreatmentProvider", "register")
    assert env.suite.is_registered(env.state, env.a("clinic"), "treatment-provider")
    assert not env.trusted("clinic", "treatment-provider")
    with pytest.raises(Conflict):
        env.call("clinic", "TreatmentProvider", "register")


def test_one_address_many_kinds(env):
    env.call("clinic", "TreatmentProvider", "register")
    env.call("clinic", "License", "register", kind="issuer")
    env.call("clinic", "License", "register", kind="provider")
    for kind in ("treatment-provider", "license-issuer", "license-provider"):
        assert env.suite.is_registered(env.state, env.a("clinic"), kind)


def test_set_trust_rules(env):
    with pytest.raises(NotFound):
        env.call("admin", "TreatmentProvider", "set_trust", subject=env.a("clinic"), trusted=True)
    env.call("clinic", "TreatmentProvider", "register")
    with pytest.raises(Unauthorized):
        env.call("clinic", "TreatmentProvider", "set_trust", subject=env.a("clinic"), trusted=True)
    r = env.call("admin", "TreatmentProvider", "set_trust", subject=env.a("clinic"), trusted=True)
    assert r.gas_key == "trust_add_treatment_provider"
    assert r.logs[0].event == "TrustAdded"
    assert env.trusted("clinic", "treatment-provider")
    r = env.call("admin", "TreatmentProvider", "set_trust", subject=env.a("clinic"), trusted=False)
    assert r.gas_key == "trust_remove_treatment_provider"
    assert not env.trusted("clinic", "treatment-provider")


def test_unknown_entities_are_untrusted(env):
    assert not env.trusted("nobody", "treatment-provider")
    assert not env.trusted("nobody", "authority")
    assert not env.suite.query_license_trust(env.state, env.a("nobody"))
    assert env.suite.license(env.state, env.a("nobody")) is None
    with pytest.raises(InvalidArgument):
        env.suite.query_trust(env.state, env.a("nobody"), "wizard")


def test_bad_license_kind(env):
    with pytest.raises(InvalidArgument):
        env.call("board", "License", "register", kind="registrar")


# -- licenses ----------------------------------------------------------------------


def test_issue_and_trust(env):
    env.call("board", "License", "register", kind="issuer")
    with pytest.raises(Unauthorized):
        env.call("rogue", "License", "issue", holder=env.a("doctor"))
    env.call("board", "License", "issue", holder=env.a("doctor"))
    lic = env.suite.license(env.state, env.a("doctor"))
    assert (lic.issuer, lic.provider) == (env.a("board"), None)
    with pytest.raises(Conflict):
        env.call("board", "License", "issue", holder=env.a("doctor"))
    assert not env.suite.query_license_trust(env.state, env.a("doctor"))


def test_license_needs_both_legs_trusted(env):
    env.setup_license(trust=False)
    holder = env.a("doctor")
    assert not env.suite.query_license_trust(env.state, holder)
    env.call("admin", "License", "set_trust", kind="issuer", subject=env.a("board"), trusted=True)
    assert not env.suite.query_license_trust(env.state, holder)  # provider untrusted
    env.call("admin", "License", "set_trust", kind="provider", subject=env.a("hospital"),
             trusted=True)
    assert env.suite.query_license_trust(env.state, holder)
    env.call("admin", "License", "set_trust", kind="issuer", subject=env.a("board"), trusted=False)
    assert not env.suite.query_license_trust(env.state, holder)


def test_license_moves(env):
    env.setup_license()
    holder = env.a("doctor")
    env.call("hospital2", "License", "register", kind="provider")
    env.call("hospital3", "License", "register", kind="provider")
    with pytest.raises(NotFound):
        env.call("doctor", "License", "propose_move", kind="provider", holder=holder,
                 destination=env.a("unregistered"))
    with pytest.raises(Unauthorized):
        env.call("rogue", "License", "propose_move", kind="provider", holder=holder,
                 destination=env.a("hospital2"))
    r = env.call("doctor", "License", "propose_move", kind="provider", holder=holder,
                 destination=env.a("hospital3"))
    assert r.gas_key == "license_propose_move_holder"
    r = env.call("board", "License", "propose_move", kind="provider", holder=holder,
                 destination=env.a("hospital2"))
    assert r.gas_key == "license_propose_move_issuer"
    lic = env.suite.license(env.state, holder)
    assert lic.pending_moves == {"provider": (env.a("hospital2"), env.a("board"))}
    with pytest.raises(Unauthorized):
        env.call("hospital3", "License", "approve_move", kind="provider", holder=holder)
    r = env.call("hospital2", "License", "approve_move", kind="provider", holder=holder)
    assert r.gas_key == "license_approve_provider_move"
    lic = env.suite.license(env.state, holder)
    assert lic.provider == env.a("hospital2") and lic.pending_moves == {}
    with pytest.raises(NotFound):
        env.call("hospital2", "License", "approve_move", kind="provider", holder=holder)


def test_issuer_move(env):
    env.setup_license()
    holder = env.a("doctor")
    env.call("board2", "License", "register", kind="issuer")
    env.call("doctor", "License", "propose_move", kind="issuer", holder=holder,
             destination=env.a("board2"))
    r = env.call("board2", "License", "approve_move", kind="issuer", holder=holder)
    assert r.gas_key == "license_approve_issuer_move"
    assert env.suite.license(env.state, holder).issuer == env.a("board2")
    # new issuer is not yet trusted
    assert not env.suite.query_license_trust(env.state, holder)


def test_move_for_missing_license(env):
    env.call("hospital", "License", "register", kind="provider")
    with pytest.raises(NotFound):
        env.call("doctor", "License", "propose_move", kind="provider", holder=env.a("doctor"),
                 destination=env.a("hospital"))


# -- treatments --------------------------------------------------------------------


def test_create_requires_effective_trust(env):
    env.call("clinic", "TreatmentProvider", "register")
    with pytest.raises(Unauthorized):
        env.create("p1")
    with pytest.raises(Unauthorized):
        env.create("p1", provider="rogue")
    env.call("admin", "TreatmentProvider", "set_trust", subject=env.a("clinic"), trusted=True)
    assert env.create("p1") == 1
    assert env.create("p2") == 2
    rec = env.suite.treatment(env.state, 1)
    assert (rec.patient, rec.treatment_provider, rec.approved, rec.approving_license) == \
        (env.a("p1"), env.a("clinic"), False, None)
    assert rec.data_url == "https://records.example/t"


def test_create_argument_checks(env):
    env.setup_provider()
    with pytest.raises(InvalidArgument):
        env.call("clinic", "Treatment", "create", patient=env.a("p"), data_hash=bytes(32),
                 data_url="x" * 129)
    with pytest.raises(InvalidArgument):
        env.call("clinic", "Treatment", "create", patient=bytes(20), data_hash=bytes(32),
                 data_url="")
    long_ok = env.call("clinic", "Treatment", "create", patient=env.a("p"), data_hash=bytes(32),
                       data_url="y" * 128).value
    assert env.suite.treatment(env.state, long_ok).data_url == "y" * 128


def test_consent_message_layout():
    holder = b"\x09" * 20
    assert consent_message(5, holder) == rlp.encode([5, holder])
    key = PrivateKey(1234)
    sig = sign_consent(5, holder, key)
    digest = keccak256(encode_personal_message(rlp.encode([5, holder])))
    assert recover(digest, sig) == key.address


def test_approval(env):
    env.setup_provider()
    env.setup_license()
    tid = env.create("p1")
    r = env.approve(tid, "p1")
    assert r.gas_key == "treatment_approve"
    rec = env.suite.treatment(env.state, tid)
    assert rec.approved and rec.approving_license == env.a("doctor")
    with pytest.raises(Conflict):
        env.approve(tid, "p1")


def test_approval_failures(env):
    env.setup_provider()
    env.setup_license()
    tid = env.create("p1")
    with pytest.raises(ConsentInvalid):
        env.approve(tid, "p2")  # signed by someone else
    wrong_holder = sign_consent(tid, env.a("other"), env.keys["p1"])
    with pytest.raises(ConsentInvalid):
        env.call("doctor", "Treatment", "approve", treatment_id=tid, consent=wrong_holder)
    with pytest.raises(NotFound):
        env.approve(99, "p1")
    with pytest.raises(Unauthorized):
        env.approve(tid, "p1", holder="rogue")
    env.call("admin", "License", "set_trust", kind="issuer", subject=env.a("board"), trusted=False)
    with pytest.raises(Unauthorized):
        env.approve(tid, "p1")
    assert not env.suite.treatment(env.state, tid).approved


def test_high_s_consent_is_invalid(env):
    from medledger.crypto import SECP256K1_N
    env.setup_provider()
    env.setup_license()
    tid = env.create("p1")
    sig = sign_consent(tid, env.a("doctor"), env.keys["p1"])
    twin = Signature(sig.v ^ 1, sig.r, SECP256K1_N - sig.s)
    with pytest.raises(ConsentInvalid):
        env.call("doctor", "Treatment", "approve", treatment_id=tid, consent=twin)


# -- evaluations and evidence ------------------------------------------------------


def test_evaluation_rules(env):
    env.setup_provider()
    env.setup_license()
    tid = env.create("p1")
    with pytest.raises(PreconditionFailed):
        env.call("p1", "Measure", "submit", treatment_id=tid, rating=5)
    env.approve(tid, "p1")
    with pytest.raises(Unauthorized):
        env.call("doctor", "Measure", "submit", treatment_id=tid, rating=10)
    with pytest.raises(NotFound):
        env.call("p1", "Measure", "submit", treatment_id=tid + 1, rating=5)
    for bad in (0, 11):
        with pytest.raises(InvalidArgument):
            env.call("p1", "Measure", "submit", treatment_id=tid, rating=bad)
    r = env.call("p1", "Measure", "submit", treatment_id=tid, rating=8, comment_hash=b"\x0c" * 32)
    assert r.gas_key == "measure_submit"
    assert env.suite.evaluation(env.state, tid).rating == 8
    assert env.suite.evaluation(env.state, tid).comment_hash == b"\x0c" * 32
    with pytest.raises(Conflict):
        env.call("p1", "Measure", "submit", treatment_id=tid, rating=3)
    assert env.suite.evaluation(env.state, tid).rating == 8


def test_evidence(env):
    env.setup_provider()
    env.setup_license()
    holder = env.a("doctor")
    assert env.suite.query_evidence(env.state, holder) == Evidence(0, (), None)
    for name, rating in (("p1", 6), ("p2", 10)):
        tid = env.create(name)
        env.approve(tid, name)
        env.call(name, "Measure", "submit", treatment_id=tid, rating=rating)
    assert env.suite.query_evidence(env.state, holder) == Evidence(2, (6, 10), Fraction(8))


def test_evidence_counts_unrated_treatments(env):
    env.setup_provider()
    env.setup_license()
    for name in ("p1", "p2", "p3"):
        env.approve(env.create(name), name)
    env.call("p2", "Measure", "submit", treatment_id=2, rating=7)
    assert env.suite.query_evidence(env.state, env.a("doctor")) == Evidence(3, (7,), Fraction(7))
    assert [t.id for t in env.suite.treatments_by(env.state, env.a("doctor"))] == [1, 2, 3]


def test_reads_do_not_mutate(env):
    env.setup_provider()
    env.setup_license()
    env.approve(env.create("p1"), "p1")
    root = env.state.root()
    env.suite.query_evidence(env.state, env.a("doctor"))
    env.suite.query_trust(env.state, env.a("clinic"), "treatment-provider")
    env.suite.license(env.state, env.a("doctor"))
    env.suite.treatments(env.state)
    env.suite.proposal(env.state, 1)
    assert env.state.root() == root
