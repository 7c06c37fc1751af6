"""Trust-hierarchy contracts: governance, registries, licenses, treatments, evaluations."""

from ..crypto import sign
from .abi import (
    AUTHORITY_MANAGER,
    CONTRACTS,
    LICENSE,
    MEASURE,
    METHODS,
    TREATMENT,
    TREATMENT_PROVIDER,
    CallDataError,
    ContractCall,
)
from .contracts import (
    LICENSE_ISSUER_KIND,
    LICENSE_PROVIDER_KIND,
    MAX_DATA_URL_BYTES,
    TREATMENT_PROVIDER_KIND,
    TRUST_KINDS,
    Evidence,
    LicenseView,
    LogEntry,
    MeasureRecord,
    Proposal,
    TreatmentRecord,
    consent_digest,
    consent_message,
)
from .errors import (
    Conflict,
    ConsentInvalid,
    ContractError,
    InsufficientMajority,
    InvalidArgument,
    NotFound,
    PreconditionFailed,
    Unauthorized,
)
from .suite import CallResult, TrustSuite


def sign_consent(treatment_id: int, license_holder: bytes, patient_key):
    """Patient's off-chain approval of ``license_holder`` for ``treatment_id``."""
    return sign(consent_digest(treatment_id, license_holder), patient_key)


__all__ = [
    "AUTHORITY_MANAGER", "CONTRACTS", "LICENSE", "MEASURE", "METHODS", "TREATMENT",
    "TREATMENT_PROVIDER", "CallDataError", "ContractCall", "LICENSE_ISSUER_KIND",
    "LICENSE_PROVIDER_KIND", "MAX_DATA_URL_BYTES", "TREATMENT_PROVIDER_KIND", "TRUST_KINDS",
    "Evidence", "LicenseView", "LogEntry", "MeasureRecord", "Proposal", "TreatmentRecord",
    "consent_digest", "consent_message", "Conflict", "ConsentInvalid", "ContractError",
    "InsufficientMajority", "InvalidArgument", "NotFound", "PreconditionFailed",
    "Unauthorized", "CallResult", "TrustSuite", "sign_consent",
]
