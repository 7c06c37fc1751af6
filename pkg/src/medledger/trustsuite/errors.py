"""Revert reasons raised by contract methods.

The ledger turns any of these into a failed receipt; they never escape a
transaction.
"""


class ContractError(Exception):
    code = "reverted"

    def __init__(self, message: str = "", *, gas_key: str | None = None):
        super().__init__(message or self.code)
        self.gas_key = gas_key


class Unauthorized(ContractError):
    code = "unauthorized"


class NotFound(ContractError):
    code = "not-found"


class Conflict(ContractError):
    code = "conflict"


class ConsentInvalid(ContractError):
    code = "consent-invalid"


class PreconditionFailed(ContractError):
    code = "precondition-failed"


class InsufficientMajority(ContractError):
    code = "insufficient-majority"


class InvalidArgument(ContractError):
    code = "invalid-argument"
