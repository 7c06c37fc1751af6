"""Gas schedules.

Two ways of pricing a contract call:

* ``measured`` charges a fixed per-invocation amount taken from recorded
  runs of the compiled contracts on a single-node network. It makes cost
  figures reproducible to the unit.
* ``micro`` charges the intrinsic transaction cost plus a per-operation
  price for each storage read, fresh storage write and jump destination
  the native contract actually performed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

TRANSFER_GAS = 21000

MEASURED_GAS: Mapping[str, int] = {
    "authority_propose_add": 179013,
    "authority_propose_remove": 149040,
    "authority_vote": 73686,
    "authority_enact_add": 64297,
    "authority_enact_failed": 28045,
    "authority_enact_remove": 45332,
    "trust_add_treatment_provider": 93707,
    "trust_remove_treatment_provider": 22909,
    "trust_add_license_issuer": 48863,
    "trust_remove_license_issuer": 18829,
    "trust_add_license_provider": 48906,
    "trust_remove_license_provider": 15965,
    "register_treatment_provider": 85959,
    "treatment_create": 200118,
    "register_license_issuer": 71059,
    "license_issue": 88538,
    "license_approve_issuer_move": 23040,
    "register_license_provider": 86036,
    "license_approve_provider_move": 38019,
    "license_propose_move_holder": 46059,
    "license_propose_move_issuer": 46092,
    "treatment_approve": 102721,
    "measure_submit": 143669,
}

# Storage ops outside this table (e.g. overwriting a non-zero slot) are free.
MICRO_OP_GAS: Mapping[str, int] = {
    "sset": 20000,
    "jumpdest": 1,
    "sload": 200,
}


class GasMode(str, enum.Enum):
    MEASURED = "measured"
    MICRO = "micro"


def micro_gas_cost(trace: Iterable[str], table: Mapping[str, int] = MICRO_OP_GAS) -> int:
    return TRANSFER_GAS + sum(table.get(op, 0) for op in trace)


@dataclass
class GasSchedule:
    mode: GasMode = GasMode.MEASURED
    measured: dict[str, int] = field(default_factory=lambda: dict(MEASURED_GAS))
    micro: dict[str, int] = field(default_factory=lambda: dict(MICRO_OP_GAS))

    @classmethod
    def with_overrides(cls, mode: GasMode | str = GasMode.MEASURED,
                       overrides: Mapping[str, int] | None = None) -> GasSchedule:
        schedule = cls(GasMode(mode))
        for key, value in (overrides or {}).items():
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"gas override for {key!r} must be a non-negative integer")
            if key in schedule.measured:
                schedule.measured[key] = value
            elif key in schedule.micro or key == "sreset":
                schedule.micro[key] = value
            else:
                raise ValueError(f"unknown gas table entry {key!r}")
        return schedule

    def call_cost(self, gas_key: str | None, trace: Iterable[str]) -> int:
        if self.mode is GasMode.MICRO:
            return micro_gas_cost(trace, self.micro)
        if gas_key is None:
            return TRANSFER_GAS
        return self.measured[gas_key]
