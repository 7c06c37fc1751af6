"""Price-series ingestion and wei/USD cost reports for protocol workflows."""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, localcontext
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..ledger import Receipt

WEI_PER_ETHER = 10**18
PRICE_HEADER = ("date", "eth_usd", "gas_price_wei")
REPORT_HEADER = ("workflow", "date", "gas", "wei_cost", "usd_cost")

# Each workflow is the list of gas keys it is made of.
WORKFLOWS: dict[str, tuple[str, ...]] = {
    "treatment": ("treatment_create", "treatment_approve"),
    "evaluation": ("measure_submit",),
    "transfer": ("transfer",),
    "onboard-treatment-provider": ("register_treatment_provider", "trust_add_treatment_provider"),
    "add-authority": ("authority_propose_add", "authority_vote", "authority_enact_add"),
}


class PriceError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class PricePoint:
    date: dt.date
    eth_usd: Decimal
    gas_price_wei: int

    def __post_init__(self):
        if self.eth_usd <= 0:
            raise ValueError("eth_usd must be positive")
        if self.gas_price_wei <= 0:
            raise ValueError("gas_price_wei must be positive")


def parse_prices(text: str) -> list[PricePoint]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return []
    if tuple(h.strip() for h in header) != PRICE_HEADER:
        raise PriceError(f"header must be {','.join(PRICE_HEADER)}", 1)
    points: list[PricePoint] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise PriceError(f"expected 3 columns, got {len(row)}", line)
        try:
            point = PricePoint(dt.date.fromisoformat(row[0].strip()),
                               Decimal(row[1].strip()), int(row[2].strip()))
        except (ValueError, InvalidOperation) as exc:
            raise PriceError(str(exc) or "bad value", line) from exc
        if points and point.date <= points[-1].date:
            raise PriceError(f"date {point.date} is not after {points[-1].date}", line)
        points.append(point)
    return points


def ingest_prices(path: str | Path) -> list[PricePoint]:
    """Read and validate a ``date,eth_usd,gas_price_wei`` CSV."""
    with open(path, newline="") as fh:
        return parse_prices(fh.read())


def per_op_gas(receipts: Iterable[Receipt]) -> dict[str, int]:
    """Gas charged per successful operation, keyed by gas key (first occurrence wins)."""
    table: dict[str, int] = {}
    for receipt in receipts:
        if receipt.gas_key and receipt.succeeded:
            table.setdefault(receipt.gas_key, receipt.gas_used)
    return table


def usd_cost(gas: int, gas_price_wei: int, eth_usd: Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        return Decimal(gas * gas_price_wei) * Decimal(eth_usd) / WEI_PER_ETHER


@dataclass(frozen=True)
class CostPoint:
    workflow: str
    date: dt.date
    gas: int
    wei_cost: int
    usd_cost: Decimal


@dataclass
class CostReport:
    per_op_gas: dict[str, int]
    workflow_gas: dict[str, int]
    series: list[CostPoint] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for p in self.series:
            writer.writerow([p.workflow, p.date.isoformat(), p.gas, p.wei_cost,
                             f"{p.usd_cost:.6f}"])
        return out.getvalue()


def cost_report(receipts: Iterable[Receipt] | Mapping[str, int],
                workflows: Mapping[str, Sequence[str]] | Sequence[str],
                prices: Sequence[PricePoint],
                gas_price_wei: int | None = None) -> CostReport:
    """Gas and cost per workflow.

    ``receipts`` may also be a ready-made gas-key table. ``workflows`` is
    either a mapping of name to gas keys or names from ``WORKFLOWS``.
    ``gas_price_wei`` overrides the price column of every point.
    """
    table = dict(receipts) if isinstance(receipts, Mapping) else per_op_gas(receipts)
    if not isinstance(workflows, Mapping):
        unknown = [w for w in workflows if w not in WORKFLOWS]
        if unknown:
            raise KeyError(f"unknown workflow(s): {', '.join(unknown)}")
        workflows = {w: WORKFLOWS[w] for w in workflows}
    workflow_gas = {}
    for name, keys in workflows.items():
        missing = [k for k in keys if k not in table]
        if missing:
            raise KeyError(f"workflow {name!r}: no gas observed for {', '.join(missing)}")
        workflow_gas[name] = sum(table[k] for k in keys)
    series = []
    for name, gas in workflow_gas.items():
        for point in prices:
            price = gas_price_wei if gas_price_wei is not None else point.gas_price_wei
            series.append(CostPoint(name, point.date, gas, gas * price,
                                    usd_cost(gas, price, point.eth_usd)))
    return CostReport(table, workflow_gas, series)
