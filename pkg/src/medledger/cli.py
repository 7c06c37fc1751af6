"""Command-line entry point: ``medledger run|gas-table|costs|keygen|serve``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .crypto import PrivateKey, to_checksum_address
from .harness import (
    BUNDLED_SCENARIOS,
    WORKFLOWS,
    PriceError,
    Scenario,
    ScenarioError,
    bundled_scenario,
    cost_report,
    derive_key,
    ingest_prices,
    render_svg,
    run_scenario,
)
from .ledger import (
    MEASURED_GAS,
    TRANSFER_GAS,
    ChainConfig,
    ConfigError,
    GasMode,
    Genesis,
    parse_wei,
)
from .ledger.chain import Chain
from .nodeapi import CONFIG_ENV, ApiConfig, NodeServer

log = logging.getLogger("medledger")


def _load_scenario(ref: str) -> Scenario:
    path = Path(ref)
    if not path.exists() and ref in BUNDLED_SCENARIOS:
        return bundled_scenario(ref)
    return Scenario.load(path)


def _write_report(result, report_dir: Path) -> None:
    report_dir.mkdir(parents=True, exist_ok=True)
    with open(report_dir / "blocks.jsonl", "w") as fh:
        for block in result.chain.dump_blocks():
            fh.write(json.dumps(block, sort_keys=True) + "\n")
    summary = {
        "name": result.name,
        "state_root": "0x" + result.state_root.hex(),
        "passed": result.passed,
        "protocol_transactions": result.protocol_transactions,
        "outcomes": {label: o.view() for label, o in result.outcomes.items()},
        "assertions": [{"query": a.query, "args": a.args, "expected": a.expected,
                        "actual": a.actual, "passed": a.passed} for a in result.assertions],
    }
    with open(report_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)


def cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    config = ChainConfig.load(args.config) if args.config else None
    result = run_scenario(scenario, config)
    for a in result.assertions:
        status = "PASS" if a.passed else "FAIL"
        line = f"{status}  {a.query} {json.dumps(a.args, sort_keys=True)}"
        print(line if a.passed else f"{line}: {a.diff}")
    print(f"state root 0x{result.state_root.hex()}")
    print(f"{sum(a.passed for a in result.assertions)}/{len(result.assertions)} assertions passed")
    if args.report:
        _write_report(result, Path(args.report))
    return 0 if result.passed else 1


def _observed_gas(mode: GasMode) -> dict[str, int]:
    config = ChainConfig(gas_mode=mode)
    result = run_scenario(bundled_scenario("canonical_gas"), config)
    table = {}
    for receipt in result.receipts:
        if receipt.gas_key:
            table.setdefault(receipt.gas_key, receipt.gas_used)
    return table


def cmd_gas_table(args) -> int:
    mode = GasMode(args.mode)
    if mode is GasMode.MEASURED:
        table = {"transfer": TRANSFER_GAS, **MEASURED_GAS}
    else:
        table = _observed_gas(mode)
    width = max(map(len, table))
    for key, gas in table.items():
        print(f"{key:<{width}}  {gas:>7}")
    return 0


def cmd_costs(args) -> int:
    prices = ingest_prices(args.prices)
    names = list(WORKFLOWS) if args.workflow == "all" else args.workflow.split(",")
    gas_price = parse_wei(args.gas_price) if args.gas_price is not None else None
    report = cost_report(_observed_gas(GasMode.MEASURED), names, prices, gas_price)
    if not report.series:
        for name, gas in report.workflow_gas.items():
            print(f"{name}: {gas} gas (no price data)", file=sys.stderr)
    text = render_svg(report, f"Cost in USD: {', '.join(names)}") if args.out == "svg" \
        else report.to_csv()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_keygen(args) -> int:
    for _ in range(args.count):
        key = PrivateKey.generate()
        print(f"{to_checksum_address(key.address)} 0x{key.to_bytes().hex()}")
    return 0


def _dev_genesis() -> Genesis:
    admin = derive_key("medledger-dev", "admin")
    log.warning("no configuration given; dev authority %s has key 0x%s",
                to_checksum_address(admin.address), admin.to_bytes().hex())
    return Genesis(accounts={admin.address: 100 * 10**18}, bootstrap_authority=admin.address)


def cmd_serve(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV)
    config = ChainConfig.load(config_path) if config_path else ChainConfig()
    chain = Chain(config.genesis or _dev_genesis(), config)
    api = ApiConfig.from_env(port=args.port, read_only=args.read_only, test_mode=args.test_mode,
                             host=args.host)
    server = NodeServer(chain, api)
    log.warning("serving on %s", server.url)
    try:
        server.run_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medledger", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay a scenario and check its assertions")
    p.add_argument("scenario", help=f"scenario JSON path, or one of {', '.join(BUNDLED_SCENARIOS)}")
    p.add_argument("--config", help="chain configuration JSON (overrides the scenario's)")
    p.add_argument("--report", help="directory for blocks.jsonl and summary.json")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gas-table", help="print per-operation gas")
    p.add_argument("--mode", choices=[m.value for m in GasMode], default=GasMode.MEASURED.value)
    p.set_defaults(fn=cmd_gas_table)

    p = sub.add_parser("costs", help="wei/USD cost of workflows over a price series")
    p.add_argument("--prices", required=True, help="CSV with date,eth_usd,gas_price_wei")
    p.add_argument("--workflow", required=True,
                   help=f"comma-separated names from {', '.join(WORKFLOWS)}, or 'all'")
    p.add_argument("--gas-price", help="override every row's gas price (wei, or e.g. '20 gwei')")
    p.add_argument("--out", choices=("csv", "svg"), default="csv")
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(fn=cmd_costs)

    p = sub.add_parser("keygen", help="print fresh address/private-key pairs")
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("serve", help="run the HTTP node API")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config", help="chain configuration JSON naming a genesis")
    p.add_argument("--read-only", action="store_true")
    p.add_argument("--test-mode", action="store_true", help="disable the block timer, enable POST /mine")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ScenarioError, ConfigError, PriceError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
