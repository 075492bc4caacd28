import json
import sys
from argparse import Namespace
from collections.abc import Sequence
from importlib.metadata import PackageNotFoundError, version
from ipaddress import IPv4Address
from pathlib import Path

import numpy as np
import pandas as pd

from onion_wsn.core.adversary.disclosure import disclosure_rate
from onion_wsn.core.adversary.external import external_view
from onion_wsn.core.adversary.findings import AdversaryPolicy, score_findings, write_findings
from onion_wsn.core.adversary.internal import internal_findings
from onion_wsn.core.exceptions import OnionWsnError
from onion_wsn.core.logger import configure_logger, logger
from onion_wsn.core.netsim.config import load_config
from onion_wsn.core.netsim.experiment import run_experiment
from onion_wsn.core.netsim.output import write_records_csv, write_summary_json
from onion_wsn.core.netsim.stats import summarize
from onion_wsn.core.netsim.trace import read_trace, write_trace
from onion_wsn.core.parser import CONFIG_KEYS, parser
from onion_wsn.core.runtime.circuit import CircuitDriver
from onion_wsn.core.settings import Settings
from onion_wsn.core.telemetry import setup_telemetry, trace_operation
from onion_wsn.core.translator.dsl import parse_request
from onion_wsn.core.translator.registry_file import load_registry
from onion_wsn.core.translator.task_compiler import compile_task
from onion_wsn.core.vm.assembler import assemble, disassemble
from onion_wsn.core.vm.interpreter import Task, validate

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def _package_version() -> str:
    try:
        return version("onion-wsn")
    except PackageNotFoundError:
        return "0.0.0"


def _split(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_overrides(args: Namespace) -> dict[str, str]:
    """Config keys given on the `simulate` command line."""
    return {key: value for key in CONFIG_KEYS if (value := getattr(args, key, None)) is not None}


@trace_operation("cmd_simulate")
def cmd_simulate(config_path: str | None, overrides: dict[str, str], trace_path: str | None) -> int:
    config = load_config(Path(config_path) if config_path else None, overrides)
    result = run_experiment(config, keep_trace=trace_path is not None)
    write_records_csv(result.records, config.output_csv)
    write_summary_json(config, result, config.output_json)
    logger.info("Wrote %d records to %s", len(result.records), config.output_csv)
    if trace_path is not None and result.trace is not None:
        write_trace(result.trace, Path(trace_path))
        logger.info("Wrote trace to %s", trace_path)

    table = pd.DataFrame(
        [row.model_dump(mode="json") for row in summarize(result.records)],
    )[["topology", "s", "n", "returned", "median", "q25", "q75", "pct_aborted"]]
    print(table.to_string(index=False))
    return EXIT_OK


@trace_operation("cmd_query")
def cmd_query(registry: str, request_text: str, n: int, seed: int, offline: str) -> int:
    settings = Settings().model_copy(update={"DEPLOYMENT_KEY_SEED": seed})
    deployment = load_registry(Path(registry), seed)
    request = parse_request(request_text)
    offline_nodes = [IPv4Address(address) for address in _split(offline)]
    driver = CircuitDriver(deployment, settings, np.random.default_rng(seed), offline_nodes)
    result = driver.run(request, n)
    print(json.dumps(result.to_dict(), sort_keys=True))
    print(f"queries issued: {result.queries}, reissued: {result.reissued}", file=sys.stderr)
    return EXIT_OK


@trace_operation("cmd_adversary")
def cmd_adversary(
    trace_file: str,
    owned: str,
    policy: str,
    external: bool,
    disclosure: str | None,
    trials: int,
    output: str | None,
) -> int:
    trace = read_trace(Path(trace_file))
    owned_nodes = [int(node) for node in _split(owned)]
    adversary_policy = AdversaryPolicy(policy)
    summary: dict[str, object] = {}
    if external:
        report = external_view(trace)
        findings = report.findings
        summary["external"] = report.model_dump(mode="json", exclude={"findings"})
    else:
        findings = internal_findings(trace, owned_nodes, adversary_policy)
    summary["score"] = score_findings(trace, findings).model_dump(mode="json")
    if disclosure is not None:
        fractions = [float(f) for f in _split(disclosure)]
        rows = disclosure_rate(trace, fractions, trials, policy=adversary_policy)
        summary["disclosure"] = [row.model_dump() for row in rows]

    if output is None:
        write_findings(findings, sys.stdout)
    else:
        with open(output, "w", encoding="utf-8") as f:
            write_findings(findings, f)
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_taskasm(action: str, source: str, task_max: int | None) -> int:
    match action:
        case "assemble":
            task = assemble(Path(source).read_text(encoding="utf-8"))
            validate(task, task_max)
            print(task.bytecode.hex())
        case "disassemble":
            task = Task(bytecode=bytes.fromhex(source))
            validate(task, task_max)
            print(disassemble(task), end="")
        case "compile":
            task = compile_task(parse_request(source).phi, task_max)
            print(task.bytecode.hex())
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    settings = Settings()
    configure_logger(settings)
    setup_telemetry(settings)
    logger.debug("Starting onion-wsn version %s", _package_version())
    logger.debug("Settings: %s", settings.safe_model_dump())

    args = parser.parse_args(argv)
    try:
        match args.command:
            case "simulate":
                return cmd_simulate(args.config, parse_overrides(args), args.trace)
            case "query":
                return cmd_query(args.registry, args.request, args.n, args.seed, args.offline)
            case "adversary":
                return cmd_adversary(
                    args.trace,
                    args.owned,
                    args.policy,
                    args.external,
                    args.disclosure,
                    args.trials,
                    args.output,
                )
            case "taskasm":
                return cmd_taskasm(args.action, args.source, args.task_max)
    except (FileNotFoundError, ValueError) as e:
        logger.error(str(e))
        return EXIT_INVALID
    except OnionWsnError as e:
        logger.error(str(e))
        return EXIT_RUNTIME
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
