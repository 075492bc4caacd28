import argparse

from onion_wsn.core.adversary.findings import AdversaryPolicy
from onion_wsn.core.netsim.config import ExperimentConfig

CONFIG_KEYS = list(ExperimentConfig.model_fields)

parser = argparse.ArgumentParser(
    prog="onion-wsn",
    description="Run onion-routed WSN query experiments, requests and adversary analyses.",
)
subparsers = parser.add_subparsers(dest="command", required=True)

simulate = subparsers.add_parser(
    "simulate",
    help="Run an experiment config on simulated networks",
    description=(
        "Run an experiment config. Any config key can be overridden with "
        "'--key value', for example '--queries 10 --n 5,10'."
    ),
)
simulate.add_argument(
    "config",
    nargs="?",
    default=None,
    help="The experiment config file (key=value lines)",
)
simulate.add_argument(
    "--trace",
    dest="trace",
    default=None,
    help="Write the full simulation trace to this JSON file (single-cell configs only)",
)
overrides = simulate.add_argument_group("config overrides")
for key in CONFIG_KEYS:
    flags = dict.fromkeys([f"--{key.replace('_', '-')}", f"--{key}"])
    overrides.add_argument(
        *flags,
        dest=key,
        default=None,
        metavar="VALUE",
        help=f"Override '{key}'",
    )


query = subparsers.add_parser(
    "query",
    help="Answer a request over an emulated deployment",
)
query.add_argument(
    "--registry",
    dest="registry",
    required=True,
    help="The registry file describing the deployed sensor nodes",
)
query.add_argument(
    "--request",
    dest="request",
    required=True,
    help="The request, e.g. 'IF(light=ON) THEN AVG(temperature) @ lab'",
)
query.add_argument(
    "-n",
    "--path-length",
    dest="n",
    type=int,
    default=5,
    help="Query path length (default 5)",
)
query.add_argument(
    "--seed",
    dest="seed",
    type=int,
    default=0,
    help="Seed for node keys and path selection (default 0)",
)
query.add_argument(
    "--offline",
    dest="offline",
    default="",
    help="Comma-separated addresses of nodes that never forward",
)

adversary = subparsers.add_parser(
    "adversary",
    help="Replay a simulation trace through an adversary",
)
adversary.add_argument(
    "trace",
    help="A trace written by 'simulate --trace'",
)
adversary.add_argument(
    "--owned",
    dest="owned",
    default="",
    help="Comma-separated node ids the internal adversary owns",
)
adversary.add_argument(
    "--policy",
    dest="policy",
    choices=[policy.value for policy in AdversaryPolicy],
    default=AdversaryPolicy.ALWAYS.value,
    help="Whether case-b deductions account for query mixing",
)
adversary.add_argument(
    "--external",
    dest="external",
    action="store_true",
    help="Analyse as an eavesdropper instead of an internal adversary",
)
adversary.add_argument(
    "--disclosure",
    dest="disclosure",
    default=None,
    help="Comma-separated owned fractions for a disclosure-rate sweep",
)
adversary.add_argument(
    "--trials",
    dest="trials",
    type=int,
    default=100,
    help="Random owned sets per fraction in the disclosure sweep (default 100)",
)
adversary.add_argument(
    "-o",
    "--output",
    dest="output",
    default=None,
    help="Write findings as JSON lines to this file instead of stdout",
)

taskasm = subparsers.add_parser(
    "taskasm",
    help="Assemble, disassemble or compile task bytecode",
)
taskasm.add_argument(
    "action",
    choices=["assemble", "disassemble", "compile"],
    help="assemble a source file, disassemble hex, or compile a request",
)
taskasm.add_argument(
    "source",
    help="Source file (assemble), bytecode hex (disassemble) or request text (compile)",
)
taskasm.add_argument(
    "--task-max",
    dest="task_max",
    type=int,
    default=None,
    help="Reject tasks larger than this many bytes",
)
