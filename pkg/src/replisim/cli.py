"""Command-line front end: compare, replay, sweep, gen."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .engine import ConsistencyError, run
from .model import ReplisimError, SystemConfig
from .report import compare, random_workloads, sweep
from .workloads import (
    FIXED_SIZE,
    RANDOM_SIZE,
    WorkloadSpec,
    format_sequence,
    generate,
    load_sequence,
    fixture_sequences,
)

logger = logging.getLogger("replisim")

DEFAULT_PROBABILITIES = [round(0.1 * i, 1) for i in range(1, 10)]


def load_config(path: str | None, *, replicate_all: bool = False) -> SystemConfig:
    if path is None:
        return SystemConfig.default(replicate_all=replicate_all)
    if replicate_all:
        raise ReplisimError("--replicate-all only applies to the built-in configuration")
    with open(path, encoding="utf-8") as fh:
        return SystemConfig.from_dict(json.load(fh))


def resolve_seed(arg: int | None, config: SystemConfig) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("REPLISIM_SEED")
    if env:
        return int(env)
    return config.seed


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _policies(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def fixture_names(spec: str) -> list[str]:
    names = sorted(fixture_sequences())
    rest = spec.partition(":")[2]
    if not rest:
        return names
    if ".." in rest:
        lo, hi = rest.split("..")
        return [n for n in names if lo <= n <= hi]
    picked = [n.strip() for n in rest.split(",")]
    unknown = [n for n in picked if n not in names]
    if unknown:
        raise ReplisimError(f"unknown fixture(s) {unknown}; available {names}")
    return picked


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config, replicate_all=args.replicate_all)
    seed = resolve_seed(args.seed, config)
    policies = _policies(args.policy)
    workload = args.workload
    if workload == "fixture" or workload.startswith("fixture:"):
        fixtures = fixture_sequences()
        workloads = [(name, None, None, fixtures[name]) for name in fixture_names(workload)]
    elif workload in ("random", "fixed"):
        mode = RANDOM_SIZE if workload == "random" else FIXED_SIZE
        workloads = random_workloads(config, mode, args.n, _floats(args.p), seed, args.seeds)
    else:
        workloads = [(Path(workload).stem, None, None, load_sequence(workload, config))]
    report = compare(config, workloads, policies)
    _emit(report.to_json() if args.out == "json" else report.to_csv(), args.output)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config, replicate_all=args.replicate_all)
    seed = resolve_seed(args.seed, config)
    mode = RANDOM_SIZE if args.workload == "random" else FIXED_SIZE
    report = sweep(config, _floats(args.p), args.n, args.seeds, _policies(args.policy), seed, mode)
    _emit(report.to_json() if args.out == "json" else report.to_csv(), args.output)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = load_config(args.config, replicate_all=args.replicate_all)
    sequence = load_sequence(args.sequence, config)
    result = run(config, args.policy, sequence)
    lines = []
    for step in result.steps:
        parts = ", ".join(f"{label}:{units}" for label, units in step.charges)
        line = f"{step.index}\t{step.request}\t{step.locus.value}\t[{parts}]\ttotal={step.running_total}"
        if step.transitions:
            line += "\t" + " ".join(f"{kind}:{node}" for kind, node in step.transitions)
        lines.append(line)
        if args.trace and step.events:
            lines.append("\t  events: " + " ".join(f"{node}<-{kind.value}" for node, kind in step.events))
    lines.append(f"# policy={result.metadata['policy']} k={config.window_capacity} "
                 f"tariff={config.tariff.as_dict()} requests={len(sequence)} total={result.total_cost}")
    for o, state in result.states.items():
        lines.append(
            f"# {o}: version={state.version} servers={','.join(state.servers)} "
            f"data_list={','.join(state.sorted(state.data_list)) or '-'} "
            f"temp={','.join(state.sorted(state.temp_holders)) or '-'} "
            f"inv={state.inv_sent} flag_toggles={state.flag_toggles}"
        )
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    config = load_config(args.config, replicate_all=args.replicate_all)
    seed = resolve_seed(args.seed, config)
    if args.workload not in ("random", "fixed"):
        raise ReplisimError("gen needs --workload random or fixed")
    mode = RANDOM_SIZE if args.workload == "random" else FIXED_SIZE
    probabilities = _floats(args.p)
    if len(probabilities) != 1:
        raise ReplisimError("gen takes exactly one --p value")
    spec = WorkloadSpec.for_config(config, mode, args.n, probabilities[0], seed)
    _emit(format_sequence(generate(spec)), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="replisim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration (SystemConfig fields)")
    common.add_argument("--replicate-all", action="store_true",
                        help="built-in configuration with both servers in every server set")
    common.add_argument("--seed", type=int, help="base seed (falls back to $REPLISIM_SEED)")
    common.add_argument("--output", "-o", help="write to a file instead of stdout")

    p = sub.add_parser("compare", parents=[common], help="run policies on identical workloads")
    p.add_argument("--policy", default="orad,adrw")
    p.add_argument("--workload", default="fixture", help="path | fixture[:A..F] | random | fixed")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", default=",".join(map(str, DEFAULT_PROBABILITIES)))
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="mean cost per read probability")
    p.add_argument("--policy", default="orad,adrw")
    p.add_argument("--workload", choices=("fixed", "random"), default="fixed")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", default=",".join(map(str, DEFAULT_PROBABILITIES)))
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", parents=[common], help="per-request ledger of one run")
    p.add_argument("sequence", help="sequence file")
    p.add_argument("--policy", default="orad", choices=("orad", "adrw", "sa"))
    p.add_argument("--trace", action="store_true", help="also print the window events each request emits")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("gen", parents=[common], help="write a generated sequence file")
    p.add_argument("--workload", choices=("fixed", "random"), default="fixed")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", default="0.5")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConsistencyError as exc:
        print(f"replisim: run aborted: {exc}", file=sys.stderr)
        return 3
    except (ReplisimError, ValueError, OSError) as exc:
        print(f"replisim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
