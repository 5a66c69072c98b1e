"""Request-sequence generators, the fixed comparison sequences, and sequence files.

Sequence files hold one request per line, ``R|W <node> <object>``; blank
lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .model import ConfigError, Op, Request, SystemConfig

RANDOM_SIZE = "random_size"
FIXED_SIZE = "fixed_size"
EXPLICIT = "explicit"


class SequenceParseError(ConfigError):
    def __init__(self, message: str, line: int) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class WorkloadSpec:
    mode: str
    n: int
    read_probability: float
    seed: int
    processors: tuple[str, ...]
    objects: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.mode not in (RANDOM_SIZE, FIXED_SIZE, EXPLICIT):
            raise ValueError(f"unknown workload mode {self.mode!r}")
        if not 0.0 <= self.read_probability <= 1.0:
            raise ValueError("read_probability must lie in [0, 1]")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @classmethod
    def for_config(
        cls, config: SystemConfig, mode: str, n: int, read_probability: float, seed: int
    ) -> "WorkloadSpec":
        # requesters are the regular processors; servers never issue generated requests
        return cls(mode, n, read_probability, seed, config.regular_processors, config.objects)


def _draw(spec: WorkloadSpec, rng: random.Random, length: int) -> list[Request]:
    if not spec.processors or not spec.objects:
        raise ValueError("workload needs a nonempty node pool and object pool")
    out = []
    for _ in range(length):
        kind = Op.READ if rng.random() < spec.read_probability else Op.WRITE
        out.append(Request(kind, rng.choice(spec.processors), rng.choice(spec.objects)))
    return out


def gen_random(spec: WorkloadSpec) -> list[Request]:
    """Length uniform on [1, spec.n], then i.i.d. requests."""
    if spec.mode != RANDOM_SIZE:
        raise ValueError("gen_random needs a random_size spec")
    rng = random.Random(spec.seed)
    return _draw(spec, rng, rng.randint(1, spec.n))


def gen_fixed(spec: WorkloadSpec) -> list[Request]:
    if spec.mode != FIXED_SIZE:
        raise ValueError("gen_fixed needs a fixed_size spec")
    return _draw(spec, random.Random(spec.seed), spec.n)


def generate(spec: WorkloadSpec) -> list[Request]:
    if spec.mode == RANDOM_SIZE:
        return gen_random(spec)
    if spec.mode == FIXED_SIZE:
        return gen_fixed(spec)
    raise ValueError("explicit workloads are loaded, not generated")


# Request sequences A-F with the published totals (orad, adrw).
_FIXTURES = {
    "A": (
        "R p3 o4, R p6 o4, W p2 o4, R p3 o2, W p7 o5, R p4 o3, W p5 o5, W p2 o3, "
        "R p4 o2, R p5 o1, W p4 o5, W p5 o1, W p7 o5, W p5 o1, W p4 o1, W p6 o4, "
        "W p2 o2, R p5 o4, R p5 o3, R p4 o5, W p3 o4, R p5 o2",
        429, 455,
    ),
    "B": (
        "R p3 o2, W p6 o4, R p3 o4, W p2 o4, R p5 o4, W p1 o5, W p3 o2, R p6 o2, "
        "R p5 o3, R p4 o3, W p3 o2",
        180, 188,
    ),
    "C": (
        "W p5 o4, R p4 o3, R p2 o2, W p1 o5, W p3 o5, R p2 o4, W p2 o1, R p4 o3, "
        "R p7 o5, W p1 o1, R p4 o5, R p6 o2, R p5 o2, R p5 o1, W p6 o2, W p7 o5, "
        "R p3 o4, R p4 o5, R p3 o2, W p1 o5",
        303, 323,
    ),
    "D": (
        "R p3 o2, R p2 o2, W p5 o2, R p2 o3, W p2 o3, R p6 o2, W p5 o2, R p3 o2, "
        "R p2 o1, W p4 o3, R p4 o3, R p3 o2",
        246, 253,
    ),
    "E": (
        "R p4 o3, R p6 o2, W p6 o2, R p5 o3, W p7 o3, W p4 o5, W p2 o2, R p5 o3, "
        "W p2 o1, R p4 o3, R p6 o4, W p6 o2, R p2 o2, R p5 o2, R p7 o5",
        242, 267,
    ),
    "F": (
        "R p3 o2, R p2 o2, W p4 o5, R p6 o4, W p2 o2, R p2 o3, R p1 o5, R p4 o4, "
        "W p3 o4, R p5 o4, R p2 o1",
        194, 204,
    ),
}

FIXTURE_PUBLISHED = {name: (orad, adrw) for name, (_, orad, adrw) in _FIXTURES.items()}


def fixture_sequences() -> dict[str, list[Request]]:
    return {
        name: [parse_request(item.strip()) for item in text.split(",")]
        for name, (text, _, _) in _FIXTURES.items()
    }


# ---------------------------------------------------------------------------
# sequence files
# ---------------------------------------------------------------------------


def parse_request(text: str, line: int = 0) -> Request:
    parts = text.split()
    if len(parts) != 3:
        raise SequenceParseError(f"expected 'R|W <node> <object>', got {text!r}", line)
    kind, node, obj = parts
    try:
        op = Op(kind)
    except ValueError:
        raise SequenceParseError(f"unknown request kind {kind!r}", line) from None
    return Request(op, node, obj)


def parse_sequence(lines: Iterable[str], config: SystemConfig | None = None) -> list[Request]:
    out = []
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        request = parse_request(text, number)
        if config is not None:
            if request.requester not in config.nodes:
                raise SequenceParseError(f"unknown node {request.requester!r}", number)
            if request.object not in config.objects:
                raise SequenceParseError(f"unknown object {request.object!r}", number)
        out.append(request)
    return out


def load_sequence(path: str | Path, config: SystemConfig | None = None) -> list[Request]:
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh, config)


def format_sequence(sequence: Sequence[Request]) -> str:
    return "".join(f"{r}\n" for r in sequence)


def save_sequence(sequence: Sequence[Request], path: str | Path) -> None:
    Path(path).write_text(format_sequence(sequence), encoding="utf-8")
