"""Comparison tables, sweeps, and their CSV/JSON renderings."""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .engine import run, run_metadata
from .model import Op, Request, SystemConfig
from .workloads import FIXED_SIZE, WorkloadSpec, generate

IMPROVEMENT_LABEL = "improvement_pct_vs_adrw"
TOTAL_LABEL = "total"


def improvement(total_ref: float, total_new: float) -> float:
    """Percent saved by ``total_new`` relative to ``total_ref``.

    Callers pass column sums over all rows, not per-row percentages.
    """
    if total_ref <= 0:
        raise ValueError("improvement is undefined for a nonpositive reference total")
    return 100.0 * (total_ref - total_new) / total_ref


def derive_seed(base: int, n: int, read_probability: float, index: int) -> int:
    """Per-cell seed; depends only on its inputs, so rows can be computed in any order."""
    return random.Random(f"{base}:{n}:{read_probability!r}:{index}").getrandbits(63)


@dataclass
class ComparisonRow:
    read_probability: float | None
    n_requests: int
    seed: int | None
    costs: dict[str, float] = field(default_factory=dict)
    label: str = ""


@dataclass
class Report:
    rows: list[ComparisonRow]
    policies: tuple[str, ...]
    metadata: dict
    with_label: bool = True

    @property
    def totals(self) -> dict[str, float]:
        return {p: sum(r.costs[p] for r in self.rows) for p in self.policies}

    @property
    def improvement_pct(self) -> float | None:
        if "orad" not in self.policies or "adrw" not in self.policies:
            return None
        totals = self.totals
        return improvement(totals["adrw"], totals["orad"])

    def header(self) -> list[str]:
        cols = ["read_prob", "n", "seed"] + [f"cost_{p}" for p in self.policies]
        return (["workload"] + cols) if self.with_label else cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows:
            cells = [_fmt(row.read_probability), row.n_requests, _fmt(row.seed)]
            cells += [_fmt(row.costs[p]) for p in self.policies]
            writer.writerow(([row.label] if self.with_label else []) + cells)
        totals = self.totals
        lead = [TOTAL_LABEL] + [""] * (3 if self.with_label else 2)
        writer.writerow(lead + [_fmt(totals[p]) for p in self.policies])
        pct = self.improvement_pct
        if pct is not None:
            writer.writerow([IMPROVEMENT_LABEL, f"{pct:.4f}"])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "metadata": self.metadata,
            "policies": list(self.policies),
            "rows": [
                {
                    **({"workload": r.label} if self.with_label else {}),
                    "read_prob": r.read_probability,
                    "n": r.n_requests,
                    "seed": r.seed,
                    **{f"cost_{p}": r.costs[p] for p in self.policies},
                }
                for r in self.rows
            ],
            "totals": self.totals,
            IMPROVEMENT_LABEL: self.improvement_pct,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _num(text: str) -> float | int:
    return float(text) if any(c in text for c in ".eE") else int(text)


def parse_csv(text: str) -> tuple[list[str], list[ComparisonRow]]:
    """Recover policies and rows from :meth:`Report.to_csv` output (footers skipped)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    with_label = header[0] == "workload"
    offset = 1 if with_label else 0
    policies = [h[len("cost_"):] for h in header[offset + 3:]]
    rows = []
    for cells in reader:
        if cells[0] in (TOTAL_LABEL, IMPROVEMENT_LABEL):
            continue
        prob, n, seed = cells[offset:offset + 3]
        rows.append(ComparisonRow(
            read_probability=float(prob) if prob else None,
            n_requests=int(n),
            seed=int(seed) if seed else None,
            costs={p: _num(c) for p, c in zip(policies, cells[offset + 3:])},
            label=cells[0] if with_label else "",
        ))
    return policies, rows


def read_fraction(sequence: Sequence[Request]) -> float | None:
    if not sequence:
        return None
    return sum(r.kind is Op.READ for r in sequence) / len(sequence)


def compare(
    config: SystemConfig,
    workloads: Iterable[tuple[str, float | None, int | None, Sequence[Request]]],
    policies: Sequence[str],
) -> Report:
    """Run every policy on each ``(label, read_prob, seed, sequence)`` workload."""
    rows = []
    for label, prob, seed, sequence in workloads:
        costs = {p: run(config, p, sequence, check=False).total_cost for p in policies}
        if prob is None:
            prob = read_fraction(sequence)
        rows.append(ComparisonRow(prob, len(sequence), seed, costs, label))
    return Report(rows, tuple(policies), _metadata(config, policies))


def random_workloads(
    config: SystemConfig,
    mode: str,
    n: int,
    probabilities: Sequence[float],
    base_seed: int,
    seeds: int,
) -> list[tuple[str, float, int, list[Request]]]:
    out = []
    for prob in probabilities:
        for j in range(seeds):
            seed = derive_seed(base_seed, n, prob, j)
            spec = WorkloadSpec.for_config(config, mode, n, prob, seed)
            out.append((f"{mode}:p={prob}:{j}", prob, seed, generate(spec)))
    return out


def sweep(
    config: SystemConfig,
    probabilities: Sequence[float],
    n: int,
    seeds: int,
    policies: Sequence[str],
    base_seed: int = 0,
    mode: str = FIXED_SIZE,
) -> Report:
    """One row per probability holding the mean cost of each policy across seeds."""
    for prob in probabilities:
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"probability {prob} outside [0, 1]")
    if seeds < 1:
        raise ValueError("at least one seed is required")
    rows = []
    for prob in probabilities:
        sums: dict[str, int] = {p: 0 for p in policies}
        for _, _, _, sequence in random_workloads(config, mode, n, [prob], base_seed, seeds):
            for p in policies:
                sums[p] += run(config, p, sequence, check=False).total_cost
        rows.append(ComparisonRow(prob, n, base_seed, {p: sums[p] / seeds for p in policies}))
    meta = _metadata(config, policies)
    meta.update({"mode": mode, "seeds": seeds, "base_seed": base_seed})
    return Report(rows, tuple(policies), meta, with_label=False)


def _metadata(config: SystemConfig, policies: Sequence[str]) -> dict:
    meta = run_metadata(config, ",".join(policies))
    meta["requester_distribution"] = "uniform over regular processors"
    meta["object_distribution"] = "uniform"
    meta["server_set"] = {o: list(s) for o, s in config.server_set.items()}
    return meta


def published_columns() -> Mapping[str, tuple[list[int], list[int]]]:
    """(orad, adrw) cost columns of the published fixed-size and sequence tables."""
    return {
        "fixed_100": (
            [1251, 1344, 1720, 1780, 1960, 1774, 1533, 1291, 1009],
            [1342, 1383, 1773, 1812, 1976, 1790, 1609, 1305, 1000],
        ),
        "fixed_1000": (
            [16409, 16177, 15590, 15548, 16188, 15964, 15392, 13127, 10542],
            [16271, 16364, 15824, 15727, 16466, 16560, 16856, 13758, 10124],
        ),
        "sequences": (
            [429, 180, 303, 246, 242, 194],
            [455, 188, 323, 253, 267, 204],
        ),
    }
