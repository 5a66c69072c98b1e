"""Sequential execution of request sequences against a replication policy."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .baselines import AdrwPolicy, SaPolicy, SaScheme, sa_read, sa_write
from .model import (
    ConfigError,
    CostLedger,
    EventKind,
    Location,
    Op,
    ReplisimError,
    Request,
    SystemConfig,
    event_cost,
)
from .orad import ENTERED, EXITED, INVALIDATED, ObjectState, OradPolicy

logger = logging.getLogger(__name__)

POLICIES = {"orad": OradPolicy, "adrw": AdrwPolicy, "sa": SaPolicy}


def make_policy(name: str, config: SystemConfig):
    try:
        return POLICIES[name](config)
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}") from None


class Locus(str, Enum):
    LOCAL_DATA = "local_data"
    LOCAL_TEMP = "local_temp"
    SERVER = "server"


def route(request: Request, state: ObjectState) -> Locus:
    p = request.requester
    if state.in_allocation(p):
        return Locus.LOCAL_DATA
    if request.kind is Op.READ and p in state.temp_holders:
        return Locus.LOCAL_TEMP
    return Locus.SERVER


# ---------------------------------------------------------------------------
# consistency
# ---------------------------------------------------------------------------

STALE_COPY = "stale_copy"
ORPHAN_FLAG = "orphan_flag"
WINDOW_DUPLICATE = "window_duplicate"
VERSION_REGRESSION = "version_regression"


@dataclass(frozen=True)
class Violation:
    kind: str
    object: str
    node: str | None
    index: int | None = None
    detail: str = ""


class ConsistencyError(ReplisimError):
    def __init__(self, violations: list[Violation]) -> None:
        self.violations = violations
        first = violations[0]
        super().__init__(
            f"{len(violations)} violation(s) at request {first.index}: "
            f"{first.kind} on {first.object}/{first.node} {first.detail}".rstrip()
        )


def check_consistency(
    states: Mapping[str, ObjectState] | Iterable[ObjectState],
    previous_versions: Mapping[str, int] | None = None,
    index: int | None = None,
) -> list[Violation]:
    """Return every broken state predicate; an empty list means consistent."""
    if isinstance(states, Mapping):
        states = states.values()
    found: list[Violation] = []

    def bad(kind: str, state: ObjectState, node: str | None, detail: str) -> None:
        found.append(Violation(kind, state.object, node, index, detail))

    for state in states:
        o = state.object
        if previous_versions is not None and state.version < previous_versions.get(o, 0):
            bad(VERSION_REGRESSION, state, None, f"version {state.version} < {previous_versions[o]}")

        for (server, p), bit in state.flags.items():
            if bit and p not in state.temp_holders:
                bad(ORPHAN_FLAG, state, p, f"flag set at {server} without a temporary copy")
            if server != state.nearest.get(p):
                bad(ORPHAN_FLAG, state, p, f"flag kept at {server}, not at the nearest server")

        for p in state.temp_holders:
            if state.flag(p) != 1:
                bad(STALE_COPY, state, p, "temporary copy without a raised flag")
            if state.in_allocation(p):
                bad(STALE_COPY, state, p, "temporary holder is also a replica")

        for p, v in state.stored_version.items():
            if v > state.version:
                bad(VERSION_REGRESSION, state, p, f"stores version {v} > current {state.version}")
            elif not (state.in_allocation(p) or p in state.temp_holders):
                bad(STALE_COPY, state, p, "holds a copy outside the allocation scheme")
            elif v != state.version:
                bad(STALE_COPY, state, p, f"stores version {v}, current is {state.version}")
        for p in state.allocation:
            if p not in state.stored_version:
                bad(STALE_COPY, state, p, "replica without a stored copy")

        for subject, window in state.windows.items():
            if window.subject != subject or window.object != o:
                bad(WINDOW_DUPLICATE, state, subject, "window filed under the wrong pair")
            holds = subject in state.data_list or subject in state.temp_holders
            expected = Location.AT_SUBJECT if holds else Location.AT_SERVER
            if window.location is not expected:
                bad(WINDOW_DUPLICATE, state, subject, f"window at {window.location.value}")
        for p in state.data_list:
            if p not in state.windows and p not in state.servers:
                bad(WINDOW_DUPLICATE, state, p, "data processor without a window")
    return found


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    index: int
    kind: str
    node: str
    object: str


@dataclass
class Step:
    index: int
    request: Request
    locus: Locus
    charges: list[tuple[str, int]]
    running_total: int
    transitions: list[tuple[str, str]]
    events: list[tuple[str, EventKind]] = field(default_factory=list)


@dataclass
class RunResult:
    total_cost: int
    ledger: CostLedger
    states: dict[str, ObjectState]
    transitions: list[Transition]
    steps: list[Step]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def flag_toggles(self) -> int:
        return sum(s.flag_toggles for s in self.states.values())

    @property
    def inv_sent(self) -> int:
        return sum(s.inv_sent for s in self.states.values())

    @property
    def outstanding_flags(self) -> int:
        return sum(len(s.raised_flags) for s in self.states.values())


def run_metadata(config: SystemConfig, policy: str) -> dict[str, Any]:
    return {
        "policy": policy,
        "seed": config.seed,
        "k": config.window_capacity,
        "tariff": config.tariff.as_dict(),
        "adrw_rule": config.adrw_rule,
    }


def run(
    config: SystemConfig,
    policy: str | Any,
    sequence: Sequence[Request],
    *,
    check: bool = True,
) -> RunResult:
    """Process ``sequence`` in order; each request completes before the next starts.

    With ``check`` the touched object's invariants and read-your-writes are
    verified after every request and :class:`ConsistencyError` is raised on
    the first failure.
    """
    for i, request in enumerate(sequence):
        config.validate_request(request, i)
    engine = make_policy(policy, config) if isinstance(policy, str) else policy
    ledger = CostLedger()
    transitions: list[Transition] = []
    steps: list[Step] = []
    writes_seen: dict[str, int] = defaultdict(int)

    for i, request in enumerate(sequence):
        state = engine.states[request.object]
        locus = route(request, state)
        before = state.version
        outcome = engine.handle(request)
        ledger.extend(i, outcome.charges)
        for kind, node in outcome.transitions:
            transitions.append(Transition(i, kind, node, request.object))
        steps.append(Step(
            i, request, locus, outcome.charges, ledger.running_total, outcome.transitions, outcome.events
        ))

        if request.kind is Op.WRITE:
            writes_seen[request.object] += 1
        if not check:
            continue
        violations = check_consistency((state,), {request.object: before}, index=i)
        if request.kind is Op.READ and outcome.observed_version != writes_seen[request.object]:
            violations.append(Violation(
                STALE_COPY, request.object, request.requester, i,
                f"read observed version {outcome.observed_version}, "
                f"latest write is {writes_seen[request.object]}",
            ))
        if request.kind is Op.WRITE:
            exited = {node for kind, node in outcome.transitions if kind == EXITED}
            for p in state.temp_holders - exited:
                violations.append(Violation(STALE_COPY, request.object, p, i, "temporary copy survived a write"))
        if violations:
            raise ConsistencyError(violations)

    logger.debug("%s: %d requests, total %d", engine.name, len(sequence), ledger.running_total)
    return RunResult(
        total_cost=ledger.running_total,
        ledger=ledger,
        states=engine.states,
        transitions=transitions,
        steps=steps,
        metadata=run_metadata(config, engine.name),
    )


# ---------------------------------------------------------------------------
# independent accountant
# ---------------------------------------------------------------------------


def audit_total(
    config: SystemConfig,
    policy: str,
    sequence: Sequence[Request],
    transitions: Iterable[Transition],
) -> int:
    """Price a run from the request sequence and its transition log alone.

    Membership is rebuilt from the logged enter/exit/invalidate transitions;
    handler charges are never consulted.
    """
    t = config.tariff
    by_index: dict[int, list[Transition]] = defaultdict(list)
    for tr in transitions:
        by_index[tr.index].append(tr)
    data: dict[str, set[str]] = {o: set() for o in config.objects}
    temp: dict[str, set[str]] = {o: set() for o in config.objects}
    total = 0

    for i, request in enumerate(sequence):
        o, p = request.object, request.requester
        servers = set(config.server_set[o])
        here = by_index.get(i, [])
        entered = {tr.node for tr in here if tr.kind == ENTERED}
        exited = {tr.node for tr in here if tr.kind == EXITED}
        invalidated = {tr.node for tr in here if tr.kind == INVALIDATED}

        if policy == "sa":
            scheme = SaScheme(frozenset(servers))
            total += sa_read(scheme, p, t) if request.kind is Op.READ else sa_write(scheme, p, t)
            continue

        if request.kind is Op.READ:
            if p in servers or p in data[o]:
                total += event_cost(EventKind.R_LD, t)
            elif p in temp[o]:
                total += event_cost(EventKind.R_LN, t)
            else:
                total += event_cost(EventKind.R_RN, t)
                if p in entered:
                    total += t.c_io  # saving read stores the object
            data[o] |= entered
            continue

        replicas = servers | data[o]
        if policy == "adrw":
            total += len(replicas) * event_cost(EventKind.W_RD, t)
        else:
            for q in invalidated:
                total += event_cost(EventKind.INV, t) + t.c_io  # message + flag reset
            for m in replicas:
                if m == p:
                    total += event_cost(EventKind.W_LD, t)
                elif m in exited:
                    total += t.c_d + t.c_io  # delivery + flag set, copy kept without a save
                else:
                    total += event_cost(EventKind.W_RD, t)
            temp[o] = (temp[o] - invalidated) | exited
        data[o] -= exited
    return total

