"""Comparison baselines: ADRW (window-driven replication) and SA (static)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .model import (
    CostTariff,
    DecisionCounters,
    EventKind,
    Location,
    MessageRequestWindow,
    Op,
    ProtocolError,
    Request,
    SystemConfig,
)
from .orad import ENTERED, EXITED, ObjectState, PolicyOutcome, enter_test, exit_test

ENTER = "enter"
EXIT = "exit"
STAY = "stay"


def adrw_counters(window: MessageRequestWindow | Iterable[EventKind]) -> DecisionCounters:
    """Reads by the subject vs. writes by others; ADRW has no other event types."""
    events = window.events if isinstance(window, MessageRequestWindow) else window
    reads = writes = 0
    for event in events:
        if event is EventKind.R_LD or event is EventKind.R_RN:
            reads += 1
        elif event is EventKind.W_RD:
            writes += 1
    return DecisionCounters(n_tr=reads, n_tw=writes)


def adrw_decide(c: DecisionCounters, t: CostTariff, rule: str = "cost_based", *, is_data: bool = False) -> str:
    if rule == "count_based":
        if is_data:
            return EXIT if c.n_tw > c.n_tr else STAY
        return ENTER if c.n_tr > c.n_tw else STAY
    if rule != "cost_based":
        raise ValueError(f"unknown ADRW rule {rule!r}")
    plain = DecisionCounters(n_tr=c.n_tr, n_tw=c.n_tw)
    if is_data:
        return EXIT if exit_test(plain, t) else STAY
    return ENTER if enter_test(plain, t) else STAY


class AdrwPolicy:
    """ADRW: every replica write costs a data message plus an update, even the writer's own."""

    name = "adrw"

    def __init__(self, config: SystemConfig) -> None:
        self.config = config
        self.tariff = config.tariff
        self.rule = config.adrw_rule
        self.states = {o: ObjectState.initial(o, config) for o in config.objects}

    def handle(self, request: Request) -> PolicyOutcome:
        state = self.states[request.object]
        if request.kind is Op.READ:
            return self._read(state, request.requester)
        return self._write(state, request.requester)

    def _read(self, state: ObjectState, p: str) -> PolicyOutcome:
        t = self.tariff
        if p in state.servers:
            return PolicyOutcome(charges=[("io", t.c_io)], observed_version=state.version)
        if p in state.data_list:
            state.windows[p].push(EventKind.R_LD)
            return PolicyOutcome(
                charges=[("io", t.c_io)],
                events=[(p, EventKind.R_LD)],
                observed_version=state.stored_version[p],
            )
        window = state.window_for(p)
        window.push(EventKind.R_RN)
        out = PolicyOutcome(events=[(p, EventKind.R_RN)], observed_version=state.version)
        out.charge("c_c", t.c_c)
        out.charge("io", t.c_io)
        out.charge("c_d", t.c_d)
        if adrw_decide(adrw_counters(window), t, self.rule) == ENTER:
            out.charge("io", t.c_io)
            state.data_list.add(p)
            state.stored_version[p] = state.version
            window.location = Location.AT_SUBJECT
            out.transitions.append((ENTERED, p))
        return out

    def _write(self, state: ObjectState, writer: str) -> PolicyOutcome:
        t = self.tariff
        out = PolicyOutcome()
        state.version += 1
        for member in state.sorted(state.allocation):
            state.stored_version[member] = state.version
            out.charge("c_d", t.c_d)
            out.charge("io", t.c_io)
        for subject in state.sorted(state.windows):
            if subject != writer:
                state.windows[subject].push(EventKind.W_RD)
                out.events.append((subject, EventKind.W_RD))
        for d in state.sorted(state.data_list):
            if d == writer:
                continue
            if adrw_decide(adrw_counters(state.windows[d]), t, self.rule, is_data=True) == EXIT:
                state.data_list.discard(d)
                del state.stored_version[d]
                state.windows[d].location = Location.AT_SERVER
                out.transitions.append((EXITED, d))
        return out


# ---------------------------------------------------------------------------
# SA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaScheme:
    q: frozenset[str]

    def __post_init__(self) -> None:
        if len(self.q) < 1:
            raise ValueError("SA needs at least one replica")


def sa_read(q: SaScheme, requester: str, t: CostTariff) -> int:
    if requester in q.q:
        return t.c_io
    return t.c_c + t.c_io + t.c_d


def sa_write(q: SaScheme, writer: str, t: CostTariff) -> int:
    size = len(q.q)
    transfers = size - 1 if writer in q.q else size
    return transfers * t.c_d + size * t.c_io


class SaPolicy:
    """Static read-one-write-all over a fixed replica set per object (default: its server set)."""

    name = "sa"

    def __init__(self, config: SystemConfig, q: dict[str, Iterable[str]] | None = None) -> None:
        self.config = config
        self.tariff = config.tariff
        q = q or {}
        self.schemes = {o: SaScheme(frozenset(q.get(o, config.server_set[o]))) for o in config.objects}
        self.states = {}
        for o in config.objects:
            state = ObjectState.initial(o, config)
            members = self.schemes[o].q
            if not members <= set(config.nodes):
                raise ProtocolError(f"SA replica set for {o} names unknown nodes")
            # Q plays the role of the always-replicated set
            state.servers = tuple(state.sorted(members))
            state.stored_version = {m: 0 for m in members}
            self.states[o] = state

    def handle(self, request: Request) -> PolicyOutcome:
        t = self.tariff
        state = self.states[request.object]
        scheme = self.schemes[request.object]
        p = request.requester
        if request.kind is Op.READ:
            if p in scheme.q:
                return PolicyOutcome(charges=[("io", t.c_io)], observed_version=state.stored_version[p])
            return PolicyOutcome(
                charges=[("c_c", t.c_c), ("io", t.c_io), ("c_d", t.c_d)],
                observed_version=state.version,
            )
        out = PolicyOutcome()
        state.version += 1
        for member in state.sorted(scheme.q):
            state.stored_version[member] = state.version
            if member != p:
                out.charge("c_d", t.c_d)
            out.charge("io", t.c_io)
        return out
