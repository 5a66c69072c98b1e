"""ORAD: adaptive replication with flag bits and temporary copies.

Every object has a fixed server set whose members always hold a replica.
Non-server processors join the object's data-list when the enter test
favours holding a replica.  A data processor that leaves keeps a temporary
copy, which its nearest server tracks with a flag bit until the next write
invalidates it.

Handlers mutate the per-object :class:`ObjectState` in place and return a
:class:`PolicyOutcome` describing what was charged and what changed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    CostTariff,
    DecisionCounters,
    EventKind,
    Location,
    MessageRequestWindow,
    Op,
    ProtocolError,
    Request,
    Role,
    StalenessError,
    SystemConfig,
    derive_counters,
)

ENTERED = "entered"
EXITED = "exited"
INVALIDATED = "invalidated"


@dataclass
class ObjectState:
    """Allocation scheme and protocol bookkeeping for one object."""

    object: str
    servers: tuple[str, ...]
    nearest: dict[str, str]
    window_capacity: int
    order: dict[str, int]
    version: int = 0
    data_list: set[str] = field(default_factory=set)
    flags: dict[tuple[str, str], int] = field(default_factory=dict)
    temp_holders: set[str] = field(default_factory=set)
    stored_version: dict[str, int] = field(default_factory=dict)
    windows: dict[str, MessageRequestWindow] = field(default_factory=dict)
    flag_toggles: int = 0
    inv_sent: int = 0

    @classmethod
    def initial(cls, obj: str, config: SystemConfig) -> "ObjectState":
        servers = config.server_set[obj]
        nearest = {p: config.nearest(p, obj) for p in config.regular_processors}
        order = {n: i for i, n in enumerate(config.nodes)}
        return cls(
            object=obj,
            servers=servers,
            nearest=nearest,
            window_capacity=config.window_capacity,
            order=order,
            stored_version={s: 0 for s in servers},
        )

    @property
    def allocation(self) -> set[str]:
        return set(self.servers) | self.data_list

    def in_allocation(self, node: str) -> bool:
        return node in self.data_list or node in self.servers

    def sorted(self, nodes) -> list[str]:
        return sorted(nodes, key=self.order.__getitem__)

    def flag(self, processor: str) -> int:
        return self.flags.get((self.nearest[processor], processor), 0)

    def set_flag(self, processor: str, bit: int) -> None:
        key = (self.nearest[processor], processor)
        if self.flags.get(key, 0) != bit:
            self.flag_toggles += 1
        self.flags[key] = bit

    @property
    def raised_flags(self) -> list[str]:
        return self.sorted(p for (_, p), bit in self.flags.items() if bit)

    def window_for(self, subject: str) -> MessageRequestWindow:
        window = self.windows.get(subject)
        if window is None:
            window = MessageRequestWindow(self.object, subject, self.window_capacity)
            self.windows[subject] = window
        return window


@dataclass
class Propagation:
    """New version pushed by a server to a data processor."""

    version: int


@dataclass
class Invalidate:
    """Invalid control message from a server to a temporary-copy holder."""

    version: int


@dataclass
class PolicyOutcome:
    charges: list[tuple[str, int]] = field(default_factory=list)
    events: list[tuple[str, EventKind]] = field(default_factory=list)
    transitions: list[tuple[str, str]] = field(default_factory=list)
    observed_version: int | None = None

    @property
    def total(self) -> int:
        return sum(units for _, units in self.charges)

    def charge(self, label: str, units: int) -> None:
        self.charges.append((label, units))

    def merge(self, other: "PolicyOutcome") -> "PolicyOutcome":
        self.charges.extend(other.charges)
        self.events.extend(other.events)
        self.transitions.extend(other.transitions)
        if other.observed_version is not None:
            self.observed_version = other.observed_version
        return self


# ---------------------------------------------------------------------------
# decision tests and cost equations
# ---------------------------------------------------------------------------


def _decision_sides(c: DecisionCounters, t: CostTariff) -> tuple[int, int]:
    # (extra cost of holding a replica, extra cost of staying non-data)
    hold = c.n_tw * (t.c_d + t.c_io) - c.n_wld * t.c_d
    stay = c.n_tr * (t.c_c + t.c_d) - c.n_rln * (t.c_d + t.c_c) + c.n_inv * (t.c_c + 2 * t.c_io)
    return hold, stay


def enter_test(c: DecisionCounters, t: CostTariff) -> bool:
    """True when a non-data processor should join the data-list (ties admit)."""
    hold, stay = _decision_sides(c, t)
    return hold <= stay


def exit_test(c: DecisionCounters, t: CostTariff) -> bool:
    """True when a data processor should leave the data-list (ties retain)."""
    hold, stay = _decision_sides(c, t)
    return hold > stay


def read_cost(state: ObjectState, requester: str, saving: bool, t: CostTariff) -> int:
    if state.in_allocation(requester) or requester in state.temp_holders:
        return t.c_io
    return t.c_io + t.c_c + t.c_d + (t.c_io if saving else 0)


def write_cost(
    a_before: int,
    a_after: int,
    writer_in_a: bool,
    n_f: int,
    n_f_after: int,
    t: CostTariff,
) -> int:
    if a_before < 1 or n_f < 0 or n_f_after < 0:
        raise ValueError("a_before >= 1 and nonnegative flag counts required")
    transfers = (a_before - 1) if writer_in_a else a_before
    return transfers * t.c_d + a_after * t.c_io + n_f * (t.c_io + t.c_c) + n_f_after * t.c_io


# ---------------------------------------------------------------------------
# handlers
# ---------------------------------------------------------------------------


def ted_handle(state: ObjectState, request: Request, t: CostTariff) -> PolicyOutcome:
    """Server-side handling of a request arriving at ``request.requester``'s nearest server."""
    if request.object != state.object:
        raise ProtocolError(f"request for {request.object} routed to state of {state.object}")
    p = request.requester
    if request.kind is Op.WRITE:
        out = PolicyOutcome()
        _server_write(state, p, t, out)
        return out

    out = PolicyOutcome(observed_version=state.version)
    if p in state.servers:
        out.charge("io", t.c_io)
        return out
    if state.in_allocation(p) or p in state.temp_holders:
        raise ProtocolError(f"{p} holds {state.object} locally but its read reached the server")

    window = state.window_for(p)
    window.push(EventKind.R_RN)
    out.events.append((p, EventKind.R_RN))
    saving = enter_test(derive_counters(window, Role.NON_DATA), t)
    out.charge("c_c", t.c_c)
    out.charge("io", t.c_io)
    out.charge("c_d", t.c_d)
    if saving:
        out.charge("io", t.c_io)
        state.data_list.add(p)
        state.stored_version[p] = state.version
        window.location = Location.AT_SUBJECT
        out.transitions.append((ENTERED, p))
    return out


def _server_write(state: ObjectState, writer: str, t: CostTariff, out: PolicyOutcome) -> None:
    # Invalidate temporary copies first; their windows come back to the server.
    for q in state.raised_flags:
        out.charge("c_c", t.c_c)
        out.merge(tf_handle(state, q, Invalidate(state.version), t))
        state.inv_sent += 1
        state.set_flag(q, 0)
        out.charge("io", t.c_io)

    state.version += 1
    if writer in state.servers:
        state.stored_version[writer] = state.version
        out.charge("io", t.c_io)
    elif writer in state.data_list:
        # the writer already applied locally (see txd_handle); it keeps the new version
        state.stored_version[writer] = state.version

    for s in state.servers:
        if s != writer:
            state.stored_version[s] = state.version
            out.charge("c_d", t.c_d)
            out.charge("io", t.c_io)

    for subject in state.sorted(state.windows):
        window = state.windows[subject]
        if subject != writer and window.location is Location.AT_SERVER:
            window.push(EventKind.W_RD)
            out.events.append((subject, EventKind.W_RD))

    for d in state.sorted(state.data_list):
        if d != writer:
            out.merge(txd_handle(state, d, Propagation(state.version), t))


def txd_handle(
    state: ObjectState, subject: str, message: Request | Propagation, t: CostTariff
) -> PolicyOutcome:
    """Data-processor-side handling: own reads, own writes, propagated writes."""
    if subject not in state.data_list:
        raise ProtocolError(f"{subject} is not a data processor for {state.object}")
    window = state.windows[subject]

    if isinstance(message, Propagation):
        if message.version <= state.stored_version.get(subject, -1):
            raise StalenessError(
                f"{subject} got version {message.version} for {state.object} "
                f"but holds {state.stored_version.get(subject)}"
            )
        out = PolicyOutcome()
        window.push(EventKind.W_RD)
        out.events.append((subject, EventKind.W_RD))
        out.charge("c_d", t.c_d)
        state.stored_version[subject] = message.version
        if exit_test(derive_counters(window, Role.DATA), t):
            # Leaves the allocation scheme: the delivered version is kept as a
            # temporary copy, so only the flag update is charged on its side.
            state.data_list.discard(subject)
            state.temp_holders.add(subject)
            state.set_flag(subject, 1)
            out.charge("io", t.c_io)
            out.transitions.append((EXITED, subject))
        else:
            out.charge("io", t.c_io)
        return out

    if message.requester != subject or message.object != state.object:
        raise ProtocolError(f"{message} delivered to data processor {subject}")
    if message.kind is Op.READ:
        window.push(EventKind.R_LD)
        return PolicyOutcome(
            charges=[("io", t.c_io)],
            events=[(subject, EventKind.R_LD)],
            observed_version=state.stored_version[subject],
        )

    out = PolicyOutcome()
    window.push(EventKind.W_LD)
    out.events.append((subject, EventKind.W_LD))
    out.charge("io", t.c_io)
    _server_write(state, subject, t, out)
    return out


def tf_handle(
    state: ObjectState, subject: str, message: Request | Invalidate, t: CostTariff
) -> PolicyOutcome:
    """Temporary-copy holder: serve reads locally, drop the copy on Inv."""
    if subject not in state.temp_holders:
        raise ProtocolError(f"{subject} holds no temporary copy of {state.object}")
    window = state.windows[subject]
    if isinstance(message, Invalidate):
        window.push(EventKind.INV)
        del state.stored_version[subject]
        state.temp_holders.discard(subject)
        window.location = Location.AT_SERVER
        return PolicyOutcome(
            events=[(subject, EventKind.INV)],
            transitions=[(INVALIDATED, subject)],
        )
    if message.kind is not Op.READ or message.requester != subject:
        raise ProtocolError(f"{message} delivered to temporary holder {subject}")
    window.push(EventKind.R_LN)
    return PolicyOutcome(
        charges=[("io", t.c_io)],
        events=[(subject, EventKind.R_LN)],
        observed_version=state.stored_version[subject],
    )


class OradPolicy:
    name = "orad"

    def __init__(self, config: SystemConfig) -> None:
        self.config = config
        self.tariff = config.tariff
        self.states = {o: ObjectState.initial(o, config) for o in config.objects}

    def handle(self, request: Request) -> PolicyOutcome:
        state = self.states[request.object]
        p = request.requester
        if p in state.data_list:
            return txd_handle(state, p, request, self.tariff)
        if request.kind is Op.READ and p in state.temp_holders:
            return tf_handle(state, p, request, self.tariff)
        return ted_handle(state, request, self.tariff)

    def invalidate_all(self) -> PolicyOutcome:
        """Send Inv to every outstanding temporary copy without a write."""
        out = PolicyOutcome()
        for state in self.states.values():
            for q in state.raised_flags:
                out.charge("c_c", self.tariff.c_c)
                out.merge(tf_handle(state, q, Invalidate(state.version), self.tariff))
                state.inv_sent += 1
                state.set_flag(q, 0)
                out.charge("io", self.tariff.c_io)
        return out
