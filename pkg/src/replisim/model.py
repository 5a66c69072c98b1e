"""Shared domain types: tariff, configuration, requests, windows and the ledger."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping


class ReplisimError(Exception):
    """Base class for simulator errors."""


class ConfigError(ReplisimError, ValueError):
    """Invalid configuration or a request that references unknown nodes/objects."""


class ProtocolError(ReplisimError, RuntimeError):
    """A handler received a message its state cannot accept (simulation bug)."""


class StalenessError(ProtocolError):
    """A propagated write carried a version not newer than the stored one."""


# ---------------------------------------------------------------------------
# tariff
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CostTariff:
    """Unit costs: local I/O, control message, data message."""

    c_io: int = 1
    c_c: int = 5
    c_d: int = 10

    def __post_init__(self) -> None:
        for name in ("c_io", "c_c", "c_d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"{name} must be a nonnegative integer, got {value!r}")

    def as_dict(self) -> dict[str, int]:
        return {"c_io": self.c_io, "c_c": self.c_c, "c_d": self.c_d}


# ---------------------------------------------------------------------------
# requests and window events
# ---------------------------------------------------------------------------


class Op(str, Enum):
    READ = "R"
    WRITE = "W"


@dataclass(frozen=True, slots=True)
class Request:
    kind: Op
    requester: str
    object: str

    def __str__(self) -> str:
        return f"{self.kind.value} {self.requester} {self.object}"

    @classmethod
    def read(cls, requester: str, obj: str) -> "Request":
        return cls(Op.READ, requester, obj)

    @classmethod
    def write(cls, requester: str, obj: str) -> "Request":
        return cls(Op.WRITE, requester, obj)


class EventKind(str, Enum):
    R_LD = "R_ld"  # local read by a data processor
    R_RN = "R_rn"  # remote read by a non-data processor
    R_LN = "R_ln"  # local read of a temporary copy
    W_LD = "W_ld"  # own write by a data processor
    W_RD = "W_rd"  # write propagated from the server
    INV = "Inv"  # invalidation control message


class Role(str, Enum):
    DATA = "data"
    NON_DATA = "non_data"


class Location(str, Enum):
    AT_SERVER = "at_server"
    AT_SUBJECT = "at_subject"


class MessageRequestWindow:
    """Bounded FIFO history of one processor's events on one object.

    Once ``capacity`` events are held, each push evicts the oldest.
    """

    __slots__ = ("object", "subject", "events", "location")

    def __init__(
        self,
        obj: str,
        subject: str,
        capacity: int,
        events: Iterable[EventKind] = (),
        location: Location = Location.AT_SERVER,
    ) -> None:
        if capacity < 1:
            raise ConfigError("window capacity must be >= 1")
        self.object = obj
        self.subject = subject
        self.events: deque[EventKind] = deque(events, maxlen=capacity)
        self.location = location

    @property
    def capacity(self) -> int:
        return self.events.maxlen  # type: ignore[return-value]

    def push(self, event: EventKind) -> "MessageRequestWindow":
        self.events.append(event)
        return self

    def __len__(self) -> int:
        return len(self.events)

    def __repr__(self) -> str:
        kinds = ", ".join(e.value for e in self.events)
        return (
            f"MessageRequestWindow({self.object}, {self.subject}, k={self.capacity}, "
            f"[{kinds}], {self.location.value})"
        )


def push_event(window: MessageRequestWindow, event: EventKind) -> MessageRequestWindow:
    return window.push(event)


@dataclass(frozen=True, slots=True)
class DecisionCounters:
    n_tr: int = 0
    n_tw: int = 0
    n_wld: int = 0
    n_rln: int = 0
    n_inv: int = 0

    def __post_init__(self) -> None:
        if min(self.n_tr, self.n_tw, self.n_wld, self.n_rln, self.n_inv) < 0:
            raise ValueError("counters must be nonnegative")
        if self.n_wld > self.n_tw or self.n_rln > self.n_tr:
            raise ValueError("n_wld <= n_tw and n_rln <= n_tr are required")


def derive_counters(window: MessageRequestWindow | Iterable[EventKind], role: Role) -> DecisionCounters:
    """Count the window's events the way the enter/exit tests expect for ``role``.

    A data processor only counts its local reads as reads; a non-data
    processor counts remote and temporary-copy reads.  Only propagated
    writes count as writes for a non-data processor.
    """
    events = window.events if isinstance(window, MessageRequestWindow) else window
    tally = {kind: 0 for kind in EventKind}
    for event in events:
        tally[event] += 1
    if role is Role.DATA:
        return DecisionCounters(
            n_tr=tally[EventKind.R_LD],
            n_tw=tally[EventKind.W_LD] + tally[EventKind.W_RD],
            n_wld=tally[EventKind.W_LD],
            n_rln=0,
            n_inv=tally[EventKind.INV],
        )
    return DecisionCounters(
        n_tr=tally[EventKind.R_LN] + tally[EventKind.R_RN],
        n_tw=tally[EventKind.W_RD],
        n_wld=0,
        n_rln=tally[EventKind.R_LN],
        n_inv=tally[EventKind.INV],
    )


def event_cost(event: EventKind, tariff: CostTariff) -> int:
    if event is EventKind.R_LD or event is EventKind.W_LD or event is EventKind.R_LN:
        return tariff.c_io
    if event is EventKind.W_RD:
        return tariff.c_d + tariff.c_io
    if event is EventKind.R_RN:
        return tariff.c_d + tariff.c_c + tariff.c_io
    if event is EventKind.INV:
        return tariff.c_c
    raise ValueError(f"unknown event kind {event!r}")


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LedgerEntry:
    index: int
    label: str
    units: int


@dataclass
class CostLedger:
    entries: list[LedgerEntry] = field(default_factory=list)
    running_total: int = 0

    def append(self, index: int, label: str, units: int) -> None:
        if units < 0:
            raise ValueError(f"negative charge {units} for {label!r}")
        self.entries.append(LedgerEntry(index, label, units))
        self.running_total += units

    def extend(self, index: int, charges: Iterable[tuple[str, int]]) -> int:
        added = 0
        for label, units in charges:
            self.append(index, label, units)
            added += units
        return added

    def total_for(self, index: int) -> int:
        return sum(e.units for e in self.entries if e.index == index)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

ADRW_RULES = ("cost_based", "count_based")


@dataclass
class SystemConfig:
    """Nodes, objects, server sets and run parameters.

    ``nearest_server`` maps ``(processor, object)`` to a server in that
    object's server set; missing entries are filled round-robin by
    processor index.
    """

    regular_processors: tuple[str, ...]
    servers: tuple[str, ...]
    objects: tuple[str, ...]
    server_set: dict[str, tuple[str, ...]] = field(default_factory=dict)
    nearest_server: dict[tuple[str, str], str] = field(default_factory=dict)
    tariff: CostTariff = field(default_factory=CostTariff)
    window_capacity: int = 10
    adrw_rule: str = "cost_based"
    seed: int = 0

    def __post_init__(self) -> None:
        self.regular_processors = tuple(self.regular_processors)
        self.servers = tuple(self.servers)
        self.objects = tuple(self.objects)
        nodes = self.regular_processors + self.servers
        if len(set(nodes)) != len(nodes):
            raise ConfigError("node identifiers must be unique and servers disjoint from regulars")
        if len(set(self.objects)) != len(self.objects):
            raise ConfigError("object identifiers must be unique")
        if not self.servers:
            raise ConfigError("at least one server is required")
        if self.window_capacity < 1:
            raise ConfigError("window_capacity must be >= 1")
        if self.adrw_rule not in ADRW_RULES:
            raise ConfigError(f"adrw_rule must be one of {ADRW_RULES}")
        server_set = {o: tuple(self.server_set.get(o, self.servers)) for o in self.objects}
        for o, members in server_set.items():
            if not members:
                raise ConfigError(f"server set of {o} is empty")
            unknown = [s for s in members if s not in self.servers]
            if unknown:
                raise ConfigError(f"server set of {o} names non-servers {unknown}")
        extra = set(self.server_set) - set(self.objects)
        if extra:
            raise ConfigError(f"server_set names unknown objects {sorted(extra)}")
        self.server_set = server_set
        nearest = dict(self.nearest_server)
        for i, p in enumerate(self.regular_processors):
            for o in self.objects:
                members = server_set[o]
                s = nearest.setdefault((p, o), members[i % len(members)])
                if s not in members:
                    raise ConfigError(f"nearest server {s} of ({p}, {o}) is not in S({o})")
        self.nearest_server = nearest
        self._order = {n: i for i, n in enumerate(nodes)}

    # -- lookups ----------------------------------------------------------

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.regular_processors + self.servers

    def is_server(self, node: str) -> bool:
        return node in self._order and self._order[node] >= len(self.regular_processors)

    def order(self, nodes: Iterable[str]) -> list[str]:
        """Sort node ids by configuration order (deterministic iteration)."""
        return sorted(nodes, key=self._order.__getitem__)

    def nearest(self, processor: str, obj: str) -> str:
        if processor in self.server_set[obj]:
            return processor
        return self.nearest_server[(processor, obj)]

    def validate_request(self, request: Request, position: int | None = None) -> None:
        where = "" if position is None else f" at position {position}"
        if request.requester not in self._order:
            raise ConfigError(f"unknown node {request.requester!r}{where}")
        if request.object not in self.server_set:
            raise ConfigError(f"unknown object {request.object!r}{where}")

    # -- construction -----------------------------------------------------

    @classmethod
    def default(cls, *, replicate_all: bool = False, **overrides: Any) -> "SystemConfig":
        """Seven processors p1..p7, servers s1/s2, objects o1..o5, tariff (1, 5, 10).

        Each object gets one server, alternating s1, s2, s1, ... by object
        index.  ``replicate_all=True`` puts both servers in every server set.
        """
        servers = ("s1", "s2")
        objects = tuple(f"o{i}" for i in range(1, 6))
        if replicate_all:
            server_set = {o: servers for o in objects}
        else:
            server_set = {o: (servers[i % len(servers)],) for i, o in enumerate(objects)}
        params: dict[str, Any] = dict(
            regular_processors=tuple(f"p{i}" for i in range(1, 8)),
            servers=servers,
            objects=objects,
            server_set=server_set,
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfig":
        known = {
            "regular_processors", "servers", "objects", "server_set", "nearest_server",
            "tariff", "window_capacity", "adrw_rule", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration fields {sorted(unknown)}")
        base = cls.default()
        tariff = data.get("tariff")
        if isinstance(tariff, Mapping):
            tariff = CostTariff(**tariff)
        elif isinstance(tariff, (list, tuple)):
            tariff = CostTariff(*tariff)
        server_set = data.get("server_set")
        if server_set is None:
            layout_changed = "servers" in data or "objects" in data
            server_set = {} if layout_changed else base.server_set
        nearest: dict[tuple[str, str], str] = {}
        for p, per_object in dict(data.get("nearest_server", {})).items():
            for o, s in per_object.items():
                nearest[(p, o)] = s
        return cls(
            regular_processors=tuple(data.get("regular_processors", base.regular_processors)),
            servers=tuple(data.get("servers", base.servers)),
            objects=tuple(data.get("objects", base.objects)),
            server_set={o: tuple(v) for o, v in dict(server_set).items()},
            nearest_server=nearest,
            tariff=tariff or CostTariff(),
            window_capacity=int(data.get("window_capacity", 10)),
            adrw_rule=str(data.get("adrw_rule", "cost_based")),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict[str, Any]:
        nearest: dict[str, dict[str, str]] = {}
        for (p, o), s in self.nearest_server.items():
            nearest.setdefault(p, {})[o] = s
        return {
            "regular_processors": list(self.regular_processors),
            "servers": list(self.servers),
            "objects": list(self.objects),
            "server_set": {o: list(v) for o, v in self.server_set.items()},
            "nearest_server": nearest,
            "tariff": self.tariff.as_dict(),
            "window_capacity": self.window_capacity,
            "adrw_rule": self.adrw_rule,
            "seed": self.seed,
        }
