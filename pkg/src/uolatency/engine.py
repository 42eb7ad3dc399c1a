"""Deterministic discrete-event execution of a procedure over a topology.

The clock holds exact rationals (``fractions.Fraction``) so that summing many
small link delays never drifts and traces serialize identically on every
run. Events at the same instant fire in scheduling order.
"""

from __future__ import annotations

import csv
import enum
import heapq
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import TopologyError, UoLatencyError, ValidationError
from .model import LatencyParams, Link, LinkClass, Topology
from .procedures import Message, Procedure

ZERO = Fraction(0)
COMPONENTS = ("access", "backhaul", "core_internal", "processing", "server")


class EventKind(str, enum.Enum):
    SEND = "Send"
    ARRIVE = "Arrive"
    PROCESSING_DONE = "ProcessingDone"
    SERVER_DONE = "ServerDone"


@dataclass(frozen=True)
class Event:
    time: Fraction
    kind: EventKind
    message: Message
    node: str
    seq: int


@dataclass(frozen=True)
class Trace:
    events: tuple[Event, ...]
    e2e_exact: Fraction
    parts: Mapping[str, Fraction] = field(default_factory=dict)

    @property
    def e2e_latency(self) -> float:
        return float(self.e2e_exact)

    @property
    def per_component(self) -> dict[str, float]:
        return {name: float(self.parts.get(name, ZERO)) for name in COMPONENTS}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "kind", "step", "message", "src", "dst", "node"])
        for ev in self.events:
            m = ev.message
            w.writerow([_fmt(ev.time), ev.kind.value, m.step, m.name, m.src.value, m.dst.value, ev.node])
        return buf.getvalue()


def _fmt(t: Fraction) -> str:
    return f"{float(t):.9f}"


def _exact(x: float) -> Fraction:
    return Fraction(x)


def _coerce_params(params) -> LatencyParams:
    if isinstance(params, LatencyParams):
        # guard against instances mutated around the frozen dataclass
        return LatencyParams(**params.to_dict())
    if isinstance(params, Mapping):
        return LatencyParams(**params)
    raise ValidationError("params", f"expected LatencyParams, got {type(params).__name__}")


class _Simulation:
    def __init__(self, procedure: Procedure, topology: Topology, params: LatencyParams):
        self.procedure = procedure
        self.params = params
        self.routes: dict[str, list[tuple[str, str, Link]]] = {}
        for m in procedure.steps:
            try:
                self.routes[m.step] = topology.route(m.src, m.dst)
            except TopologyError as exc:
                raise TopologyError(f"cannot route {m.step} {m.name}: {exc}") from None

        self.children: dict[str | None, list[Message]] = {}
        deps = procedure.dependencies()
        for m in procedure.steps:
            self.children.setdefault(deps[m.step], []).append(m)

        self.t_access = _exact(params.t_access)
        self.rate = _exact(params.backhaul_rate)
        self.t_nf = _exact(params.t_nf)
        self.t_server = _exact(params.t_server)
        self.t_core = _exact(params.t_core_internal)

        self.queue: list = []
        self.seq = itertools.count()
        self.log: list[Event] = []
        self.done: dict[str, tuple[Fraction, dict[str, Fraction]]] = {}

    def hop_delay(self, link: Link) -> tuple[str, Fraction]:
        if link.link_class is LinkClass.ACCESS:
            return "access", self.t_access
        if link.link_class is LinkClass.BACKHAUL:
            return "backhaul", self.rate * _exact(link.length_km)
        return "core_internal", self.t_core

    def schedule(self, time, kind, message, node, hop, parts):
        seq = next(self.seq)
        heapq.heappush(self.queue, (time, seq, kind, message, node, hop, parts))

    def release(self, parent: str | None, time: Fraction, parts: dict[str, Fraction]):
        for m in self.children.get(parent, ()):
            src_node = self.routes[m.step][0][0]
            self.schedule(time, EventKind.SEND, m, src_node, 0, parts)

    def run(self) -> Trace:
        self.release(None, ZERO, {name: ZERO for name in COMPONENTS})
        while self.queue:
            time, seq, kind, m, node, hop, parts = heapq.heappop(self.queue)
            self.log.append(Event(time, kind, m, node, seq))
            route = self.routes[m.step]

            if kind is EventKind.SEND or (kind is EventKind.ARRIVE and hop < len(route)):
                _, nxt, link = route[hop]
                component, delay = self.hop_delay(link)
                after = dict(parts)
                after[component] += delay
                self.schedule(time + delay, EventKind.ARRIVE, m, nxt, hop + 1, after)
            elif kind is EventKind.ARRIVE:
                if m.charges_processing:
                    after = dict(parts)
                    after["processing"] += self.t_nf
                    self.schedule(time + self.t_nf, EventKind.PROCESSING_DONE, m, node, hop, after)
                elif m.server_processing:
                    after = dict(parts)
                    after["server"] += self.t_server
                    self.schedule(time + self.t_server, EventKind.SERVER_DONE, m, node, hop, after)
                else:
                    self.finish(m, time, parts)
            else:
                self.finish(m, time, parts)

        if self.procedure.completion is None:
            return Trace(tuple(self.log), ZERO, {name: ZERO for name in COMPONENTS})
        end, parts = self.done[self.procedure.completion]
        start = self.log[0].time if self.log else ZERO
        return Trace(tuple(self.log), end - start, parts)

    def finish(self, m: Message, time: Fraction, parts: dict[str, Fraction]):
        self.done[m.step] = (time, parts)
        if not m.concurrent:
            self.release(m.step, time, parts)


def run(procedure: Procedure, topology: Topology, params: LatencyParams) -> Trace:
    """Execute ``procedure`` and return its event log and end-to-end latency."""
    return _Simulation(procedure, topology, _coerce_params(params)).run()


def run_batch(
    runs: Sequence[tuple[Procedure, Topology, LatencyParams]],
    max_workers: int | None = None,
) -> list[Trace | UoLatencyError]:
    """Run independent simulations, keeping input order.

    A failing entry yields its exception in place of a trace; the other
    entries are unaffected.
    """

    def one(item):
        try:
            return run(*item)
        except UoLatencyError as exc:
            return exc

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, runs))
    return [one(item) for item in runs]
