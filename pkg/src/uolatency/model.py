"""Network elements, deployment scenarios and latency parameters.

Two deployments are modelled: a micro-operator (uO) whose core network sits
inside the factory, and a mobile network operator (MNO) whose core is
``core_distance`` km away and shared by ``n_factories`` sites.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field, fields

from .errors import TopologyError, ValidationError


class NfKind(str, enum.Enum):
    DEVICE = "Device"
    GNB = "GnB"
    AMF = "AMF"
    SMF = "SMF"
    UPF = "UPF"
    AUSF = "AUSF"
    UDM = "UDM"
    PCF = "PCF"
    SERVER = "Server"
    # reserved, never placed in a topology
    NSSF = "NSSF"
    NEF = "NEF"
    NRF = "NRF"
    AF = "AF"
    CSMF = "CSMF"
    NSMF = "NSMF"
    NSSMF = "NSSMF"

    @property
    def instantiable(self) -> bool:
        return self not in RESERVED_KINDS

    @property
    def is_core(self) -> bool:
        return self in CORE_NFS


CORE_NFS = (NfKind.AMF, NfKind.SMF, NfKind.UPF, NfKind.AUSF, NfKind.UDM, NfKind.PCF)
RESERVED_KINDS = frozenset(
    {NfKind.NSSF, NfKind.NEF, NfKind.NRF, NfKind.AF, NfKind.CSMF, NfKind.NSMF, NfKind.NSSMF}
)


class LinkClass(str, enum.Enum):
    ACCESS = "Access"
    BACKHAUL = "Backhaul"
    CORE_INTERNAL = "CoreInternal"


class OperatorKind(str, enum.Enum):
    UO = "UO"
    MNO = "MNO"


class Site(str, enum.Enum):
    FACTORY = "Factory"
    CORE_SITE = "CoreSite"


def _check_nonneg(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(name, f"must be finite, got {value!r}")
    if value < 0:
        raise ValidationError(name, f"must be >= 0, got {value!r}")


@dataclass(frozen=True)
class LatencyParams:
    """Scalar latency knobs, all in milliseconds (distances in km).

    ``backhaul_rate`` is the fibre propagation constant in ms per km and
    ``d_backhaul`` the distance between the access network and the core.
    """

    t_access: float = 0.5
    backhaul_rate: float = 0.05
    t_nf: float = 1.0
    t_server: float = 30.0
    t_core_internal: float = 0.0
    d_backhaul: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            _check_nonneg(f.name, getattr(self, f.name))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DeploymentSpec:
    operator_kind: OperatorKind = OperatorKind.UO
    core_distance: float = 0.5
    server_distance: float | None = None
    n_factories: int = 1
    resource_ratio: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "operator_kind", OperatorKind(self.operator_kind))
        if self.server_distance is None:
            object.__setattr__(self, "server_distance", self.core_distance)
        for name in ("core_distance", "server_distance"):
            _check_nonneg(name, getattr(self, name))
            if getattr(self, name) == 0:
                raise ValidationError(name, "must be > 0")
        if isinstance(self.n_factories, bool) or not isinstance(self.n_factories, int):
            raise ValidationError("n_factories", f"expected an integer, got {self.n_factories!r}")
        if self.n_factories < 1:
            raise ValidationError("n_factories", f"must be >= 1, got {self.n_factories}")
        _check_nonneg("resource_ratio", self.resource_ratio)
        if self.resource_ratio == 0:
            raise ValidationError("resource_ratio", "must be > 0")
        if self.operator_kind is OperatorKind.UO:
            if self.n_factories != 1:
                raise ValidationError("n_factories", "a uO serves exactly one factory")
            if self.resource_ratio != 1:
                raise ValidationError("resource_ratio", "must be 1 for a uO")

    @classmethod
    def uo(cls, core_distance=0.5, server_distance=None) -> DeploymentSpec:
        return cls(OperatorKind.UO, core_distance, server_distance, 1, 1.0)

    @classmethod
    def mno(cls, core_distance, n_factories=10, resource_ratio=None, server_distance=None) -> DeploymentSpec:
        if resource_ratio is None:
            resource_ratio = float(n_factories)
        return cls(OperatorKind.MNO, core_distance, server_distance, n_factories, resource_ratio)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["operator_kind"] = self.operator_kind.value
        return d


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    link_class: LinkClass
    length_km: float = 0.0

    def other(self, node_id: str) -> str:
        return self.b if node_id == self.a else self.a


@dataclass(frozen=True)
class Topology:
    nodes: tuple[tuple[str, NfKind], ...]
    links: tuple[Link, ...]
    placement: tuple[tuple[NfKind, Site], ...] = field(default=())

    def __post_init__(self):
        ids = [node_id for node_id, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate node ids")
        kinds = [kind for _, kind in self.nodes]
        for kind in kinds:
            if not kind.instantiable:
                raise TopologyError(f"{kind.value} is reserved and cannot be instantiated")
        if len(set(kinds)) != len(kinds):
            raise TopologyError("each network element kind may appear at most once")
        known = set(ids)
        for link in self.links:
            if link.a not in known or link.b not in known:
                raise TopologyError(f"link {link.a}-{link.b} references an unknown node")
            if link.link_class is LinkClass.BACKHAUL and not link.length_km > 0:
                raise TopologyError(f"backhaul link {link.a}-{link.b} needs a positive length")
        n_access = sum(1 for link in self.links if link.link_class is LinkClass.ACCESS)
        if n_access != 1:
            raise TopologyError(f"expected exactly one access link, found {n_access}")
        if self.node_id(NfKind.DEVICE) is not None and not self.is_connected():
            raise TopologyError("topology is not connected")

    def node_id(self, kind: NfKind) -> str | None:
        for node_id, k in self.nodes:
            if k is kind:
                return node_id
        return None

    def kind_of(self, node_id: str) -> NfKind:
        return dict(self.nodes)[node_id]

    def _adjacency(self) -> dict[str, list[Link]]:
        adj: dict[str, list[Link]] = {node_id: [] for node_id, _ in self.nodes}
        for link in self.links:
            adj[link.a].append(link)
            adj[link.b].append(link)
        for node_id in adj:
            adj[node_id].sort(key=lambda l: l.other(node_id))
        return adj

    def route(self, src: NfKind, dst: NfKind) -> list[tuple[str, str, Link]]:
        """Fewest-hop path from ``src`` to ``dst`` as (from, to, link) hops.

        Ties are broken by node id so the result is deterministic.
        """
        start, goal = self.node_id(src), self.node_id(dst)
        if start is None or goal is None:
            missing = src if start is None else dst
            raise TopologyError(f"no {missing.value} node in topology")
        adj = self._adjacency()
        prev: dict[str, tuple[str, Link] | None] = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for link in adj[node]:
                nxt = link.other(node)
                if nxt not in prev:
                    prev[nxt] = (node, link)
                    queue.append(nxt)
        if goal not in prev:
            raise TopologyError(f"{dst.value} unreachable from {src.value}")
        hops = []
        node = goal
        while prev[node] is not None:
            before, link = prev[node]
            hops.append((before, node, link))
            node = before
        hops.reverse()
        return hops

    def is_connected(self) -> bool:
        device = self.node_id(NfKind.DEVICE)
        if device is None:
            return False
        try:
            for kind in (*CORE_NFS, NfKind.SERVER):
                if self.node_id(kind) is not None:
                    self.route(NfKind.DEVICE, kind)
        except TopologyError:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": node_id, "kind": kind.value} for node_id, kind in self.nodes],
            "links": [
                {"a": l.a, "b": l.b, "class": l.link_class.value, "length_km": l.length_km}
                for l in self.links
            ],
            "placement": {kind.value: site.value for kind, site in self.placement},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def build_topology(spec: DeploymentSpec) -> Topology:
    """Lay out device, gNB, the six core NFs and the image processing server.

    The gNB reaches the core over two backhaul links (to AMF for signalling and
    to UPF for user data), both ``core_distance`` long. The server hangs off the
    UPF on a backhaul link of ``server_distance``.
    """
    core_site = Site.FACTORY if spec.operator_kind is OperatorKind.UO else Site.CORE_SITE
    kinds = (NfKind.DEVICE, NfKind.GNB, *CORE_NFS, NfKind.SERVER)
    nodes = tuple((kind.value.lower(), kind) for kind in kinds)
    ident = {kind: kind.value.lower() for kind in kinds}

    links = [
        Link(ident[NfKind.DEVICE], ident[NfKind.GNB], LinkClass.ACCESS),
        Link(ident[NfKind.GNB], ident[NfKind.AMF], LinkClass.BACKHAUL, float(spec.core_distance)),
        Link(ident[NfKind.GNB], ident[NfKind.UPF], LinkClass.BACKHAUL, float(spec.core_distance)),
        Link(ident[NfKind.UPF], ident[NfKind.SERVER], LinkClass.BACKHAUL, float(spec.server_distance)),
    ]
    for i, a in enumerate(CORE_NFS):
        for b in CORE_NFS[i + 1:]:
            links.append(Link(ident[a], ident[b], LinkClass.CORE_INTERNAL))

    placement = tuple(
        (kind, core_site if kind.is_core else Site.FACTORY) for kind in kinds
    )
    return Topology(nodes=nodes, links=tuple(links), placement=placement)


def mno_nf_delay(uo_t_nf: float, n_factories: float, resource_ratio: float) -> float:
    """Effective NF processing delay of an MNO core.

    Delay grows with load (factories served) and shrinks with resources:
    ``uo_t_nf * n_factories / resource_ratio``.
    """
    for name, value in (("uo_t_nf", uo_t_nf), ("n_factories", n_factories), ("resource_ratio", resource_ratio)):
        _check_nonneg(name, value)
        if value == 0:
            raise ValidationError(name, "must be > 0")
    return uo_t_nf * n_factories / resource_ratio
