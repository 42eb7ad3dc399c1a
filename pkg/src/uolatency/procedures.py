"""Message sequences for the AR use case and their latency coefficients.

Each procedure is an ordered list of messages. A message is sent as soon as
the previous non-concurrent message has been fully handled (delivered and,
where applicable, processed). A message marked ``concurrent`` is dispatched
alongside the next one and nothing waits for it.

Processing rules:

* a message received by a core NF costs one NF processing delay;
* a message with ``server_processing`` costs one server delay on arrival;
* forwarding at the gNB or at intermediate hops is free.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

from .errors import TopologyError, ValidationError
from .model import LinkClass, NfKind, Topology

D = NfKind.DEVICE
G = NfKind.GNB
AMF, SMF, UPF = NfKind.AMF, NfKind.SMF, NfKind.UPF
AUSF, UDM, PCF = NfKind.AUSF, NfKind.UDM, NfKind.PCF
SRV = NfKind.SERVER


class ProcedureName(str, enum.Enum):
    REGISTRATION = "Registration"
    PDU_SESSION = "PduSessionEstablishment"
    DATA_TRANSFER = "DataTransfer"
    DATA_UPLINK = "DataTransferUplink"


@dataclass(frozen=True)
class Message:
    step: str
    name: str
    src: NfKind
    dst: NfKind
    concurrent: bool = False
    server_processing: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValidationError("name", f"step {self.step} has an empty message name")
        if self.src is self.dst:
            raise ValidationError("dst", f"step {self.step} sends {self.name} to itself")
        if self.server_processing and self.dst is not SRV:
            raise ValidationError("server_processing", f"step {self.step} is not addressed to the server")

    @property
    def charges_processing(self) -> bool:
        return self.dst.is_core


@dataclass(frozen=True)
class Procedure:
    name: ProcedureName
    steps: tuple[Message, ...]
    completion: str | None = None

    def __post_init__(self):
        ids = [m.step for m in self.steps]
        if len(set(ids)) != len(ids):
            raise ValidationError("steps", "step ids must be unique")
        if self.steps and self.completion not in ids:
            raise ValidationError("completion", f"unknown completion step {self.completion!r}")
        if self.steps and self.step(self.completion).concurrent:
            raise ValidationError("completion", "completion step cannot be concurrent")
        self._check_causality()

    def _check_causality(self):
        # a node may only send once it has received something, except the initiator
        if not self.steps:
            return
        active = {self.steps[0].src}
        for m in self.steps:
            if m.src not in active:
                raise ValidationError(
                    "steps", f"step {m.step}: {m.src.value} sends {m.name} before receiving anything"
                )
            active.add(m.dst)

    def step(self, step_id: str) -> Message:
        for m in self.steps:
            if m.step == step_id:
                return m
        raise KeyError(step_id)

    @property
    def completion_node(self) -> NfKind | None:
        if self.completion is None:
            return None
        return self.step(self.completion).dst

    def dependencies(self) -> dict[str, str | None]:
        """Map each step to the step it waits for (None for initial steps)."""
        deps: dict[str, str | None] = {}
        last = None
        for m in self.steps:
            deps[m.step] = last
            if not m.concurrent:
                last = m.step
        return deps

    def critical_path(self) -> list[str]:
        """Step ids on the dependency chain ending at the completion step."""
        if self.completion is None:
            return []
        deps = self.dependencies()
        chain = []
        cur: str | None = self.completion
        while cur is not None:
            chain.append(cur)
            cur = deps[cur]
        chain.reverse()
        return chain

    def to_table(self) -> str:
        """Step list as CSV text, one row per message."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "message", "src", "dst", "concurrent", "nf_processing", "server_processing", "completion"])
        for m in self.steps:
            w.writerow([
                m.step, m.name, m.src.value, m.dst.value,
                int(m.concurrent), int(m.charges_processing), int(m.server_processing),
                int(m.step == self.completion),
            ])
        return buf.getvalue()


@dataclass(frozen=True)
class Coefficients:
    """Crossing and processing counts along the critical path.

    ``k1`` access traversals, ``k2`` backhaul traversals, ``k3`` NF processing
    charges, ``k_core`` core-internal hops. ``k3_total`` also counts charges
    that nobody waits for.
    """

    k1: int = 0
    k2: int = 0
    k3: int = 0
    k3_total: int = 0
    k_core: int = 0

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k3_total", "k_core"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "must be >= 0")
        if self.k3 > self.k3_total:
            raise ValidationError("k3", "cannot exceed k3_total")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.k1, self.k2, self.k3)


def _seq(name, completion, rows):
    return Procedure(name, tuple(Message(*row) for row in rows), completion)


def registration_procedure() -> Procedure:
    return _seq(ProcedureName.REGISTRATION, "S15", [
        ("S1", "RegistrationRequest", D, G),
        ("S2", "RegistrationRequest", G, AMF),
        ("S3", "IdentityRequest", AMF, D),
        ("S4", "IdentityResponse", D, AMF),
        ("S5", "AuthRequest", AMF, AUSF),
        ("S6", "AuthDataRequest", AUSF, UDM),
        ("S7", "AuthDataResponse", UDM, AUSF),
        ("S8", "AuthResponse", AUSF, AMF),
        ("S9", "IdentityRequest2", AMF, D),
        ("S10", "IdentityResponse2", D, AMF),
        ("S11", "PolicyAssociationRequest", AMF, PCF),
        ("S12", "PolicyAssociationResponse", PCF, AMF),
        ("S13", "SessionContextUpdate", AMF, SMF, True),
        ("S14", "RegistrationAccept", AMF, D),
        ("S15", "RegistrationComplete", D, AMF),
    ])


def pdu_session_procedure() -> Procedure:
    return _seq(ProcedureName.PDU_SESSION, "P17", [
        ("P1", "PduSessionEstablishmentRequest", D, AMF),
        ("P2", "CreateSessionRequest", AMF, SMF),
        ("P3", "SmfRegistration", SMF, UDM),
        ("P4", "SmfRegistrationAck", UDM, SMF),
        ("P5", "CreateSessionResponse", SMF, AMF),
        ("P6a", "SessionAuthRequest", D, SRV),
        ("P6b", "SessionAuthResponse", SRV, D),
        ("P7a", "SessionPolicyRequest", SMF, PCF),
        ("P7b", "SessionPolicyResponse", PCF, SMF),
        ("P8", "SessionEstablishmentRequest", SMF, UPF),
        ("P9", "SessionEstablishmentResponse", UPF, SMF),
        ("P10", "AccessInfoTransfer", SMF, AMF),
        ("P11", "PduSessionIdInfo", AMF, G),
        ("P12a", "ResourceSetup", G, D),
        ("P12b", "ResourceSetupAck", D, G),
        ("P13", "PduSessionRequestAck", G, AMF),
        ("P14", "PduSessionUpdateRequest", AMF, SMF),
        ("P15", "SessionModificationRequest", SMF, UPF),
        ("P16", "SessionModificationResponse", UPF, SMF),
        ("P17", "PduSessionUpdateResponse", SMF, AMF),
    ])


def data_transfer_procedure() -> Procedure:
    """One frame up to the image server and its augmentation back.

    Image processing at the server is charged when D3 arrives, so there is
    no separate D4 message.
    """
    return _seq(ProcedureName.DATA_TRANSFER, "D7", [
        ("D1", "Frame", D, G),
        ("D2", "Frame", G, UPF),
        ("D3", "Frame", UPF, SRV, False, True),
        ("D5", "Augmentation", SRV, UPF),
        ("D6", "Augmentation", UPF, G),
        ("D7", "Augmentation", G, D),
    ])


def data_uplink_procedure() -> Procedure:
    """Device-to-server leg of the data transfer, ending on arrival at the server."""
    return _seq(ProcedureName.DATA_UPLINK, "D3", [
        ("D1", "Frame", D, G),
        ("D2", "Frame", G, UPF),
        ("D3", "Frame", UPF, SRV),
    ])


PROCEDURES = {
    "registration": registration_procedure,
    "pdu-session": pdu_session_procedure,
    "data-transfer": data_transfer_procedure,
    "data-uplink": data_uplink_procedure,
}


def procedure_key(name: ProcedureName) -> str:
    """Canonical command-line name of a procedure."""
    return next(key for key, factory in PROCEDURES.items() if factory().name is name)


_ALIASES = {
    "registration": "registration",
    "pdusession": "pdu-session",
    "pdusessionestablishment": "pdu-session",
    "datatransfer": "data-transfer",
    "datauplink": "data-uplink",
    "datatransferuplink": "data-uplink",
}


def get_procedure(name: str) -> Procedure:
    key = _ALIASES.get(name.strip().lower().replace("-", "").replace("_", ""))
    if key is None:
        raise ValidationError("procedure", f"unknown procedure {name!r}; choose from {sorted(PROCEDURES)}")
    return PROCEDURES[key]()


def uses_server(p: Procedure) -> bool:
    return any(m.server_processing for m in p.steps)


def extract_coefficients(p: Procedure, t: Topology) -> Coefficients:
    """Count link traversals and processing charges of ``p`` routed over ``t``."""
    routes = {}
    for m in p.steps:
        try:
            routes[m.step] = t.route(m.src, m.dst)
        except TopologyError as exc:
            raise TopologyError(f"cannot route {m.step} {m.name}: {exc}") from None

    on_path = set(p.critical_path())
    k1 = k2 = k3 = k_core = 0
    k3_total = sum(1 for m in p.steps if m.charges_processing)
    for m in p.steps:
        if m.step not in on_path:
            continue
        for _, _, link in routes[m.step]:
            if link.link_class is LinkClass.ACCESS:
                k1 += 1
            elif link.link_class is LinkClass.BACKHAUL:
                k2 += 1
            else:
                k_core += 1
        if m.charges_processing:
            k3 += 1
    return Coefficients(k1=k1, k2=k2, k3=k3, k3_total=k3_total, k_core=k_core)
