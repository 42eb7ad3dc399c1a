"""Latency of local micro-operator versus remote MNO 5G core deployments."""

from .analytic import (
    BreakevenResult,
    LatencyBudget,
    Span,
    Verdict,
    breakeven_distance,
    check_requirements,
    latency,
)
from .engine import Trace, run, run_batch
from .errors import DegenerateProcedureError, TopologyError, UoLatencyError, ValidationError
from .model import (
    DeploymentSpec,
    LatencyParams,
    LinkClass,
    NfKind,
    OperatorKind,
    Topology,
    build_topology,
    mno_nf_delay,
)
from .procedures import (
    Coefficients,
    Message,
    Procedure,
    data_transfer_procedure,
    data_uplink_procedure,
    extract_coefficients,
    get_procedure,
    pdu_session_procedure,
    registration_procedure,
)

__version__ = "0.1.0"
