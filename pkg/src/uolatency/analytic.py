"""Closed-form latency budgets and break-even core distances.

A procedure's latency is affine in every parameter::

    L = k1*t_access + k2*backhaul_rate*d + k3*t_nf + k_core*t_core_internal [+ t_server]

so for a target latency the backhaul distance can be solved for directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DegenerateProcedureError, ValidationError
from .model import LatencyParams
from .procedures import Coefficients


class Span(str, enum.Enum):
    ONE_WAY = "one_way"
    ROUND_TRIP = "round_trip"


@dataclass(frozen=True)
class LatencyBudget:
    access: float
    backhaul: float
    processing: float
    server: float = 0.0
    core_internal: float = 0.0
    span: Span = Span.ROUND_TRIP

    @property
    def l_total(self) -> float:
        return self.access + self.backhaul + self.processing + self.core_internal + self.server

    @property
    def terms(self) -> dict[str, float]:
        return {
            "access": self.access,
            "backhaul": self.backhaul,
            "processing": self.processing,
            "core_internal": self.core_internal,
            "server": self.server,
        }


@dataclass(frozen=True)
class BreakevenResult:
    distance: float | None = None

    def __post_init__(self):
        if self.distance is not None and not self.distance > 0:
            raise ValidationError("distance", "a feasible distance must be positive")

    @property
    def feasible(self) -> bool:
        return self.distance is not None

    def __str__(self):
        return f"{self.distance:.2f} km" if self.feasible else "Infeasible"


INFEASIBLE = BreakevenResult(None)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    total: float
    bound: float
    span: Span

    @property
    def margin(self) -> float:
        """Headroom below the bound; negative when the bound is exceeded."""
        return self.bound - self.total

    @property
    def exceedance(self) -> float:
        return max(0.0, self.total - self.bound)

    def __str__(self):
        if self.passed:
            return f"Pass ({self.total:.3f} ms <= {self.bound:.3f} ms, margin {self.margin:.3f} ms)"
        return f"Fail ({self.total:.3f} ms > {self.bound:.3f} ms, over by {self.exceedance:.3f} ms)"


def latency(c: Coefficients, params: LatencyParams, with_server: bool = False,
            span: Span = Span.ROUND_TRIP) -> LatencyBudget:
    return LatencyBudget(
        access=c.k1 * params.t_access,
        backhaul=c.k2 * params.backhaul_rate * params.d_backhaul,
        processing=c.k3 * params.t_nf,
        server=params.t_server if with_server else 0.0,
        core_internal=c.k_core * params.t_core_internal,
        span=span,
    )


def breakeven_distance(c: Coefficients, target: float, params: LatencyParams,
                       with_server: bool = False) -> BreakevenResult:
    """Backhaul distance at which the procedure takes exactly ``target`` ms.

    ``params.d_backhaul`` is ignored. Returns ``INFEASIBLE`` when the fixed
    terms alone already reach the target.
    """
    if c.k2 == 0:
        raise DegenerateProcedureError("procedure never crosses the backhaul")
    if params.backhaul_rate <= 0:
        raise DegenerateProcedureError("backhaul_rate must be positive to solve for distance")
    fixed = (c.k1 * params.t_access + c.k3 * params.t_nf
             + c.k_core * params.t_core_internal
             + (params.t_server if with_server else 0.0))
    numerator = target - fixed
    if numerator <= 0:
        return INFEASIBLE
    return BreakevenResult(numerator / (c.k2 * params.backhaul_rate))


def check_requirements(budget: LatencyBudget, one_way_bound: float = 10.0,
                       round_trip_bound: float = 50.0) -> Verdict:
    """Compare a budget against the bound matching its span (inclusive)."""
    for name, bound in (("one_way_bound", one_way_bound), ("round_trip_bound", round_trip_bound)):
        if not bound > 0:
            raise ValidationError(name, "must be positive")
    bound = one_way_bound if budget.span is Span.ONE_WAY else round_trip_bound
    total = budget.l_total
    return Verdict(total <= bound, total, bound, budget.span)
