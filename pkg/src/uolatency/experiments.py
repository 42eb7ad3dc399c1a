"""Sweeps, resource-case tables and the full reproduction run.

Every sweep point is simulated with the event engine and cross-checked
against the closed form; the reproduction run writes one CSV per experiment
plus ``report.md`` comparing computed values with stored reference values.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import analytic, engine
from .analytic import BreakevenResult, Span
from .errors import ValidationError
from .model import DeploymentSpec, LatencyParams, build_topology, mno_nf_delay
from .procedures import (
    Procedure,
    ProcedureName,
    data_transfer_procedure,
    data_uplink_procedure,
    extract_coefficients,
    procedure_key,
    registration_procedure,
    uses_server,
)

# engine and closed form must agree to this many ms at every point
ORACLE_TOL_MS = 1e-9
RESOURCE_RATIOS = (1, 10, 100, 1000)
SWEEP_COLUMNS = [
    "experiment_id", "operator", "x_axis", "x_value",
    "e2e_ms", "access_ms", "backhaul_ms", "processing_ms", "server_ms",
]
CASE_COLUMNS = [
    "experiment_id", "case", "resource_ratio", "mno_t_nf_ms",
    "outcome", "distance_km", "reference_distance_km",
]


class Axis(str, enum.Enum):
    DISTANCE_KM = "DistanceKm"
    NF_DELAY_MS = "NfDelayMs"


@lru_cache(maxsize=None)
def reference_values() -> dict:
    """Published values keyed by anchor id (read from the bundled JSON)."""
    text = resources.files("uolatency").joinpath("data/reference_values.json").read_text()
    return json.loads(text)["values"]


def _key(name: ProcedureName) -> str:
    return procedure_key(name).replace("-", "_")


@dataclass(frozen=True)
class SweepPoint:
    operator: str
    x: float
    e2e_ms: float
    closed_form_ms: float
    parts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    experiment_id: str
    axis: Axis
    points: tuple[SweepPoint, ...]
    fitted_slope: dict[str, float]
    reference_lines: dict[str, float] = field(default_factory=dict)

    def series(self, operator: str) -> list[tuple[float, float]]:
        return [(p.x, p.e2e_ms) for p in self.points if p.operator == operator]

    def crossing(self, level: float, operator: str = "MNO") -> float | None:
        """First x at which the operator's series reaches ``level`` (linear interpolation)."""
        pts = self.series(operator)
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if y0 == level:
                return x0
            if (y0 - level) * (y1 - level) < 0:
                return x0 + (level - y0) * (x1 - x0) / (y1 - y0)
        if pts and pts[-1][1] == level:
            return pts[-1][0]
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for p in self.points:
            w.writerow([
                self.experiment_id, p.operator, self.axis.value, f"{p.x:.6f}", f"{p.e2e_ms:.6f}",
                f"{p.parts['access']:.6f}", f"{p.parts['backhaul']:.6f}",
                f"{p.parts['processing']:.6f}", f"{p.parts['server']:.6f}",
            ])
        return buf.getvalue()


@dataclass(frozen=True)
class CaseRow:
    case: int
    resource_ratio: float
    mno_t_nf: float
    result: BreakevenResult
    display_km: float | None
    reference_km: float | None = None
    reference_t_nf: float | None = None


@dataclass(frozen=True)
class CaseTable:
    experiment_id: str
    procedure: ProcedureName
    uo_t_nf: float
    uo_distance: float
    uo_latency: float
    rows: tuple[CaseRow, ...]
    has_reference: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CASE_COLUMNS)
        for r in self.rows:
            w.writerow([
                self.experiment_id, r.case, f"{r.resource_ratio:g}", f"{r.mno_t_nf:.6f}",
                "Feasible" if r.result.feasible else "Infeasible",
                "" if r.display_km is None else f"{r.display_km:.6f}",
                "" if r.reference_km is None else f"{r.reference_km:.2f}",
            ])
        return buf.getvalue()


def _simulate(proc: Procedure, spec: DeploymentSpec, params: LatencyParams) -> SweepPoint:
    topo = build_topology(spec)
    trace = engine.run(proc, topo, params)
    c = extract_coefficients(proc, topo)
    closed = analytic.latency(c, params, uses_server(proc)).l_total
    if abs(trace.e2e_latency - closed) > ORACLE_TOL_MS:
        raise AssertionError(
            f"engine {trace.e2e_latency!r} and closed form {closed!r} disagree for {proc.name.value}"
        )
    return SweepPoint(spec.operator_kind.value, 0.0, trace.e2e_latency, closed, trace.per_component)


def _fit_slope(points) -> float:
    xs = np.array([x for x, _ in points], dtype=float)
    ys = np.array([y for _, y in points], dtype=float)
    return float(np.polyfit(xs, ys, 1)[0])


def distance_grid(d_min: float, d_max: float, step: float) -> list[float]:
    """``d_min, d_min + step, ...`` up to ``d_max``, closing with ``d_max`` itself."""
    if not d_min > 0:
        raise ValidationError("d_min", "must be > 0")
    if not step > 0:
        raise ValidationError("step", "must be > 0")
    if d_min > d_max:
        raise ValidationError("d_max", "must be >= d_min")
    n = int(math.floor((d_max - d_min) / step + 1e-9))
    grid = [round(d_min + i * step, 9) for i in range(n + 1)]
    if d_max - grid[-1] > 1e-9:
        grid.append(d_max)
    return grid


def sweep_distance(
    proc: Procedure,
    d_min: float,
    d_max: float,
    step: float,
    mno_t_nf: float,
    uo_reference: LatencyParams = LatencyParams(),
    n_factories: int = 10,
    threshold: float | None = None,
    experiment_id: str | None = None,
) -> SweepResult:
    """E2E latency of an MNO deployment as its core moves away.

    The uO (at ``uo_reference.d_backhaul`` with ``uo_reference.t_nf``) is
    included as a constant reference line.
    """
    grid = distance_grid(d_min, d_max, step)
    experiment_id = experiment_id or f"{_key(proc.name)}_distance_sweep"

    uo = _simulate(proc, DeploymentSpec.uo(uo_reference.d_backhaul), uo_reference)
    points = []
    for d in grid:
        params = dataclasses.replace(uo_reference, t_nf=mno_t_nf, d_backhaul=d)
        p = _simulate(proc, DeploymentSpec.mno(d, n_factories), params)
        points.append(dataclasses.replace(p, x=d))
    points += [dataclasses.replace(uo, x=d) for d in grid]

    mno_series = [(p.x, p.e2e_ms) for p in points if p.operator == "MNO"]
    lines = {"UO": uo.e2e_ms}
    if threshold is not None:
        lines["threshold"] = float(threshold)
    return SweepResult(experiment_id, Axis.DISTANCE_KM, tuple(points), {"MNO": _fit_slope(mno_series)}, lines)


def sweep_nf_delay(
    proc: Procedure,
    t_min: float,
    t_max: float,
    n_points: int,
    uo_distance: float = 0.5,
    mno_distance: float = 250.0,
    base: LatencyParams = LatencyParams(),
    n_factories: int = 10,
    experiment_id: str | None = None,
) -> SweepResult:
    """E2E latency of both operators as the NF processing delay varies."""
    if not t_min > 0:
        raise ValidationError("t_min", "must be > 0")
    if n_points < 2:
        raise ValidationError("n_points", "need at least two points")
    if not t_max > t_min:
        raise ValidationError("t_max", "must be > t_min")
    experiment_id = experiment_id or f"{_key(proc.name)}_nf_delay_sweep"

    grid = [float(t) for t in np.linspace(t_min, t_max, n_points)]
    points = []
    slopes = {}
    for operator, spec in (
        ("UO", DeploymentSpec.uo(uo_distance)),
        ("MNO", DeploymentSpec.mno(mno_distance, n_factories)),
    ):
        series = []
        for t in grid:
            params = dataclasses.replace(base, t_nf=t, d_backhaul=spec.core_distance)
            p = dataclasses.replace(_simulate(proc, spec, params), x=t)
            points.append(p)
            series.append((t, p.e2e_ms))
        slopes[operator] = _fit_slope(series)
    return SweepResult(experiment_id, Axis.NF_DELAY_MS, tuple(points), slopes)


def resource_case_table(
    proc: Procedure,
    uo_t_nf: float,
    uo_distance: float = 0.5,
    n_factories: int = 10,
    base: LatencyParams = LatencyParams(),
    experiment_id: str | None = None,
) -> CaseTable:
    """How far the MNO core may move while matching the uO latency, per resource level."""
    experiment_id = experiment_id or f"{_key(proc.name)}_cases_tnf{uo_t_nf:g}"
    uo_params = dataclasses.replace(base, t_nf=uo_t_nf, d_backhaul=uo_distance)
    uo_latency = _simulate(proc, DeploymentSpec.uo(uo_distance), uo_params).e2e_ms
    c = extract_coefficients(proc, build_topology(DeploymentSpec.mno(uo_distance, n_factories)))

    refs = reference_values()
    ref_prefix = f"{_key(proc.name)}.tnf{uo_t_nf:g}"
    matches = (
        uo_distance == 0.5 and n_factories == 10
        and dataclasses.replace(base, t_nf=1.0, d_backhaul=0.5) == LatencyParams()
        and f"{ref_prefix}.case1" in refs
    )

    rows = []
    for i, ratio in enumerate(RESOURCE_RATIOS, 1):
        t_nf = mno_nf_delay(uo_t_nf, n_factories, ratio)
        result = analytic.breakeven_distance(c, uo_latency, dataclasses.replace(base, t_nf=t_nf), uses_server(proc))
        display = result.distance
        if display is not None and math.isclose(display, uo_distance, rel_tol=0, abs_tol=1e-9):
            display = uo_distance
        ref = refs.get(f"{ref_prefix}.case{i}") if matches else None
        rows.append(CaseRow(
            case=i, resource_ratio=float(ratio), mno_t_nf=t_nf, result=result, display_km=display,
            reference_km=ref["distance_km"] if ref else None,
            reference_t_nf=ref["mno_t_nf_ms"] if ref else None,
        ))
    return CaseTable(experiment_id, proc.name, uo_t_nf, uo_distance, uo_latency, tuple(rows), matches)


@dataclass
class ReportEntry:
    id: str
    description: str
    unit: str
    computed: float | None
    reference: float | None
    status: str
    note: str = ""
    anchor: str | None = None

    @property
    def reference_id(self) -> str:
        return self.anchor or self.id

    @property
    def abs_dev(self) -> float | None:
        if self.computed is None or self.reference is None:
            return None
        return self.computed - self.reference

    @property
    def rel_dev(self) -> float | None:
        if self.abs_dev is None or self.reference == 0:
            return None
        return self.abs_dev / self.reference

    @property
    def consistent(self) -> bool:
        if self.status == "model-inconsistent":
            return False
        if self.status == "bound":
            return self.computed is not None and self.computed <= self.reference
        if self.computed is None or self.reference is None:
            return self.computed is None and self.reference is None
        ref = reference_values().get(self.reference_id, {})
        if "band" in ref:
            lo, hi = ref["band"]
            return lo <= self.computed <= hi
        return abs(self.computed - self.reference) <= 0.01

    def as_dict(self) -> dict:
        digits = 2 if self.unit == "km" else 4 if "/" in self.unit else 3
        rnd = lambda v: None if v is None else round(v, digits)
        return {
            "id": self.id,
            "anchor": self.reference_id,
            "description": self.description,
            "unit": self.unit,
            "computed": rnd(self.computed),
            "reference": rnd(self.reference),
            "abs_dev": rnd(self.abs_dev),
            "rel_dev": None if self.rel_dev is None else round(self.rel_dev, 4),
            "status": self.status,
            "consistent": self.consistent,
            "note": self.note,
        }


@dataclass
class Report:
    entries: list[ReportEntry]
    files: list[Path]
    notes: list[str] = field(default_factory=list)

    def entry(self, entry_id: str) -> ReportEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def to_markdown(self) -> str:
        lines = ["# Latency reproduction report", "", "## Comparisons", ""]
        lines.append("| id | computed | reference | abs dev | unit | status | consistent |")
        lines.append("|---|---|---|---|---|---|---|")
        for e in self.entries:
            digits = 2 if e.unit == "km" else 4 if "/" in e.unit else 3
            fmt = lambda v: "--" if v is None else f"{v:.{digits}f}"
            computed = "Infeasible" if e.computed is None and e.unit == "km" else fmt(e.computed)
            lines.append(
                f"| {e.id} | {computed} | {fmt(e.reference)} | {fmt(e.abs_dev)} | {e.unit} | "
                f"{e.status} | {'yes' if e.consistent else 'no'} |"
            )
        lines += ["", "## Notes", ""]
        lines += [f"- {n}" for n in self.notes]
        lines += ["", "## Deviations (machine-readable)", "", "```json"]
        lines.append(json.dumps([e.as_dict() for e in self.entries], indent=2, sort_keys=True))
        lines += ["```", ""]
        return "\n".join(lines)


def parse_report(text: str) -> list[dict]:
    """Extract the JSON deviation block from a rendered report."""
    start = text.index("```json") + len("```json")
    end = text.index("```", start)
    return json.loads(text[start:end])


def _implied_ratio(refs, prefix) -> tuple[float, float]:
    """k3/k2 implied by the reference case 2->3 and case 3->4 distance gains."""
    rate = LatencyParams().backhaul_rate
    c2, c3, c4 = (refs[f"{prefix}.case{i}"] for i in (2, 3, 4))
    a = (c3["distance_km"] - c2["distance_km"]) * rate / (c2["mno_t_nf_ms"] - c3["mno_t_nf_ms"])
    b = (c4["distance_km"] - c3["distance_km"]) * rate / (c3["mno_t_nf_ms"] - c4["mno_t_nf_ms"])
    return a, b


def reproduce_all(output_dir, nf_points: int = 1000) -> Report:
    """Run every reference experiment with default parameters and write the artifacts."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"reproduce: cannot create {out}: {exc}") from exc

    refs = reference_values()
    defaults = LatencyParams()
    reg, dat = registration_procedure(), data_transfer_procedure()
    bound_one_way = refs["requirement.one_way_bound"]["value"]
    bound_round_trip = refs["requirement.round_trip_bound"]["value"]

    reg_dist = sweep_distance(reg, 0.5, 500.0, 50.0, mno_t_nf=0.1, uo_reference=defaults)
    reg_nf = sweep_nf_delay(reg, 0.001, 1.0, nf_points, uo_distance=0.5, mno_distance=250.0)
    dat_dist = sweep_distance(dat, 0.5, 500.0, 50.0, mno_t_nf=0.1, uo_reference=defaults,
                              threshold=bound_round_trip)
    tables = [
        resource_case_table(dat, 1.0),
        resource_case_table(reg, 1.0),
        resource_case_table(reg, 10.0),
        resource_case_table(reg, 100.0),
    ]

    files = []

    def write(name, text, experiment):
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"{experiment}: cannot write {path}: {exc}") from exc
        files.append(path)

    for sweep in (reg_dist, reg_nf, dat_dist):
        write(f"{sweep.experiment_id}.csv", sweep.to_csv(), sweep.experiment_id)
    for table in tables:
        write(f"{table.experiment_id}.csv", table.to_csv(), table.experiment_id)

    entries: list[ReportEntry] = []
    for table in tables:
        prefix = f"{_key(table.procedure)}.tnf{table.uo_t_nf:g}"
        for row in table.rows:
            anchor = f"{prefix}.case{row.case}"
            status = refs[anchor]["status"]
            entries.append(ReportEntry(
                anchor, f"break-even distance, MNO NF delay {row.mno_t_nf:g} ms", "km",
                row.display_km, row.reference_km, status,
                "" if status != "model-inconsistent" else "reference value not reproducible from integer crossing counts",
            ))

    k = extract_coefficients(reg, build_topology(DeploymentSpec.uo()))
    entries.append(ReportEntry(
        "registration.distance_slope", "registration latency slope vs distance", "ms/km",
        reg_dist.fitted_slope["MNO"], refs["registration.distance_slope"]["value"], "approximate",
        f"exact model slope k2*backhaul_rate = {k.k2}*{defaults.backhaul_rate:g} = {k.k2 * defaults.backhaul_rate:.4f}",
    ))
    for op in ("UO", "MNO"):
        entries.append(ReportEntry(
            f"registration.nf_delay_slope.{op.lower()}", f"registration latency slope vs NF delay ({op})",
            "ms/ms", reg_nf.fitted_slope[op], refs["registration.nf_delay_slope"]["value"], "approximate",
            f"exact model slope k3 = {k.k3}", anchor="registration.nf_delay_slope",
        ))

    crossing = dat_dist.crossing(bound_round_trip)
    c_dat = extract_coefficients(dat, build_topology(DeploymentSpec.uo()))
    solved = analytic.breakeven_distance(c_dat, bound_round_trip, dataclasses.replace(defaults, t_nf=0.1), True)
    entries.append(ReportEntry(
        "data_transfer.threshold_distance", "MNO core distance where data transfer reaches 50 ms", "km",
        crossing, refs["data_transfer.threshold_distance"]["value"], "approximate",
        f"closed-form solution {solved}",
    ))

    budget10 = analytic.latency(c_dat, dataclasses.replace(defaults, t_nf=10.0), True)
    entries.append(ReportEntry(
        "data_transfer.uo_tnf10_latency", "uO data transfer latency with 10 ms NF delay", "ms",
        budget10.l_total, refs["data_transfer.uo_tnf10_latency"]["value"], "model-inconsistent",
        "deviation: closed form gives {:.3f} ms where 52.1 ms is the referenished; {}".format(
            budget10.l_total, analytic.check_requirements(budget10, bound_one_way, bound_round_trip)),
    ))

    budget_rt = analytic.latency(c_dat, defaults, True)
    verdict_rt = analytic.check_requirements(budget_rt, bound_one_way, bound_round_trip)
    entries.append(ReportEntry(
        "requirement.round_trip_bound", "uO data transfer round trip vs bound", "ms",
        budget_rt.l_total, bound_round_trip, "bound", str(verdict_rt),
    ))
    c_up = extract_coefficients(data_uplink_procedure(), build_topology(DeploymentSpec.uo()))
    budget_up = analytic.latency(c_up, defaults, False, Span.ONE_WAY)
    verdict_up = analytic.check_requirements(budget_up, bound_one_way, bound_round_trip)
    entries.append(ReportEntry(
        "requirement.one_way_bound", "uO data uplink (device to server) vs one-way bound", "ms",
        budget_up.l_total, bound_one_way, "bound", str(verdict_up),
    ))

    notes = [
        f"uO registration reference latency: {reg_dist.reference_lines['UO']:.3f} ms",
        f"uO data transfer reference latency: {dat_dist.reference_lines['UO']:.3f} ms",
        f"registration coefficients (k1, k2, k3) = {k.as_tuple()}, off-path charges {k.k3_total - k.k3}",
        f"data transfer coefficients (k1, k2, k3) = {c_dat.as_tuple()}",
        f"registration MNO series meets the uO line at {reg_dist.crossing(reg_dist.reference_lines['UO']):.2f} km",
    ]
    for tnf in (1, 10, 100):
        a, b = _implied_ratio(refs, f"registration.tnf{tnf}")
        notes.append(
            f"registration tables are model-inconsistent: uO NF delay {tnf} ms, reference distances imply "
            f"k3/k2 = {a:.3f} (case 2->3) and {b:.3f} (case 3->4); this model has {k.k3}/{k.k2} = {k.k3 / k.k2:.3f}"
        )
    notes.append("data transfer uO latency with 10 ms NF delay: computed {:.3f} ms vs reference 52.1 ms".format(
        budget10.l_total))

    report = Report(entries, files, notes)
    write("report.md", report.to_markdown(), "report")
    return report

