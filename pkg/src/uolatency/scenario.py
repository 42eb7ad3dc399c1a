"""Scenario files: strict YAML schema, defaults and located error reporting.

A minimal scenario only names the procedure and the operator::

    procedure: data-transfer
    deployment:
      operator_kind: UO

Everything else falls back to the general simulation defaults. Experiment
grids are never defaulted.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import UoLatencyError, ValidationError
from .model import DeploymentSpec, LatencyParams, OperatorKind, mno_nf_delay
from .procedures import get_procedure, procedure_key


class ScenarioError(UoLatencyError):
    kind = "scenario"

    def __init__(self, message, path=(), line=None):
        self.path = tuple(path)
        self.line = line
        where = ".".join(str(p) for p in self.path) or "<root>"
        loc = f"line {line}, " if line is not None else ""
        super().__init__(f"{self.kind} error at {loc}{where}: {message}")


class ScenarioSyntaxError(ScenarioError):
    kind = "syntax"


class UnknownKeyError(ScenarioError):
    kind = "unknown-key"


class ConstraintError(ScenarioError):
    kind = "constraint"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeploymentBlock(_Strict):
    operator_kind: Literal["UO", "MNO"]
    core_distance: Optional[PositiveFloat] = None
    server_distance: Optional[PositiveFloat] = None
    n_factories: Optional[PositiveInt] = None
    resource_ratio: Optional[PositiveFloat] = None


class ParamsBlock(_Strict):
    t_access: float = Field(0.5, ge=0, allow_inf_nan=False)
    backhaul_rate: float = Field(0.05, ge=0, allow_inf_nan=False)
    t_nf: Optional[float] = Field(None, ge=0, allow_inf_nan=False)
    t_server: float = Field(30.0, ge=0, allow_inf_nan=False)
    t_core_internal: float = Field(0.0, ge=0, allow_inf_nan=False)


class SweepBlock(_Strict):
    axis: Literal["distance", "nf_delay"]
    d_min: Optional[PositiveFloat] = None
    d_max: Optional[PositiveFloat] = None
    step: Optional[PositiveFloat] = None
    mno_t_nf: Optional[PositiveFloat] = None
    uo_t_nf: Optional[PositiveFloat] = None
    threshold: Optional[PositiveFloat] = None
    t_min: Optional[PositiveFloat] = None
    t_max: Optional[PositiveFloat] = None
    n_points: Optional[int] = Field(None, ge=2)
    uo_distance: Optional[PositiveFloat] = None
    mno_distance: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _grid_complete(self):
        if self.axis == "distance":
            need = ("d_min", "d_max", "step", "mno_t_nf", "uo_t_nf", "uo_distance")
            other = ("t_min", "t_max", "n_points", "mno_distance")
        else:
            need = ("t_min", "t_max", "n_points", "uo_distance", "mno_distance")
            other = ("d_min", "d_max", "step", "mno_t_nf", "uo_t_nf", "threshold")
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"{self.axis} sweep needs {', '.join(missing)}")
        stray = [k for k in other if getattr(self, k) is not None]
        if stray:
            raise ValueError(f"{', '.join(stray)} not valid for a {self.axis} sweep")
        return self


class TableBlock(_Strict):
    uo_t_nf: PositiveFloat
    uo_distance: PositiveFloat = 0.5
    n_factories: PositiveInt = 10


class RequirementsBlock(_Strict):
    one_way_bound: PositiveFloat
    round_trip_bound: PositiveFloat


class ExperimentBlock(_Strict):
    sweep: Optional[SweepBlock] = None
    table: Optional[TableBlock] = None
    requirements: Optional[RequirementsBlock] = None


class ScenarioFile(_Strict):
    procedure: str
    deployment: DeploymentBlock
    params: ParamsBlock = ParamsBlock()
    experiment: Optional[ExperimentBlock] = None


def json_schema() -> dict:
    return ScenarioFile.model_json_schema()


@dataclass(frozen=True)
class ScenarioConfig:
    procedure: str
    deployment: DeploymentSpec
    params: LatencyParams
    experiment: Optional[ExperimentBlock] = None


def _model_for(path) -> type[BaseModel] | None:
    model: type[BaseModel] = ScenarioFile
    for key in path:
        info = model.model_fields.get(key)
        if info is None:
            return None
        ann = info.annotation
        args = getattr(ann, "__args__", ())
        candidates = [ann, *args]
        sub = next((c for c in candidates if isinstance(c, type) and issubclass(c, BaseModel)), None)
        if sub is None:
            return None
        model = sub
    return model


def _line_of(root, path) -> int | None:
    """1-based line of the deepest key in ``path`` that exists in the document."""
    node, line = root, None
    for key in path:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == str(key):
                line = k.start_mark.line + 1
                node = v
                break
        else:
            break
    return line


def _convert(exc: PydanticValidationError, root) -> ScenarioError:
    err = exc.errors()[0]
    path = tuple(p for p in err["loc"] if isinstance(p, str))
    line = _line_of(root, path)
    if err["type"] == "extra_forbidden":
        model = _model_for(path[:-1])
        choices = list(model.model_fields) if model else []
        close = difflib.get_close_matches(path[-1], choices, n=1)
        hint = f"; did you mean {close[0]!r}?" if close else ""
        return UnknownKeyError(f"unknown key {path[-1]!r}{hint}", path, line)
    if err["type"] == "missing":
        return ConstraintError("required field is missing", path, line)
    msg = err["msg"].removeprefix("Value error, ")
    return ConstraintError(msg, path, line)


def parse_scenario(text: str) -> ScenarioConfig:
    """Validate scenario text and fill in defaults."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioSyntaxError(str(getattr(exc, "problem", exc)), (), line) from None
    if not isinstance(data, dict):
        raise ScenarioSyntaxError("scenario must be a mapping", (), 1)

    try:
        raw = ScenarioFile.model_validate(data)
    except PydanticValidationError as exc:
        raise _convert(exc, root) from None

    try:
        name = procedure_key(get_procedure(raw.procedure).name)
    except ValidationError as exc:
        raise ConstraintError(str(exc), ("procedure",), _line_of(root, ("procedure",))) from None

    dep = raw.deployment
    is_uo = dep.operator_kind == "UO"
    core_distance = dep.core_distance
    if core_distance is None:
        if not is_uo:
            raise ConstraintError("an MNO deployment needs an explicit core_distance",
                                  ("deployment", "core_distance"), _line_of(root, ("deployment",)))
        core_distance = 0.5
    n_factories = dep.n_factories if dep.n_factories is not None else (1 if is_uo else 10)
    ratio = dep.resource_ratio if dep.resource_ratio is not None else (1.0 if is_uo else float(n_factories))
    try:
        spec = DeploymentSpec(OperatorKind(dep.operator_kind), core_distance, dep.server_distance, n_factories, ratio)
    except ValidationError as exc:
        path = ("deployment", exc.field)
        raise ConstraintError(str(exc), path, _line_of(root, path)) from None

    t_nf = raw.params.t_nf
    if t_nf is None:
        t_nf = 1.0 if is_uo else mno_nf_delay(1.0, n_factories, ratio)
    params = LatencyParams(
        t_access=raw.params.t_access,
        backhaul_rate=raw.params.backhaul_rate,
        t_nf=t_nf,
        t_server=raw.params.t_server,
        t_core_internal=raw.params.t_core_internal,
        d_backhaul=spec.core_distance,
    )
    return ScenarioConfig(name, spec, params, raw.experiment)


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def dump_scenario(config: ScenarioConfig) -> str:
    """Serialize a config with every default made explicit."""
    params = config.params.to_dict()
    params.pop("d_backhaul")
    doc = {
        "procedure": config.procedure,
        "deployment": config.deployment.to_dict(),
        "params": params,
    }
    if config.experiment is not None:
        doc["experiment"] = config.experiment.model_dump(exclude_none=True)
    return yaml.safe_dump(doc, sort_keys=False)


def write_schema(path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(json_schema(), fh, indent=2, sort_keys=True)
        fh.write("\n")
