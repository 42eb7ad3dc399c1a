import json
from pathlib import Path

import pytest

from uolatency.model import OperatorKind
from uolatency.scenario import (
    ConstraintError,
    ScenarioSyntaxError,
    UnknownKeyError,
    dump_scenario,
    json_schema,
    parse_scenario,
)

ROOT = Path(__file__).resolve().parents[1]
MINIMAL = "procedure: data-transfer\ndeployment:\n  operator_kind: UO\n"


def test_minimal_defaults():
    cfg = parse_scenario(MINIMAL)
    assert cfg.procedure == "data-transfer"
    assert cfg.deployment.operator_kind is OperatorKind.UO
    assert cfg.deployment.core_distance == 0.5
    p = cfg.params
    assert (p.t_access, p.backhaul_rate, p.t_server, p.t_nf, p.d_backhaul) == (0.5, 0.05, 30.0, 1.0, 0.5)


def test_mno_defaults():
    cfg = parse_scenario("procedure: registration\ndeployment:\n  operator_kind: MNO\n  core_distance: 250\n  resource_ratio: 100\n")
    assert cfg.deployment.n_factories == 10
    assert cfg.params.t_nf == pytest.approx(0.1)
    assert cfg.params.d_backhaul == 250


def test_mno_requires_distance():
    with pytest.raises(ConstraintError) as exc:
        parse_scenario("procedure: registration\ndeployment:\n  operator_kind: MNO\n")
    assert exc.value.path == ("deployment", "core_distance")


def test_negative_distance_located():
    text = "procedure: data-transfer\ndeployment:\n  operator_kind: UO\n  core_distance: -1\n"
    with pytest.raises(ConstraintError) as exc:
        parse_scenario(text)
    assert exc.value.path == ("deployment", "core_distance")
    assert exc.value.line == 4
    assert "core_distance" in str(exc.value)


def test_unknown_key_suggestion():
    text = MINIMAL + "params:\n  latnecy: 3\n"
    with pytest.raises(UnknownKeyError) as exc:
        parse_scenario(text)
    assert exc.value.line == 5
    assert "latnecy" in str(exc.value)
    text = MINIMAL + "params:\n  t_acess: 3\n"
    with pytest.raises(UnknownKeyError, match="did you mean 't_access'"):
        parse_scenario(text)


def test_unknown_top_level_key():
    with pytest.raises(UnknownKeyError, match="did you mean 'procedure'"):
        parse_scenario(MINIMAL + "procedur: x\n")


def test_syntax_error_located():
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario("procedure: [unclosed\ndeployment:\n")
    assert exc.value.line is not None


def test_error_kinds_are_distinct():
    assert len({ScenarioSyntaxError, UnknownKeyError, ConstraintError}) == 3
    assert not issubclass(UnknownKeyError, ConstraintError)


def test_unknown_procedure():
    with pytest.raises(ConstraintError) as exc:
        parse_scenario("procedure: handover\ndeployment:\n  operator_kind: UO\n")
    assert exc.value.line == 1


def test_uo_cannot_serve_many_factories():
    with pytest.raises(ConstraintError, match="n_factories"):
        parse_scenario(MINIMAL + "  n_factories: 3\n")


def test_sweep_grid_must_be_explicit():
    text = MINIMAL + "experiment:\n  sweep:\n    axis: distance\n    d_min: 0.5\n"
    with pytest.raises(ConstraintError, match="d_max"):
        parse_scenario(text)


@pytest.mark.parametrize("path", sorted((ROOT / "scenarios").glob("*.yaml")), ids=lambda p: p.name)
def test_round_trip(path):
    cfg = parse_scenario(path.read_text())
    again = parse_scenario(dump_scenario(cfg))
    assert again == cfg


def test_round_trip_minimal():
    cfg = parse_scenario(MINIMAL)
    assert parse_scenario(dump_scenario(cfg)) == cfg


def test_schema_file_current():
    shipped = json.loads((ROOT / "schema" / "scenario.schema.json").read_text())
    assert shipped == json_schema()
