import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from uolatency import (
    DeploymentSpec,
    LatencyParams,
    LinkClass,
    NfKind,
    Topology,
    TopologyError,
    ValidationError,
    build_topology,
    mno_nf_delay,
)
from uolatency.model import Link, OperatorKind, Site

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


def backhaul_lengths(topo):
    return {(l.a, l.b): l.length_km for l in topo.links if l.link_class is LinkClass.BACKHAUL}


def test_latency_param_defaults():
    p = LatencyParams()
    assert (p.t_access, p.backhaul_rate, p.t_server, p.t_core_internal) == (0.5, 0.05, 30.0, 0.0)


@pytest.mark.parametrize("field", ["t_access", "backhaul_rate", "t_nf", "t_server", "t_core_internal", "d_backhaul"])
@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_latency_params_reject_bad_values(field, bad):
    with pytest.raises(ValidationError) as exc:
        LatencyParams(**{field: bad})
    assert exc.value.field == field


def test_uo_topology_defaults():
    topo = build_topology(DeploymentSpec.uo())
    lengths = backhaul_lengths(topo)
    assert lengths[("gnb", "amf")] == 0.5
    assert lengths[("gnb", "upf")] == 0.5
    assert lengths[("upf", "server")] == 0.5
    assert dict(topo.placement)[NfKind.AMF] is Site.FACTORY


def test_mno_topology_distance():
    topo = build_topology(DeploymentSpec.mno(250))
    assert set(backhaul_lengths(topo).values()) == {250.0}
    assert dict(topo.placement)[NfKind.SMF] is Site.CORE_SITE
    assert dict(topo.placement)[NfKind.SERVER] is Site.FACTORY


def test_server_distance_override():
    topo = build_topology(DeploymentSpec.mno(100, server_distance=2.0))
    assert backhaul_lengths(topo)[("upf", "server")] == 2.0


@pytest.mark.parametrize("distance", [0, -1.0])
def test_non_positive_core_distance_rejected(distance):
    with pytest.raises(ValidationError) as exc:
        DeploymentSpec(OperatorKind.MNO, core_distance=distance, n_factories=10, resource_ratio=10)
    assert exc.value.field == "core_distance"


def test_uo_invariants():
    with pytest.raises(ValidationError, match="n_factories"):
        DeploymentSpec(OperatorKind.UO, 0.5, None, 3, 1.0)
    with pytest.raises(ValidationError, match="resource_ratio"):
        DeploymentSpec(OperatorKind.UO, 0.5, None, 1, 2.0)
    with pytest.raises(ValidationError, match="resource_ratio"):
        DeploymentSpec(OperatorKind.MNO, 5, None, 10, 0)


def test_topology_structure(uo_topology):
    kinds = [k for _, k in uo_topology.nodes]
    assert len(kinds) == len(set(kinds)) == 9
    access = [l for l in uo_topology.links if l.link_class is LinkClass.ACCESS]
    assert len(access) == 1
    internal = [l for l in uo_topology.links if l.link_class is LinkClass.CORE_INTERNAL]
    assert len(internal) == 15  # 6 choose 2
    assert uo_topology.is_connected()


def test_build_topology_is_pure():
    a = build_topology(DeploymentSpec.mno(123.4))
    b = build_topology(DeploymentSpec.mno(123.4))
    assert a == b
    assert a.to_json() == b.to_json()


def test_reserved_kinds_not_instantiable():
    assert not NfKind.NSSF.instantiable
    with pytest.raises(TopologyError):
        Topology(
            nodes=(("device", NfKind.DEVICE), ("nssf", NfKind.NSSF)),
            links=(Link("device", "nssf", LinkClass.ACCESS),),
        )


def test_topology_rejects_disconnected_and_bad_links():
    nodes = (("device", NfKind.DEVICE), ("gnb", NfKind.GNB), ("amf", NfKind.AMF))
    with pytest.raises(TopologyError, match="connected"):
        Topology(nodes, (Link("device", "gnb", LinkClass.ACCESS),))
    with pytest.raises(TopologyError, match="positive length"):
        Topology(nodes, (Link("device", "gnb", LinkClass.ACCESS), Link("gnb", "amf", LinkClass.BACKHAUL, 0.0)))
    with pytest.raises(TopologyError, match="access"):
        Topology(nodes, (Link("gnb", "amf", LinkClass.BACKHAUL, 1.0),))


def test_routes(uo_topology):
    def path(src, dst):
        hops = uo_topology.route(src, dst)
        return [hops[0][0]] + [b for _, b, _ in hops]

    assert path(NfKind.DEVICE, NfKind.AMF) == ["device", "gnb", "amf"]
    assert path(NfKind.DEVICE, NfKind.SERVER) == ["device", "gnb", "upf", "server"]
    assert path(NfKind.AMF, NfKind.SMF) == ["amf", "smf"]
    assert path(NfKind.SERVER, NfKind.DEVICE) == ["server", "upf", "gnb", "device"]


@pytest.mark.parametrize(
    "args, expected",
    [((1.0, 10, 1), 10.0), ((1.0, 10, 10), 1.0), ((1.0, 10, 100), 0.1), ((1.0, 10, 1000), 0.01), ((3.7, 1, 1), 3.7)],
)
def test_mno_nf_delay_examples(args, expected):
    assert mno_nf_delay(*args) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("bad", [0, -1.0])
def test_mno_nf_delay_rejects_resource_ratio(bad):
    with pytest.raises(ValidationError):
        mno_nf_delay(1.0, 10, bad)


@given(t=positive, n=st.integers(1, 1000), r=positive, a=st.floats(0.01, 100))
def test_mno_nf_delay_linear_in_load(t, n, r, a):
    assert mno_nf_delay(t, a * n, r) == pytest.approx(a * mno_nf_delay(t, n, r), rel=1e-12)


@given(t=positive, n=st.integers(1, 1000))
def test_mno_nf_delay_equal_load_and_resources(t, n):
    assert mno_nf_delay(t, n, n) == pytest.approx(t, rel=1e-12)
