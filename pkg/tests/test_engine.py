import dataclasses
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uolatency import (
    DeploymentSpec,
    LatencyParams,
    TopologyError,
    ValidationError,
    build_topology,
    data_transfer_procedure,
    extract_coefficients,
    latency,
    pdu_session_procedure,
    registration_procedure,
    run,
    run_batch,
)
from uolatency.engine import EventKind
from uolatency.model import Link, LinkClass, NfKind, Topology
from uolatency.procedures import uses_server

FACTORIES = [registration_procedure, pdu_session_procedure, data_transfer_procedure]
ms = st.floats(min_value=0.0, max_value=100.0, allow_nan=False, allow_infinity=False)
km = st.floats(min_value=0.01, max_value=3000.0, allow_nan=False, allow_infinity=False)


@st.composite
def scenarios(draw):
    params = LatencyParams(
        t_access=draw(ms), backhaul_rate=draw(st.floats(0.0, 1.0)), t_nf=draw(ms),
        t_server=draw(ms), t_core_internal=draw(ms), d_backhaul=draw(km),
    )
    return params


def topo_for(params):
    return build_topology(DeploymentSpec.mno(params.d_backhaul))


# expected values worked by hand in exact decimal arithmetic
def test_data_transfer_uo_defaults(uo_topology, defaults):
    expected = 2 * F("0.5") + 4 * F("0.05") * F("0.5") + 2 * 1 + 30
    assert expected == F("33.1")
    assert run(data_transfer_procedure(), uo_topology, defaults).e2e_latency == pytest.approx(33.1, abs=1e-9)


def test_registration_uo_defaults(uo_topology, defaults):
    expected = 7 * F("0.5") + 7 * F("0.025") + 10 * 1
    assert float(expected) == 13.675
    assert run(registration_procedure(), uo_topology, defaults).e2e_latency == pytest.approx(13.675, abs=1e-9)


def test_registration_mno_250(mno_topology):
    params = LatencyParams(t_nf=0.1, d_backhaul=250)
    expected = F("3.5") + 7 * F("12.5") + 10 * F("0.1")
    assert expected == 92
    assert run(registration_procedure(), mno_topology(250), params).e2e_latency == pytest.approx(92.0, abs=1e-9)


def test_trace_golden(uo_topology, defaults, golden):
    trace = run(data_transfer_procedure(), uo_topology, defaults)
    assert trace.to_csv() == (golden / "data_transfer_uo_trace.csv").read_text()


def test_trace_event_kinds(uo_topology, defaults):
    trace = run(data_transfer_procedure(), uo_topology, defaults)
    kinds = [e.kind for e in trace.events]
    assert kinds.count(EventKind.SERVER_DONE) == 1
    assert kinds.count(EventKind.PROCESSING_DONE) == 2
    assert trace.events[-1].node == "device"


def test_events_time_ordered_with_fifo_ties(uo_topology, defaults):
    trace = run(registration_procedure(), uo_topology, defaults)
    keys = [(e.time, e.seq) for e in trace.events]
    assert keys == sorted(keys)


def test_concurrent_step_does_not_delay_completion(uo_topology, defaults):
    trace = run(registration_procedure(), uo_topology, defaults)
    smf_done = [e for e in trace.events if e.message.step == "S13" and e.kind is EventKind.PROCESSING_DONE]
    assert len(smf_done) == 1
    accept = [e for e in trace.events if e.message.step == "S14" and e.kind is EventKind.SEND][0]
    assert accept.time < smf_done[0].time
    # S13's processing is not on the critical path
    assert trace.parts["processing"] == 10


def test_core_internal_latency_counts(uo_topology):
    params = LatencyParams(t_core_internal=0.2)
    trace = run(registration_procedure(), uo_topology, params)
    assert trace.parts["core_internal"] == 6 * F(0.2)


def test_invalid_params_rejected(uo_topology):
    with pytest.raises(ValidationError):
        run(registration_procedure(), uo_topology, {"t_nf": -1.0})
    with pytest.raises(ValidationError):
        run(registration_procedure(), uo_topology, {"t_nf": float("nan")})


def test_unroutable(defaults):
    topo = Topology(
        nodes=(("device", NfKind.DEVICE), ("gnb", NfKind.GNB), ("upf", NfKind.UPF)),
        links=(Link("device", "gnb", LinkClass.ACCESS), Link("gnb", "upf", LinkClass.BACKHAUL, 1.0)),
    )
    with pytest.raises(TopologyError, match="D3"):
        run(data_transfer_procedure(), topo, defaults)


def test_run_batch(uo_topology, mno_topology, defaults):
    runs = [
        (data_transfer_procedure(), uo_topology, defaults),
        (registration_procedure(), uo_topology, defaults),
        (registration_procedure(), mno_topology(250), LatencyParams(t_nf=0.1, d_backhaul=250)),
    ]
    out = run_batch(runs)
    assert [t.e2e_latency for t in out] == pytest.approx([33.1, 13.675, 92.0], abs=1e-9)
    assert run_batch(runs, max_workers=3)[2].to_csv() == out[2].to_csv()
    assert run_batch([]) == []


def test_run_batch_isolates_errors(uo_topology, defaults):
    runs = [
        (data_transfer_procedure(), uo_topology, defaults),
        (data_transfer_procedure(), uo_topology, {"t_access": -0.5}),
        (registration_procedure(), uo_topology, defaults),
    ]
    out = run_batch(runs)
    assert isinstance(out[1], ValidationError) and out[1].field == "t_access"
    assert out[0].e2e_latency == pytest.approx(33.1)
    assert out[2].e2e_latency == pytest.approx(13.675)


@pytest.mark.parametrize("factory", FACTORIES)
@settings(max_examples=200, deadline=None)
@given(params=scenarios())
def test_engine_matches_closed_form(factory, params):
    proc = factory()
    topo = topo_for(params)
    trace = run(proc, topo, params)
    closed = latency(extract_coefficients(proc, topo), params, uses_server(proc)).l_total
    assert abs(trace.e2e_latency - closed) <= 1e-9


@pytest.mark.parametrize("factory", FACTORIES)
@settings(max_examples=50, deadline=None)
@given(params=scenarios())
def test_component_accounting_is_exact(factory, params):
    trace = run(factory(), topo_for(params), params)
    assert sum(trace.parts.values()) == trace.e2e_exact


@pytest.mark.parametrize("factory", FACTORIES)
@settings(max_examples=50, deadline=None)
@given(params=scenarios())
def test_deterministic(factory, params):
    a = run(factory(), topo_for(params), params)
    b = run(factory(), topo_for(params), params)
    assert a.to_csv() == b.to_csv()
    assert a.e2e_exact == b.e2e_exact


@pytest.mark.parametrize("field", ["t_access", "backhaul_rate", "d_backhaul", "t_nf", "t_server"])
@pytest.mark.parametrize("factory", FACTORIES)
@settings(max_examples=25, deadline=None)
@given(params=scenarios(), bump=st.floats(0.0, 50.0))
def test_monotone(field, factory, params, bump):
    bigger = dataclasses.replace(params, **{field: getattr(params, field) + bump})
    lo = run(factory(), topo_for(params), params).e2e_exact
    hi = run(factory(), topo_for(bigger), bigger).e2e_exact
    assert hi >= lo
