import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudburst.errors import LookupFailure, ParseError
from cloudburst.lifecycle import (
    PROVIDERS, Actor, ActorViolation, Billing, BillingInconsistency, DuplicationError, OrderingError,
    all_steps, apply_step, billing_hours, check_azure_vpns, check_ip_ranges, is_acyclic, parse_event_log,
    replay, validate_log, workflow_definition,
)
from tests.conftest import make_link

U, O = Actor.CLOUD_USER, Actor.ONPREM


def in_order(provider):
    return [(float(i), s.name, s.actor) for i, s in enumerate(workflow_definition(provider))]


def test_gcp_four_user_steps_plus_onprem():
    steps = workflow_definition("GCP")
    assert sum(s.actor is U for s in steps) == 4
    assert sum(s.actor is O for s in steps) == 1


def test_aws_root_is_onprem():
    roots = [s for s in workflow_definition("AWS") if not s.prerequisites]
    assert [s.actor for s in roots] == [O]


@pytest.mark.parametrize("provider", PROVIDERS)
def test_structure(provider):
    steps = all_steps(provider).values()
    assert is_acyclic(steps)
    assert any(s.emits_key for s in steps)
    assert sum(s.billing_effect is Billing.STARTS for s in steps) == 1


def test_unknown_provider():
    with pytest.raises(LookupFailure):
        workflow_definition("Oracle")


def test_gcp_full_sequence_bills():
    state = replay("GCP", in_order("GCP"))
    assert state.billing_active


def test_aws_accept_before_initiation():
    with pytest.raises(OrderingError):
        replay("AWS", [(0.0, "accept_direct_connect", U)])


def test_wrong_actor():
    with pytest.raises(ActorViolation):
        replay("GCP", [(0.0, "create_vpc", O)])


def test_duplicate():
    events = in_order("GCP")[:1] * 2
    with pytest.raises(DuplicationError):
        replay("GCP", events)


def test_azure_vng_before_expressroute():
    with pytest.raises(OrderingError):
        replay("Azure", [(0.0, "create_vnet", U), (0.1, "create_gateway_subnet", U), (0.2, "create_vng", U)])


def test_billing_examples():
    assert billing_hours([(0.0, "onprem_oess_routing"), (10.0, "destroy_cloud_router")], "GCP") == 10
    az = [(0.0, "create_expressroute"), (5.0, "user_delete_expressroute"), (8.0, "onprem_delete_expressroute")]
    assert billing_hours(az, "Azure") == 8
    assert billing_hours([(0.0, "create_vpc")], "GCP") == 0


def test_stop_without_start():
    with pytest.raises(BillingInconsistency):
        billing_hours([(1.0, "destroy_cloud_router")], "GCP")


@given(start=st.floats(0, 10), a=st.floats(0, 50), b=st.floats(0, 50))
def test_azure_joint_stop_order_invariant(start, a, b):
    a, b = start + a, start + b
    first = [(start, "create_expressroute")]
    x = sorted([(a, "user_delete_expressroute"), (b, "onprem_delete_expressroute")])
    y = sorted([(a, "onprem_delete_expressroute"), (b, "user_delete_expressroute")])
    assert billing_hours(first + x, "Azure") == billing_hours(first + y, "Azure") == pytest.approx(max(a, b) - start)


def test_joint_stop_state_machine():
    state = replay("Azure", in_order("Azure"))
    state = apply_step(state, "onprem_initiate_teardown", O, 20.0)
    state = apply_step(state, "user_delete_expressroute", U, 21.0)
    assert state.billing_active
    state = apply_step(state, "onprem_delete_expressroute", O, 22.0)
    assert not state.billing_active


def test_parse_errors_are_line_numbered():
    with pytest.raises(ParseError, match="line 3"):
        parse_event_log("t_h,provider,link_id,step,actor\n0,GCP,x,create_vpc,CloudUser\nabc,GCP,x\n")


def test_empty_log():
    assert validate_log(parse_event_log("")) == {}


@pytest.mark.parametrize("name,ok", [("gcp_happy.log", True), ("azure_happy.log", True), ("aws_happy.log", True),
                                     ("aws_user_initiated.log", False), ("azure_vng_first.log", False)])
def test_shipped_logs(scenarios_dir, name, ok):
    verdicts = validate_log(parse_event_log((scenarios_dir / name).read_text()))
    assert all(v["ok"] for v in verdicts.values()) is ok


def test_gcp_log_hours(scenarios_dir):
    (v,) = validate_log(parse_event_log((scenarios_dir / "gcp_happy.log").read_text())).values()
    assert v["billing_hours"] == pytest.approx(10.0)


def test_azure_vpn_uniqueness():
    a = make_link("a", provider="Azure", region="East US", peering="Silicon Valley", cap=10, vpn_id="v1")
    b = make_link("b", provider="Azure", region="West US", peering="Silicon Valley", cap=10, vpn_id="v1")
    assert check_azure_vpns([a, b])
    c = make_link("c", provider="Azure", region="West US", peering="Silicon Valley", cap=10, vpn_id="v2")
    assert check_azure_vpns([a, c]) == []


def test_ip_overlap():
    a = make_link("a", ip_range="10.1.0.0/20")
    b = make_link("b", ip_range="10.1.8.0/24")
    assert check_ip_ranges([a, b])
    assert check_ip_ranges([a], ["10.0.0.0/8"])
    assert check_ip_ranges([a], ["192.168.0.0/16"]) == []
