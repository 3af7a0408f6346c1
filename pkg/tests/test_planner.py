import itertools
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cloudburst.errors import DomainError, ValidationError
from cloudburst.planner import Demand, PeeringSlot, partition_compute, plan_portfolio, portfolio_cost
from cloudburst.pricing import default_catalog
from cloudburst.units import gbps_to_tb_per_hour
from tests.conftest import make_link

CAT = default_catalog()


def brute_force(units, target, duration_h, volume_tb, catalog=CAT):
    """Minimum cost over every subset of units meeting ``target``; None when infeasible."""
    best = None
    for r in range(len(units) + 1):
        for combo in itertools.combinations(units, r):
            total = sum(combo)
            if total < target:
                continue
            cost = 0.0
            for cap in combo:
                share = volume_tb * cap / total if total else 0.0
                options = []
                for tier in catalog.tiers_for(cap):
                    rate = 0.0 if tier.unmetered else catalog.price_point * (tier.egress_fee.high - tier.egress_fee.low) + tier.egress_fee.low
                    hourly = tier.hourly_fee.low + catalog.price_point * (tier.hourly_fee.high - tier.hourly_fee.low)
                    options.append(hourly * duration_h + rate * share)
                cost += min(options)
            if best is None or cost < best:
                best = cost
    return best


def one_region(counts, pflops, duration_h=10.0, factor=1.5):
    slot = PeeringSlot("GCP", "US Central", "US Central", counts)
    demand = Demand("GCP", "US Central", pflops, "UW")
    return plan_portfolio([demand], [slot], factor, duration_h, CAT), demand


def test_example_subset():
    p, demand = one_region({10: 1, 5: 2, 2: 2}, 10.0)
    assert demand.mean_egress_gbps == pytest.approx(11.11, abs=0.01)
    assert not p.shortfall
    assert sum(link.capacity_gbps for link in p.links) >= 16.67
    volume = gbps_to_tb_per_hour(demand.mean_egress_gbps) * 10.0
    assert p.cost_usd == pytest.approx(brute_force([10, 5, 5, 2, 2], 1.5 * demand.mean_egress_gbps, 10.0, volume),
                                       abs=1e-9)


def test_zero_demand():
    p, _ = one_region({10: 1}, 0.0)
    assert p.links == [] and p.cost_usd == 0 and not p.shortfall


def test_shortfall_takes_everything():
    # target 20 Gbps against 14 Gbps of slots
    pflops = 20 / 1.5 / (500 * 8 / 3600)
    p, _ = one_region({5: 2, 2: 2}, pflops)
    assert p.shortfall
    assert sorted(link.capacity_gbps for link in p.links) == [2, 2, 5, 5]


def test_region_without_slots_is_error():
    p = plan_portfolio([Demand("AWS", "Mars", 1.0, "UW")], [], 1.5, 1.0, CAT)
    assert p.errors and "Mars" in p.errors[0]


def test_bad_arguments():
    with pytest.raises(DomainError):
        plan_portfolio([], [], 0.0)
    with pytest.raises(DomainError):
        plan_portfolio([], [], 1.5, -1)


def test_shared_pool_across_demands():
    slot = PeeringSlot("AWS", "San Jose, CA", "California", {5: 2})
    forecast = [Demand("AWS", "California", 3.0, "UW"), Demand("AWS", "California", 3.0, "UCSD")]
    p = plan_portfolio(forecast, [slot], 1.5, 30.0, CAT)
    assert [[link.site for link in r.links] for r in p.regions] == [["UW"], ["UCSD"]]


@settings(max_examples=200, deadline=None)
@given(c10=st.integers(0, 4), c5=st.integers(0, 4), c2=st.integers(0, 4),
       pflops=st.floats(0, 30), hours=st.floats(0, 50), pp=st.floats(0, 1))
def test_oracle_equivalence(c10, c5, c2, pflops, hours, pp):
    cat = CAT.with_price_point(pp)
    counts = {10: c10, 5: c5, 2: c2}
    slot = PeeringSlot("GCP", "US Central", "US Central", counts)
    demand = Demand("GCP", "US Central", pflops, "UW")
    p = plan_portfolio([demand], [slot], 1.5, hours, cat)
    units = [10] * c10 + [5] * c5 + [2] * c2
    target = 1.5 * demand.mean_egress_gbps
    volume = gbps_to_tb_per_hour(demand.mean_egress_gbps) * hours
    feasible = sum(units) >= target
    assert p.shortfall == (not feasible and pflops > 0)
    if pflops == 0:
        assert p.cost_usd == 0
    elif feasible:
        assert p.cost_usd == pytest.approx(brute_force(units, target, hours, volume, cat), abs=1e-9)
        assert p.regions[0].coverage_gbps >= target


@settings(max_examples=50, deadline=None)
@given(pflops=st.floats(0.1, 20), f1=st.floats(0.5, 3), f2=st.floats(0.5, 3))
def test_cost_monotone_in_coverage_factor(pflops, f1, f2):
    f1, f2 = sorted((f1, f2))
    a, _ = one_region({10: 2, 5: 2, 2: 3}, pflops, factor=f1)
    b, _ = one_region({10: 2, 5: 2, 2: 3}, pflops, factor=f2)
    if not b.shortfall:
        assert b.cost_usd >= a.cost_usd - 1e-9


def test_deterministic():
    a, _ = one_region({10: 2, 5: 3, 2: 3}, 12.0)
    b, _ = one_region({10: 2, 5: 3, 2: 3}, 12.0)
    assert a.to_json() == b.to_json()


def test_greedy_path_beyond_enumeration_limit():
    p, demand = one_region({5: 8, 2: 8}, 25.0)
    assert not p.shortfall
    assert p.regions[0].coverage_gbps >= 1.5 * demand.mean_egress_gbps


def test_oracle_timing():
    start = time.perf_counter()
    for n in range(1, 13):
        one_region({5: n // 2, 2: n - n // 2}, 5.0)
    assert time.perf_counter() - start < 10


def test_partition_examples():
    assert partition_compute(10, {"a": 5, "b": 5}) == {"a": 5, "b": 5}
    assert partition_compute(10, {"a": 10, "b": 5, "c": 2}) == {"a": 6, "b": 3, "c": 1}
    assert partition_compute(0, {"a": 10, "b": 5}) == {"a": 0, "b": 0}
    with pytest.raises(ValidationError):
        partition_compute(3, {})


@given(fleet=st.integers(0, 10_000), caps=st.lists(st.sampled_from([2, 5, 10]), min_size=1, max_size=8))
def test_partition_conserves(fleet, caps):
    out = partition_compute(fleet, {f"l{i}": c for i, c in enumerate(caps)})
    assert sum(out.values()) == fleet
    total = sum(caps)
    for i, c in enumerate(caps):
        assert abs(out[f"l{i}"] - fleet * c / total) < 1


def test_portfolio_cost_examples():
    assert portfolio_cost([], 10, 5, CAT) == 0
    assert portfolio_cost([make_link(cap=5)], 10, 5, CAT) == pytest.approx(133.70)


MAIN_PORTFOLIO_CAPS = [5, 5, 2, 2, 5, 2, 2, 5, 5, 10, 10, 10, 10, 2, 10, 5, 5, 2, 5, 5, 5]


def test_main_portfolio_cost_range():
    links = [make_link(f"l{i}", cap=c) for i, c in enumerate(MAIN_PORTFOLIO_CAPS)]
    assert len(links) == 21
    cost = portfolio_cost(links, 28, 130, CAT)
    assert 4000 <= cost <= 6000
