import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudburst.netsim import fair_share, max_min_allocate


def bisection_level(capacity, demands, iters=200):
    """Water level L with sum(min(d, L)) == capacity, found by bisection."""
    lo, hi = 0.0, max(demands)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if sum(min(d, mid) for d in demands) < capacity:
            lo = mid
        else:
            hi = mid
    return hi


def test_equal_split():
    assert fair_share(10, 4) == 2.5


def test_binding_cap():
    rate = fair_share(10, 2, per_flow_cap=3)
    assert rate == 3 and 2 * rate == 6
    assert max_min_allocate(10, [3, 3]) == [3, 3]


def test_single_flow_takes_link():
    assert fair_share(5, 1, per_flow_cap=10) == 5


def test_site_headroom_limits():
    assert fair_share(10, 2, site_headroom=4) == 2
    assert fair_share(10, 0) == 0


@given(cap=st.floats(0.1, 1e3), demands=st.lists(st.floats(0, 1e3), min_size=1, max_size=20))
def test_water_filling_matches_bisection(cap, demands):
    alloc = max_min_allocate(cap, demands)
    assert all(a <= d + 1e-9 for a, d in zip(alloc, demands))
    if sum(demands) <= cap:
        assert alloc == pytest.approx(demands)
        return
    level = bisection_level(cap, demands)
    assert alloc == pytest.approx([min(d, level) for d in demands], rel=1e-7, abs=1e-7)
    assert sum(alloc) == pytest.approx(cap, rel=1e-9)
