"""Max-min fair bandwidth allocation."""

from __future__ import annotations

import math
from typing import Sequence


def max_min_allocate(capacity: float, demands: Sequence[float]) -> list[float]:
    """Water-fill ``capacity`` over ``demands``.

    Every claimant gets min(demand, level) where the level is chosen so the
    allocations sum to capacity, or everyone is satisfied when total demand
    fits.
    """
    n = len(demands)
    alloc = [0.0] * n
    if n == 0 or capacity <= 0:
        return alloc
    if sum(demands) <= capacity:
        return [float(d) for d in demands]
    order = sorted(range(n), key=lambda i: demands[i])
    remaining = float(capacity)
    left = n
    for pos, i in enumerate(order):
        share = remaining / left
        if demands[i] <= share:
            alloc[i] = float(demands[i])
            remaining -= demands[i]
            left -= 1
        else:
            for j in order[pos:]:
                alloc[j] = share
            break
    return alloc


def fair_share(link_capacity: float, n: int, per_flow_cap: float | None = None,
               site_headroom: float = math.inf) -> float:
    """Rate of each of ``n`` identical flows on one link.

    The usable capacity is the smaller of the link capacity and whatever the
    site leaves for this link; flows split it equally up to ``per_flow_cap``.
    """
    if n <= 0:
        return 0.0
    effective = max(0.0, min(link_capacity, site_headroom))
    share = effective / n
    if per_flow_cap is not None:
        share = min(share, per_flow_cap)
    return share


def link_demand(link_capacity: float, n: int, per_flow_cap: float | None = None) -> float:
    """What a link would carry with no site constraint."""
    if n <= 0:
        return 0.0
    if per_flow_cap is None:
        return link_capacity
    return min(link_capacity, n * per_flow_cap)
