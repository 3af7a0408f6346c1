"""Dedicated-link portfolio selection and compute partitioning."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .errors import DomainError, ValidationError
from .pricing import (
    RESERVABLE_GBPS,
    Dedicated,
    LinkTier,
    PricingCatalog,
    egress_cost,
    hourly_rate,
    link_fixed_cost,
)
from .units import gbps_to_tb_per_hour
from .workload import mean_egress_rate

EXHAUSTIVE_LIMIT = 12


@dataclass(frozen=True)
class PeeringSlot:
    provider: str
    peering_location: str
    region: str
    counts: Mapping[int, int]  # capacity Gbps -> links available at that tier

    def __post_init__(self):
        for cap, n in self.counts.items():
            if cap not in RESERVABLE_GBPS:
                raise DomainError(f"slot {self.id}: tier {cap} Gbps is not reservable")
            if n < 0:
                raise DomainError(f"slot {self.id}: negative count for {cap} Gbps")

    @property
    def id(self) -> str:
        return f"{self.provider}/{self.peering_location}/{self.region}"

    @property
    def allowed_tiers(self) -> tuple[int, ...]:
        return tuple(sorted(c for c, n in self.counts.items() if n > 0))


@dataclass(frozen=True)
class Demand:
    provider: str
    region: str
    pflops: float
    site: str
    egress_mb_per_tflop_hour: float = 500.0
    expected_volume_tb: float | None = None

    @property
    def mean_egress_gbps(self) -> float:
        return mean_egress_rate(self.pflops, self.egress_mb_per_tflop_hour)

    @property
    def key(self) -> str:
        return f"{self.provider}/{self.region}/{self.site}"


@dataclass(frozen=True)
class Candidate:
    """One reservable link unit at a slot."""

    slot: PeeringSlot
    capacity_gbps: int
    index: int

    @property
    def sort_key(self) -> tuple:
        return (self.slot.id, -self.capacity_gbps, self.index)


@dataclass(frozen=True)
class ChosenLink:
    provider: str
    peering_location: str
    region: str
    site: str
    tier: LinkTier

    @property
    def capacity_gbps(self) -> int:
        return self.tier.capacity_gbps

    @property
    def slot_id(self) -> str:
        return f"{self.provider}/{self.peering_location}/{self.region}"


@dataclass
class RegionPlan:
    demand: Demand
    links: list[ChosenLink] = field(default_factory=list)
    target_gbps: float = 0.0
    cost_usd: float = 0.0
    shortfall: bool = False
    error: str | None = None

    @property
    def coverage_gbps(self) -> int:
        return sum(link.capacity_gbps for link in self.links)


@dataclass
class Portfolio:
    regions: list[RegionPlan] = field(default_factory=list)

    @property
    def links(self) -> list[ChosenLink]:
        return [link for r in self.regions for link in r.links]

    @property
    def cost_usd(self) -> float:
        return math.fsum(r.cost_usd for r in self.regions)

    @property
    def shortfall(self) -> bool:
        return any(r.shortfall for r in self.regions)

    @property
    def errors(self) -> list[str]:
        return [r.error for r in self.regions if r.error]

    def coverage_gbps(self) -> dict[str, int]:
        return {r.demand.key: r.coverage_gbps for r in self.regions}

    def to_dict(self) -> dict[str, Any]:
        return {
            "links": [
                {
                    "provider": link.provider,
                    "peering": link.peering_location,
                    "region": link.region,
                    "site": link.site,
                    "capacity_gbps": link.capacity_gbps,
                    "unmetered": link.tier.unmetered,
                }
                for link in self.links
            ],
            "coverage_gbps": self.coverage_gbps(),
            "shortfall": self.shortfall,
            "cost_usd": round(self.cost_usd, 2),
            "regions": [
                {
                    "key": r.demand.key,
                    "demand_gbps": round(r.demand.mean_egress_gbps, 6),
                    "target_gbps": round(r.target_gbps, 6),
                    "coverage_gbps": r.coverage_gbps,
                    "shortfall": r.shortfall,
                    "cost_usd": round(r.cost_usd, 2),
                    "error": r.error,
                }
                for r in self.regions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def candidates(slots: Sequence[PeeringSlot]) -> list[Candidate]:
    out = [Candidate(s, cap, i) for s in slots for cap, n in s.counts.items() for i in range(n)]
    out.sort(key=lambda c: c.sort_key)
    return out


def _best_tiers(caps: Sequence[int], duration_h: float, volume_tb: float,
                catalog: PricingCatalog) -> tuple[float, list[LinkTier]]:
    """Cheapest billing mode per link once the set of capacities is fixed.

    Volume is split across the links in proportion to capacity, so each
    link's mode can be chosen independently.
    """
    total = sum(caps)
    cost = 0.0
    tiers = []
    for cap in caps:
        share = volume_tb * cap / total if total else 0.0
        options = catalog.tiers_for(cap)
        if not options:
            raise DomainError(f"catalog has no tier for {cap} Gbps")
        priced = [(link_fixed_cost(t, duration_h, catalog) + egress_cost(share, Dedicated(t), catalog), t.unmetered, t)
                  for t in options]
        c, _, t = min(priced, key=lambda p: (p[0], p[1]))
        cost += c
        tiers.append(t)
    return cost, tiers


def _exhaustive(cands: Sequence[Candidate], target: float, duration_h: float, volume_tb: float,
                catalog: PricingCatalog):
    best = None
    for r in range(len(cands) + 1):
        for combo in itertools.combinations(range(len(cands)), r):
            caps = [cands[i].capacity_gbps for i in combo]
            if sum(caps) < target:
                continue
            cost, tiers = _best_tiers(caps, duration_h, volume_tb, catalog)
            key = (cost, len(combo), tuple(cands[i].sort_key for i in combo))
            if best is None or _better(key, best[0]):
                best = (key, combo, tiers)
    return best


def _better(a: tuple, b: tuple, tol: float = 1e-9) -> bool:
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    return a[1:] < b[1:]


def _greedy(cands: Sequence[Candidate], target: float, duration_h: float, volume_tb: float,
            catalog: PricingCatalog):
    chosen: list[int] = []
    remaining = list(range(len(cands)))

    def cost_of(idx):
        return _best_tiers([cands[i].capacity_gbps for i in idx], duration_h, volume_tb, catalog)[0]

    while sum(cands[i].capacity_gbps for i in chosen) < target and remaining:
        base = cost_of(chosen) if chosen else 0.0

        def score(i):
            extra = cost_of(chosen + [i]) - base
            return (-(cands[i].capacity_gbps / max(extra, 1e-12)), cands[i].sort_key)

        pick = min(remaining, key=score)
        chosen.append(pick)
        remaining.remove(pick)

    # local exchange: drop or swap a chosen unit when it keeps coverage and lowers cost
    improved = True
    while improved:
        improved = False
        current = cost_of(chosen)
        for i in list(chosen):
            trial = [c for c in chosen if c != i]
            if sum(cands[c].capacity_gbps for c in trial) >= target and cost_of(trial) < current - 1e-9:
                chosen, improved = trial, True
                break
            for j in remaining:
                trial2 = trial + [j]
                if sum(cands[c].capacity_gbps for c in trial2) >= target and cost_of(trial2) < current - 1e-9:
                    remaining.remove(j)
                    remaining.append(i)
                    chosen, improved = trial2, True
                    break
            if improved:
                break
    chosen.sort(key=lambda i: cands[i].sort_key)
    cost, tiers = _best_tiers([cands[i].capacity_gbps for i in chosen], duration_h, volume_tb, catalog)
    return (cost, len(chosen), tuple(cands[i].sort_key for i in chosen)), tuple(chosen), tiers


def plan_region(demand: Demand, cands: Sequence[Candidate], coverage_factor: float,
                duration_h: float, catalog: PricingCatalog) -> tuple[RegionPlan, list[Candidate]]:
    """Plan one demand entry; returns the plan and the candidates it consumed."""
    target = coverage_factor * demand.mean_egress_gbps
    plan = RegionPlan(demand, target_gbps=target)
    if demand.pflops == 0:
        return plan, []
    volume = demand.expected_volume_tb
    if volume is None:
        volume = gbps_to_tb_per_hour(demand.mean_egress_gbps) * duration_h
    total = sum(c.capacity_gbps for c in cands)
    if total < target:
        picked = tuple(range(len(cands)))
        cost, tiers = _best_tiers([c.capacity_gbps for c in cands], duration_h, volume, catalog)
        plan.shortfall = True
    elif len(cands) <= EXHAUSTIVE_LIMIT:
        (cost, _, _), picked, tiers = _exhaustive(cands, target, duration_h, volume, catalog)
    else:
        (cost, _, _), picked, tiers = _greedy(cands, target, duration_h, volume, catalog)
    used = [cands[i] for i in picked]
    plan.links = [
        ChosenLink(c.slot.provider, c.slot.peering_location, c.slot.region, demand.site, t)
        for c, t in zip(used, tiers)
    ]
    plan.cost_usd = cost
    return plan, used


def plan_portfolio(forecast: Sequence[Demand], slots: Sequence[PeeringSlot], coverage_factor: float = 1.5,
                   duration_h: float = 0.0, catalog: PricingCatalog | None = None) -> Portfolio:
    """Choose links per demand entry, in forecast order.

    Entries sharing a region draw from the same slot pool; earlier entries
    are served first. A region without slots yields an error entry.
    """
    if not coverage_factor > 0:
        raise DomainError("coverage_factor must be positive")
    if duration_h < 0:
        raise DomainError("duration must be non-negative")
    if catalog is None:
        from .pricing import default_catalog
        catalog = default_catalog()
    pool = {id(c): c for c in candidates(slots)}
    portfolio = Portfolio()
    for demand in forecast:
        if demand.pflops < 0:
            raise DomainError(f"{demand.key}: negative forecast")
        region_slots = [s for s in slots if s.provider == demand.provider and s.region == demand.region]
        if not region_slots and demand.pflops > 0:
            portfolio.regions.append(RegionPlan(
                demand, target_gbps=coverage_factor * demand.mean_egress_gbps,
                error=f"no peering slots serve region {demand.region!r} ({demand.provider})"))
            continue
        avail = [c for c in pool.values() if c.slot in region_slots]
        avail.sort(key=lambda c: c.sort_key)
        plan, used = plan_region(demand, avail, coverage_factor, duration_h, catalog)
        for c in used:
            del pool[id(c)]
        portfolio.regions.append(plan)
    return portfolio


def portfolio_cost(links: Sequence, duration_h: float, expected_volume_tb: float,
                   catalog: PricingCatalog) -> float:
    """Fixed fees plus metered egress, volume split in proportion to capacity."""
    links = list(links)
    total_cap = sum(link.tier.capacity_gbps for link in links)
    cost = 0.0
    for link in links:
        override = getattr(link, "hourly_fee_override", None)
        cost += link_fixed_cost(link.tier, duration_h, catalog, override)
        share = expected_volume_tb * link.tier.capacity_gbps / total_cap if total_cap else 0.0
        cost += egress_cost(share, Dedicated(link.tier), catalog)
    return cost


def partition_compute(fleet: int, link_capacities: Mapping[str, float]) -> dict[str, int]:
    """Split ``fleet`` instances across links in proportion to capacity.

    Largest-remainder rounding; ties go to the earlier link in mapping order.
    """
    if fleet < 0:
        raise DomainError("fleet size must be non-negative")
    if not link_capacities:
        if fleet:
            raise ValidationError("cannot place a non-empty fleet on a region without links")
        return {}
    total = sum(link_capacities.values())
    if total <= 0:
        raise ValidationError("links have zero total capacity")
    quotas = {k: fleet * c / total for k, c in link_capacities.items()}
    out = {k: int(math.floor(q)) for k, q in quotas.items()}
    left = fleet - sum(out.values())
    order = sorted(link_capacities, key=lambda k: -(quotas[k] - out[k]))
    for k in order[:left]:
        out[k] += 1
    return out


__all__ = [
    "Candidate", "ChosenLink", "Demand", "PeeringSlot", "Portfolio", "RegionPlan",
    "candidates", "hourly_rate", "partition_compute", "plan_portfolio", "plan_region", "portfolio_cost",
]
