"""Egress and dedicated-link pricing.

Prices are stored as bands (low/high) and resolved to a point with a
catalog-wide ``price_point`` in [0, 1]. Volumes are in decimal TB.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .errors import DomainError, LookupFailure, ParseError
from .units import TB

RESERVABLE_GBPS = (2, 5, 10)
CENT = Decimal("0.01")


@dataclass(frozen=True)
class PriceBand:
    low: float
    high: float

    def __post_init__(self):
        if self.low < 0 or self.high < 0:
            raise DomainError(f"price band must be non-negative, got {self.low}..{self.high}")
        if self.low > self.high:
            raise DomainError(f"price band low {self.low} exceeds high {self.high}")

    @classmethod
    def point(cls, value: float) -> "PriceBand":
        return cls(value, value)


ZERO_BAND = PriceBand(0.0, 0.0)


@dataclass(frozen=True)
class LinkTier:
    capacity_gbps: int
    hourly_fee: PriceBand
    egress_fee: PriceBand
    unmetered: bool = False

    def __post_init__(self):
        if self.capacity_gbps not in RESERVABLE_GBPS:
            raise DomainError(
                f"tier capacity {self.capacity_gbps} Gbps is not reservable; choose from {RESERVABLE_GBPS}"
            )
        if self.unmetered and self.egress_fee != ZERO_BAND:
            raise DomainError("unmetered tier must have a zero egress fee")

    @property
    def label(self) -> str:
        return f"{self.capacity_gbps}G-{'unmetered' if self.unmetered else 'metered'}"


class DefaultRoute:
    """Ordinary internet egress: no hourly fee, no capacity limit."""

    capacity_gbps = float("inf")
    hourly_fee = ZERO_BAND

    def __repr__(self) -> str:
        return "DefaultRoute"

    def __eq__(self, other) -> bool:
        return isinstance(other, DefaultRoute)

    def __hash__(self) -> int:
        return hash("DefaultRoute")


DEFAULT_ROUTE = DefaultRoute()


@dataclass(frozen=True)
class Dedicated:
    tier: LinkTier


RouteKind = DefaultRoute | Dedicated


@dataclass(frozen=True)
class PricingCatalog:
    default_egress_fee: PriceBand
    tiers: tuple[LinkTier, ...]
    price_point: float = 0.5

    def __post_init__(self):
        _check_price_point(self.price_point)
        object.__setattr__(self, "tiers", tuple(self.tiers))

    def tier(self, capacity_gbps: int, unmetered: bool = False) -> LinkTier:
        for t in self.tiers:
            if t.capacity_gbps == capacity_gbps and t.unmetered == unmetered:
                return t
        mode = "unmetered" if unmetered else "metered"
        raise LookupFailure(f"no {mode} tier with capacity {capacity_gbps} Gbps in catalog")

    def tiers_for(self, capacity_gbps: int) -> list[LinkTier]:
        return [t for t in self.tiers if t.capacity_gbps == capacity_gbps]

    def with_price_point(self, price_point: float) -> "PricingCatalog":
        return PricingCatalog(self.default_egress_fee, self.tiers, price_point)


def default_catalog(price_point: float = 0.5) -> PricingCatalog:
    """US list prices for dedicated links via a research peering provider, December 2020."""
    dedicated_egress = PriceBand(20.0, 25.0)
    return PricingCatalog(
        default_egress_fee=PriceBand(80.0, 85.0),
        tiers=(
            LinkTier(2, PriceBand(0.57, 1.19), dedicated_egress),
            LinkTier(5, PriceBand(1.25, 2.99), dedicated_egress),
            LinkTier(10, PriceBand(2.36, 4.65), dedicated_egress),
            LinkTier(5, PriceBand.point(35.0), ZERO_BAND, unmetered=True),
        ),
        price_point=price_point,
    )


def _check_price_point(price_point: float) -> None:
    if not 0.0 <= price_point <= 1.0:
        raise DomainError(f"price_point must lie in [0, 1], got {price_point}")


def evaluate(band: PriceBand, price_point: float) -> float:
    _check_price_point(price_point)
    return band.low + price_point * (band.high - band.low)


def per_tb_rate(route: RouteKind, catalog: PricingCatalog) -> float:
    if isinstance(route, DefaultRoute):
        return evaluate(catalog.default_egress_fee, catalog.price_point)
    if route.tier.unmetered:
        return 0.0
    return evaluate(route.tier.egress_fee, catalog.price_point)


def egress_cost(volume_tb: float, route: RouteKind, catalog: PricingCatalog) -> float:
    if volume_tb < 0:
        raise DomainError(f"egress volume must be non-negative, got {volume_tb} TB")
    return volume_tb * per_tb_rate(route, catalog)


def hourly_rate(tier: LinkTier, catalog: PricingCatalog, override: float | None = None) -> float:
    if override is not None:
        return override
    return evaluate(tier.hourly_fee, catalog.price_point)


def link_fixed_cost(
    tier: LinkTier, hours: float, catalog: PricingCatalog, override: float | None = None
) -> float:
    if hours < 0:
        raise DomainError(f"billed hours must be non-negative, got {hours}")
    return hours * hourly_rate(tier, catalog, override)


def break_even_rate(metered: LinkTier, unmetered: LinkTier, catalog: PricingCatalog) -> float:
    """Sustained TB/hour above which the unmetered tier is cheaper than the metered one."""
    if metered.capacity_gbps != unmetered.capacity_gbps:
        raise DomainError("break-even requires tiers of equal capacity")
    per_tb = per_tb_rate(Dedicated(metered), catalog)
    if per_tb == 0:
        raise DomainError("break-even is undefined when the metered tier has no egress fee")
    unmetered_per_tb = per_tb_rate(Dedicated(unmetered), catalog)
    fixed_gap = hourly_rate(unmetered, catalog) - hourly_rate(metered, catalog)
    return fixed_gap / (per_tb - unmetered_per_tb)


def link_total_cost(tier: LinkTier, hours: float, volume_tb: float, catalog: PricingCatalog,
                    override: float | None = None) -> float:
    return link_fixed_cost(tier, hours, catalog, override) + egress_cost(volume_tb, Dedicated(tier), catalog)


def to_cents(value: float) -> Decimal:
    return Decimal(repr(float(value))).quantize(CENT, rounding=ROUND_HALF_EVEN)


@dataclass(frozen=True)
class CostReport:
    fixed_usd: Decimal
    metered_usd: Decimal
    compute_usd: Decimal
    delivered_tb: float
    counterfactual_default_usd: Decimal
    total_usd: Decimal = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_usd", self.fixed_usd + self.metered_usd + self.compute_usd)

    @property
    def networking_usd(self) -> Decimal:
        return self.fixed_usd + self.metered_usd

    @property
    def effective_usd_per_tb(self) -> float | None:
        if self.delivered_tb <= 0:
            return None
        return float(self.networking_usd) / self.delivered_tb

    @property
    def savings_fraction(self) -> float | None:
        if self.counterfactual_default_usd <= 0:
            return None
        return 1.0 - float(self.networking_usd / self.counterfactual_default_usd)

    def to_dict(self) -> dict[str, Any]:
        eff = self.effective_usd_per_tb
        sav = self.savings_fraction
        return {
            "fixed_usd": float(self.fixed_usd),
            "metered_usd": float(self.metered_usd),
            "compute_usd": float(self.compute_usd),
            "total_usd": float(self.total_usd),
            "delivered_tb": round(self.delivered_tb, 6),
            "effective_usd_per_tb": None if eff is None else round(eff, 4),
            "counterfactual_default_usd": float(self.counterfactual_default_usd),
            "savings_fraction": None if sav is None else round(sav, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CostReport":
        return cls(
            fixed_usd=to_cents(data["fixed_usd"]),
            metered_usd=to_cents(data["metered_usd"]),
            compute_usd=to_cents(data["compute_usd"]),
            delivered_tb=float(data["delivered_tb"]),
            counterfactual_default_usd=to_cents(data["counterfactual_default_usd"]),
        )


def cost_report(trace, portfolio: Iterable, billed_hours, catalog: PricingCatalog,
                gpus: Mapping[str, Any] | None = None) -> CostReport:
    """Cost accounting for a finished run.

    ``trace`` needs ``delivered_by_link`` (bytes per link id) and, when ``gpus``
    is given, ``outcomes`` whose items carry ``gpu``. ``billed_hours`` is a
    number applied to every link or a mapping keyed by link id.
    """
    fixed = 0.0
    metered = 0.0
    for link in portfolio:
        hours = billed_hours if isinstance(billed_hours, (int, float)) else billed_hours[link.id]
        fixed += link_fixed_cost(link.tier, hours, catalog, link.hourly_fee_override)
        delivered = trace.delivered_by_link.get(link.id, 0)
        metered += egress_cost(delivered / TB, Dedicated(link.tier), catalog)

    compute = 0.0
    if gpus is not None:
        missing = set()
        for outcome in trace.outcomes:
            cost = gpus[outcome.gpu].compute_cost_per_job
            if cost is None:
                missing.add(outcome.gpu)
            else:
                compute += cost
        if missing:
            raise DomainError(f"compute cost per job not configured for GPU class(es): {sorted(missing)}")

    delivered_tb = sum(trace.delivered_by_link.values()) / TB
    return CostReport(
        fixed_usd=to_cents(fixed),
        metered_usd=to_cents(metered),
        compute_usd=to_cents(compute),
        delivered_tb=delivered_tb,
        counterfactual_default_usd=to_cents(egress_cost(delivered_tb, DEFAULT_ROUTE, catalog)),
    )


def _band(data: Mapping[str, Any], prefix: str, where: str) -> PriceBand:
    try:
        return PriceBand(float(data[f"{prefix}_low"]), float(data[f"{prefix}_high"]))
    except KeyError as exc:
        raise ParseError(f"{where}: missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def catalog_from_dict(data: Mapping[str, Any], where: str = "pricing") -> PricingCatalog:
    if not isinstance(data, Mapping):
        raise ParseError(f"{where}: expected a mapping")
    default = _band(data, "default_egress_per_tb", where)
    tiers = []
    for i, raw in enumerate(data.get("tiers") or []):
        key = f"{where}.tiers[{i}]"
        if "capacity_gbps" not in raw:
            raise ParseError(f"{key}: missing key 'capacity_gbps'")
        unmetered = bool(raw.get("unmetered", False))
        per_tb = ZERO_BAND if unmetered and "per_tb_low" not in raw else _band(raw, "per_tb", key)
        try:
            tiers.append(LinkTier(int(raw["capacity_gbps"]), _band(raw, "hourly", key), per_tb, unmetered))
        except DomainError as exc:
            raise ParseError(f"{key}: {exc}") from None
    try:
        return PricingCatalog(default, tuple(tiers), float(data.get("price_point", 0.5)))
    except DomainError as exc:
        raise ParseError(f"{where}.price_point: {exc}") from None


def catalog_to_dict(catalog: PricingCatalog) -> dict[str, Any]:
    return {
        "default_egress_per_tb_low": catalog.default_egress_fee.low,
        "default_egress_per_tb_high": catalog.default_egress_fee.high,
        "price_point": catalog.price_point,
        "tiers": [
            {
                "capacity_gbps": t.capacity_gbps,
                "hourly_low": t.hourly_fee.low,
                "hourly_high": t.hourly_fee.high,
                "per_tb_low": t.egress_fee.low,
                "per_tb_high": t.egress_fee.high,
                "unmetered": t.unmetered,
            }
            for t in catalog.tiers
        ],
    }


def load_catalog(path: str | Path) -> PricingCatalog:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return catalog_from_dict(data, where=str(path))
