from __future__ import annotations

from dataclasses import dataclass

from ..errors import DomainError
from ..pricing import LinkTier


@dataclass(frozen=True)
class StorageSite:
    name: str
    aggregate_cap_gbps: float | None = None
    external_load_gbps: float = 0.0

    def __post_init__(self):
        if self.aggregate_cap_gbps is not None and self.aggregate_cap_gbps < 0:
            raise DomainError(f"site {self.name}: aggregate cap must be non-negative")
        if self.external_load_gbps < 0:
            raise DomainError(f"site {self.name}: external load must be non-negative")

    @property
    def headroom_gbps(self) -> float | None:
        if self.aggregate_cap_gbps is None:
            return None
        return max(0.0, self.aggregate_cap_gbps - self.external_load_gbps)


@dataclass(frozen=True)
class DedicatedLink:
    id: str
    provider: str
    peering_location: str
    region: str
    site: str
    tier: LinkTier
    hourly_fee_override: float | None = None
    vpn_id: str | None = None
    ip_range: str | None = None

    @property
    def capacity_gbps(self) -> float:
        return float(self.tier.capacity_gbps)


@dataclass(frozen=True)
class SimParams:
    timeout_s: float = 3600.0
    sample_s: float = 60.0
    seed: int = 0
    per_flow_cap_gbps: float | None = None

    def problems(self) -> list[str]:
        out = []
        if not self.timeout_s > 0:
            out.append(f"sim.timeout_s must be positive, got {self.timeout_s}")
        if not self.sample_s > 0:
            out.append(f"sim.sample_s must be positive, got {self.sample_s}")
        if self.per_flow_cap_gbps is not None and not self.per_flow_cap_gbps > 0:
            out.append(f"sim.per_flow_cap_gbps must be positive, got {self.per_flow_cap_gbps}")
        if int(self.seed) != self.seed or self.seed < 0:
            out.append(f"sim.seed must be a non-negative integer, got {self.seed}")
        return out
