"""Flow-level upload simulation over dedicated links."""

from .engine import run, simulate, validate_network
from .fairshare import fair_share, link_demand, max_min_allocate
from .model import DedicatedLink, SimParams, StorageSite
from .trace import (
    COMPLETED,
    FAILED,
    JOBS_HEADER,
    TRACE_HEADER,
    JobOutcome,
    Sample,
    SimTrace,
    TransferBin,
    delivered_volume,
    transfer_time_stats,
)

__all__ = [
    "COMPLETED", "FAILED", "JOBS_HEADER", "TRACE_HEADER", "DedicatedLink", "JobOutcome",
    "Sample", "SimParams", "SimTrace", "StorageSite", "TransferBin", "delivered_volume",
    "fair_share", "link_demand", "max_min_allocate", "run", "simulate", "transfer_time_stats",
    "validate_network",
]
