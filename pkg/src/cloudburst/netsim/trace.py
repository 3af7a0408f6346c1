"""Simulation output: sampled link throughput, per-job outcomes and derived series."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

TRACE_HEADER = ("t_s", "link_id", "throughput_gbps", "active_transfers")
JOBS_HEADER = ("job_id", "gpu", "link_id", "start_s", "compute_s", "transfer_s", "outcome", "bytes")

COMPLETED = "completed"
FAILED = "failed_timeout"


@dataclass(frozen=True)
class Sample:
    t: float
    link_id: str
    throughput_gbps: float
    active_transfers: int


@dataclass(frozen=True)
class JobOutcome:
    job_id: int
    gpu: str
    link_id: str
    start_s: float
    compute_s: float
    transfer_s: float
    outcome: str
    bytes: int
    served_bytes: float = math.nan  # integral of the allocated rate; not serialized

    @property
    def completed(self) -> bool:
        return self.outcome == COMPLETED

    @property
    def transfer_start(self) -> float:
        return self.start_s + self.compute_s


@dataclass(frozen=True)
class TransferBin:
    t_start: float
    count: int
    mean_s: float
    stddev_s: float


@dataclass
class SimTrace:
    samples: list[Sample] = field(default_factory=list)
    outcomes: list[JobOutcome] = field(default_factory=list)
    link_sites: dict[str, str] = field(default_factory=dict)
    link_capacity_gbps: dict[str, float] = field(default_factory=dict)
    sample_s: float = 60.0
    timeout_s: float = 3600.0

    @property
    def delivered_by_link(self) -> dict[str, int]:
        out = {link: 0 for link in self.link_sites}
        for o in self.outcomes:
            if o.completed:
                out[o.link_id] = out.get(o.link_id, 0) + o.bytes
        return out

    @property
    def delivered_by_site(self) -> dict[str, int]:
        out = {site: 0 for site in sorted(set(self.link_sites.values()))}
        for link, b in self.delivered_by_link.items():
            site = self.link_sites[link]
            out[site] = out.get(site, 0) + b
        return out

    @property
    def delivered_bytes(self) -> int:
        return sum(o.bytes for o in self.outcomes if o.completed)

    @property
    def completed(self) -> int:
        return sum(1 for o in self.outcomes if o.completed)

    @property
    def failed(self) -> int:
        return sum(1 for o in self.outcomes if not o.completed)

    @property
    def wasted_compute_s(self) -> float:
        """Compute time of jobs whose output never arrived."""
        return math.fsum(o.compute_s for o in self.outcomes if not o.completed)

    @property
    def transfer_hold_s(self) -> float:
        """Instance time spent waiting on uploads, all jobs."""
        return math.fsum(o.transfer_s for o in self.outcomes)

    def site_throughput(self) -> dict[str, list[tuple[float, float]]]:
        """Per-site sum of sampled link throughput, as (t, Gbps) series."""
        acc: dict[str, dict[float, float]] = {s: {} for s in sorted(set(self.link_sites.values()))}
        for s in self.samples:
            site = self.link_sites[s.link_id]
            acc[site][s.t] = acc[site].get(s.t, 0.0) + s.throughput_gbps
        return {site: sorted(series.items()) for site, series in acc.items()}

    def peak_site_gbps(self) -> dict[str, float]:
        return {site: max((v for _, v in series), default=0.0)
                for site, series in self.site_throughput().items()}

    def transfer_time_stats(self, bin_width: float) -> list[TransferBin]:
        return transfer_time_stats(self.outcomes, bin_width)

    def delivered_volume(self, group_by: Literal["link", "site"] = "link"):
        return delivered_volume(self, group_by)

    def to_csv(self) -> tuple[str, str]:
        return trace_csv(self.samples), jobs_csv(self.outcomes)


def transfer_time_stats(outcomes: Iterable[JobOutcome], bin_width: float) -> list[TransferBin]:
    """Mean and population stddev of transfer durations, binned by transfer start.

    Failed transfers count with the duration they lasted before timing out.
    Empty bins are omitted.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    bins: dict[int, list[float]] = {}
    for o in outcomes:
        bins.setdefault(int(math.floor(o.transfer_start / bin_width)), []).append(o.transfer_s)
    out = []
    for k in sorted(bins):
        xs = bins[k]
        mean = math.fsum(xs) / len(xs)
        var = math.fsum((x - mean) ** 2 for x in xs) / len(xs)
        out.append(TransferBin(k * bin_width, len(xs), mean, math.sqrt(var)))
    return out


def delivered_volume(trace: SimTrace, group_by: Literal["link", "site"] = "link"):
    """Totals per group and a cumulative (t, bytes) curve per group.

    Curves step at each completed transfer's end time.
    """
    if group_by not in ("link", "site"):
        raise ValueError(f"group_by must be 'link' or 'site', got {group_by!r}")
    events: dict[str, list[tuple[float, int]]] = {}
    for o in trace.outcomes:
        if not o.completed:
            continue
        key = o.link_id if group_by == "link" else trace.link_sites[o.link_id]
        events.setdefault(key, []).append((o.transfer_start + o.transfer_s, o.bytes))
    groups = sorted(set(trace.link_sites) if group_by == "link" else set(trace.link_sites.values()))
    totals = {g: 0 for g in groups}
    curves: dict[str, list[tuple[float, int]]] = {g: [] for g in groups}
    for key, evs in events.items():
        evs.sort()
        running = 0
        for t, b in evs:
            running += b
            curves[key].append((t, running))
        totals[key] = running
    return totals, curves


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def trace_csv(samples: Iterable[Sample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for s in samples:
        w.writerow((_fmt(s.t), s.link_id, _fmt(s.throughput_gbps), s.active_transfers))
    return buf.getvalue()


def jobs_csv(outcomes: Iterable[JobOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(JOBS_HEADER)
    for o in outcomes:
        w.writerow((o.job_id, o.gpu, o.link_id, _fmt(o.start_s), _fmt(o.compute_s),
                    _fmt(o.transfer_s), o.outcome, o.bytes))
    return buf.getvalue()


def read_trace_csv(text: str) -> list[Sample]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if tuple(header or ()) != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {header}")
    return [Sample(float(t), link, float(g), int(n)) for t, link, g, n in rows]


def read_jobs_csv(text: str) -> list[JobOutcome]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if tuple(header or ()) != JOBS_HEADER:
        raise ValueError(f"unexpected jobs header {header}")
    return [
        JobOutcome(int(j), gpu, link, float(s), float(c), float(x), outcome, int(b))
        for j, gpu, link, s, c, x, outcome, b in rows
    ]
