"""Event-driven fluid simulation of output uploads over dedicated links.

Flows on one link always share equally, so each link keeps a single
cumulative per-flow service counter; a flow finishes when the counter
has advanced by its size since it arrived. Rates only change at events.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable, Sequence

from ..errors import ValidationError
from ..units import bytes_per_s_to_gbps, gbps_to_bytes_per_s
from ..workload import Job
from .fairshare import link_demand, max_min_allocate
from .model import DedicatedLink, SimParams, StorageSite
from .trace import COMPLETED, FAILED, JobOutcome, Sample, SimTrace

_COMPLETE, _TIMEOUT, _ARRIVAL = 0, 1, 2

# Flows whose remaining bytes are within this tolerance finish together.
_TIE_BYTES = 1e-3

Observer = Callable[[float, str, list[tuple[str, int, float, float]]], None]


class _LinkState:
    __slots__ = ("id", "site", "cap", "n", "served_per_flow", "t_last", "rate", "served",
                 "served_mark", "heap", "alive", "version")

    def __init__(self, link: DedicatedLink):
        self.id = link.id
        self.site = link.site
        self.cap = gbps_to_bytes_per_s(link.capacity_gbps)
        self.n = 0
        self.served_per_flow = 0.0
        self.t_last = 0.0
        self.rate = 0.0  # bytes/s per flow
        self.served = 0.0
        self.served_mark = 0.0
        self.heap: list[tuple[float, int, int]] = []  # (finish key, seq, job index)
        self.alive: dict[int, tuple[float, float]] = {}  # job index -> (service at arrival, arrival time)
        self.version = 0

    def advance(self, t: float) -> None:
        dt = t - self.t_last
        if dt > 0 and self.n:
            inc = self.rate * dt
            self.served_per_flow += inc
            self.served += inc * self.n
        self.t_last = t

    def top(self):
        while self.heap and self.heap[0][2] not in self.alive:
            heapq.heappop(self.heap)
        return self.heap[0] if self.heap else None


def validate_network(links: Sequence[DedicatedLink], sites: Iterable[StorageSite],
                     jobs: Iterable[Job] = ()) -> list[str]:
    problems = []
    site_names = set()
    for s in sites:
        if s.name in site_names:
            problems.append(f"duplicate site {s.name!r}")
        site_names.add(s.name)
    ids = set()
    for link in links:
        if link.id in ids:
            problems.append(f"duplicate link id {link.id!r}")
        ids.add(link.id)
        if link.site not in site_names:
            problems.append(f"link {link.id!r} references unknown site {link.site!r}")
    unknown = sorted({j.link_id for j in jobs if j.link_id not in ids})
    problems.extend(f"job stream references unknown link {u!r}" for u in unknown)
    return problems


def run(links: Sequence[DedicatedLink], sites: Iterable[StorageSite], jobs: Sequence[Job],
        params: SimParams = SimParams(), observer: Observer | None = None) -> SimTrace:
    sites = list(sites)
    problems = validate_network(links, sites, jobs) + params.problems()
    if problems:
        raise ValidationError(problems)

    states = [_LinkState(link) for link in links]
    by_id = {st.id: st for st in states}
    site_links: dict[str, list[_LinkState]] = {s.name: [] for s in sites}
    for st in states:
        site_links[st.site].append(st)
    headroom = {s.name: (None if s.headroom_gbps is None else gbps_to_bytes_per_s(s.headroom_gbps))
                for s in sites}
    per_flow_cap = (None if params.per_flow_cap_gbps is None
                    else gbps_to_bytes_per_s(params.per_flow_cap_gbps))

    events: list[tuple] = []
    seq = 0
    for idx, job in enumerate(jobs):
        events.append((job.compute_end, _ARRIVAL, seq, idx))
        seq += 1
    heapq.heapify(events)

    outcomes: list[JobOutcome | None] = [None] * len(jobs)
    samples: list[Sample] = []

    def schedule(st: _LinkState) -> None:
        nonlocal seq
        top = st.top()
        if top is None or st.rate <= 0:
            return
        remaining = max(0.0, top[0] - st.served_per_flow)
        heapq.heappush(events, (st.t_last + remaining / st.rate, _COMPLETE, seq, st.id, st.version))
        seq += 1

    def reallocate(site: str, t: float, changed: _LinkState) -> None:
        group = site_links[site]
        for st in group:
            st.advance(t)
        demands = [link_demand(st.cap, st.n, per_flow_cap) for st in group]
        room = headroom[site]
        alloc = demands if room is None else max_min_allocate(room, demands)
        for st, a in zip(group, alloc):
            new_rate = a / st.n if st.n else 0.0
            if new_rate != st.rate or st is changed:
                st.rate = new_rate
                st.version += 1
                schedule(st)
        if observer is not None:
            observer(t, site, [(st.id, st.n, st.rate, st.cap) for st in group])

    def finish(st: _LinkState, idx: int, t: float, outcome: str) -> None:
        service_at_arrival, arrived = st.alive.pop(idx)
        st.n -= 1
        job = jobs[idx]
        outcomes[idx] = JobOutcome(
            job.id, job.gpu, job.link_id, job.start, job.compute_duration,
            t - arrived, outcome, job.output_size,
            served_bytes=st.served_per_flow - service_at_arrival,
        )

    tick_k = 1
    t = 0.0

    def tick(at: float) -> None:
        for st in states:
            st.advance(at)
            thr = (st.served - st.served_mark) / params.sample_s
            st.served_mark = st.served
            samples.append(Sample(at, st.id, bytes_per_s_to_gbps(thr), st.n))

    def stale(ev) -> bool:
        if ev[1] == _COMPLETE:
            return ev[4] != by_id[ev[3]].version
        if ev[1] == _TIMEOUT:
            return ev[3] not in by_id[jobs[ev[3]].link_id].alive
        return False

    while events:
        ev = heapq.heappop(events)
        if stale(ev):
            continue
        t = ev[0]
        while tick_k * params.sample_s < t:
            tick(tick_k * params.sample_s)
            tick_k += 1
        kind = ev[1]
        if kind == _ARRIVAL:
            idx = ev[3]
            job = jobs[idx]
            st = by_id[job.link_id]
            st.advance(t)
            st.alive[idx] = (st.served_per_flow, t)
            heapq.heappush(st.heap, (st.served_per_flow + job.output_size, seq, idx))
            seq += 1
            st.n += 1
            heapq.heappush(events, (t + params.timeout_s, _TIMEOUT, seq, idx))
            seq += 1
            reallocate(st.site, t, st)
        elif kind == _COMPLETE:
            st = by_id[ev[3]]
            st.advance(t)
            top = st.top()
            finish(st, top[2], t, COMPLETED)
            while (top := st.top()) is not None and top[0] - st.served_per_flow <= _TIE_BYTES:
                finish(st, top[2], t, COMPLETED)
            reallocate(st.site, t, st)
        else:
            idx = ev[3]
            st = by_id[jobs[idx].link_id]
            st.advance(t)
            finish(st, idx, t, FAILED)
            reallocate(st.site, t, st)

    if jobs:
        while tick_k * params.sample_s < t + params.sample_s:
            tick(tick_k * params.sample_s)
            tick_k += 1

    return SimTrace(
        samples=samples,
        outcomes=[o for o in outcomes if o is not None],
        link_sites={link.id: link.site for link in links},
        link_capacity_gbps={link.id: link.capacity_gbps for link in links},
        sample_s=params.sample_s,
        timeout_s=params.timeout_s,
    )


def simulate(scenario, jobs: Sequence[Job] | None = None, observer: Observer | None = None) -> SimTrace:
    """Run a validated scenario. ``jobs`` overrides the scenario's generated stream."""
    scenario.validate()
    if jobs is None:
        jobs = scenario.generate_jobs()
    return run(scenario.links, scenario.sites, jobs, scenario.sim, observer)
