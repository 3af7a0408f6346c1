"""Scenario files: one YAML document per run.

The pricing catalog may be inlined or referenced by a path relative to
the scenario file. Ramp counts are nested ``{link_id: {gpu: instances}}``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import DomainError, ParseError, ValidationError
from .lifecycle import check_azure_vpns, check_ip_ranges
from .netsim.engine import validate_network
from .netsim.model import DedicatedLink, SimParams, StorageSite
from .planner import Demand, PeeringSlot
from .pricing import PricingCatalog, catalog_from_dict, default_catalog, load_catalog
from .workload import GPU_TABLE, GpuClass, Job, JobProfile, RampSchedule, RampSegment, generate_workload


@dataclass(frozen=True)
class PlanSettings:
    coverage_factor: float = 1.5
    duration_h: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    catalog: PricingCatalog = field(default_factory=default_catalog)
    gpus: Mapping[str, GpuClass] = field(default_factory=lambda: {g.name: g for g in GPU_TABLE})
    profile: JobProfile = field(default_factory=JobProfile)
    sites: tuple[StorageSite, ...] = ()
    links: tuple[DedicatedLink, ...] = ()
    ramp: RampSchedule = field(default_factory=RampSchedule)
    explicit_jobs: tuple[Job, ...] | None = None
    sim: SimParams = field(default_factory=SimParams)
    billed_hours: Mapping[str, float] = field(default_factory=dict)
    slots: tuple[PeeringSlot, ...] = ()
    forecast: tuple[Demand, ...] = ()
    plan: PlanSettings = field(default_factory=PlanSettings)
    onprem_ranges: tuple[str, ...] = ()

    def problems(self) -> list[str]:
        out = validate_network(self.links, self.sites, self.explicit_jobs or ())
        out += self.sim.problems()
        link_ids = {link.id for link in self.links}
        out += self.ramp.problems()
        for gpu, link in self.ramp.keys():
            if gpu not in self.gpus:
                out.append(f"ramp references unknown GPU class {gpu!r}")
            if link not in link_ids:
                out.append(f"ramp references unknown link {link!r}")
        for job in self.explicit_jobs or ():
            if job.gpu not in self.gpus:
                out.append(f"job {job.id} references unknown GPU class {job.gpu!r}")
        for link_id, hours in self.billed_hours.items():
            if link_id not in link_ids:
                out.append(f"billed_hours references unknown link {link_id!r}")
            elif hours < 0:
                out.append(f"billed hours for {link_id!r} must be non-negative")
        out += check_azure_vpns(self.links)
        out += check_ip_ranges(self.links, self.onprem_ranges)
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ValidationError(problems)

    def generate_jobs(self) -> list[Job]:
        if self.explicit_jobs is not None:
            return list(self.explicit_jobs)
        return generate_workload(self.ramp, self.gpus, self.profile, self.sim.seed,
                                 link_ids=[link.id for link in self.links])

    def with_seed(self, seed: int) -> "Scenario":
        return dataclasses.replace(self, sim=dataclasses.replace(self.sim, seed=seed))

    def with_price_point(self, price_point: float) -> "Scenario":
        return dataclasses.replace(self, catalog=self.catalog.with_price_point(price_point))

    def hours_for(self, link_id: str) -> float:
        return self.billed_hours.get(link_id, 0.0)


class _Reader:
    """Typed access to a mapping with key-path error messages."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, Mapping):
            raise ParseError(f"{path}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path

    def _key(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind=float, default: Any = ..., optional: bool = False):
        if key not in self.data or self.data[key] is None:
            if optional or default is not ...:
                return None if default is ... else default
            raise ParseError(f"{self._key(key)}: required key missing")
        value = self.data[key]
        try:
            if kind is bool:
                if not isinstance(value, bool):
                    raise ValueError(f"expected true/false, got {value!r}")
                return value
            if kind is int:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError(f"expected an integer, got {value!r}")
                return int(value)
            if kind is float and isinstance(value, bool):
                raise ValueError(f"expected a number, got {value!r}")
            return kind(value)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{self._key(key)}: {exc}") from None

    def list(self, key: str) -> list:
        value = self.data.get(key) or []
        if not isinstance(value, list):
            raise ParseError(f"{self._key(key)}: expected a list")
        return value

    def sub(self, key: str) -> "_Reader":
        return _Reader(self.data.get(key) or {}, self._key(key))


def _wrap(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DomainError as exc:
        raise ParseError(f"{path}: {exc}") from None


def scenario_from_dict(data: Any, base_dir: Path | None = None, where: str = "") -> Scenario:
    root = _Reader(data, where)
    base_dir = base_dir or Path(".")

    pricing = data.get("pricing")
    if pricing is None:
        catalog = default_catalog()
    elif isinstance(pricing, str):
        ref = (base_dir / pricing)
        if not ref.exists():
            raise ParseError(f"{root._key('pricing')}: included file {pricing!r} not found")
        catalog = load_catalog(ref)
    else:
        catalog = catalog_from_dict(pricing, root._key("pricing"))
    if data.get("price_point") is not None:
        catalog = _wrap(root._key("price_point"), catalog.with_price_point, root.get("price_point"))

    gpus = {g.name: g for g in GPU_TABLE}
    if "gpus" in data:
        gpus = {}
        for i, raw in enumerate(root.list("gpus")):
            r = _Reader(raw, root._key(f"gpus[{i}]"))
            g = _wrap(r.path, GpuClass, r.get("name", str), r.get("tflops"),
                      r.get("mean_runtime_s", optional=True), r.get("cost_per_job_usd", optional=True))
            if g.name in gpus:
                raise ParseError(f"{r.path}.name: duplicate GPU class {g.name!r}")
            gpus[g.name] = g

    p = root.sub("profile")
    defaults = JobProfile()
    profile = _wrap(p.path, JobProfile,
                    p.get("compute_tflop_hours", default=defaults.compute_tflop_hours),
                    p.get("egress_mb_per_tflop_hour", default=defaults.egress_mb_per_tflop_hour),
                    p.get("runtime_cv", default=defaults.runtime_cv),
                    p.get("size_cv", default=defaults.size_cv))

    sites = []
    for i, raw in enumerate(root.list("sites")):
        r = _Reader(raw, root._key(f"sites[{i}]"))
        sites.append(_wrap(r.path, StorageSite, r.get("name", str), r.get("cap_gbps", optional=True),
                           r.get("external_gbps", default=0.0)))

    default_hours = root.get("billed_hours", default=0.0)
    links, billed = [], {}
    for i, raw in enumerate(root.list("links")):
        r = _Reader(raw, root._key(f"links[{i}]"))
        unmetered = r.get("unmetered", bool, default=False)
        cap = r.get("capacity_gbps", int)
        try:
            tier = catalog.tier(cap, unmetered)
        except KeyError as exc:
            raise ParseError(f"{r.path}.capacity_gbps: {exc}") from None
        link = DedicatedLink(
            id=r.get("id", str), provider=r.get("provider", str), peering_location=r.get("peering", str),
            region=r.get("region", str), site=r.get("site", str), tier=tier,
            hourly_fee_override=r.get("hourly_usd", optional=True),
            vpn_id=r.get("vpn", str, optional=True), ip_range=r.get("ip_range", str, optional=True),
        )
        links.append(link)
        billed[link.id] = r.get("billed_hours", default=default_hours)

    segments = []
    for i, raw in enumerate(root.list("ramp")):
        r = _Reader(raw, root._key(f"ramp[{i}]"))
        counts: dict[tuple[str, str], int] = {}
        c = r.sub("counts")
        for link_id, per_gpu in c.data.items():
            g = _Reader(per_gpu, c._key(str(link_id)))
            for gpu in g.data:
                counts[(str(gpu), str(link_id))] = g.get(str(gpu), int)
        segments.append(RampSegment(r.get("t_start_s"), counts))

    explicit = None
    if "jobs" in data:
        explicit = []
        for i, raw in enumerate(root.list("jobs")):
            r = _Reader(raw, root._key(f"jobs[{i}]"))
            size = r.get("bytes", int)
            if size <= 0:
                raise ParseError(f"{r.path}.bytes: output size must be positive")
            explicit.append(Job(i, r.get("gpu", str), r.get("link", str), r.get("start_s"),
                                r.get("compute_s", default=0.0), size))
        explicit = tuple(explicit)

    s = root.sub("sim")
    sim = SimParams(s.get("timeout_s", default=3600.0), s.get("sample_s", default=60.0),
                    s.get("seed", int), s.get("per_flow_cap_gbps", optional=True))

    slots = []
    for i, raw in enumerate(root.list("slots")):
        r = _Reader(raw, root._key(f"slots[{i}]"))
        tiers, counts = r.list("tiers"), r.list("counts")
        if len(tiers) != len(counts):
            raise ParseError(f"{r.path}: tiers and counts must have equal length")
        slots.append(_wrap(r.path, PeeringSlot, r.get("provider", str), r.get("peering", str),
                           r.get("region", str), {int(t): int(n) for t, n in zip(tiers, counts)}))

    forecast = []
    for i, raw in enumerate(root.list("forecast")):
        r = _Reader(raw, root._key(f"forecast[{i}]"))
        pflops = r.get("pflops")
        if pflops < 0:
            raise ParseError(f"{r.path}.pflops: must be non-negative")
        forecast.append(Demand(r.get("provider", str), r.get("region", str), pflops, r.get("site", str),
                               profile.egress_mb_per_tflop_hour, r.get("volume_tb", optional=True)))

    pl = root.sub("plan")
    plan = PlanSettings(pl.get("coverage_factor", default=1.5), pl.get("duration_h", default=0.0))
    if not plan.coverage_factor > 0:
        raise ParseError(f"{pl.path}.coverage_factor: must be positive")

    return Scenario(
        name=str(data.get("name", "scenario")), catalog=catalog, gpus=gpus, profile=profile,
        sites=tuple(sites), links=tuple(links), ramp=RampSchedule(tuple(segments)), explicit_jobs=explicit,
        sim=sim, billed_hours=billed, slots=tuple(slots), forecast=tuple(forecast), plan=plan,
        onprem_ranges=tuple(str(x) for x in root.list("onprem_ranges")),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ParseError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data = {}
    return scenario_from_dict(data, base_dir=path.parent, where="")
