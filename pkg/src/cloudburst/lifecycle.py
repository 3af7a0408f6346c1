"""Provisioning and teardown workflows for dedicated links, per provider.

Each provider's provisioning procedure is a DAG of steps owned by either
the cloud user or the on-prem network engineer. Teardown steps carry the
billing-stop semantics: GCP stops billing when the Cloud Router goes away,
AWS when the VIF is deleted, and Azure only once both parties have deleted
their ExpressRoute objects.
"""

from __future__ import annotations

import csv
import enum
import io
import ipaddress
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import CloudburstError, LookupFailure, ParseError


class Actor(str, enum.Enum):
    CLOUD_USER = "CloudUser"
    ONPREM = "OnPremNetworkEngineer"


class Billing(str, enum.Enum):
    NONE = "None"
    STARTS = "StartsBilling"
    STOPS_UNILATERALLY = "StopsBillingUnilaterally"
    STOPS_JOINTLY = "StopsBillingJointly"


@dataclass(frozen=True)
class WorkflowStep:
    provider: str
    name: str
    actor: Actor
    prerequisites: frozenset[str] = frozenset()
    emits_key: bool = False
    billing_effect: Billing = Billing.NONE
    description: str = ""


class WorkflowError(CloudburstError):
    kind = "workflow"

    def __init__(self, message: str, step: str | None = None):
        super().__init__(message)
        self.step = step


class ActorViolation(WorkflowError):
    kind = "actor"


class OrderingError(WorkflowError):
    kind = "ordering"


class DuplicationError(WorkflowError):
    kind = "duplicate"


class BillingInconsistency(WorkflowError):
    kind = "billing"


U, O = Actor.CLOUD_USER, Actor.ONPREM


def _chain(provider: str, rows: Sequence[tuple]) -> tuple[WorkflowStep, ...]:
    steps = []
    prev = None
    for row in rows:
        name, actor, desc, *flags = row
        steps.append(WorkflowStep(
            provider, name, actor,
            frozenset() if prev is None else frozenset({prev}),
            emits_key="key" in flags,
            billing_effect=Billing.STARTS if "bill" in flags else Billing.NONE,
            description=desc,
        ))
        prev = name
    return tuple(steps)


_PROVISIONING = {
    "GCP": _chain("GCP", [
        ("create_vpc", U, "Create a VPC bound to the chosen IP range"),
        ("create_subnets", U, "Create subnets for the cloud zones"),
        ("create_cloud_router", U, "Create a Cloud Router"),
        ("create_interconnect", U, "Create the Cloud Interconnect; returns a pairing key", "key"),
        ("onprem_oess_routing", O, "Route the interconnect through OESS and pick bandwidth", "bill"),
    ]),
    "Azure": _chain("Azure", [
        ("create_vnet", U, "Create a virtual network bound to the chosen IP range"),
        ("create_gateway_subnet", U, "Create gateway and main subnets"),
        ("create_expressroute", U, "Create the ExpressRoute circuit; pick bandwidth and billing mode",
         "key", "bill"),
        ("create_vng", U, "Create a virtual network gateway (premium SKU above 1 Gbps)"),
        ("create_connection", U, "Connect the ExpressRoute circuit to the gateway"),
        ("onprem_oess_routing", O, "Route the circuit through OESS using the service key"),
    ]),
    "AWS": _chain("AWS", [
        ("onprem_oess_request", O, "Request the Direct Connect hosted connection via OESS"),
        ("accept_direct_connect", U, "Accept the Direct Connect request"),
        ("create_vpc", U, "Create a VPC bound to the chosen IP range"),
        ("create_subnets", U, "Create subnets for the cloud zones"),
        ("create_internet_router", U, "Create the VPC internet router"),
        ("create_vpg", U, "Create a virtual private gateway"),
        ("attach_vpg_vpc", U, "Associate the VPG with the VPC"),
        ("create_dcg", U, "Create a Direct Connect gateway"),
        ("create_vif", U, "Create the virtual interface; returns BGP key and peer addresses", "key", "bill"),
        ("configure_routes", U, "Route on-prem prefixes via the VPG, everything else via the internet router"),
        ("attach_dcg_vpg", U, "Associate the DCG with the VPG"),
        ("onprem_finalize", O, "Finish BGP configuration with the key and addresses"),
    ]),
}

_BILLING_START = {p: next(s.name for s in steps if s.billing_effect is Billing.STARTS)
                  for p, steps in _PROVISIONING.items()}

_TEARDOWN = {
    "GCP": (
        WorkflowStep("GCP", "destroy_cloud_router", U, frozenset({_BILLING_START["GCP"]}),
                     billing_effect=Billing.STOPS_UNILATERALLY, description="Destroy the Cloud Router"),
    ),
    "AWS": (
        WorkflowStep("AWS", "delete_vif", U, frozenset({_BILLING_START["AWS"]}),
                     billing_effect=Billing.STOPS_UNILATERALLY, description="Delete the virtual interface"),
    ),
    "Azure": (
        WorkflowStep("Azure", "onprem_initiate_teardown", O, frozenset({_BILLING_START["Azure"]}),
                     description="On-prem side starts de-provisioning"),
        WorkflowStep("Azure", "onprem_delete_expressroute", O, frozenset({"onprem_initiate_teardown"}),
                     billing_effect=Billing.STOPS_JOINTLY, description="On-prem deletes its ExpressRoute objects"),
        WorkflowStep("Azure", "user_delete_expressroute", U, frozenset({"onprem_initiate_teardown"}),
                     billing_effect=Billing.STOPS_JOINTLY, description="Cloud user deletes the ExpressRoute circuit"),
    ),
}

PROVIDERS = tuple(_PROVISIONING)


def _provider(provider: str) -> str:
    for p in PROVIDERS:
        if p.lower() == str(provider).lower():
            return p
    raise LookupFailure(f"unknown provider {provider!r}; expected one of {PROVIDERS}")


def workflow_definition(provider: str) -> tuple[WorkflowStep, ...]:
    """Provisioning steps in canonical order (a topological order of the DAG)."""
    return _PROVISIONING[_provider(provider)]


def teardown_definition(provider: str) -> tuple[WorkflowStep, ...]:
    return _TEARDOWN[_provider(provider)]


def all_steps(provider: str) -> dict[str, WorkflowStep]:
    p = _provider(provider)
    return {s.name: s for s in _PROVISIONING[p] + _TEARDOWN[p]}


def is_acyclic(steps: Iterable[WorkflowStep]) -> bool:
    graph = {s.name: set(s.prerequisites) for s in steps}
    done: set[str] = set()
    while graph:
        ready = [n for n, pre in graph.items() if pre <= done]
        if not ready:
            return False
        for n in ready:
            done.add(n)
            del graph[n]
    return True


@dataclass(frozen=True)
class WorkflowState:
    provider: str
    completed: Mapping[str, tuple[Actor, float]] = field(default_factory=dict)
    billing_active: bool = False
    billing_started_at: float | None = None
    billing_stopped_at: float | None = None
    deletion_marks: Mapping[Actor, float] = field(default_factory=dict)

    @classmethod
    def new(cls, provider: str) -> "WorkflowState":
        return cls(_provider(provider))


def apply_step(state: WorkflowState, step: str, actor: Actor | str, t: float) -> WorkflowState:
    steps = all_steps(state.provider)
    if step not in steps:
        raise LookupFailure(f"{state.provider} has no step {step!r}")
    spec = steps[step]
    actor = Actor(actor)
    if step in state.completed:
        raise DuplicationError(f"step {step!r} already completed", step)
    if actor is not spec.actor:
        raise ActorViolation(f"step {step!r} must be performed by {spec.actor.value}, not {actor.value}", step)
    missing = sorted(spec.prerequisites - set(state.completed))
    if missing:
        raise OrderingError(f"step {step!r} requires {', '.join(missing)} first", step)

    completed = dict(state.completed)
    completed[step] = (actor, t)
    active, started, stopped = state.billing_active, state.billing_started_at, state.billing_stopped_at
    marks = dict(state.deletion_marks)
    if spec.billing_effect is Billing.STARTS:
        active, started = True, t
    elif spec.billing_effect is Billing.STOPS_UNILATERALLY:
        if active:
            active, stopped = False, t
    elif spec.billing_effect is Billing.STOPS_JOINTLY:
        marks[actor] = t
        if active and all(a in marks for a in Actor):
            active, stopped = False, t
    return WorkflowState(state.provider, completed, active, started, stopped, marks)


def replay(provider: str, events: Iterable[tuple[float, str, Actor | str]]) -> WorkflowState:
    state = WorkflowState.new(provider)
    for t, step, actor in events:
        state = apply_step(state, step, actor, t)
    return state


def billing_hours(events: Sequence[tuple[float, str]], provider: str) -> float:
    """Hours billed for one link given its (t_hours, step) log.

    Billing runs from the provider's billing-start step to its stop
    condition; if the log ends without a stop, billing accrues to the last
    logged event.
    """
    steps = all_steps(provider)
    start = None
    marks: set[Actor] = set()
    stop = None
    last_t = None
    for t, name in events:
        if last_t is not None and t < last_t:
            raise BillingInconsistency(f"event log is not chronological at t={t}")
        last_t = t
        spec = steps.get(name)
        if spec is None:
            raise LookupFailure(f"{provider} has no step {name!r}")
        if spec.billing_effect is Billing.STARTS:
            start = t
        elif spec.billing_effect in (Billing.STOPS_UNILATERALLY, Billing.STOPS_JOINTLY):
            if start is None:
                raise BillingInconsistency(f"{name!r} at t={t} stops billing that never started", name)
            if spec.billing_effect is Billing.STOPS_UNILATERALLY:
                stop = t if stop is None else stop
            else:
                marks.add(spec.actor)
                if stop is None and marks == set(Actor):
                    stop = t
    if start is None:
        return 0.0
    end = stop if stop is not None else last_t
    return end - start


@dataclass(frozen=True)
class LogRecord:
    line: int
    t_h: float
    provider: str
    link_id: str
    step: str
    actor: str


LOG_FIELDS = ("t_h", "provider", "link_id", "step", "actor")


def parse_event_log(text: str) -> list[LogRecord]:
    """Parse ``t_h,provider,link_id,step,actor`` lines; a header line is optional."""
    records, errors = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in row]
        if lineno == 1 and tuple(cells) == LOG_FIELDS:
            continue
        if len(cells) != 5:
            errors.append(f"line {lineno}: expected 5 fields, got {len(cells)}")
            continue
        try:
            t = float(cells[0])
        except ValueError:
            errors.append(f"line {lineno}: t_h {cells[0]!r} is not a number")
            continue
        records.append(LogRecord(lineno, t, *cells[1:]))
    if errors:
        raise ParseError("\n".join(errors))
    return records


def validate_log(records: Sequence[LogRecord]) -> dict[str, dict]:
    """Replay each link's events; returns per-link verdicts with billing hours."""
    by_link: dict[str, list[LogRecord]] = {}
    for r in records:
        by_link.setdefault(r.link_id, []).append(r)
    out = {}
    for link_id, recs in by_link.items():
        errors: list[str] = []
        providers = {r.provider for r in recs}
        if len(providers) > 1:
            errors.append(f"link {link_id!r} mixes providers {sorted(providers)}")
        hours = 0.0
        try:
            provider = _provider(recs[0].provider)
        except LookupFailure as exc:
            out[link_id] = {"ok": False, "errors": [f"line {recs[0].line}: {exc}"], "billing_hours": 0.0}
            continue
        state = WorkflowState.new(provider)
        last = None
        for r in recs:
            if last is not None and r.t_h < last:
                errors.append(f"line {r.line}: timestamp {r.t_h} goes backwards")
                break
            last = r.t_h
            try:
                state = apply_step(state, r.step, r.actor, r.t_h)
            except (WorkflowError, LookupFailure) as exc:
                errors.append(f"line {r.line}: {exc}")
                break
            except ValueError:
                errors.append(f"line {r.line}: unknown actor {r.actor!r}")
                break
        if not errors:
            hours = billing_hours([(r.t_h, r.step) for r in recs], provider)
        out[link_id] = {"ok": not errors, "errors": errors, "billing_hours": hours}
    return out


def check_azure_vpns(links: Iterable) -> list[str]:
    """Azure routes every link at a peering location through one IP, so each needs its own VPN."""
    by_location: dict[str, list] = {}
    for link in links:
        if link.provider.lower() == "azure":
            by_location.setdefault(link.peering_location, []).append(link)
    problems = []
    for location, group in by_location.items():
        if len(group) < 2:
            continue
        missing = [link.id for link in group if not link.vpn_id]
        if missing:
            problems.append(f"Azure links at {location} need distinct vpn ids; missing on {missing}")
        seen: dict[str, str] = {}
        for link in group:
            if link.vpn_id and link.vpn_id in seen:
                problems.append(f"Azure links {seen[link.vpn_id]!r} and {link.id!r} at {location} "
                                f"share VPN {link.vpn_id!r}")
            elif link.vpn_id:
                seen[link.vpn_id] = link.id
    return problems


def check_ip_ranges(links: Iterable, onprem_ranges: Iterable[str] = ()) -> list[str]:
    """Link address ranges must not overlap each other or ranges already used on-prem."""
    problems = []
    taken: list[tuple[str, ipaddress._BaseNetwork]] = []
    for r in onprem_ranges:
        taken.append((f"on-prem {r}", ipaddress.ip_network(r, strict=False)))
    for link in links:
        if not link.ip_range:
            continue
        try:
            net = ipaddress.ip_network(link.ip_range, strict=False)
        except ValueError as exc:
            problems.append(f"link {link.id!r}: {exc}")
            continue
        for owner, other in taken:
            if net.version == other.version and net.overlaps(other):
                problems.append(f"link {link.id!r} range {net} overlaps {owner} ({other})")
        taken.append((f"link {link.id!r}", net))
    return problems
