"""HTC job population: GPU classes, provisioning ramps and per-job sampling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, LookupFailure, ValidationError
from .units import MB


@dataclass(frozen=True)
class GpuClass:
    name: str
    tflops_fp32: float
    mean_runtime_s: float | None = None
    compute_cost_per_job: float | None = None

    def __post_init__(self):
        if self.tflops_fp32 <= 0:
            raise DomainError(f"{self.name}: tflops must be positive")
        if self.mean_runtime_s is not None and self.mean_runtime_s <= 0:
            raise DomainError(f"{self.name}: mean runtime must be positive")


# Mean runtimes measured during the validation burst, theoretical fp32 TFLOPS,
# and preemptible compute cost per job (December 2020). A100 has no cost figure.
GPU_TABLE = (
    GpuClass("T4", 8.1, 2350, 0.12),
    GpuClass("P100", 9.3, 2100, 0.23),
    GpuClass("P40", 11.8, 1950, 0.27),
    GpuClass("V100-PCIe", 14.0, 1800, 0.17),
    GpuClass("V100-SXM2", 14.9, 1700, 0.40),
    GpuClass("A100-SXM4", 19.5, 1200, None),
)


def gpu_catalog(gpus: Iterable[GpuClass] = GPU_TABLE) -> dict[str, GpuClass]:
    catalog = {}
    for g in gpus:
        if g.name in catalog:
            raise ValidationError(f"duplicate GPU class {g.name!r}")
        catalog[g.name] = g
    return catalog


def check_runtime_monotonic(catalog: Mapping[str, GpuClass]) -> list[str]:
    """Faster GPUs must not have longer tabulated runtimes. Returns violations."""
    tabulated = sorted((g for g in catalog.values() if g.mean_runtime_s is not None),
                       key=lambda g: g.tflops_fp32)
    problems = []
    for slow, fast in zip(tabulated, tabulated[1:]):
        if fast.tflops_fp32 > slow.tflops_fp32 and fast.mean_runtime_s > slow.mean_runtime_s:
            problems.append(f"{fast.name} is faster than {slow.name} but has a longer mean runtime")
    return problems


@dataclass(frozen=True)
class JobProfile:
    compute_tflop_hours: float = 5.0
    egress_mb_per_tflop_hour: float = 500.0
    runtime_cv: float = 0.2
    size_cv: float = 0.1

    def __post_init__(self):
        if self.compute_tflop_hours <= 0:
            raise DomainError("compute per job must be positive")
        if self.egress_mb_per_tflop_hour <= 0:
            raise DomainError("egress ratio must be positive")
        if self.runtime_cv < 0 or self.size_cv < 0:
            raise DomainError("coefficients of variation must be non-negative")

    @property
    def mean_output_bytes(self) -> float:
        return self.compute_tflop_hours * self.egress_mb_per_tflop_hour * MB


class JobState(enum.IntEnum):
    QUEUED = 0
    COMPUTING = 1
    TRANSFERRING = 2
    DONE = 3
    FAILED_TIMEOUT = 4


_ALLOWED = {
    JobState.QUEUED: {JobState.COMPUTING},
    JobState.COMPUTING: {JobState.TRANSFERRING},
    JobState.TRANSFERRING: {JobState.DONE, JobState.FAILED_TIMEOUT},
    JobState.DONE: set(),
    JobState.FAILED_TIMEOUT: set(),
}


def transition(current: JobState, new: JobState) -> JobState:
    if new not in _ALLOWED[current]:
        raise ValidationError(f"illegal job state transition {current.name} -> {new.name}")
    return new


@dataclass(frozen=True)
class Job:
    id: int
    gpu: str
    link_id: str
    start: float
    compute_duration: float
    output_size: int
    state: JobState = JobState.QUEUED

    @property
    def compute_end(self) -> float:
        return self.start + self.compute_duration

    def advance(self, new: JobState) -> "Job":
        return replace(self, state=transition(self.state, new))


@dataclass(frozen=True)
class RampSegment:
    t_start_s: float
    counts: Mapping[tuple[str, str], int]  # (gpu, link_id) -> instances


@dataclass(frozen=True)
class RampSchedule:
    """Piecewise-constant target instance counts per (GPU class, link).

    The final segment must be all-zero; it marks the end of provisioning.
    """

    segments: tuple[RampSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def problems(self) -> list[str]:
        out = []
        starts = [s.t_start_s for s in self.segments]
        for i, (a, b) in enumerate(zip(starts, starts[1:])):
            if b <= a:
                out.append(f"ramp[{i + 1}].t_start_s {b} does not exceed previous start {a}")
        for i, seg in enumerate(self.segments):
            for key, n in seg.counts.items():
                if int(n) != n or n < 0:
                    out.append(f"ramp[{i}].counts[{key[1]}][{key[0]}] must be a non-negative integer, got {n}")
        if self.segments and any(self.segments[-1].counts.values()):
            out.append("ramp: final segment must set every count to zero")
        return out

    def keys(self) -> list[tuple[str, str]]:
        return sorted({k for seg in self.segments for k in seg.counts})

    def instances(self) -> list[tuple[str, str, float, float]]:
        """Expand to (gpu, link_id, start, end) per provisioned instance.

        Instances added in a segment start evenly spaced over that segment;
        removals take the most recently provisioned instances first.
        """
        out = []
        for key in self.keys():
            active: list[float] = []
            for i, seg in enumerate(self.segments[:-1]):
                target = int(seg.counts.get(key, 0))
                t0 = seg.t_start_s
                t1 = self.segments[i + 1].t_start_s
                if target > len(active):
                    added = target - len(active)
                    step = (t1 - t0) / added
                    active.extend(t0 + j * step for j in range(added))
                while len(active) > target:
                    out.append((key[0], key[1], active.pop(), t0))
            if self.segments:
                t_end = self.segments[-1].t_start_s
                while active:
                    out.append((key[0], key[1], active.pop(), t_end))
        out.sort(key=lambda r: (r[2], r[0], r[1], r[3]))
        return out

    def provisioned_tflops(self, catalog: Mapping[str, GpuClass]) -> list[tuple[float, float]]:
        """Step function (t, TFLOPS) of the provisioned fleet."""
        deltas: dict[float, float] = {}
        for gpu, _link, start, end in self.instances():
            tf = catalog[gpu].tflops_fp32
            deltas[start] = deltas.get(start, 0.0) + tf
            deltas[end] = deltas.get(end, 0.0) - tf
        level = 0.0
        curve = []
        for t in sorted(deltas):
            level += deltas[t]
            curve.append((t, level))
        return curve


def expected_runtime(gpu: GpuClass | str, profile: JobProfile,
                     catalog: Mapping[str, GpuClass] | None = None) -> float:
    if isinstance(gpu, str):
        catalog = gpu_catalog() if catalog is None else catalog
        if gpu not in catalog:
            raise LookupFailure(f"unknown GPU class {gpu!r}")
        gpu = catalog[gpu]
    if gpu.mean_runtime_s is not None:
        return float(gpu.mean_runtime_s)
    return profile.compute_tflop_hours / gpu.tflops_fp32 * 3600.0


def lognormal_params(mean: float, cv: float) -> tuple[float, float]:
    sigma2 = math.log1p(cv * cv)
    return math.log(mean) - sigma2 / 2.0, math.sqrt(sigma2)


def _draw(rng: np.random.Generator, mean: float, cv: float) -> float:
    if cv == 0:
        return mean
    mu, sigma = lognormal_params(mean, cv)
    return float(rng.lognormal(mu, sigma))


def sample_job(gpu: GpuClass, profile: JobProfile, rng: np.random.Generator) -> tuple[float, int]:
    """Draw (compute_duration_s, output_size_bytes) for one job."""
    duration = _draw(rng, expected_runtime(gpu, profile), profile.runtime_cv)
    size = max(1, int(round(_draw(rng, profile.mean_output_bytes, profile.size_cv))))
    return duration, size


def mean_egress_rate(pflops: float, egress_mb_per_tflop_hour: float) -> float:
    """Average egress in Gbps of a fleet of ``pflops`` fp32 PFLOPS."""
    if pflops < 0 or egress_mb_per_tflop_hour < 0:
        raise DomainError("compute and egress ratio must be non-negative")
    mb_per_s = pflops * 1000.0 * egress_mb_per_tflop_hour / 3600.0
    return mb_per_s * 8.0 / 1000.0


def generate_workload(ramp: RampSchedule, catalog: Mapping[str, GpuClass], profile: JobProfile,
                      rng: np.random.Generator | int, link_ids: Sequence[str] | None = None) -> list[Job]:
    """Expand a ramp into a deterministic job stream ordered by start time.

    Each instance runs jobs back to back; a job is started only while the
    instance is still provisioned and always runs to completion.
    """
    problems = ramp.problems()
    for gpu, link in ramp.keys():
        if gpu not in catalog:
            problems.append(f"ramp references unknown GPU class {gpu!r}")
        if link_ids is not None and link not in link_ids:
            problems.append(f"ramp references unknown link {link!r}")
    if problems:
        raise ValidationError(problems)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    raw = []
    for gpu_name, link, start, end in ramp.instances():
        gpu = catalog[gpu_name]
        t = start
        while t < end:
            duration, size = sample_job(gpu, profile, rng)
            raw.append((t, gpu_name, link, duration, size))
            t += duration
    raw.sort(key=lambda r: (r[0], r[2], r[1]))
    return [Job(i, gpu, link, t, d, s) for i, (t, gpu, link, d, s) in enumerate(raw)]
