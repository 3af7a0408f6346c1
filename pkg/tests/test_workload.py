import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudburst.errors import LookupFailure, ValidationError
from cloudburst.units import GB, TB
from cloudburst.workload import (
    GPU_TABLE, GpuClass, JobProfile, JobState, RampSchedule, RampSegment, check_runtime_monotonic,
    expected_runtime, generate_workload, gpu_catalog, mean_egress_rate, sample_job, transition,
)

CAT = gpu_catalog()
PROFILE = JobProfile()


def ramp(*segments):
    return RampSchedule(tuple(RampSegment(t, counts) for t, counts in segments))


@pytest.mark.parametrize("name,secs", [("T4", 2350), ("A100-SXM4", 1200), ("V100-SXM2", 1700)])
def test_tabulated_runtimes(name, secs):
    assert expected_runtime(name, PROFILE) == secs


def test_synthetic_gpu_runtime():
    assert expected_runtime(GpuClass("synthetic", 10.0), PROFILE) == pytest.approx(1800)


def test_unknown_gpu():
    with pytest.raises(LookupFailure):
        expected_runtime("K80", PROFILE)


def test_table_runtimes_monotone():
    assert check_runtime_monotonic(CAT) == []
    bad = dict(CAT, X=GpuClass("X", 50.0, 9999))
    assert check_runtime_monotonic(bad)


def test_zero_cv_is_exact():
    rng = np.random.default_rng(0)
    prof = JobProfile(runtime_cv=0, size_cv=0)
    for _ in range(5):
        assert sample_job(CAT["T4"], prof, rng) == (2350.0, int(2.5 * GB))


def test_sample_means_within_two_percent():
    rng = np.random.default_rng(11)
    draws = [sample_job(CAT["P40"], PROFILE, rng) for _ in range(10_000)]
    assert np.mean([d for d, _ in draws]) == pytest.approx(1950, rel=0.02)
    assert np.mean([s for _, s in draws]) == pytest.approx(2.5 * GB, rel=0.02)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_size_sum_within_three_sigma(seed):
    n = 5000
    rng = np.random.default_rng(seed)
    sizes = np.array([sample_job(CAT["T4"], PROFILE, rng)[1] for _ in range(n)], dtype=float)
    mean = PROFILE.mean_output_bytes
    sigma = PROFILE.size_cv * mean
    assert abs(sizes.mean() - mean) <= 3 * sigma / math.sqrt(n)


def test_main_run_volume_arithmetic():
    prof = JobProfile(egress_mb_per_tflop_hour=480)
    assert 54_000 * prof.mean_output_bytes / TB == pytest.approx(129.6)


def test_egress_rate_examples():
    assert mean_egress_rate(100, 500) == pytest.approx(1000 / 9, abs=1e-9)
    assert round(mean_egress_rate(100, 500), 1) == 111.1
    assert mean_egress_rate(0, 500) == 0
    assert mean_egress_rate(10, 500) == pytest.approx(11.11, abs=0.005)


@given(p=st.floats(0, 1e4), r=st.floats(0, 1e4), k=st.floats(0, 100))
def test_egress_rate_linear(p, r, k):
    assert mean_egress_rate(k * p, r) == pytest.approx(k * mean_egress_rate(p, r), rel=1e-9, abs=1e-9)


def test_empty_schedule():
    assert generate_workload(RampSchedule(), CAT, PROFILE, 0) == []


def test_back_to_back_packing():
    prof = JobProfile(runtime_cv=0, size_cv=0)
    r = ramp((0.0, {("T4", "l1"): 1}), (2 * 2350.0, {}))
    jobs = generate_workload(r, CAT, prof, 0, link_ids=["l1"])
    assert [(j.start, j.compute_duration) for j in jobs] == [(0.0, 2350.0), (2350.0, 2350.0)]


def test_seed_determinism():
    r = ramp((0.0, {("T4", "l1"): 3, ("P40", "l1"): 2}), (3600.0, {("T4", "l1"): 5}), (7200.0, {}))
    a = generate_workload(r, CAT, PROFILE, 5)
    b = generate_workload(r, CAT, PROFILE, 5)
    c = generate_workload(r, CAT, PROFILE, 6)
    assert a == b
    assert [j.compute_duration for j in a] != [j.compute_duration for j in c]
    assert [j.start for j in a] == sorted(j.start for j in a)


def test_unknown_references_rejected():
    r = ramp((0.0, {("K80", "nowhere"): 1}), (10.0, {}))
    with pytest.raises(ValidationError) as exc:
        generate_workload(r, CAT, PROFILE, 0, link_ids=["l1"])
    assert len(exc.value.errors) == 2


def test_ramp_must_end_empty():
    with pytest.raises(ValidationError):
        generate_workload(ramp((0.0, {("T4", "l1"): 1})), CAT, PROFILE, 0)


def test_steady_state_throughput():
    # 100 synthetic 10-TFLOPS instances (1 PFLOPS) brought up within the first minute.
    gpus = {"syn": GpuClass("syn", 10.0)}
    prof = JobProfile(runtime_cv=0.2, size_cv=0.1)
    r = ramp((0.0, {("syn", "l1"): 100}), (60.0, {("syn", "l1"): 100}), (40_000.0, {}))
    jobs = generate_workload(r, gpus, prof, 3)
    lo, hi = 3600.0, 36_000.0
    emitted = sum(j.output_size for j in jobs if lo <= j.compute_end < hi)
    rate_gbps = emitted * 8 / 1e9 / (hi - lo)
    assert rate_gbps == pytest.approx(mean_egress_rate(1.0, 500), rel=0.03)


def test_job_state_forward_only():
    assert transition(JobState.QUEUED, JobState.COMPUTING) is JobState.COMPUTING
    assert transition(JobState.TRANSFERRING, JobState.FAILED_TIMEOUT) is JobState.FAILED_TIMEOUT
    with pytest.raises(ValidationError):
        transition(JobState.COMPUTING, JobState.FAILED_TIMEOUT)
    with pytest.raises(ValidationError):
        transition(JobState.DONE, JobState.COMPUTING)


def test_table_has_six_classes():
    assert [g.name for g in GPU_TABLE] == ["T4", "P100", "P40", "V100-PCIe", "V100-SXM2", "A100-SXM4"]
    assert CAT["A100-SXM4"].compute_cost_per_job is None
