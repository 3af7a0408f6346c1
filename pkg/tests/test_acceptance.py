"""Acceptance gate: one verdict line per criterion, printed in the terminal summary."""

import time

import numpy as np
import pytest

from cloudburst.bundle import compute_cost, read_bundle, write_bundle
from cloudburst.lifecycle import billing_hours, parse_event_log, validate_log
from cloudburst.netsim import SimParams, StorageSite, run, simulate
from cloudburst.netsim.trace import transfer_time_stats
from cloudburst.planner import Demand, PeeringSlot, plan_portfolio
from cloudburst.pricing import DEFAULT_ROUTE, break_even_rate, default_catalog, egress_cost, link_total_cost
from cloudburst.scenario import load_scenario
from cloudburst.units import TB, gbps_to_bytes_per_s, gbps_to_tb_per_hour
from cloudburst.workload import mean_egress_rate
from tests.conftest import SCENARIOS, make_job, make_link, record
from tests.test_planner import brute_force

CAT = default_catalog()


def test_c1_counterfactual_default_cost():
    cat = CAT.with_price_point(0.6)  # $80 + 0.6 x $5 = $83/TB
    cost = egress_cost(130, DEFAULT_ROUTE, cat)
    off = abs(cost - 11_000) / 11_000
    record(1, cost == pytest.approx(10_790) and off <= 0.03,
           f"130 TB at $83/TB = ${cost:,.2f}, {off:.1%} from $11,000 (tol 3%)")


def test_c2_effective_dedicated_cost(mainrun_runs):
    scenario, trace, wall, _ = mainrun_runs[1]
    report = compute_cost(scenario, trace)
    eff, sav = report.effective_usd_per_tb, report.savings_fraction
    ok = 35 <= eff <= 50 and 0.40 <= sav <= 0.60 and wall < 60
    record(2, ok, f"effective ${eff:.2f}/TB (want 35..50), savings {sav:.4f} (want 0.40..0.60), "
                  f"simulated in {wall:.1f} s (want < 60)")


def test_c3_volume_consistency(mainrun_runs):
    _, trace, _, _ = mainrun_runs[1]
    tb = trace.delivered_bytes / TB
    ok = abs(tb - 130) <= 0.02 * 130 and abs(trace.completed - 54_000) <= 0.02 * 54_000
    record(3, ok, f"{tb:.2f} TB over {trace.completed} completed transfers (want 130 TB and ~54,000, tol 2%)")


def test_c4_rate_math_and_peak(mainrun_runs):
    rate = mean_egress_rate(100, 500)
    peaks = {seed: tr.peak_site_gbps()["UW"] for seed, (_, tr, _, _) in mainrun_runs.items()}
    ok = rate == 1000 / 9 and round(rate, 1) == 111.1 and all(75 <= p <= 115 for p in peaks.values())
    shown = ", ".join(f"{p:.1f}" for p in peaks.values())
    record(4, ok, f"mean_egress_rate(100, 500) = {rate:.4f} Gbps; UW peaks over seeds 1-5: {shown} Gbps "
                  f"(want 75..115)")


def test_c5_validation_run():
    trace = simulate(load_scenario(SCENARIOS / "validation.scenario"))
    peaks = {k: v / 8 for k, v in trace.peak_site_gbps().items()}
    uw_ok = abs(peaks["UW"] - 7) <= 0.3 * 7
    ucsd_ok = abs(peaks["UCSD"] - 2) <= 0.3 * 2
    jobs_ok = abs(trace.completed - 24_000) <= 0.15 * 24_000
    record(5, uw_ok and ucsd_ok and jobs_ok,
           f"peaks {peaks['UW']:.2f} GBps to UW (want 7 +-30%), {peaks['UCSD']:.2f} GBps to UCSD "
           f"(want 2 +-30%), {trace.completed} completed jobs (want 24,000 +-15%)")


def test_c6_congestion_pathology():
    trace = simulate(load_scenario(SCENARIOS / "congested.scenario"))
    hot = [b for b in transfer_time_stats([o for o in trace.outcomes if o.link_id == "hot"], 600) if b.count]
    ratio = hot[-1].mean_s / hot[0].mean_s
    ok = ratio >= 5 and trace.failed > 0
    record(6, ok, f"saturated link final/first bin mean = {hot[-1].mean_s:.0f}/{hot[0].mean_s:.1f} s "
                  f"({ratio:.0f}x, want >= 5x), {trace.failed} timeouts (want > 0)")


def test_c7_planner_oracle():
    rng = np.random.default_rng(2020)
    mismatches, elapsed = 0, 0.0
    for _ in range(200):
        n_total = int(rng.integers(1, 13))
        caps = rng.choice([2, 5, 10], size=n_total)
        counts = {int(c): int((caps == c).sum()) for c in (2, 5, 10) if (caps == c).any()}
        pflops = float(rng.uniform(0, 25))
        hours = float(rng.uniform(0, 48))
        cat = CAT.with_price_point(float(rng.uniform(0, 1)))
        demand = Demand("AWS", "Ohio", pflops, "UW")
        t0 = time.perf_counter()
        p = plan_portfolio([demand], [PeeringSlot("AWS", "Chicago, IL", "Ohio", counts)], 1.5, hours, cat)
        elapsed += time.perf_counter() - t0
        units = sorted(int(c) for c in caps)
        target = 1.5 * demand.mean_egress_gbps
        volume = gbps_to_tb_per_hour(demand.mean_egress_gbps) * hours
        best = brute_force(units, target, hours, volume, cat)
        if (best is None) != p.shortfall:
            mismatches += 1
        elif best is not None and abs(p.cost_usd - best) > 1e-9:
            mismatches += 1
    record(7, mismatches == 0 and elapsed < 10,
           f"{200 - mismatches}/200 instances match brute force within 1e-9 USD; planner time {elapsed:.2f} s")


def test_c8_break_even():
    m, u = CAT.tier(5), CAT.tier(5, unmetered=True)
    r = break_even_rate(m, u, CAT)
    closed = (35 - 2.12) / 22.50
    h = 24.0
    gap = link_total_cost(m, h, r * h, CAT) - link_total_cost(u, h, r * h, CAT)
    below = link_total_cost(m, h, 0.9 * r * h, CAT) < link_total_cost(u, h, 0.9 * r * h, CAT)
    above = link_total_cost(m, h, 1.1 * r * h, CAT) > link_total_cost(u, h, 1.1 * r * h, CAT)
    ok = abs(r - closed) <= 1e-6 and round(r, 3) == 1.461 and abs(gap) < 1e-9 and below and above
    record(8, ok, f"break-even {r:.6f} TB/h vs closed form {closed:.6f}; cost gap at crossing {gap:.2e} USD")


def test_c9_workflow_semantics():
    def ok_of(name):
        verdicts = validate_log(parse_event_log((SCENARIOS / name).read_text()))
        return all(v["ok"] for v in verdicts.values())

    happy = all(ok_of(n) for n in ("gcp_happy.log", "azure_happy.log", "aws_happy.log"))
    rejected = not ok_of("aws_user_initiated.log") and not ok_of("azure_vng_first.log")
    a = billing_hours([(0.0, "create_expressroute"), (5.0, "user_delete_expressroute"),
                       (8.0, "onprem_delete_expressroute")], "Azure")
    b = billing_hours([(0.0, "create_expressroute"), (5.0, "onprem_delete_expressroute"),
                       (8.0, "user_delete_expressroute")], "Azure")
    record(9, happy and rejected and a == b == 8,
           f"happy paths valid={happy}, mutations rejected={rejected}, Azure billing {a} h / swapped {b} h")


def test_c10_simulation_properties(tmp_path):
    scenario = load_scenario(SCENARIOS / "validation.scenario")
    calls = []
    trace = simulate(scenario, observer=lambda t, site, rows: calls.append(rows))
    write_bundle(tmp_path / "a", scenario, trace)
    write_bundle(tmp_path / "b", scenario, simulate(scenario))
    files = ("trace.csv", "jobs.csv", "summary.json", "cost.json")
    deterministic = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)

    done = [o for o in trace.outcomes if o.completed]
    conserved = (trace.delivered_bytes == sum(o.bytes for o in done)
                 and all(abs(o.served_bytes - o.bytes) <= 1 for o in done))
    capacity = all(s.throughput_gbps <= trace.link_capacity_gbps[s.link_id] * (1 + 1e-9) for s in trace.samples)
    capacity &= all(n * rate <= cap * (1 + 1e-12) for rows in calls for _, n, rate, cap in rows)
    # no per-flow cap in this scenario, so a busy link is full unless the site is the binding limit
    headroom = {s.name: s.headroom_gbps for s in scenario.sites}
    site_of = trace.link_sites
    work = True
    for rows in calls:
        site = site_of[rows[0][0]]
        site_full = (headroom[site] is not None
                     and sum(n * r for _, n, r, _ in rows) >= gbps_to_bytes_per_s(headroom[site]) * (1 - 1e-12))
        for _, n, rate, cap in rows:
            if n and not site_full and abs(n * rate - cap) > cap * 1e-12:
                work = False

    pair = run([make_link(cap=2)], [StorageSite("UW")], [make_job(0), make_job(1)], SimParams())
    two_flow = [o.transfer_s for o in pair.outcomes] == [20.0, 20.0]
    assert read_bundle(tmp_path / "a").trace.completed == trace.completed
    record(10, deterministic and conserved and capacity and work and two_flow,
           f"determinism={deterministic}, conservation={conserved}, capacity={capacity}, "
           f"work conservation={work}, two-flow 20 s={two_flow}")
