"""On-disk run bundle: trace CSVs, summary and cost JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ParseError
from .netsim.trace import SimTrace, read_jobs_csv, read_trace_csv
from .pricing import DEFAULT_ROUTE, CostReport, cost_report, per_tb_rate
from .scenario import Scenario
from .units import TB

TRACE_FILE = "trace.csv"
JOBS_FILE = "jobs.csv"
SUMMARY_FILE = "summary.json"
COST_FILE = "cost.json"
PLAN_FILE = "plan.json"

FIG6_BIN_S = 600.0


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def summarize(scenario: Scenario, trace: SimTrace, report: CostReport) -> dict[str, Any]:
    peaks = trace.peak_site_gbps()
    return {
        "scenario": scenario.name,
        "seed": scenario.sim.seed,
        "price_point": scenario.catalog.price_point,
        "sample_s": trace.sample_s,
        "timeout_s": trace.timeout_s,
        "default_usd_per_tb": per_tb_rate(DEFAULT_ROUTE, scenario.catalog),
        "links": [
            {
                "id": link.id,
                "provider": link.provider,
                "peering": link.peering_location,
                "region": link.region,
                "site": link.site,
                "capacity_gbps": link.tier.capacity_gbps,
                "unmetered": link.tier.unmetered,
                "billed_hours": scenario.hours_for(link.id),
            }
            for link in scenario.links
        ],
        "gpus": [
            {
                "name": g.name,
                "tflops": g.tflops_fp32,
                "mean_runtime_s": g.mean_runtime_s,
                "cost_per_job_usd": g.compute_cost_per_job,
            }
            for g in scenario.gpus.values()
        ],
        "jobs_total": len(trace.outcomes),
        "completed": trace.completed,
        "failed_timeout": trace.failed,
        "delivered_bytes": trace.delivered_bytes,
        "delivered_tb": round(trace.delivered_bytes / TB, 6),
        "delivered_by_link": trace.delivered_by_link,
        "delivered_by_site": trace.delivered_by_site,
        "wasted_compute_hours": round(trace.wasted_compute_s / 3600.0, 6),
        "transfer_hold_hours": round(trace.transfer_hold_s / 3600.0, 6),
        "peak_site_gbps": {k: round(v, 6) for k, v in peaks.items()},
        "peak_site_gbyte_per_s": {k: round(v / 8.0, 6) for k, v in peaks.items()},
        "effective_usd_per_tb": report.to_dict()["effective_usd_per_tb"],
        "transfer_time_bins": [
            {"t_start_s": b.t_start, "count": b.count, "mean_s": round(b.mean_s, 6), "stddev_s": round(b.stddev_s, 6)}
            for b in trace.transfer_time_stats(FIG6_BIN_S)
        ],
    }


def compute_cost(scenario: Scenario, trace: SimTrace) -> CostReport:
    return cost_report(trace, scenario.links, scenario.billed_hours, scenario.catalog, scenario.gpus)


def write_bundle(out_dir: str | Path, scenario: Scenario, trace: SimTrace,
                 report: CostReport | None = None) -> dict[str, Any]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if report is None:
        report = compute_cost(scenario, trace)
    trace_text, jobs_text = trace.to_csv()
    (out / TRACE_FILE).write_text(trace_text)
    (out / JOBS_FILE).write_text(jobs_text)
    summary = summarize(scenario, trace, report)
    (out / SUMMARY_FILE).write_text(_dump(summary))
    (out / COST_FILE).write_text(report.to_json())
    return summary


@dataclass
class Bundle:
    path: Path
    summary: dict[str, Any]
    cost: CostReport
    trace: SimTrace


def read_bundle(path: str | Path) -> Bundle:
    path = Path(path)
    missing = [f for f in (TRACE_FILE, JOBS_FILE, SUMMARY_FILE, COST_FILE) if not (path / f).is_file()]
    if missing:
        raise FileNotFoundError(f"bundle {path} is missing {', '.join(missing)}")
    try:
        summary = json.loads((path / SUMMARY_FILE).read_text())
        cost = CostReport.from_dict(json.loads((path / COST_FILE).read_text()))
        samples = read_trace_csv((path / TRACE_FILE).read_text())
        outcomes = read_jobs_csv((path / JOBS_FILE).read_text())
    except (ValueError, KeyError) as exc:
        raise ParseError(f"bundle {path}: {exc}") from None
    trace = SimTrace(
        samples=samples,
        outcomes=outcomes,
        link_sites={link["id"]: link["site"] for link in summary["links"]},
        link_capacity_gbps={link["id"]: float(link["capacity_gbps"]) for link in summary["links"]},
        sample_s=summary["sample_s"],
        timeout_s=summary["timeout_s"],
    )
    return Bundle(path, summary, cost, trace)
