#!/usr/bin/env python3
"""Regenerate the shipped scenario files and workflow logs under scenarios/.

Fleet sizes are derived from per-link target utilization so that the main
run lands near 54,000 jobs; rerun after changing any constant below.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import yaml

from cloudburst.pricing import catalog_to_dict, default_catalog
from cloudburst.workload import GPU_TABLE

GPUS = {g.name: g for g in GPU_TABLE}

# Share of jobs per GPU class in the main run.
MAIN_MIX = {"T4": 0.06, "V100-PCIe": 0.03, "V100-SXM2": 0.40, "P100": 0.26, "P40": 0.25}

MEAN_OUTPUT_GB = 2.4
PLATEAU_S = 6200

# provider, site, peering, region, capacities, load at full fleet
MAIN_PORTFOLIO = [
    ("AWS", "UW", "Dallas, TX", "N. Virginia", (5, 5, 2, 2), 0.82),
    ("AWS", "UW", "Chicago, IL", "Ohio", (5, 2, 2), 0.82),
    ("AWS", "UW", "San Jose, CA", "California", (5,), 0.92),
    ("AWS", "UCSD", "San Jose, CA", "California", (5,), 0.60),
    ("Azure", "UW", "Silicon Valley", "East US", (10, 10), 0.80),
    ("Azure", "UW", "Silicon Valley", "South Central US", (10,), 0.45),
    ("Azure", "UW", "Silicon Valley", "West EU", (10,), 0.80),
    ("Azure", "UW", "Chicago, IL", "UK South", (2,), 0.92),
    ("Azure", "UCSD", "Silicon Valley", "West US", (10,), 0.60),
    ("GCP", "UW", "US Central", "US Central", (5, 5, 2), 0.82),
    ("GCP", "UW", "US West 1", "US West 1", (5, 5), 0.40),
    ("GCP", "UW", "US East 4", "US East 4", (5,), 0.82),
]

# Non-US Azure regions bill a higher hourly fee; use the top of the band.
NON_US_HOURLY = {"West EU": 4.65, "UK South": 1.19}

ABBREV = {
    "N. Virginia": "use1", "Ohio": "use2", "California": "usw1", "East US": "eastus",
    "South Central US": "scus", "West EU": "westeu", "UK South": "uksouth", "West US": "westus",
    "US Central": "uscentral1", "US West 1": "uswest1", "US East 4": "useast4",
}


def gbps_per_instance(gpu: str) -> float:
    return MEAN_OUTPUT_GB * 8.0 / GPUS[gpu].mean_runtime_s


def instances_for(gbps: float, mix: dict[str, float]) -> dict[str, float]:
    """Instances per GPU class whose combined mean egress is ``gbps`` with the given job shares."""
    jobs_per_s = gbps / (MEAN_OUTPUT_GB * 8.0)
    return {g: share * jobs_per_s * GPUS[g].mean_runtime_s for g, share in mix.items()}


def main_links():
    links = []
    counter: dict[str, int] = {}
    octet = 0
    for provider, site, peering, region, caps, load in MAIN_PORTFOLIO:
        for cap in caps:
            base = f"{provider.lower()}-{ABBREV[region]}-{site.lower()}"
            counter[base] = counter.get(base, 0) + 1
            link = {
                "id": f"{base}-{counter[base]}",
                "provider": provider,
                "peering": peering,
                "region": region,
                "site": site,
                "capacity_gbps": cap,
                "unmetered": False,
                "ip_range": f"10.{100 + octet}.0.0/20",
            }
            octet += 1
            if provider == "Azure":
                link["vpn"] = f"l3vpn-{link['id']}"
            if region in NON_US_HOURLY:
                link["hourly_usd"] = NON_US_HOURLY[region]
            links.append((link, load))
    return links


def ramp_segments(peak: dict[str, dict[str, float]], phases: list[tuple[float, float]]):
    """``phases`` are (t_start_s, fraction of peak); a final zero segment is appended by the caller."""
    segs = []
    for t, frac in phases:
        counts = {}
        for link_id, per_gpu in peak.items():
            row = {g: int(round(n * frac)) for g, n in per_gpu.items()}
            row = {g: n for g, n in row.items() if n > 0}
            if row:
                counts[link_id] = row
        segs.append({"t_start_s": float(t), "counts": counts})
    return segs


def gpu_section(names):
    out = []
    for name in names:
        g = GPUS[name]
        entry = {"name": g.name, "tflops": g.tflops_fp32, "mean_runtime_s": g.mean_runtime_s}
        if g.compute_cost_per_job is not None:
            entry["cost_per_job_usd"] = g.compute_cost_per_job
        out.append(entry)
    return out


def mainrun(scale: float):
    links = main_links()
    peak = {}
    for link, load in links:
        per = instances_for(load * link["capacity_gbps"] * scale, MAIN_MIX)
        peak[link["id"]] = per
    phases = [(i * 600, 0.8 * (i + 1) / 12) for i in range(12)]  # 2 h ramp to 80 %
    phases += [(7200, 0.8)]                                      # plateau
    phases += [(7200 + PLATEAU_S, 1.0)]                          # final push
    end = 7200 + PLATEAU_S + 3600
    ramp = ramp_segments(peak, phases) + [{"t_start_s": float(end), "counts": {}}]

    slots, forecast = mainrun_planning()
    return {
        "name": "mainrun",
        "pricing": "pricing.yaml",
        "billed_hours": 30,
        "gpus": gpu_section(MAIN_MIX),
        "profile": {"compute_tflop_hours": 5.0, "egress_mb_per_tflop_hour": 480.0,
                    "runtime_cv": 0.2, "size_cv": 0.1},
        "sites": [{"name": "UW", "cap_gbps": 100.0, "external_gbps": 10.0},
                  {"name": "UCSD", "cap_gbps": 100.0, "external_gbps": 0.0}],
        "onprem_ranges": ["10.0.0.0/16", "172.16.0.0/12"],
        "links": [link for link, _ in links],
        "ramp": ramp,
        "sim": {"timeout_s": 3600.0, "sample_s": 60.0, "seed": 1},
        "slots": slots,
        "forecast": forecast,
        "plan": {"coverage_factor": 1.5, "duration_h": 30.0},
    }


def mainrun_planning():
    """Peering availability in November 2020 and the pre-burst compute forecast."""
    slots = [
        {"provider": "AWS", "peering": "Dallas, TX", "region": "N. Virginia", "tiers": [5, 2], "counts": [2, 2]},
        {"provider": "AWS", "peering": "Chicago, IL", "region": "Ohio", "tiers": [5, 2], "counts": [1, 2]},
        {"provider": "AWS", "peering": "San Jose, CA", "region": "California", "tiers": [5, 2], "counts": [2, 1]},
        {"provider": "Azure", "peering": "Silicon Valley", "region": "East US", "tiers": [10, 5, 2], "counts": [4, 2, 2]},
        {"provider": "Azure", "peering": "Silicon Valley", "region": "South Central US", "tiers": [10, 5, 2], "counts": [4, 2, 2]},
        {"provider": "Azure", "peering": "Silicon Valley", "region": "West EU", "tiers": [10, 5, 2], "counts": [2, 2, 2]},
        {"provider": "Azure", "peering": "Chicago, IL", "region": "UK South", "tiers": [10, 5, 2], "counts": [1, 1, 2]},
        {"provider": "Azure", "peering": "Silicon Valley", "region": "West US", "tiers": [10, 5, 2], "counts": [4, 2, 2]},
        {"provider": "GCP", "peering": "US Central", "region": "US Central", "tiers": [5, 2], "counts": [2, 1]},
        {"provider": "GCP", "peering": "US West 1", "region": "US West 1", "tiers": [5], "counts": [2]},
        {"provider": "GCP", "peering": "US East 4", "region": "US East 4", "tiers": [5, 2], "counts": [1, 1]},
    ]
    forecast = [
        {"provider": "AWS", "region": "N. Virginia", "pflops": 14.0, "site": "UW"},
        {"provider": "AWS", "region": "Ohio", "pflops": 9.0, "site": "UW"},
        {"provider": "AWS", "region": "California", "pflops": 3.0, "site": "UW"},
        {"provider": "AWS", "region": "California", "pflops": 3.0, "site": "UCSD"},
        {"provider": "Azure", "region": "East US", "pflops": 12.0, "site": "UW"},
        {"provider": "Azure", "region": "South Central US", "pflops": 6.0, "site": "UW"},
        {"provider": "Azure", "region": "West EU", "pflops": 6.0, "site": "UW"},
        {"provider": "Azure", "region": "UK South", "pflops": 1.0, "site": "UW"},
        {"provider": "Azure", "region": "West US", "pflops": 6.0, "site": "UCSD"},
        {"provider": "GCP", "region": "US Central", "pflops": 12.0, "site": "UW"},
        {"provider": "GCP", "region": "US West 1", "pflops": 8.0, "site": "UW"},
        {"provider": "GCP", "region": "US East 4", "pflops": 3.0, "site": "UW"},
    ]
    return slots, forecast


VALIDATION_LINKS = [
    # id, provider, peering, region, site, capacity, PFLOPS behind the link
    ("aws-use1-uw", "AWS", "Dallas, TX", "N. Virginia", "UW", 10, 13.0),
    ("azure-eastus-uw", "Azure", "Silicon Valley", "East US", "UW", 10, 10.0),
    ("gcp-uscentral1-uw", "GCP", "US Central", "US Central", "UW", 10, 10.0),
    ("azure-westus-ucsd", "Azure", "Silicon Valley", "West US", "UCSD", 10, 8.0),
    ("aws-usw1-ucsd", "AWS", "San Jose, CA", "California", "UCSD", 5, 4.0),
]
VALIDATION_MIX = {"T4": 0.15, "P100": 0.2, "P40": 0.2, "V100-PCIe": 0.15, "V100-SXM2": 0.3}


def validation():
    links, peak = [], {}
    avg_tf_s = sum(share * GPUS[g].tflops_fp32 * GPUS[g].mean_runtime_s for g, share in VALIDATION_MIX.items())
    for i, (lid, provider, peering, region, site, cap, pflops) in enumerate(VALIDATION_LINKS):
        link = {"id": lid, "provider": provider, "peering": peering, "region": region, "site": site,
                "capacity_gbps": cap, "unmetered": False, "ip_range": f"10.{200 + i}.0.0/20"}
        if provider == "Azure":
            link["vpn"] = f"l3vpn-{lid}"
        links.append(link)
        jobs_per_s = pflops * 1000.0 / avg_tf_s
        peak[lid] = {g: share * jobs_per_s * GPUS[g].mean_runtime_s for g, share in VALIDATION_MIX.items()}
    phases = [(0, 0.5), (600, 1.0)]
    ramp = ramp_segments(peak, phases) + [{"t_start_s": 1200.0 + 4 * 3600.0, "counts": {}}]
    return {
        "name": "validation",
        "pricing": "pricing.yaml",
        "billed_hours": 8,
        "gpus": gpu_section(VALIDATION_MIX),
        "profile": {"compute_tflop_hours": 5.0, "egress_mb_per_tflop_hour": 480.0,
                    "runtime_cv": 0.2, "size_cv": 0.1},
        "sites": [{"name": "UW", "cap_gbps": 100.0, "external_gbps": 10.0},
                  {"name": "UCSD", "cap_gbps": 100.0, "external_gbps": 0.0}],
        "links": links,
        "ramp": ramp,
        "sim": {"timeout_s": 3600.0, "sample_s": 60.0, "seed": 7},
    }


def congested():
    gbps_each = 2.5 * 8.0 / GPUS["V100-PCIe"].mean_runtime_s
    hot = round(1.5 * 2.0 / gbps_each)
    cool = round(0.5 * 5.0 / gbps_each)
    return {
        "name": "congested",
        "pricing": "pricing.yaml",
        "billed_hours": 6,
        "gpus": gpu_section(["V100-PCIe"]),
        "profile": {"compute_tflop_hours": 5.0, "egress_mb_per_tflop_hour": 500.0,
                    "runtime_cv": 0.2, "size_cv": 0.1},
        "sites": [{"name": "UW"}],
        "links": [
            {"id": "hot", "provider": "GCP", "peering": "US Central", "region": "US Central", "site": "UW",
             "capacity_gbps": 2, "unmetered": False},
            {"id": "cool", "provider": "GCP", "peering": "US West 1", "region": "US West 1", "site": "UW",
             "capacity_gbps": 5, "unmetered": False},
        ],
        "ramp": [
            {"t_start_s": 0.0, "counts": {"hot": {"V100-PCIe": hot}, "cool": {"V100-PCIe": cool}}},
            {"t_start_s": 1800.0, "counts": {"hot": {"V100-PCIe": hot}, "cool": {"V100-PCIe": cool}}},
            {"t_start_s": 5 * 3600.0, "counts": {}},
        ],
        "sim": {"timeout_s": 3600.0, "sample_s": 60.0, "seed": 3},
    }


WORKFLOW_LOGS = {
    "gcp_happy.log": [
        (0.0, "GCP", "gcp-uscentral1-uw-1", "create_vpc", "CloudUser"),
        (0.1, "GCP", "gcp-uscentral1-uw-1", "create_subnets", "CloudUser"),
        (0.2, "GCP", "gcp-uscentral1-uw-1", "create_cloud_router", "CloudUser"),
        (0.3, "GCP", "gcp-uscentral1-uw-1", "create_interconnect", "CloudUser"),
        (1.0, "GCP", "gcp-uscentral1-uw-1", "onprem_oess_routing", "OnPremNetworkEngineer"),
        (11.0, "GCP", "gcp-uscentral1-uw-1", "destroy_cloud_router", "CloudUser"),
    ],
    "azure_happy.log": [
        (0.0, "Azure", "azure-eastus-uw-1", "create_vnet", "CloudUser"),
        (0.1, "Azure", "azure-eastus-uw-1", "create_gateway_subnet", "CloudUser"),
        (0.5, "Azure", "azure-eastus-uw-1", "create_expressroute", "CloudUser"),
        (0.9, "Azure", "azure-eastus-uw-1", "create_vng", "CloudUser"),
        (1.0, "Azure", "azure-eastus-uw-1", "create_connection", "CloudUser"),
        (2.0, "Azure", "azure-eastus-uw-1", "onprem_oess_routing", "OnPremNetworkEngineer"),
        (26.0, "Azure", "azure-eastus-uw-1", "onprem_initiate_teardown", "OnPremNetworkEngineer"),
        (26.5, "Azure", "azure-eastus-uw-1", "user_delete_expressroute", "CloudUser"),
        (28.5, "Azure", "azure-eastus-uw-1", "onprem_delete_expressroute", "OnPremNetworkEngineer"),
    ],
    "aws_happy.log": [
        (0.0, "AWS", "aws-use1-uw-1", "onprem_oess_request", "OnPremNetworkEngineer"),
        (0.5, "AWS", "aws-use1-uw-1", "accept_direct_connect", "CloudUser"),
        (0.6, "AWS", "aws-use1-uw-1", "create_vpc", "CloudUser"),
        (0.7, "AWS", "aws-use1-uw-1", "create_subnets", "CloudUser"),
        (0.8, "AWS", "aws-use1-uw-1", "create_internet_router", "CloudUser"),
        (0.9, "AWS", "aws-use1-uw-1", "create_vpg", "CloudUser"),
        (1.0, "AWS", "aws-use1-uw-1", "attach_vpg_vpc", "CloudUser"),
        (1.1, "AWS", "aws-use1-uw-1", "create_dcg", "CloudUser"),
        (1.5, "AWS", "aws-use1-uw-1", "create_vif", "CloudUser"),
        (1.6, "AWS", "aws-use1-uw-1", "configure_routes", "CloudUser"),
        (1.7, "AWS", "aws-use1-uw-1", "attach_dcg_vpg", "CloudUser"),
        (2.5, "AWS", "aws-use1-uw-1", "onprem_finalize", "OnPremNetworkEngineer"),
        (29.5, "AWS", "aws-use1-uw-1", "delete_vif", "CloudUser"),
    ],
}
WORKFLOW_LOGS["aws_user_initiated.log"] = WORKFLOW_LOGS["aws_happy.log"][1:]
_az = list(WORKFLOW_LOGS["azure_happy.log"])
_az[2], _az[3] = (0.5, *_az[3][1:]), (0.9, *_az[2][1:])
WORKFLOW_LOGS["azure_vng_first.log"] = _az


def write_log(path: Path, rows) -> None:
    lines = ["t_h,provider,link_id,step,actor"]
    lines += [f"{t},{p},{link},{step},{actor}" for t, p, link, step, actor in rows]
    path.write_text("\n".join(lines) + "\n")


def dump(path: Path, data) -> None:
    path.write_text(yaml.safe_dump(data, sort_keys=False, width=120))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "scenarios"))
    ap.add_argument("--main-scale", type=float, default=1.06,
                    help="multiplier on main-run fleet size (calibration knob)")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump(out / "pricing.yaml", catalog_to_dict(default_catalog()))
    dump(out / "mainrun.scenario", mainrun(args.main_scale))
    dump(out / "validation.scenario", validation())
    dump(out / "congested.scenario", congested())
    for name, rows in WORKFLOW_LOGS.items():
        write_log(out / name, rows)


if __name__ == "__main__":
    main()
