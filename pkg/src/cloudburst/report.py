"""Per-job cost tables and figures rendered from a run bundle."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bundle import FIG6_BIN_S, Bundle  # noqa: E402
from .units import TB  # noqa: E402

TABLE_HEADER = ("gpu", "jobs", "compute_usd_per_job", "dedicated_network_usd_per_job",
                "default_network_usd_per_job")

plt.rcParams.update({
    "figure.figsize": (8, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 7,
    "savefig.dpi": 110,
})


@dataclass(frozen=True)
class GpuRow:
    gpu: str
    jobs: int
    compute_usd: float | None
    dedicated_usd: float
    default_usd: float


def per_job_costs(bundle: Bundle) -> list[GpuRow]:
    """Per-GPU-class average cost of one completed job.

    Network cost per job is the same for every class: networking spend
    spread over completed jobs, against the default route's price for the
    mean output size.
    """
    trace = bundle.trace
    completed = [o for o in trace.outcomes if o.completed]
    n = len(completed)
    if n:
        dedicated = float(bundle.cost.networking_usd) / n
        mean_tb = sum(o.bytes for o in completed) / n / TB
        default = mean_tb * bundle.summary["default_usd_per_tb"]
    else:
        dedicated = default = 0.0
    counts: dict[str, int] = {}
    for o in trace.outcomes:
        counts[o.gpu] = counts.get(o.gpu, 0) + 1
    rows = []
    for g in bundle.summary["gpus"]:
        if g["name"] not in counts:
            continue
        rows.append(GpuRow(g["name"], counts[g["name"]], g["cost_per_job_usd"], dedicated, default))
    return rows


def _money(x: float | None) -> str:
    return "n/a" if x is None else f"${x:,.2f}"


def render_text(bundle: Bundle) -> str:
    rows = per_job_costs(bundle)
    cost = bundle.cost.to_dict()
    s = bundle.summary
    lines = [
        f"Scenario {s['scenario']} (seed {s['seed']}, price point {s['price_point']})",
        "",
        f"{'GPU':<12}{'jobs':>8}{'compute/job':>14}{'dedicated/job':>16}{'default/job':>14}",
    ]
    for r in rows:
        lines.append(f"{r.gpu:<12}{r.jobs:>8}{_money(r.compute_usd):>14}{_money(r.dedicated_usd):>16}"
                     f"{_money(r.default_usd):>14}")
    if not rows:
        lines.append("(no jobs)")
    eff = cost["effective_usd_per_tb"]
    sav = cost["savings_fraction"]
    lines += [
        "",
        f"delivered           {cost['delivered_tb']:.3f} TB in {s['completed']} files "
        f"({s['failed_timeout']} timed out)",
        f"fixed link fees     {_money(cost['fixed_usd'])}",
        f"metered egress      {_money(cost['metered_usd'])}",
        f"compute             {_money(cost['compute_usd'])}",
        f"total               {_money(cost['total_usd'])}",
        f"effective network   {'n/a' if eff is None else f'${eff:.2f}/TB'}",
        f"default route       {_money(cost['counterfactual_default_usd'])}",
        f"savings             {'n/a' if sav is None else f'{sav:.1%}'}",
    ]
    return "\n".join(lines) + "\n"


def table_csv(bundle: Bundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in per_job_costs(bundle):
        w.writerow((r.gpu, r.jobs, "" if r.compute_usd is None else f"{r.compute_usd:.4f}",
                    f"{r.dedicated_usd:.4f}", f"{r.default_usd:.4f}"))
    return buf.getvalue()


def _legend(ax, **kw) -> None:
    if ax.get_legend_handles_labels()[0]:
        ax.legend(**kw)


def _hours(t: float) -> float:
    return t / 3600.0


def fig_site_throughput(bundle: Bundle, path: Path) -> None:
    fig, ax = plt.subplots()
    for site, series in bundle.trace.site_throughput().items():
        if series:
            ax.plot([_hours(t) for t, _ in series], [v for _, v in series], label=site, lw=1)
    ax.set_xlabel("time (h)")
    ax.set_ylabel("throughput (Gbps)")
    ax.set_title("Egress to on-prem storage")
    _legend(ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_delivered(bundle: Bundle, path: Path) -> None:
    _, curves = bundle.trace.delivered_volume("link")
    fig, ax = plt.subplots()
    for link, curve in curves.items():
        if curve:
            ax.step([_hours(t) for t, _ in curve], [b / TB for _, b in curve], where="post", lw=1, label=link)
    ax.set_xlabel("time (h)")
    ax.set_ylabel("delivered (TB)")
    ax.set_title("Cumulative data delivered, per link")
    if len(curves) <= 24:
        _legend(ax, ncol=3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_transfer_times(bundle: Bundle, path: Path) -> None:
    fig, ax = plt.subplots()
    links = sorted(bundle.trace.link_sites)
    for link in links:
        bins = [b for b in _bins_for(bundle, link)]
        if bins:
            ax.errorbar([_hours(b.t_start) for b in bins], [b.mean_s for b in bins],
                        yerr=[b.stddev_s for b in bins], lw=1, capsize=2, label=link)
    ax.set_xlabel("transfer start (h)")
    ax.set_ylabel("transfer time (s)")
    ax.set_title(f"Transfer times, {FIG6_BIN_S / 60:.0f}-minute bins")
    if len(links) <= 24:
        _legend(ax, ncol=3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _bins_for(bundle: Bundle, link: str):
    from .netsim.trace import transfer_time_stats

    return transfer_time_stats([o for o in bundle.trace.outcomes if o.link_id == link], FIG6_BIN_S)


def fig_fleet(bundle: Bundle, path: Path) -> None:
    """Compute held per link over time (jobs computing or uploading), in PFLOPS."""
    tflops = {g["name"]: g["tflops"] for g in bundle.summary["gpus"]}
    deltas: dict[str, dict[float, float]] = {}
    for o in bundle.trace.outcomes:
        d = deltas.setdefault(o.link_id, {})
        end = o.start_s + o.compute_s + o.transfer_s
        d[o.start_s] = d.get(o.start_s, 0.0) + tflops[o.gpu]
        d[end] = d.get(end, 0.0) - tflops[o.gpu]
    fig, ax = plt.subplots()
    grid = sorted({t for d in deltas.values() for t in d})
    if grid:
        stacks = []
        labels = []
        for link in sorted(deltas):
            d = deltas[link]
            level, ys = 0.0, []
            for t in grid:
                level += d.get(t, 0.0)
                ys.append(level / 1000.0)
            stacks.append(ys)
            labels.append(link)
        ax.stackplot([_hours(t) for t in grid], stacks, labels=labels, step="post")
        if len(labels) <= 24:
            _legend(ax, ncol=3, loc="upper left")
    ax.set_xlabel("time (h)")
    ax.set_ylabel("fp32 PFLOPS")
    ax.set_title("Busy compute per link")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


FIGURES = {
    "throughput_by_site.png": fig_site_throughput,
    "delivered_by_link.png": fig_delivered,
    "transfer_times.png": fig_transfer_times,
    "fleet_pflops.png": fig_fleet,
}


def write_report(bundle: Bundle, out_dir: str | Path, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    table = out / "per_job_costs.csv"
    table.write_text(table_csv(bundle))
    written.append(table)
    text = out / "report.txt"
    text.write_text(render_text(bundle))
    written.append(text)
    if figures:
        for name, draw in FIGURES.items():
            draw(bundle, out / name)
            written.append(out / name)
    return written
