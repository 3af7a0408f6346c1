"""Command-line entry point.

Exit status: 0 success (warnings allowed), 1 validation error, 2 I/O or
parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bundle as bundle_io
from .errors import DomainError, ParseError, ValidationError
from .lifecycle import parse_event_log, validate_log
from .netsim import simulate
from .planner import plan_portfolio
from .report import render_text, write_report
from .scenario import load_scenario

log = logging.getLogger("cloudburst")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _load(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    if args.price_point is not None:
        scenario = scenario.with_price_point(args.price_point)
    return scenario


def cmd_plan(args) -> int:
    scenario = _load(args)
    portfolio = plan_portfolio(scenario.forecast, scenario.slots, scenario.plan.coverage_factor,
                               scenario.plan.duration_h, scenario.catalog)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / bundle_io.PLAN_FILE).write_text(portfolio.to_json())
    providers = sorted({link.provider for link in portfolio.links})
    print(f"{len(portfolio.links)} links across {len(providers)} providers "
          f"({', '.join(providers) or '-'}), cost ${portfolio.cost_usd:,.2f}")
    for r in portfolio.regions:
        if r.shortfall:
            log.warning("shortfall for %s: %.1f Gbps available, %.1f Gbps targeted",
                        r.demand.key, r.coverage_gbps, r.target_gbps)
    if portfolio.errors:
        for e in portfolio.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load(args)
    scenario.validate()
    trace = simulate(scenario)
    summary = bundle_io.write_bundle(args.out, scenario, trace)
    eff = summary["effective_usd_per_tb"]
    print(f"delivered {summary['delivered_tb']:.3f} TB in {summary['completed']} transfers, "
          f"{summary['failed_timeout']} timeouts")
    print(f"effective network cost {'n/a' if eff is None else f'${eff:.2f}/TB'}")
    print(f"wasted compute {summary['wasted_compute_hours']:.2f} h, "
          f"upload hold {summary['transfer_hold_hours']:.2f} h")
    for site, peak in summary["peak_site_gbps"].items():
        print(f"peak to {site}: {peak:.1f} Gbps ({peak / 8:.2f} GBps)")
    return EXIT_OK


def cmd_report(args) -> int:
    b = bundle_io.read_bundle(args.bundle)
    out = Path(args.out) if args.out_given else Path(args.bundle)
    print(render_text(b), end="")
    write_report(b, out, figures=not args.no_figures)
    return EXIT_OK


def cmd_workflow(args) -> int:
    try:
        text = Path(args.log).read_text()
    except OSError as exc:
        raise ParseError(f"{args.log}: {exc.strerror}") from None
    verdicts = validate_log(parse_event_log(text))
    result = {
        "ok": all(v["ok"] for v in verdicts.values()),
        "errors": [e for v in verdicts.values() for e in v["errors"]],
        "billing_hours": sum(v["billing_hours"] for v in verdicts.values()),
        "links": verdicts,
    }
    body = json.dumps(result, indent=2, sort_keys=True) + "\n"
    print(body, end="")
    if args.out_given:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "workflow.json").write_text(body)
    return EXIT_OK if result["ok"] else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the scenario seed")
    common.add_argument("--price-point", type=float, default=argparse.SUPPRESS,
                        help="resolve price bands at this fraction (0 = low, 1 = high)")

    parser = argparse.ArgumentParser(prog="cloudburst", parents=[common],
                                     description="Dedicated-link egress cost model and flow simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="choose a dedicated-link portfolio")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="simulate a scenario and write a run bundle")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="cost tables and figures from a run bundle")
    p.add_argument("bundle")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("workflow", parents=[common], help="validate a provisioning event log")
    p.add_argument("log")
    p.set_defaults(func=cmd_workflow)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.out_given = hasattr(args, "out")
    if not args.out_given:
        args.out = "out"
    for name in ("seed", "price_point"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.price_point is not None and not 0 <= args.price_point <= 1:
        print("error: --price-point must lie in [0, 1]", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        for e in exc.errors:
            print(f"invalid: {e}", file=sys.stderr)
        return EXIT_INVALID
    except DomainError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
