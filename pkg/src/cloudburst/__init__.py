"""Cost model, flow-level simulator and link planner for egress-heavy cloud bursts."""

__version__ = "0.1.0"
