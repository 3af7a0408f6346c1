"""Unit conversions. Storage units are decimal (1 GB = 1e9 bytes, 1 TB = 1e12 bytes)."""

GB = 10**9
TB = 10**12
MB = 10**6


def gbps_to_bytes_per_s(gbps: float) -> float:
    return gbps * 1e9 / 8.0


def bytes_per_s_to_gbps(rate: float) -> float:
    return rate * 8.0 / 1e9


def tb_per_hour_to_gbps(tb_per_hour: float) -> float:
    return tb_per_hour * TB * 8.0 / 3600.0 / 1e9


def gbps_to_tb_per_hour(gbps: float) -> float:
    return gbps * 1e9 / 8.0 * 3600.0 / TB
