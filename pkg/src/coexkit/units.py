"""Unit conversions used at configuration boundaries.

Everything inside the package works in SI linear units (mW, meters, Hz,
nodes per m^2).  dBm and per-km^2 values only appear in config files and
CLI flags, and are converted on the way in/out with the helpers below.
"""

import math

SPEED_OF_LIGHT = 3.0e8  # m/s, free-space


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(mw)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        raise ValueError("ratio must be positive to express in dB")
    return 10.0 * math.log10(x)


def per_km2_to_per_m2(rate: float) -> float:
    return rate * 1e-6


def per_m2_to_per_km2(rate: float) -> float:
    return rate * 1e6
