"""Unit conventions and conversions.

Internal SI convention: flows in m3/s, lengths/heads/elevations in m,
diameters in m. Two deliberate exceptions, both converted at the boundary:
pipe roughness stays in mm (friction-factor inputs are quoted that way) and
user-facing flow rates are L/s.
"""

from __future__ import annotations

GRAVITY = 9.81  # m/s2

FLOW_UNIT_LPS = "L/s"
FLOW_UNIT_M3S = "m3/s"
HEAD_UNIT_M = "m"

KNOWN_UNITS = (FLOW_UNIT_LPS, HEAD_UNIT_M, FLOW_UNIT_M3S)


def lps_to_m3s(q):
    return q * 1e-3


def m3s_to_lps(q):
    return q * 1e3


def mm_to_m(x):
    return x * 1e-3


def m3_to_megalitres(v):
    # 1 ML = 1000 m3
    return v / 1000.0


def joules_to_kwh(e):
    return e / 3.6e6
