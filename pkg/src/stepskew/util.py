"""Shared numeric helpers: lattice-exact trig, outward rounding, stable JSON."""

from __future__ import annotations

import json
import math
from typing import Any

# Reference interval for the one-dimensional maps.  Evaluation outside it is
# legal (the formulas are global) but flagged by callers that care.
I_LO = -1.0
I_HI = 2.0


def sinpi(s: float) -> float:
    """sin(pi*s), exact at integers and half-integers.

    The argument is reduced as s = m + f with m = round(s) and |f| <= 1/2
    before multiplying by pi, so sinpi(j) == 0.0 bit-exactly for integer j.
    This matters: the sawtooth map's fixed points sit at integer multiples of
    the tooth width and must be fixed to the last bit.
    """
    m = round(s)
    f = s - m
    if f == 0.0:
        return 0.0
    if f == 0.5:
        v = 1.0
    elif f == -0.5:
        v = -1.0
    else:
        v = math.sin(math.pi * f)
    return -v if m % 2 else v


def cospi(s: float) -> float:
    """cos(pi*s), exact (+-1) at integers and 0 at half-integers."""
    m = round(s)
    f = s - m
    if f == 0.0:
        v = 1.0
    elif f == 0.5 or f == -0.5:
        v = 0.0
    else:
        v = math.cos(math.pi * f)
    return -v if m % 2 else v


def interval_cospi(s_lo: float, s_hi: float) -> tuple[float, float]:
    """Exact range of cos(pi*s) over [s_lo, s_hi].

    cos(pi*s) has extrema exactly at the integers, alternating +1/-1, and is
    monotone between them, so the hull is determined by the endpoint values
    plus whether the interval contains an even or odd integer.
    """
    if s_hi < s_lo:
        raise ValueError("empty interval")
    if s_hi - s_lo >= 2.0:
        return (-1.0, 1.0)
    lo_v = cospi(s_lo)
    hi_v = cospi(s_hi)
    mn = min(lo_v, hi_v)
    mx = max(lo_v, hi_v)
    # even integer inside -> maximum +1; odd integer inside -> minimum -1
    j = math.ceil(s_lo)
    while j <= s_hi:
        if j % 2 == 0:
            mx = 1.0
        else:
            mn = -1.0
        j += 1
    return (mn, mx)


def out_lo(v: float) -> float:
    """Round one step toward -inf (outward for a lower bound)."""
    return math.nextafter(v, -math.inf)


def out_hi(v: float) -> float:
    """Round one step toward +inf (outward for an upper bound)."""
    return math.nextafter(v, math.inf)


def stable_json_dumps(obj: Any) -> str:
    """Canonical JSON used for every file the tool writes.

    Sorted keys, no trailing whitespace games, shortest round-trip floats.
    Byte-identical output for identical inputs is a hard requirement of the
    reproducibility contract, so nothing time- or locale-dependent may enter.
    """
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True)


def write_json(path, obj: Any) -> None:
    with open(path, "w") as fh:
        fh.write(stable_json_dumps(obj))
        fh.write("\n")
