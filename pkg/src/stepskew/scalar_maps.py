"""One-dimensional building blocks: the two drift maps, the sawtooth map,
and the smooth plateau (hat) functions used by the coupling term.

Everything here is scalar and exact where the geometry demands exactness:
the sawtooth fixes every lattice point m*h to the last bit (see util.sinpi),
and hat functions vanish identically outside their support with closed-form
range hulls on intervals.
"""

from __future__ import annotations

import enum
import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .params import Params
from .util import I_HI, I_LO, cospi, interval_cospi, sinpi

__all__ = [
    "ScalarMapId",
    "HatSpec",
    "hat_eval",
    "hat_derivative",
    "hat_range",
    "hat_deriv_bound",
    "hat_deriv_range",
    "scalar_eval",
    "scalar_derivative",
    "scalar_inverse",
    "scalar_deriv_range",
    "g_fixed_points",
    "bisect_increasing",
]


class ScalarMapId(enum.Enum):
    F0 = "f0"  # slow drift toward 0
    F1 = "f1"  # contraction toward 1
    G0 = "g0"  # sawtooth ladder below 1/4, contraction above
    G1 = "g1"  # same as F1, used on the deeper coordinates


# ---------------------------------------------------------------------------
# hat functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HatSpec:
    """C^1 plateau: 0 off [ka, kd], amplitude on [kb, kc], monotone ramps.

    Each ramp is the integral of a trapezoid with raised-cosine shoulders,
    chosen so the ramp has maximum slope exactly 1.01*amplitude/(kb-ka) and
    reaches the plateau with zero derivative at both ends.
    """

    ka: float
    kb: float
    kc: float
    kd: float
    amplitude: float

    def __post_init__(self):
        if not (self.ka < self.kb <= self.kc < self.kd):
            raise ValueError("hat knots must satisfy ka < kb <= kc < kd")
        if self.amplitude <= 0.0:
            raise ValueError("hat amplitude must be positive")
        if abs((self.kb - self.ka) - (self.kd - self.kc)) > 1e-15 * (self.kd - self.ka):
            raise ValueError("hat ramps must have equal width")


def _ramp_params(spec: HatSpec) -> tuple[float, float, float]:
    T = spec.kb - spec.ka
    w = T * (0.01 / 1.01)
    H = 1.01 * spec.amplitude / T
    return T, w, H


def _rise(spec: HatSpec, t: float) -> float:
    """Ramp value at offset t in [0, T]; integrates shoulders exactly."""
    T, w, H = _ramp_params(spec)
    if t <= 0.0:
        return 0.0
    if t >= T:
        return spec.amplitude
    if t < w:
        return 0.5 * H * (t - (w / math.pi) * math.sin(math.pi * t / w))
    if t <= T - w:
        return 0.5 * H * w + H * (t - w)
    s = T - t
    return spec.amplitude - 0.5 * H * (s - (w / math.pi) * math.sin(math.pi * s / w))


def _rise_deriv(spec: HatSpec, t: float) -> float:
    T, w, H = _ramp_params(spec)
    if t <= 0.0 or t >= T:
        return 0.0
    if t < w:
        return 0.5 * H * (1.0 - math.cos(math.pi * t / w))
    if t <= T - w:
        return H
    return 0.5 * H * (1.0 - math.cos(math.pi * (T - t) / w))


def hat_eval(spec: HatSpec, x: float) -> float:
    if x <= spec.ka or x >= spec.kd:
        return 0.0
    if x < spec.kb:
        return _rise(spec, x - spec.ka)
    if x <= spec.kc:
        return spec.amplitude
    return _rise(spec, spec.kd - x)


def hat_derivative(spec: HatSpec, x: float) -> float:
    if x <= spec.ka or x >= spec.kd:
        return 0.0
    if x < spec.kb:
        return _rise_deriv(spec, x - spec.ka)
    if x <= spec.kc:
        return 0.0
    return -_rise_deriv(spec, spec.kd - x)


def hat_deriv_bound(spec: HatSpec) -> float:
    """Exact sup of |hat'|: the trapezoid plateau height."""
    return 1.01 * spec.amplitude / (spec.kb - spec.ka)


def hat_deriv_range(spec: HatSpec, lo: float, hi: float) -> tuple[float, float]:
    """Exact hull of hat' over [lo, hi].

    The derivative is piecewise monotone: it climbs from 0 to the flat
    maximum H on the rising ramp (shoulders of width w at both ends),
    vanishes on the plateau and outside the support, and mirrors to -H on
    the falling ramp.  Endpoint values plus the flat extremes (when the
    interval touches their segments) and zero (when it touches a zero set)
    span the hull.
    """
    if hi < lo:
        raise ValueError("empty interval")
    T, w, H = _ramp_params(spec)
    vals = [hat_derivative(spec, lo), hat_derivative(spec, hi)]
    if lo <= spec.kb - w and hi >= spec.ka + w:
        vals.append(H)
    if lo <= spec.kd - w and hi >= spec.kc + w:
        vals.append(-H)
    touches_zero = (
        lo <= spec.ka
        or hi >= spec.kd
        or (lo <= spec.kc and hi >= spec.kb)
    )
    if touches_zero:
        vals.append(0.0)
    return (min(vals), max(vals))


def hat_range(spec: HatSpec, lo: float, hi: float) -> tuple[float, float]:
    """Exact hull of hat values over [lo, hi].

    The hat is piecewise monotone with knots at ka, kb, kc, kd, so the hull
    is spanned by the endpoint values plus the plateau (if touched) and zero
    (if the interval leaves the support).
    """
    if hi < lo:
        raise ValueError("empty interval")
    vals = [hat_eval(spec, lo), hat_eval(spec, hi)]
    if lo <= spec.kc and hi >= spec.kb:
        vals.append(spec.amplitude)
    if lo < spec.kb or hi > spec.kc:
        # interval reaches off-plateau territory; minimum there is attained
        # at an endpoint unless the interval exits the support entirely
        if lo <= spec.ka or hi >= spec.kd:
            vals.append(0.0)
    return (min(vals), max(vals))


def hat_eval_vec(spec: HatSpec, x: np.ndarray) -> np.ndarray:
    """Vectorized hat values (grids only; scalar path stays exact)."""
    T, w, H = _ramp_params(spec)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    up = (x > spec.ka) & (x < spec.kb)
    plateau = (x >= spec.kb) & (x <= spec.kc)
    down = (x > spec.kc) & (x < spec.kd)
    out[plateau] = spec.amplitude

    def ramp(t):
        v = np.where(
            t < w,
            0.5 * H * (t - (w / np.pi) * np.sin(np.pi * np.minimum(t, w) / w)),
            0.5 * H * w + H * (t - w),
        )
        s = T - t
        v = np.where(
            t > T - w,
            spec.amplitude
            - 0.5 * H * (s - (w / np.pi) * np.sin(np.pi * np.maximum(s, 0.0) / w)),
            v,
        )
        return v

    out[up] = ramp(x[up] - spec.ka)
    out[down] = ramp(spec.kd - x[down])
    return out


def hat_derivative_vec(spec: HatSpec, x: np.ndarray) -> np.ndarray:
    T, w, H = _ramp_params(spec)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)

    def dramp(t):
        v = np.where(
            t < w,
            0.5 * H * (1.0 - np.cos(np.pi * np.minimum(t, w) / w)),
            H,
        )
        v = np.where(
            t > T - w,
            0.5 * H * (1.0 - np.cos(np.pi * np.maximum(T - t, 0.0) / w)),
            v,
        )
        return v

    up = (x > spec.ka) & (x < spec.kb)
    down = (x > spec.kc) & (x < spec.kd)
    out[up] = dramp(x[up] - spec.ka)
    out[down] = -dramp(spec.kd - x[down])
    return out


# ---------------------------------------------------------------------------
# the four scalar maps
# ---------------------------------------------------------------------------


def _flag_domain(x: float) -> None:
    if x < I_LO - 1e-9 or x > I_HI + 1e-9:
        _warnings.warn(
            f"scalar map evaluated at x = {x}, outside the reference "
            f"interval [{I_LO}, {I_HI}]",
            RuntimeWarning,
            stacklevel=3,
        )


def _g0(p: Params, x: float) -> float:
    if x >= 0.25:
        return 0.25 + (2.0 / 3.0) * (x - 0.25)
    if x >= 0.0:
        return x - (p.h / (3.0 * math.pi)) * sinpi(x / p.h)
    return (2.0 / 3.0) * x


def _g0_deriv(p: Params, x: float) -> float:
    if x >= 0.25 or x < 0.0:
        return 2.0 / 3.0
    return 1.0 - (1.0 / 3.0) * cospi(x / p.h)


def bisect_increasing(fn, lo: float, hi: float, target: float, tol: float = 1e-12) -> float:
    """Solve fn(x) = target for increasing fn on a bracketing [lo, hi]."""
    flo = fn(lo) - target
    fhi = fn(hi) - target
    if flo > 0.0 or fhi < 0.0:
        raise ValueError(
            f"bracket [{lo}, {hi}] does not straddle the target ({flo:+.3e}, {fhi:+.3e})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) - target <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _g0_inverse(p: Params, y: float, tol: float = 1e-12) -> float:
    if y >= 0.25:
        return 0.25 + 1.5 * (y - 0.25)
    if y <= 0.0:
        return 1.5 * y
    # middle piece: strictly increasing with slope in [2/3, 4/3]; bracket by
    # the extreme slopes around the identity-pinned lattice
    lo = max(0.0, y - p.h / (3.0 * math.pi))
    hi = min(0.25, y + p.h / (3.0 * math.pi))
    return bisect_increasing(lambda t: _g0(p, t), lo, hi, y, tol)


def scalar_eval(p: Params, map_id: ScalarMapId, x: float) -> float:
    _flag_domain(x)
    if map_id is ScalarMapId.F0:
        return p.lam * x
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return 1.0 - (2.0 / 3.0) * (1.0 - x)
    return _g0(p, x)


def scalar_derivative(p: Params, map_id: ScalarMapId, x: float) -> float:
    if map_id is ScalarMapId.F0:
        return p.lam
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return 2.0 / 3.0
    return _g0_deriv(p, x)


def scalar_inverse(p: Params, map_id: ScalarMapId, y: float, tol: float = 1e-12) -> float:
    if map_id is ScalarMapId.F0:
        return y / p.lam
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return 1.0 - 1.5 * (1.0 - y)
    return _g0_inverse(p, y, tol)


def scalar_eval_vec(p: Params, map_id: ScalarMapId, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if map_id is ScalarMapId.F0:
        return p.lam * x
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return 1.0 - (2.0 / 3.0) * (1.0 - x)
    s = x / p.h
    m = np.round(s)
    f = s - m
    saw = np.sin(np.pi * f)
    saw[f == 0.0] = 0.0
    saw = np.where(m.astype(np.int64) % 2 == 0, saw, -saw)
    mid = x - (p.h / (3.0 * np.pi)) * saw
    return np.where(
        x >= 0.25,
        0.25 + (2.0 / 3.0) * (x - 0.25),
        np.where(x >= 0.0, mid, (2.0 / 3.0) * x),
    )


def scalar_derivative_vec(p: Params, map_id: ScalarMapId, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if map_id is ScalarMapId.F0:
        return np.full_like(x, p.lam)
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return np.full_like(x, 2.0 / 3.0)
    s = x / p.h
    m = np.round(s)
    f = s - m
    cs = np.cos(np.pi * f)
    cs = np.where(m.astype(np.int64) % 2 == 0, cs, -cs)
    mid = 1.0 - cs / 3.0
    return np.where((x >= 0.25) | (x < 0.0), 2.0 / 3.0, mid)


def scalar_deriv_range(
    p: Params, map_id: ScalarMapId, lo: float, hi: float
) -> tuple[float, float]:
    """Exact hull of the derivative over [lo, hi]."""
    if hi < lo:
        raise ValueError("empty interval")
    if map_id is ScalarMapId.F0:
        return (p.lam, p.lam)
    if map_id in (ScalarMapId.F1, ScalarMapId.G1):
        return (2.0 / 3.0, 2.0 / 3.0)
    two3 = 2.0 / 3.0
    mn, mx = math.inf, -math.inf
    if hi >= 0.25 or lo < 0.0:
        mn = min(mn, two3)
        mx = max(mx, two3)
    m_lo, m_hi = max(lo, 0.0), min(hi, 0.25)
    if m_lo <= m_hi:
        c_mn, c_mx = interval_cospi(m_lo / p.h, m_hi / p.h)
        mn = min(mn, 1.0 - c_mx / 3.0)
        mx = max(mx, 1.0 - c_mn / 3.0)
    return (mn, mx)


def g_fixed_points(p: Params) -> tuple[np.ndarray, np.ndarray]:
    """The 4n+1 sawtooth fixed points m*h and their multipliers.

    Multipliers alternate: 2/3 at even lattice indices (attracting within
    the ladder), 4/3 at odd indices (repelling).
    """
    m = np.arange(0, 4 * p.n + 1, dtype=np.int64)
    pts = m * p.h
    mult = 1.0 - (1.0 / 3.0) * np.where(m % 2 == 0, 1.0, -1.0)
    return pts, mult
