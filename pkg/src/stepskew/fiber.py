"""Fiber maps over k-bit symbols: evaluation, inverses, Jacobians, and
rigorous box images.

The family is triangular: coordinate 1 follows the drift map selected by the
first bit; coordinate j >= 2 follows the sawtooth or the contraction selected
by bit j, minus a coupling term that is active at coordinate j exactly when
bits 1..j-1 are all 1 and bit j is 0.  At most one coordinate is coupled per
symbol (the position of the first 0 bit, when it is not the first bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Box, Params
from .scalar_maps import (
    HatSpec,
    ScalarMapId,
    bisect_increasing,
    hat_derivative,
    hat_deriv_bound,
    hat_eval,
    hat_range,
    scalar_deriv_range,
    scalar_derivative,
    scalar_eval,
    scalar_inverse,
)
from .util import out_hi, out_lo

__all__ = [
    "SymbolVector",
    "FiberFamily",
    "make_family",
    "all_symbols",
    "coupling_position",
    "fiber_eval",
    "fiber_inverse",
    "fiber_jacobian",
    "fiber_box_image",
    "coupling_term",
    "spectral_norm_2x2",
    "min_singular_2x2",
]

SymbolVector = tuple[int, ...]


def all_symbols(k: int) -> list[SymbolVector]:
    """All 2**k symbols, ordered by their binary code (bit 1 is the MSB)."""
    out = []
    for code in range(2**k):
        out.append(tuple((code >> (k - 1 - j)) & 1 for j in range(k)))
    return out


def symbol_code(s: SymbolVector) -> int:
    code = 0
    for b in s:
        code = (code << 1) | int(b)
    return code


def _check_symbol(s: SymbolVector, k: int) -> None:
    if len(s) != k:
        raise ValueError(f"symbol has {len(s)} bits, expected {k}")
    if any(b not in (0, 1) for b in s):
        raise ValueError(f"symbol bits must be 0/1, got {s}")


def coupling_position(s: SymbolVector) -> int:
    """0-based coordinate where the coupling acts, or -1.

    The coupled coordinate is the first 0 bit provided every earlier bit is
    1 and the 0 is not in the leading position.
    """
    for j, b in enumerate(s):
        if b == 0:
            return j if j >= 1 else -1
    return -1


@dataclass(frozen=True)
class FiberFamily:
    """Parameters plus the two hat functions of the coupling term.

    alpha is the unit-amplitude plateau in the driving coordinate, supported
    on [nu, 4nu] with plateau [2nu, 3nu]; beta is the 1/(10n)-amplitude
    plateau in the driven coordinate, supported on [-2nu, 1/4 + 2nu] with
    plateau [0, 1/4].  Their product is exactly 1/(10n) on the drop window
    and vanishes outside the coupling region.
    """

    p: Params
    alpha: HatSpec
    beta: HatSpec


def make_family(p: Params) -> FiberFamily:
    nu = p.nu
    alpha = HatSpec(ka=nu, kb=2.0 * nu, kc=3.0 * nu, kd=4.0 * nu, amplitude=1.0)
    beta = HatSpec(
        ka=-2.0 * nu, kb=0.0, kc=0.25, kd=0.25 + 2.0 * nu,
        amplitude=1.0 / (10.0 * p.n),
    )
    return FiberFamily(p=p, alpha=alpha, beta=beta)


def coupling_term(fam: FiberFamily, x) -> float:
    """alpha(x_{k-1}) * beta(x_k): the active coupling for the symbol
    1...10, evaluated at the point's last two coordinates."""
    return hat_eval(fam.alpha, float(x[-2])) * hat_eval(fam.beta, float(x[-1]))


def _first_map(s0: int) -> ScalarMapId:
    return ScalarMapId.F1 if s0 else ScalarMapId.F0


def _deep_map(b: int) -> ScalarMapId:
    return ScalarMapId.G1 if b else ScalarMapId.G0


def fiber_eval(fam: FiberFamily, s: SymbolVector, x) -> np.ndarray:
    """Apply the fiber map of symbol s at point x (length k)."""
    p = fam.p
    _check_symbol(s, p.k)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.k,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.k},)")
    cp = coupling_position(s)
    out = np.empty_like(x)
    out[0] = scalar_eval(p, _first_map(s[0]), float(x[0]))
    for j in range(1, p.k):
        v = scalar_eval(p, _deep_map(s[j]), float(x[j]))
        if j == cp:
            v -= hat_eval(fam.alpha, float(x[j - 1])) * hat_eval(fam.beta, float(x[j]))
        out[j] = v
    return out


def fiber_inverse(fam: FiberFamily, s: SymbolVector, y, tol: float = 1e-12) -> np.ndarray:
    """Preimage of y under the fiber map of symbol s.

    Solved coordinate by coordinate in increasing order; the coupled
    coordinate needs a bisection because the coupling shifts the sawtooth by
    an amount depending on the already-recovered previous coordinate.
    """
    p = fam.p
    _check_symbol(s, p.k)
    y = np.asarray(y, dtype=np.float64)
    cp = coupling_position(s)
    out = np.empty_like(y)
    out[0] = scalar_inverse(p, _first_map(s[0]), float(y[0]), tol)
    for j in range(1, p.k):
        yj = float(y[j])
        if j != cp:
            out[j] = scalar_inverse(p, _deep_map(s[j]), yj, tol)
            continue
        amp = hat_eval(fam.alpha, float(out[j - 1]))
        if amp == 0.0:
            out[j] = scalar_inverse(p, ScalarMapId.G0, yj, tol)
            continue

        def coupled(t: float) -> float:
            return scalar_eval(p, ScalarMapId.G0, t) - amp * hat_eval(fam.beta, t)

        # the coupled map is increasing: g0' >= 2/3 while |amp*beta'| <= 1/18
        lo = scalar_inverse(p, ScalarMapId.G0, yj, tol) - tol
        hi = scalar_inverse(p, ScalarMapId.G0, yj + amp * fam.beta.amplitude, tol) + tol
        out[j] = bisect_increasing(coupled, lo, hi, yj, tol)
    return out


def fiber_jacobian(fam: FiberFamily, s: SymbolVector, x) -> np.ndarray:
    """k x k Jacobian at x: lower bidiagonal with at most one off-diagonal
    entry, at the coupled coordinate."""
    p = fam.p
    _check_symbol(s, p.k)
    x = np.asarray(x, dtype=np.float64)
    cp = coupling_position(s)
    J = np.zeros((p.k, p.k), dtype=np.float64)
    J[0, 0] = scalar_derivative(p, _first_map(s[0]), float(x[0]))
    for j in range(1, p.k):
        d = scalar_derivative(p, _deep_map(s[j]), float(x[j]))
        if j == cp:
            a = hat_eval(fam.alpha, float(x[j - 1]))
            da = hat_derivative(fam.alpha, float(x[j - 1]))
            b = hat_eval(fam.beta, float(x[j]))
            db = hat_derivative(fam.beta, float(x[j]))
            d -= a * db
            J[j, j - 1] = -da * b
        J[j, j] = d
    return J


def coupling_deriv_bounds(fam: FiberFamily) -> tuple[float, float]:
    """Global sup bounds (|alpha' * beta|, |alpha * beta'|)."""
    offdiag = hat_deriv_bound(fam.alpha) * fam.beta.amplitude
    diag = 1.0 * hat_deriv_bound(fam.beta)
    return offdiag, diag


# ---------------------------------------------------------------------------
# box images
# ---------------------------------------------------------------------------


def _scalar_interval_image(
    p: Params, map_id: ScalarMapId, lo: float, hi: float
) -> tuple[float, float]:
    """Image of [lo, hi] under a monotone increasing scalar map."""
    return (
        scalar_eval(p, map_id, lo),
        scalar_eval(p, map_id, hi),
    )


def fiber_box_image(
    fam: FiberFamily, s: SymbolVector, box: Box, outward: bool = True
) -> Box:
    """Rigorous enclosure of the image of a box.

    Every scalar map is monotone increasing, so uncoupled coordinates map to
    endpoint images; the coupled coordinate subtracts the exact product hull
    of the two hat ranges.  With outward=True every bound takes one extra
    ulp outward, making the enclosure sound against rounding of the
    endpoint evaluations themselves.
    """
    p = fam.p
    _check_symbol(s, p.k)
    if box.dim != p.k:
        raise ValueError(f"box has dim {box.dim}, expected {p.k}")
    if box.is_empty:
        return box
    cp = coupling_position(s)
    lo = list(box.lo)
    hi = list(box.hi)
    new_lo = [0.0] * p.k
    new_hi = [0.0] * p.k
    new_lo[0], new_hi[0] = _scalar_interval_image(p, _first_map(s[0]), lo[0], hi[0])
    for j in range(1, p.k):
        a, b = _scalar_interval_image(p, _deep_map(s[j]), lo[j], hi[j])
        if j == cp:
            amp_lo, amp_hi = hat_range(fam.alpha, lo[j - 1], hi[j - 1])
            bet_lo, bet_hi = hat_range(fam.beta, lo[j], hi[j])
            # both hats are nonnegative, so the product hull is the product
            # of the endpoints
            a -= amp_hi * bet_hi
            b -= amp_lo * bet_lo
        new_lo[j], new_hi[j] = a, b
    if outward:
        new_lo = [out_lo(v) for v in new_lo]
        new_hi = [out_hi(v) for v in new_hi]
    return Box.make(new_lo, new_hi)


# ---------------------------------------------------------------------------
# 2x2 norms
# ---------------------------------------------------------------------------


def spectral_norm_2x2(a: float, b: float, c: float) -> float:
    """Largest singular value of [[a, 0], [b, c]]."""
    t = a * a + b * b + c * c
    det = a * c
    disc = t * t - 4.0 * det * det
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (t + math.sqrt(disc)))


def min_singular_2x2(a: float, b: float, c: float) -> float:
    """Smallest singular value of [[a, 0], [b, c]]."""
    smax = spectral_norm_2x2(a, b, c)
    if smax == 0.0:
        return 0.0
    return abs(a * c) / smax


def spectral_norm_2x2_vec(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    t = a * a + b * b + c * c
    det = a * c
    disc = np.maximum(t * t - 4.0 * det * det, 0.0)
    return np.sqrt(0.5 * (t + np.sqrt(disc)))


def min_singular_2x2_vec(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    smax = spectral_norm_2x2_vec(a, b, c)
    return np.where(smax == 0.0, 0.0, np.abs(a * c) / np.maximum(smax, 1e-300))
