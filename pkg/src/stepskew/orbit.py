"""Orbit engine: compiled step kernels, visit statistics, run-length
tracking, perturbations, ensembles, and rigorous word application.

The kernel applies one base letter per step.  At time t it first accounts
for the current state (region visits, zero-run windows, histogram), then
applies the letter at time t, then advances the per-coordinate run-length
counters.  A run length therefore always counts the zeros strictly before
the time at which a visit is checked, which is the convention the zero-run
implications are stated in.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .baseseq import BaseSequence, sample_base
from .fiber import FiberFamily, coupling_position, fiber_box_image, fiber_eval
from .params import Box, Params, RegionId, region_array_bundle, region_box
from .scalar_maps import ScalarMapId, scalar_eval
from .util import out_hi, out_lo

__all__ = [
    "OrbitEscapeError",
    "PerturbationSpec",
    "RegionStats",
    "OrbitResult",
    "EnsembleResult",
    "default_windows",
    "make_perturbation",
    "run_orbit",
    "run_ensemble",
    "apply_word",
    "apply_word_box",
    "perturbed_eval",
    "perturbed_inverse",
    "perturbed_jacobian",
    "psi_box_pad",
]


class OrbitEscapeError(RuntimeError):
    """An orbit left the absorbing cube; carries the time and state."""

    def __init__(self, t: int, x: np.ndarray):
        self.t = t
        self.x = np.asarray(x, dtype=np.float64)
        super().__init__(
            f"orbit escaped the absorbing cube at step {t}: x = {self.x.tolist()}"
        )


# ---------------------------------------------------------------------------
# compiled scalar pieces (mirror scalar_maps exactly, operation for
# operation, so compiled and interpreted trajectories agree bitwise)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _k_sinpi(s):
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
    if int(m) % 2 != 0:
        return -v
    return v


@njit(cache=True, nogil=True)
def _k_g0(x, h):
    if x >= 0.25:
        return 0.25 + (2.0 / 3.0) * (x - 0.25)
    if x >= 0.0:
        return x - (h / (3.0 * math.pi)) * _k_sinpi(x / h)
    return (2.0 / 3.0) * x


@njit(cache=True, nogil=True)
def _k_f1(x):
    return 1.0 - (2.0 / 3.0) * (1.0 - x)


@njit(cache=True, nogil=True)
def _k_hat(x, ka, kb, kc, kd, amp):
    if x <= ka or x >= kd:
        return 0.0
    if x >= kb and x <= kc:
        return amp
    T = kb - ka
    w = T * (0.01 / 1.01)
    H = 1.01 * amp / T
    if x < kb:
        t = x - ka
    else:
        t = kd - x
    if t <= 0.0:
        return 0.0
    if t >= T:
        return amp
    if t < w:
        return 0.5 * H * (t - (w / math.pi) * math.sin(math.pi * t / w))
    if t <= T - w:
        return 0.5 * H * w + H * (t - w)
    s = T - t
    return amp - 0.5 * H * (s - (w / math.pi) * math.sin(math.pi * s / w))


@njit(cache=True, nogil=True)
def _k_bump_add(x, centers, dirs, amps, widths):
    """Add the displacement field of one symbol's bumps to x, in place."""
    B = amps.shape[0]
    k = x.shape[0]
    for b in range(B):
        a = amps[b]
        if a == 0.0:
            continue
        w = widths[b]
        prod = 1.0
        for j in range(k):
            u = (x[j] - centers[b, j]) / w
            if u <= -1.0 or u >= 1.0:
                prod = 0.0
                break
            q = 1.0 - u * u
            prod *= q * q
        if prod == 0.0:
            continue
        for j in range(k):
            x[j] += a * dirs[b, j] * prod


@njit(cache=True, nogil=True)
def _k_step(x, bits, h, lam, ak, bk, pert_on, pc, pd, pa, pw, xnew):
    """One fiber step: letter `bits`, writing the image into xnew."""
    k = x.shape[0]
    # locate the coupled coordinate: first 0 after an all-1 prefix
    cp = -1
    for j in range(k):
        if bits[j] == 0:
            if j >= 1:
                cp = j
            break
    if bits[0] == 1:
        xnew[0] = _k_f1(x[0])
    else:
        xnew[0] = lam * x[0]
    for j in range(1, k):
        if bits[j] == 1:
            v = _k_f1(x[j])
        else:
            v = _k_g0(x[j], h)
        if j == cp:
            v -= _k_hat(x[j - 1], ak[0], ak[1], ak[2], ak[3], ak[4]) * _k_hat(
                x[j], bk[0], bk[1], bk[2], bk[3], bk[4]
            )
        xnew[j] = v
    if pert_on:
        code = 0
        for j in range(k):
            code = (code << 1) | int(bits[j])
        _k_bump_add(xnew, pc[code], pd[code], pa[code], pw[code])


@njit(cache=True, nogil=True)
def _k_run(
    letters, x0, t0, h, lam,
    ak, bk,
    pert_on, pc, pd, pa, pw,
    reg_lo, reg_hi, reg_lo_open, reg_hi_open,
    win, cmask,
    count_from,
    qlo, qhi,
    hist, hist_on,
    trace, trace_on,
    runlen0,
):
    """Main loop.  Returns (steps_done, escape_time) with escape_time = -1
    when the orbit stayed inside the absorbing cube.  Mutates x0, runlen0,
    hits, first_hit, viol, min_run, hist, trace in place."""
    L = letters.shape[0]
    k = x0.shape[0]
    R = reg_lo.shape[0]
    hits = np.zeros(R, dtype=np.int64)
    first_hit = np.full(R, -1, dtype=np.int64)
    viol = np.zeros(R, dtype=np.int64)
    min_run = np.full(R, np.int64(2**62), dtype=np.int64)
    x = x0
    xnew = np.empty(k, dtype=np.float64)
    runlen = runlen0
    G = hist.shape[0]
    escape_t = np.int64(-1)
    steps = np.int64(0)
    for i in range(L):
        t = t0 + i
        if trace_on:
            for j in range(k):
                trace[i, j] = x[j]
        counted = t >= count_from
        # region accounting at the current state
        for rI in range(R):
            inside = True
            for j in range(k):
                lo = reg_lo[rI, j]
                hi = reg_hi[rI, j]
                v = x[j]
                if reg_lo_open[rI, j]:
                    if v <= lo:
                        inside = False
                        break
                else:
                    if v < lo:
                        inside = False
                        break
                if reg_hi_open[rI, j]:
                    if v >= hi:
                        inside = False
                        break
                else:
                    if v > hi:
                        inside = False
                        break
            if not inside:
                continue
            if first_hit[rI] < 0:
                first_hit[rI] = t
            if counted:
                hits[rI] += 1
            w = win[rI]
            if w > 0 and t > w:
                worst = np.int64(2**62)
                for j in range(k):
                    if (cmask[rI] >> j) & 1:
                        if runlen[j] < worst:
                            worst = runlen[j]
                if worst < min_run[rI]:
                    min_run[rI] = worst
                if worst < w:
                    viol[rI] += 1
        if hist_on and counted:
            ix = int((x[k - 2] - qlo) / (qhi - qlo) * G)
            if ix < 0:
                ix = 0
            elif ix >= G:
                ix = G - 1
            iy = int((x[k - 1] - qlo) / (qhi - qlo) * G)
            if iy < 0:
                iy = 0
            elif iy >= G:
                iy = G - 1
            hist[ix, iy] += 1
        # advance
        _k_step(x, letters[i], h, lam, ak, bk, pert_on, pc, pd, pa, pw, xnew)
        for j in range(k):
            x[j] = xnew[j]
        # run-length update for the letter just applied
        for j in range(k):
            if letters[i, j] == 0:
                runlen[j] += 1
            else:
                runlen[j] = 0
        steps = np.int64(i + 1)
        # absorbing-cube check
        for j in range(k):
            if x[j] < qlo or x[j] > qhi:
                escape_t = t + 1
                break
        if escape_t >= 0:
            break
    if trace_on and escape_t < 0:
        for j in range(k):
            trace[L, j] = x[j]
    return steps, escape_t, hits, first_hit, viol, min_run


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------


@dataclass
class PerturbationSpec:
    """Post-composition displacement fields, one per symbol.

    g_s = psi_s o f_s with psi_s(x) = x + sum_b amp dir prod_j
    kappa((x_j - c_j)/w), kappa(u) = (1 - u^2)^2 on |u| < 1.  Amplitudes are
    scaled at construction until the measured forward distance, inverse
    distance and Jacobian distance on a probe grid all sit below delta.
    """

    delta: float
    seed: int
    centers: np.ndarray  # (S, B, k)
    dirs: np.ndarray  # (S, B, k), unit rows
    amps: np.ndarray  # (S, B)
    widths: np.ndarray  # (S, B)
    measured: dict = field(default_factory=dict)

    @property
    def n_bumps(self) -> int:
        return self.amps.shape[1]

    def sup_displacement(self, code: int) -> float:
        """Rigorous bound on |psi_s - id| (sup of the bump sum)."""
        return float(np.sum(np.abs(self.amps[code])))


def _psi_apply(pert: PerturbationSpec, code: int, x: np.ndarray) -> np.ndarray:
    y = np.array(x, dtype=np.float64)
    _k_bump_add(y, pert.centers[code], pert.dirs[code], pert.amps[code], pert.widths[code])
    return y


def _psi_invert(pert: PerturbationSpec, code: int, y: np.ndarray, tol=1e-14) -> np.ndarray:
    """Invert psi_s by fixed-point iteration (the bump field is a strong
    contraction: its Lipschitz constant is below 1/2 by construction)."""
    x = np.array(y, dtype=np.float64)
    for _ in range(200):
        bump = _psi_apply(pert, code, x) - x
        x_next = y - bump
        if np.max(np.abs(x_next - x)) < tol:
            return x_next
        x = x_next
    return x


_KAPPA_DMAX = 8.0 / (3.0 * math.sqrt(3.0))  # sup |d/du (1-u^2)^2|


def perturbed_eval(
    fam: FiberFamily, s, x, pert: PerturbationSpec | None
) -> np.ndarray:
    y = fiber_eval(fam, s, x)
    if pert is None:
        return y
    from .fiber import symbol_code

    return _psi_apply(pert, symbol_code(s), y)


def perturbed_inverse(
    fam: FiberFamily, s, y, pert: PerturbationSpec | None, tol: float = 1e-12
) -> np.ndarray:
    from .fiber import fiber_inverse, symbol_code

    if pert is None:
        return fiber_inverse(fam, s, y, tol)
    mid = _psi_invert(pert, symbol_code(s), np.asarray(y, dtype=np.float64))
    return fiber_inverse(fam, s, mid, tol)


def perturbed_jacobian(
    fam: FiberFamily, s, x, pert: PerturbationSpec | None
) -> np.ndarray:
    from .fiber import fiber_jacobian, symbol_code

    J = fiber_jacobian(fam, s, x)
    if pert is None:
        return J
    code = symbol_code(s)
    y = fiber_eval(fam, s, x)
    k = fam.p.k
    Dpsi = np.eye(k)
    for b in range(pert.n_bumps):
        a = pert.amps[code, b]
        if a == 0.0:
            continue
        w = pert.widths[code, b]
        u = (y - pert.centers[code, b]) / w
        if np.any(np.abs(u) >= 1.0):
            continue
        q = 1.0 - u * u
        kap = q * q
        dkap = -4.0 * u * q / w
        prod = np.prod(kap)
        grad = np.empty(k)
        for j in range(k):
            rest = prod / kap[j] if kap[j] != 0.0 else 0.0
            grad[j] = dkap[j] * rest
        Dpsi += a * np.outer(pert.dirs[code, b], grad)
    return Dpsi @ J


def psi_box_pad(pert: PerturbationSpec | None, code: int, box: Box) -> Box:
    """Enclosure of psi_s over a box: per-coordinate interval of the bump
    field added to the box, outward rounded.

    kappa is even and decreasing in |u|, so its range over a u-interval is
    spanned by the endpoint and the peak; the product hull of nonnegative
    factors is the product of the hulls.
    """
    if pert is None or box.is_empty:
        return box
    k = box.dim
    add_lo = [0.0] * k
    add_hi = [0.0] * k
    for b in range(pert.n_bumps):
        a = pert.amps[code, b]
        if a == 0.0:
            continue
        w = pert.widths[code, b]
        plo, phi = 1.0, 1.0
        for j in range(k):
            ulo = (box.lo[j] - pert.centers[code, b, j]) / w
            uhi = (box.hi[j] - pert.centers[code, b, j]) / w
            if ulo > 1.0 or uhi < -1.0:
                plo, phi = 0.0, 0.0
                break
            # nearest |u| in the interval
            if ulo <= 0.0 <= uhi:
                near = 0.0
            else:
                near = min(abs(ulo), abs(uhi))
            far = max(abs(ulo), abs(uhi))
            qn = max(0.0, 1.0 - near * near)
            qf = max(0.0, 1.0 - far * far)
            plo *= qf * qf
            phi *= qn * qn
        if phi == 0.0:
            continue
        for j in range(k):
            d = a * pert.dirs[code, b, j]
            lo_c = min(d * plo, d * phi)
            hi_c = max(d * plo, d * phi)
            # the bump may also vanish inside the box (support edge), so the
            # interval must include 0 whenever the product can reach it
            lo_c = min(lo_c, 0.0)
            hi_c = max(hi_c, 0.0)
            add_lo[j] += lo_c
            add_hi[j] += hi_c
    return Box.make(
        [out_lo(l + al) for l, al in zip(box.lo, add_lo)],
        [out_hi(h + ah) for h, ah in zip(box.hi, add_hi)],
    )


def _pert_probe_points(p: Params, seed: int, count: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(99,)))
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    pts = rng.uniform(qlo, qhi, size=(count, p.k))
    # bias some probes into the tooth zone where derivatives are largest
    pts[: count // 4, -1] = rng.uniform(0.0, 0.25, size=count // 4)
    return pts


def measure_perturbation(fam: FiberFamily, pert: PerturbationSpec, probes: int = 4000) -> dict:
    """Measured sup distances between the family and its perturbation."""
    from .fiber import all_symbols, fiber_inverse

    p = fam.p
    pts = _pert_probe_points(p, pert.seed, probes)
    d_fwd = 0.0
    d_inv = 0.0
    d_jac = 0.0
    for s in all_symbols(p.k):
        for x in pts:
            y = fiber_eval(fam, s, x)
            gy = perturbed_eval(fam, s, x, pert)
            d_fwd = max(d_fwd, float(np.max(np.abs(gy - y))))
            back_f = fiber_inverse(fam, s, y)
            back_g = perturbed_inverse(fam, s, y, pert)
            d_inv = max(d_inv, float(np.max(np.abs(back_g - back_f))))
        for x in pts[: probes // 4]:
            Jf = perturbed_jacobian(fam, s, x, None)
            Jg = perturbed_jacobian(fam, s, x, pert)
            d_jac = max(d_jac, float(np.linalg.norm(Jg - Jf, 2)))
    return {"d_c0": d_fwd, "d_c0_inverse": d_inv, "d_jacobian": d_jac}


def make_perturbation(
    fam: FiberFamily,
    delta: float | None = None,
    seed: int = 0,
    n_bumps: int = 6,
    probes: int = 2000,
) -> PerturbationSpec:
    """Draw a random perturbation and scale it under the distance budget.

    Default delta is r/2, well inside every robustness window (the checks
    need delta < 1/(32n) and delta below the interval margins of the block
    certificates).  Amplitudes start from an analytic budget and shrink
    until the measured distances clear 0.95*delta.
    """
    p = fam.p
    if delta is None:
        delta = p.r / 2.0
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    S = 2**p.k
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    centers = rng.uniform(qlo, qhi, size=(S, n_bumps, p.k))
    dirs = rng.normal(size=(S, n_bumps, p.k))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    widths = rng.uniform(4.0 * p.h, 32.0 * p.h, size=(S, n_bumps))
    raw = rng.uniform(0.5, 1.0, size=(S, n_bumps))

    # analytic budget: sum amps <= delta/2 and the Jacobian-of-psi bound
    # sum amp * kappa'_max * sqrt(k) / w <= delta/2
    amps = np.empty_like(raw)
    for c in range(S):
        s1 = float(np.sum(raw[c]))
        s2 = float(np.sum(raw[c] * _KAPPA_DMAX * math.sqrt(p.k) / widths[c]))
        scale = 0.5 * delta / max(s1, s2)
        amps[c] = raw[c] * scale

    pert = PerturbationSpec(
        delta=delta, seed=seed, centers=centers, dirs=dirs, amps=amps,
        widths=widths,
    )
    for _ in range(80):
        measured = measure_perturbation(fam, pert, probes)
        worst = max(measured.values())
        if worst <= 0.95 * delta:
            pert.measured = measured
            break
        pert.amps *= min(0.8, 0.9 * delta / worst)
    else:
        raise RuntimeError("perturbation scaling did not converge")
    return pert


# ---------------------------------------------------------------------------
# statistics containers
# ---------------------------------------------------------------------------


@dataclass
class RegionStats:
    rid: RegionId
    hits: int = 0
    first_hit: int = -1
    violations: int = 0
    window: int = 0
    min_run_at_visit: int | None = None

    def merge(self, other: "RegionStats") -> None:
        self.hits += other.hits
        self.violations += other.violations
        if other.first_hit >= 0 and (self.first_hit < 0 or other.first_hit < self.first_hit):
            self.first_hit = other.first_hit
        if other.min_run_at_visit is not None:
            if self.min_run_at_visit is None or other.min_run_at_visit < self.min_run_at_visit:
                self.min_run_at_visit = other.min_run_at_visit

    def to_json(self, counted_steps: int) -> dict:
        freq = self.hits / counted_steps if counted_steps > 0 else 0.0
        return {
            "region": str(self.rid),
            "hits": self.hits,
            "frequency": freq,
            "first_hit": self.first_hit,
            "violations": self.violations,
            "window": self.window,
            "min_run_at_visit": self.min_run_at_visit,
        }


@dataclass
class OrbitResult:
    x: np.ndarray
    t: int
    runlens: np.ndarray
    stats: list[RegionStats]
    counted_steps: int
    escaped_at: int = -1
    hist: np.ndarray | None = None
    trace: np.ndarray | None = None


@dataclass
class EnsembleResult:
    stats: list[RegionStats]
    counted_steps: int
    orbits: int
    hist: np.ndarray | None = None


def default_windows(p: Params, rids: list[RegionId]) -> tuple[np.ndarray, np.ndarray]:
    """Zero-run window and coordinate mask per region.

    R carries the n**k window on the deepest base coordinate for every
    k.  Wprime carries the n window on both coordinates, but only in
    the planar family: its mechanics need the drift rate 1/(8n), which
    keeps the driver out of the coupling support for at least n steps
    after any 1-letter.  For k >= 3 the corridor's driving coordinate
    is a tooth coordinate that contracts back into the support within
    a few steps, so no window is claimed there.  Other regions check
    nothing.
    """
    win = np.zeros(len(rids), dtype=np.int64)
    cmask = np.zeros(len(rids), dtype=np.uint8)
    for i, rid in enumerate(rids):
        if rid.kind == "R":
            win[i] = p.n**p.k
            cmask[i] = 1 << (p.k - 1)
        elif rid.kind == "Wprime" and p.k == 2:
            win[i] = p.n
            cmask[i] = 0b11
    return win, cmask


def _pert_arrays(pert: PerturbationSpec | None, k: int):
    if pert is None:
        S = 2**k
        return (
            False,
            np.zeros((S, 0, k), dtype=np.float64),
            np.zeros((S, 0, k), dtype=np.float64),
            np.zeros((S, 0), dtype=np.float64),
            np.zeros((S, 0), dtype=np.float64),
        )
    return True, pert.centers, pert.dirs, pert.amps, pert.widths


def run_orbit(
    fam: FiberFamily,
    base: BaseSequence,
    x0,
    *,
    regions: list[RegionId] | None = None,
    burn_in: int = 0,
    pert: PerturbationSpec | None = None,
    hist_grid: int = 0,
    trace: bool = False,
    runlens=None,
    raise_on_escape: bool = True,
) -> OrbitResult:
    """Iterate the skew product over one base window.

    burn_in is the absolute time before which nothing is counted (visits,
    histogram); first_hit and violation windows are always live.  The
    run-length counters may be seeded with `runlens` when continuing a
    split window.
    """
    p = fam.p
    if base.k != p.k:
        raise ValueError(f"base has k = {base.k}, family has k = {p.k}")
    if regions is None:
        regions = [RegionId("R"), RegionId("Wprime"), RegionId("W"), RegionId("D")]
    x = np.array(x0, dtype=np.float64)
    if x.shape != (p.k,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({p.k},)")
    reg_lo, reg_hi, lo_open, hi_open = region_array_bundle(p, regions)
    win, cmask = default_windows(p, regions)
    pert_on, pc, pd, pa, pw = _pert_arrays(pert, p.k)
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    G = int(hist_grid)
    hist = np.zeros((max(G, 1), max(G, 1)), dtype=np.int64)
    L = base.length
    trace_arr = np.zeros((L + 1 if trace else 1, p.k), dtype=np.float64)
    rl = np.zeros(p.k, dtype=np.int64) if runlens is None else np.array(runlens, dtype=np.int64)
    ak = np.array(
        [fam.alpha.ka, fam.alpha.kb, fam.alpha.kc, fam.alpha.kd, fam.alpha.amplitude]
    )
    bk = np.array(
        [fam.beta.ka, fam.beta.kb, fam.beta.kc, fam.beta.kd, fam.beta.amplitude]
    )
    steps, escape_t, hits, first_hit, viol, min_run = _k_run(
        base.letters, x, np.int64(base.origin), p.h, p.lam,
        ak, bk,
        pert_on, pc, pd, pa, pw,
        reg_lo, reg_hi, lo_open, hi_open,
        win, cmask,
        np.int64(burn_in),
        qlo, qhi,
        hist, G > 0,
        trace_arr, trace,
        rl,
    )
    stats = []
    big = 2**62
    for i, rid in enumerate(regions):
        stats.append(
            RegionStats(
                rid=rid,
                hits=int(hits[i]),
                first_hit=int(first_hit[i]),
                violations=int(viol[i]),
                window=int(win[i]),
                min_run_at_visit=None if min_run[i] >= big else int(min_run[i]),
            )
        )
    counted = int(steps) - max(0, min(int(steps), burn_in - base.origin))
    result = OrbitResult(
        x=x,
        t=base.origin + int(steps),
        runlens=rl,
        stats=stats,
        counted_steps=counted,
        escaped_at=int(escape_t),
        hist=hist if G > 0 else None,
        trace=(
            trace_arr[: int(steps) + (1 if escape_t < 0 else 0)] if trace else None
        ),
    )
    if escape_t >= 0 and raise_on_escape:
        raise OrbitEscapeError(int(escape_t), x)
    return result


def run_ensemble(
    fam: FiberFamily,
    orbits: int,
    length: int,
    seed: int,
    *,
    regions: list[RegionId] | None = None,
    burn_in: int = 0,
    pert: PerturbationSpec | None = None,
    hist_grid: int = 0,
    threads: int = 1,
) -> EnsembleResult:
    """Independent random orbits; statistics merged in orbit order.

    Orbit i derives its base and start point from spawn key (i,) of the
    root seed, so results do not depend on the thread count.
    """
    p = fam.p
    if regions is None:
        regions = [RegionId("R"), RegionId("Wprime"), RegionId("W"), RegionId("D")]

    def one(i: int) -> OrbitResult:
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        child_base, child_x0 = ss.spawn(2)
        base = sample_base(p.k, length, child_base)
        rng = np.random.Generator(np.random.PCG64(child_x0))
        x0 = rng.uniform(0.0, 1.0, size=p.k)
        return run_orbit(
            fam, base, x0, regions=regions, burn_in=burn_in, pert=pert,
            hist_grid=hist_grid,
        )

    if threads <= 1:
        results = [one(i) for i in range(orbits)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(orbits)))

    merged = [RegionStats(rid=rid) for rid in regions]
    counted = 0
    hist = np.zeros((max(hist_grid, 1),) * 2, dtype=np.int64) if hist_grid else None
    for res in results:
        for acc, st in zip(merged, res.stats):
            acc.window = st.window
            acc.merge(st)
        counted += res.counted_steps
        if hist is not None:
            hist += res.hist
    return EnsembleResult(stats=merged, counted_steps=counted, orbits=orbits, hist=hist)


# ---------------------------------------------------------------------------
# word application (plain-float fast paths; identical formulas)
# ---------------------------------------------------------------------------


def apply_word(
    fam: FiberFamily, word, x, pert: PerturbationSpec | None = None
) -> np.ndarray:
    """Apply a finite word, first letter first, to a single point."""
    from .fiber import symbol_code

    p = fam.p
    w = np.asarray(word, dtype=np.uint8)
    if w.ndim != 2 or w.shape[1] != p.k:
        raise ValueError(f"word must be (m, {p.k}), got {w.shape}")
    cur = np.array(x, dtype=np.float64)
    letters = [tuple(int(b) for b in row) for row in w]
    for s in letters:
        cur = fiber_eval(fam, s, cur)
        if pert is not None:
            code = symbol_code(s)
            _k_bump_add(
                cur, pert.centers[code], pert.dirs[code], pert.amps[code],
                pert.widths[code],
            )
    return cur


def apply_word_box(
    fam: FiberFamily,
    word,
    box: Box,
    pert: PerturbationSpec | None = None,
    outward: bool = True,
) -> Box:
    """Rigorous enclosure of a word image of a box, letter by letter."""
    p = fam.p
    w = np.asarray(word, dtype=np.uint8)
    if w.ndim != 2 or w.shape[1] != p.k:
        raise ValueError(f"word must be (m, {p.k}), got {w.shape}")
    from .fiber import symbol_code

    cur = box
    for row in w:
        s = tuple(int(b) for b in row)
        cur = fiber_box_image(fam, s, cur, outward=outward)
        if pert is not None:
            cur = psi_box_pad(pert, symbol_code(s), cur)
        if cur.is_empty:
            break
    return cur
