"""Desk-scale verification suites.

Rigorous certificates for the derivative norm bounds, the strip and
block dynamics of the tooth map, directional movement over the working
rectangles, and the zero-run structure of deep visits; statistical
reports for the attractor histogram, the invisibility threshold, and
perturbed-orbit shadowing.

Rigor conventions.  Grids never sample: they cut a rectangle into
cells, and on each cell every Jacobian entry is enclosed by a closed
hull (drift factors are constant, the tooth derivative comes from the
cosine form, the coupling entries from the plateau ramp hulls), so a
finer grid tightens a bound but cannot invalidate it.  The top
singular value of [[a, 0], [b, d]] is monotone in the entrywise
absolute values: the Gram matrix of the entrywise-dominating
nonnegative matrix dominates entrywise, and the Perron value of a
dominating nonnegative matrix can only grow.  Certificates whose
method is "sampled" or "measured" are labeled confirmations and never
stand in for an interval bound; perturbed margins get their rigorous
part from the displacement budget sum|amps| <= delta/2 built into
every perturbation.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction
import os

import numpy as np

from .baseseq import BaseSequence, sample_base
from .certs import Certificate, CertificateSet
from .fiber import (
    FiberFamily,
    coupling_position,
    spectral_norm_2x2_vec,
    symbol_code,
)
from .orbit import PerturbationSpec, run_ensemble, run_orbit
from .params import Box, RegionId, region_box
from .scalar_maps import (
    HatSpec,
    ScalarMapId,
    hat_deriv_range,
    hat_eval_vec,
    scalar_deriv_range,
    scalar_eval,
    scalar_eval_vec,
)

__all__ = [
    "check_norm_bounds",
    "check_strip_dynamics",
    "check_directional_movement",
    "check_zero_run_lemma",
    "attractor_histogram",
    "write_histogram_csv",
    "invisibility_report",
    "check_discrepancy_bound",
]

_TWO3 = 2.0 / 3.0


# ---------------------------------------------------------------------------
# cell hulls
# ---------------------------------------------------------------------------


def _cells(lo: float, hi: float, grid: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, grid + 1)
    return edges[:-1], edges[1:]


def _g0_deriv_hull_cells(p, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact hull of the tooth derivative over each cell."""
    dmin = np.empty(lo.shape[0])
    dmax = np.empty(lo.shape[0])
    for i in range(lo.shape[0]):
        dmin[i], dmax[i] = scalar_deriv_range(p, ScalarMapId.G0, float(lo[i]), float(hi[i]))
    return dmin, dmax


def _hat_sup_cells(spec: HatSpec, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact sup of a plateau function over each cell (it is monotone
    between knots, so endpoint values suffice unless the cell touches
    the plateau)."""
    v = np.maximum(hat_eval_vec(spec, lo), hat_eval_vec(spec, hi))
    touches = (lo <= spec.kc) & (hi >= spec.kb)
    return np.where(touches, spec.amplitude, v)


def _hat_deriv_hull_cells(spec: HatSpec, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mn = np.empty(lo.shape[0])
    mx = np.empty(lo.shape[0])
    for i in range(lo.shape[0]):
        mn[i], mx[i] = hat_deriv_range(spec, float(lo[i]), float(hi[i]))
    return mn, mx


# ---------------------------------------------------------------------------
# vectorized letter images (planar family)
# ---------------------------------------------------------------------------


def _psi_points(pert: PerturbationSpec, code: int, pts: np.ndarray) -> np.ndarray:
    """Apply the bump field of one symbol to an (N, k) array of points."""
    out = pts.copy()
    centers = pert.centers[code]
    dirs = pert.dirs[code]
    amps = pert.amps[code]
    widths = pert.widths[code]
    for b in range(amps.shape[0]):
        if amps[b] == 0.0:
            continue
        u = (pts - centers[b]) / widths[b]
        inside = np.all(np.abs(u) < 1.0, axis=1)
        if not np.any(inside):
            continue
        q = 1.0 - u[inside] ** 2
        kappa = np.prod(q * q, axis=1)
        out[inside] += amps[b] * kappa[:, None] * dirs[b]
    return out


def _letter_images_vec(
    fam: FiberFamily, s, pts: np.ndarray, pert: PerturbationSpec | None = None
) -> np.ndarray:
    """Images of an (N, 2) point array under one letter (k = 2 only)."""
    p = fam.p
    if p.k != 2:
        raise ValueError("vectorized letter images are planar (k = 2)")
    mx = ScalarMapId.F1 if s[0] else ScalarMapId.F0
    my = ScalarMapId.G1 if s[1] else ScalarMapId.G0
    xi = scalar_eval_vec(p, mx, pts[:, 0])
    yi = scalar_eval_vec(p, my, pts[:, 1])
    if coupling_position(s) == 1:
        yi = yi - hat_eval_vec(fam.alpha, pts[:, 0]) * hat_eval_vec(fam.beta, pts[:, 1])
    out = np.stack([xi, yi], axis=1)
    if pert is not None:
        out = _psi_points(pert, symbol_code(s), out)
    return out


def _budget_pad(pert: PerturbationSpec | None, k: int) -> float:
    """Rigorous sup-norm bound on |psi_s - id|, uniform over symbols."""
    if pert is None:
        return 0.0
    return max(pert.sup_displacement(c) for c in range(2**k))


# ---------------------------------------------------------------------------
# derivative norm bounds
# ---------------------------------------------------------------------------


def _symbol_norm_sup(fam: FiberFamily, s, box: Box, grid: int) -> float:
    """Upper bound for sup over the box of the Jacobian spectral norm."""
    p = fam.p
    xlo, xhi = _cells(float(box.lo[0]), float(box.hi[0]), grid)
    ylo, yhi = _cells(float(box.lo[1]), float(box.hi[1]), grid)
    a = _TWO3 if s[0] else p.lam
    if s[1] == 1:
        d_min = np.full(ylo.shape, _TWO3)
        d_max = np.full(ylo.shape, _TWO3)
    else:
        d_min, d_max = _g0_deriv_hull_cells(p, ylo, yhi)
    if coupling_position(s) == 1:
        a_sup = _hat_sup_cells(fam.alpha, xlo, xhi)
        ad_mn, ad_mx = _hat_deriv_hull_cells(fam.alpha, xlo, xhi)
        ad_abs = np.maximum(np.abs(ad_mn), np.abs(ad_mx))
        b_sup = _hat_sup_cells(fam.beta, ylo, yhi)
        bd_mn, bd_mx = _hat_deriv_hull_cells(fam.beta, ylo, yhi)
        off = np.outer(ad_abs, b_sup)
        dd_lo = d_min[None, :] - np.outer(a_sup, bd_mx)
        dd_hi = d_max[None, :] - np.outer(a_sup, bd_mn)
        dd_abs = np.maximum(np.abs(dd_lo), np.abs(dd_hi))
        norms = spectral_norm_2x2_vec(np.full(off.shape, a), off, dd_abs)
        return float(norms.max())
    d_abs = np.maximum(np.abs(d_min), np.abs(d_max))
    return float(max(a, d_abs.max()))


def _symbol_inverse_norm_sup(fam: FiberFamily, s, box: Box, grid: int) -> float:
    """Upper bound for sup over the box of the inverse Jacobian norm.

    The Jacobian is lower triangular [[a, 0], [b, c]] with constant a and
    c bounded away from zero on the cube, so the inverse is
    [[1/a, 0], [-b/(a c), 1/c]] and its norm is bounded by entrywise
    domination with cell hulls.  Returns inf if any cell's c hull touches
    zero, which fails the certificate honestly.
    """
    p = fam.p
    xlo, xhi = _cells(float(box.lo[0]), float(box.hi[0]), grid)
    ylo, yhi = _cells(float(box.lo[1]), float(box.hi[1]), grid)
    a = _TWO3 if s[0] else p.lam
    if s[1] == 1:
        d_min = np.full(ylo.shape, _TWO3)
    else:
        d_min, _ = _g0_deriv_hull_cells(p, ylo, yhi)
    if coupling_position(s) == 1:
        a_sup = _hat_sup_cells(fam.alpha, xlo, xhi)
        ad_mn, ad_mx = _hat_deriv_hull_cells(fam.alpha, xlo, xhi)
        ad_abs = np.maximum(np.abs(ad_mn), np.abs(ad_mx))
        b_sup = _hat_sup_cells(fam.beta, ylo, yhi)
        bd_mn, bd_mx = _hat_deriv_hull_cells(fam.beta, ylo, yhi)
        off = np.outer(ad_abs, b_sup)
        c_lo = d_min[None, :] - np.outer(a_sup, np.maximum(bd_mx, 0.0))
        if float(c_lo.min()) <= 0.0:
            return math.inf
        inv_off = off / (a * c_lo)
        norms = spectral_norm_2x2_vec(
            np.full(off.shape, 1.0 / a), inv_off, 1.0 / c_lo
        )
        return float(norms.max())
    return float(max(1.0 / a, float((1.0 / d_min).max())))


def check_norm_bounds(fam: FiberFamily, grid: int = 1000) -> CertificateSet:
    """Certify the operator-norm bounds of all four letter derivatives.

    On the shelf rectangle P the two letters with first symbol 1 stay
    below 5/6 while the two with first symbol 0 have norm exactly the
    drift factor lambda (their y-part contracts by 2/3, so the x-part
    decides).  On the padded cube every letter and every inverse stays
    below 1.85, the coupling gradient root sqrt((alpha' beta)^2 +
    (alpha beta')^2) stays below 1/8, and every first-symbol-1 letter
    is at least 5/24 away from the identity because its x-column alone
    contributes |2/3 - 1| = 1/3.
    """
    p = fam.p
    if p.k != 2:
        raise ValueError("norm certificates are stated for the planar family (k = 2)")
    cs = CertificateSet("norm-bounds")
    P = region_box(p, RegionId("P"))
    Qp = region_box(p, RegionId("Qplus"))

    sup_one = max(_symbol_norm_sup(fam, s, P, grid) for s in [(1, 0), (1, 1)])
    cs.add(
        Certificate(
            claim="first-symbol-1 letters have derivative norm below 5/6 on the shelf rectangle",
            passed=sup_one < 5.0 / 6.0,
            margin=5.0 / 6.0 - sup_one,
            witness={"sup": sup_one, "bound": 5.0 / 6.0, "grid": grid},
        )
    )

    sup_zero = max(_symbol_norm_sup(fam, s, P, grid) for s in [(0, 0), (0, 1)])
    cs.add(
        Certificate(
            claim="first-symbol-0 letters have derivative norm exactly lambda on the shelf rectangle",
            passed=sup_zero == p.lam,
            margin=0.0,
            method="exact",
            witness={
                "sup": sup_zero,
                "x_factor": p.lam,
                "y_factor": _TWO3,
                "grid": grid,
            },
        )
    )

    sup_all = max(_symbol_norm_sup(fam, s, Qp, grid) for s in [(0, 0), (0, 1), (1, 0), (1, 1)])
    cs.add(
        Certificate(
            claim="every letter has derivative norm below 1.85 on the padded cube",
            passed=sup_all < 1.85,
            margin=1.85 - sup_all,
            witness={"sup": sup_all, "bound": 1.85, "grid": grid},
        )
    )

    # The x-column of D(letter) - Id for a first-symbol-1 letter is
    # (2/3 - 1, -alpha' beta)^T, whose norm is at least 1/3 everywhere.
    cs.add(
        Certificate(
            claim="first-symbol-1 letters keep derivative distance at least 5/24 from the identity",
            passed=True,
            margin=1.0 / 3.0 - 5.0 / 24.0,
            method="exact",
            witness={"column_bound": 1.0 / 3.0, "required": 5.0 / 24.0},
        )
    )

    sup_inv = max(
        _symbol_inverse_norm_sup(fam, s, Qp, grid)
        for s in [(0, 0), (0, 1), (1, 0), (1, 1)]
    )
    cs.add(
        Certificate(
            claim="every letter's inverse keeps derivative norm under 1.85 on the padded cube",
            passed=sup_inv < 1.85,
            margin=1.85 - sup_inv,
            witness={"sup": sup_inv, "bound": 1.85, "grid": grid},
        )
    )

    # coupling gradient root: sqrt((alpha' beta)^2 + (alpha beta')^2)
    xlo, xhi = _cells(float(Qp.lo[0]), float(Qp.hi[0]), grid)
    ylo, yhi = _cells(float(Qp.lo[1]), float(Qp.hi[1]), grid)
    a_sup = _hat_sup_cells(fam.alpha, xlo, xhi)
    ad_mn, ad_mx = _hat_deriv_hull_cells(fam.alpha, xlo, xhi)
    ad_abs = np.maximum(np.abs(ad_mn), np.abs(ad_mx))
    b_sup = _hat_sup_cells(fam.beta, ylo, yhi)
    bd_mn, bd_mx = _hat_deriv_hull_cells(fam.beta, ylo, yhi)
    bd_abs = np.maximum(np.abs(bd_mn), np.abs(bd_mx))
    root = float(
        np.sqrt(
            np.outer(ad_abs, b_sup) ** 2 + np.outer(a_sup, bd_abs) ** 2
        ).max()
    )
    cs.add(
        Certificate(
            claim="the coupling gradient root stays below 1/8 on the padded cube",
            passed=root < 0.125,
            margin=0.125 - root,
            witness={"sup": root, "bound": 0.125, "grid": grid},
        )
    )
    return cs


# ---------------------------------------------------------------------------
# strip and block dynamics of the tooth map
# ---------------------------------------------------------------------------


def _g0(p, y: float) -> float:
    return scalar_eval(p, ScalarMapId.G0, y)


def check_strip_dynamics(
    fam: FiberFamily,
    pert: PerturbationSpec | None = None,
    samples_per_block: int = 1000,
    seed: int = 0,
) -> CertificateSet:
    """Certify the ladder structure of the tooth zone.

    Strip edges 1/4 - m h are lattice fixed points of g0; interiors
    move toward even edges by at least (h/3pi) sin(pi rho/h) once the
    band collars are removed; block seams (odd edges + rho) repel
    downward motion; a coupled drop from a parked band (even edge +-
    rho over the plateau of the driving hat) crosses exactly one seam;
    no letter descends more than two strip heights; tilde seams (even
    edges + rho) are non-descending for backward tooth steps; and the
    inverse up-step exits the padded cube from every tilde block that
    meets the working window.  With a perturbation the margins shrink
    by the displacement budget and sampled images confirm them.
    """
    p = fam.p
    h, rho, nu = p.h, p.rho, p.nu
    amp = fam.beta.amplitude
    pad = _budget_pad(pert, p.k)
    cs = CertificateSet("strip-blocks" + ("-perturbed" if pert is not None else ""))
    four_n = 4 * p.n
    two_n = 2 * p.n
    msin_closed = (h / (3.0 * math.pi)) * math.sin(0.1 * math.pi)
    edges = [0.25 - m * h for m in range(four_n + 1)]

    # A. edges are fixed (lattice statement about the tooth map).  The
    # implemented lattice is the set of float multiples of h; when h is a
    # dyadic float (n a power of two) the edges 1/4 - m h land on it
    # exactly and the check is exact equality.  Otherwise the edges sit a
    # few attounits off the lattice, and the honest float statement bounds
    # the residual by the exact-rational lattice gap: |sin(pi f)| <= pi|f|
    # turns the tooth term at a point g away from the lattice into at most
    # g/3, doubled for evaluation roundings, plus one ulp of 1/4 for the
    # final subtraction.
    edge_err = max(abs(_g0(p, e) - e) for e in edges)
    h_frac = Fraction(h)
    lattice_gap = max(
        abs(Fraction(e) - (four_n - m) * h_frac) for m, e in enumerate(edges)
    )
    if lattice_gap == 0:
        cs.add(
            Certificate(
                claim="tooth edges 1/4 - m h are fixed points of the tooth map",
                passed=edge_err == 0.0,
                margin=0.0,
                method="exact",
                witness={"edges": four_n + 1, "max_error": edge_err},
            )
        )
    else:
        rep_bound = (2.0 / 3.0) * float(lattice_gap) + math.ulp(0.25)
        cs.add(
            Certificate(
                claim="tooth edges 1/4 - m h are fixed points of the tooth map",
                passed=edge_err <= rep_bound,
                margin=rep_bound - edge_err,
                method="interval",
                witness={
                    "edges": four_n + 1,
                    "max_error": edge_err,
                    "lattice_gap": float(lattice_gap),
                    "representation_bound": rep_bound,
                },
            )
        )
    if pert is not None and p.k == 2:
        xs = np.linspace(5.0 * nu, 1.0 - 5.0 * nu, 48)
        pts = np.stack(
            [np.repeat(xs, len(edges)), np.tile(np.array(edges), len(xs))], axis=1
        )
        img = _letter_images_vec(fam, (0, 0), pts, pert)
        moved = float(np.max(np.abs(img[:, 1] - pts[:, 1])))
        cs.add(
            Certificate(
                claim="perturbed tooth steps move edges at most the displacement budget",
                passed=moved <= pad,
                margin=pad - moved,
                method="measured",
                witness={"budget": pad, "max_move": moved, "points": len(pts)},
            )
        )

    # B. interior movement beats the target-ball scale
    worst_move = math.inf
    sign_ok = True
    for m in range(1, four_n + 1):
        lo = edges[m] + rho
        hi = edges[m - 1] - rho
        d_lo = _g0(p, lo) - lo
        d_hi = _g0(p, hi) - hi
        want = -1.0 if m % 2 == 0 else 1.0
        if d_lo * want <= 0.0 or d_hi * want <= 0.0:
            sign_ok = False
        worst_move = min(worst_move, abs(d_lo), abs(d_hi))
    margin_b = worst_move - pad - 2.0 * p.r
    cs.add(
        Certificate(
            claim="collar-trimmed strip interiors move toward even edges past the ball scale",
            passed=sign_ok and margin_b > 0.0,
            margin=margin_b,
            witness={
                "strips": four_n,
                "min_move": worst_move,
                "closed_form": msin_closed,
                "ball_scale": 2.0 * p.r,
                "signs_alternate": sign_ok,
            },
        )
    )

    # C. forward block seams repel downward motion
    seams = [0.25 - (2 * j - 1) * h + rho for j in range(1, two_n + 1)]
    seam_up = min(_g0(p, s) - s for s in seams)
    seam_up_g1 = min((1.0 - s) / 3.0 for s in seams)
    cs.add(
        Certificate(
            claim="plain letters never push orbits down across block seams",
            passed=seam_up - pad > 0.0,
            margin=seam_up - pad,
            witness={
                "seams": two_n,
                "min_tooth_lift": seam_up,
                "min_up_lift": seam_up_g1,
                "closed_form": msin_closed,
            },
        )
    )

    # D. a coupled drop from a parked band crosses exactly one seam
    margin_hi = math.inf
    margin_lo = math.inf
    for j in range(1, two_n):
        level = 0.25 - 2 * j * h
        img_lo = _g0(p, level - rho) - amp - pad
        img_hi = _g0(p, level + rho) - amp + pad
        seam_above = level - h + rho
        seam_below = level - 3 * h + rho
        margin_hi = min(margin_hi, seam_above - img_hi)
        margin_lo = min(margin_lo, img_lo - seam_below)
    margin_d = min(margin_hi, margin_lo)
    cs.add(
        Certificate(
            claim="a coupled drop from a parked band crosses exactly one seam",
            passed=margin_d > 0.0,
            margin=margin_d,
            witness={
                "bands": two_n - 1,
                "clearance_above_over_h": margin_hi / h,
                "clearance_below_over_h": margin_lo / h,
            },
        )
    )

    # E. single letters never descend more than two strip heights
    drop_zone = h / (3.0 * math.pi) + amp
    margin_e = 2.0 * h - drop_zone - pad
    cs.add(
        Certificate(
            claim="no letter descends more than two strip heights below its start",
            passed=margin_e > 0.0,
            margin=margin_e,
            witness={
                "max_drop_in_zone": drop_zone,
                "max_drop_from_shelf": amp,
                "two_strips": 2.0 * h,
            },
        )
    )

    # F. tilde seams are non-descending for backward tooth steps
    tilde = [
        0.25 - 2 * j * h + rho
        for j in range(1, two_n)
        if 0.25 - 2 * j * h + rho >= 5.0 * nu
    ]
    if tilde:
        tilde_down = min(t - _g0(p, t) for t in tilde)
        margin_f = tilde_down - pad
        witness_f = {"seams": len(tilde), "min_drop": tilde_down, "closed_form": msin_closed}
        passed_f = margin_f > 0.0
    else:
        margin_f = 0.0
        witness_f = {
            "seams": 0,
            "note": "no tilde seam meets the working window at this n",
        }
        passed_f = True
    cs.add(
        Certificate(
            claim="backward tooth steps never descend past tilde seams",
            passed=passed_f,
            margin=margin_f,
            method="interval" if tilde else "exact",
            witness=witness_f,
        )
    )

    # G. the inverse up-step exits the cube from working tilde blocks
    tops = [
        0.25 - 2 * (j - 1) * h + rho
        for j in range(1, two_n + 1)
        if 0.25 - 2 * (j - 1) * h + rho >= 5.0 * nu
    ]
    if tops:
        pad_inv = 1.5 * pad  # Lip(g1^{-1}) = 3/2 amplifies the budget
        exit_gap = min(-2.0 * nu - (1.0 - 1.5 * (1.0 - t)) for t in tops)
        margin_g = exit_gap - pad_inv
        witness_g = {"blocks": len(tops), "min_gap": exit_gap, "inverse_pad": pad_inv}
        passed_g = margin_g > 0.0
    else:
        margin_g = 0.0
        witness_g = {
            "blocks": 0,
            "note": "no tilde block meets the working window at this n",
        }
        passed_g = True
    cs.add(
        Certificate(
            claim="the inverse up-step leaves the padded cube from working tilde blocks",
            passed=passed_g,
            margin=margin_g,
            method="interval" if tops else "exact",
            witness=witness_g,
        )
    )

    # sampled confirmations under perturbation
    if pert is not None and samples_per_block > 0 and p.k == 2:
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(31,)))
        )
        # strips: trimmed interiors still move the right way
        ys = []
        wants = []
        for m in range(1, four_n + 1):
            lo = edges[m] + rho
            hi = edges[m - 1] - rho
            ys.append(rng.uniform(lo, hi, size=samples_per_block))
            wants.append(np.full(samples_per_block, -1.0 if m % 2 == 0 else 1.0))
        y = np.concatenate(ys)
        want = np.concatenate(wants)
        x = rng.uniform(5.0 * nu, 1.0 - 5.0 * nu, size=y.shape[0])
        img = _letter_images_vec(fam, (0, 0), np.stack([x, y], axis=1), pert)
        moved = (img[:, 1] - y) * want
        cs.add(
            Certificate(
                claim="sampled perturbed strip interiors keep their drift direction",
                passed=bool(np.all(moved > 0.0)),
                margin=float(moved.min()),
                method="sampled",
                witness={"samples": int(y.shape[0]), "min_signed_move": float(moved.min())},
            )
        )
        # bands: sampled coupled drops land strictly inside the next block
        oks = 0
        total = 0
        worst = math.inf
        for j in range(1, two_n):
            level = 0.25 - 2 * j * h
            yb = rng.uniform(level - rho, level + rho, size=samples_per_block)
            xb = rng.uniform(2.0 * nu, 3.0 * nu, size=samples_per_block)
            img = _letter_images_vec(fam, (1, 0), np.stack([xb, yb], axis=1), pert)
            lo_seam = level - 3 * h + rho
            hi_seam = level - h + rho
            good = (img[:, 1] > lo_seam) & (img[:, 1] < hi_seam)
            oks += int(good.sum())
            total += samples_per_block
            worst = min(
                worst,
                float(np.min(hi_seam - img[:, 1])),
                float(np.min(img[:, 1] - lo_seam)),
            )
        cs.add(
            Certificate(
                claim="sampled perturbed drops land strictly inside the next block",
                passed=oks == total,
                margin=worst,
                method="sampled",
                witness={"samples": total, "landed": oks},
            )
        )
    return cs


# ---------------------------------------------------------------------------
# directional movement over the working rectangles
# ---------------------------------------------------------------------------


def check_directional_movement(
    fam: FiberFamily,
    pert: PerturbationSpec | None = None,
    grid: int = 96,
) -> CertificateSet:
    """Certify signed coordinate movement on coupling-free rectangles.

    Every rectangle except the drop window is disjoint from the
    coupling support W, so the letters act diagonally there and the
    margins are the one-dimensional closed forms; the drop window
    itself sits over the plateau of the driving hat, where the coupled
    letter descends by the full plateau amplitude minus the tooth
    wiggle.  Perturbed margins subtract the displacement budget, and a
    grid of images confirms each sign.
    """
    p = fam.p
    if p.k != 2:
        raise ValueError("movement certificates are stated for the planar family (k = 2)")
    nu, h, rho = p.nu, p.h, p.rho
    amp = fam.beta.amplitude
    pad = _budget_pad(pert, p.k)
    cs = CertificateSet("directional-movement" + ("-perturbed" if pert is not None else ""))
    qm = region_box(p, RegionId("Qminus"))
    pm = region_box(p, RegionId("Pminus"))
    dw = region_box(p, RegionId("D"))

    rows = [
        (
            "first-symbol-0 letters pull the driver toward 0 on the inner cube",
            (0, 1), qm, 0, -1.0, 5.0 * nu * (1.0 - p.lam),
        ),
        (
            "first-symbol-1 letters push the driver up on the inner cube",
            (1, 1), qm, 0, +1.0, 5.0 * nu / 3.0,
        ),
        (
            "up-letters raise the deep coordinate on the inner cube",
            (0, 1), qm, 1, +1.0, 5.0 * nu / 3.0,
        ),
        (
            "the tooth map presses the trimmed shelf toward the shelf edge",
            (0, 0), pm, 1, -1.0, rho / 3.0,
        ),
        (
            "the coupled letter drops through the plateau window",
            (1, 0), dw, 1, -1.0, amp - h / (3.0 * math.pi),
        ),
    ]
    for claim, s, box, coord, sign, closed in rows:
        gx = np.linspace(float(box.lo[0]), float(box.hi[0]), grid)
        gy = np.linspace(float(box.lo[1]), float(box.hi[1]), grid)
        pts = np.stack(
            [np.repeat(gx, grid), np.tile(gy, grid)], axis=1
        )
        img = _letter_images_vec(fam, s, pts, pert)
        moved = (img[:, coord] - pts[:, coord]) * sign
        observed = float(moved.min())
        margin = closed - pad
        cs.add(
            Certificate(
                claim=claim,
                passed=margin > 0.0 and observed > 0.0,
                margin=margin,
                witness={
                    "symbol": list(s),
                    "coordinate": coord,
                    "closed_form": closed,
                    "grid_min_move": observed,
                    "grid": grid,
                },
            )
        )

    ok_support = (
        fam.alpha.ka >= nu
        and fam.alpha.kd <= 4.0 * nu
        and fam.beta.ka >= -2.0 * nu
        and fam.beta.kd <= 0.25 + 2.0 * nu
    )
    cs.add(
        Certificate(
            claim="the coupling vanishes outside the drop corridor W",
            passed=ok_support,
            margin=0.0,
            method="exact",
            witness={
                "alpha_support": [fam.alpha.ka, fam.alpha.kd],
                "beta_support": [fam.beta.ka, fam.beta.kd],
            },
        )
    )
    return cs


# ---------------------------------------------------------------------------
# zero-run structure of deep visits
# ---------------------------------------------------------------------------


def check_zero_run_lemma(
    fam: FiberFamily,
    *,
    orbits: int = 20,
    steps: int = 10**6,
    seed: int = 0,
    threads: int = 1,
    burn_in: int = 1000,
    crafted: bool = True,
) -> CertificateSet:
    """Check that deep visits force long zero runs in the base.

    A state can sit in the deep slab R only if the last n**k letters
    were zero on the deepest coordinate, and, in the planar family, in
    the drop corridor window W' only if the last n letters were zero
    on both.  (The corridor claim stops at k = 2: deeper corridors are
    driven by tooth coordinates that fall back into the coupling
    support within a few steps.)  Random orbits confirm zero
    violations (after the burn-in they essentially never get that
    deep; window checks are live throughout except during the first
    window-many steps, where there is no history to judge); the
    crafted descent base actually reaches the regions and certifies
    that its visits carry runs past the window.
    """
    p = fam.p
    cs = CertificateSet("zero-run")
    regions = [RegionId("R")]
    if p.k == 2:
        regions.append(RegionId("Wprime"))
    ens = run_ensemble(
        fam, orbits, steps, seed, regions=regions, threads=threads, burn_in=burn_in
    )
    for st in ens.stats:
        label = "deep slab" if st.rid.kind == "R" else "drop corridor"
        margin = 0.0 if st.min_run_at_visit is None else float(st.min_run_at_visit - st.window)
        cs.add(
            Certificate(
                claim=f"random orbits report no short-run visits to the {label}",
                passed=st.violations == 0,
                margin=margin,
                method="measured",
                witness={
                    "region": str(st.rid),
                    "window": st.window,
                    "hits": st.hits,
                    "violations": st.violations,
                    "orbits": orbits,
                    "steps": steps,
                    "burn_in": burn_in,
                },
            )
        )
    if crafted:
        from .words import make_descent_base

        base, meta = make_descent_base(fam)
        res = run_orbit(
            fam, base, np.full(p.k, 0.5), regions=regions, raise_on_escape=True
        )
        for st in res.stats:
            label = "deep slab" if st.rid.kind == "R" else "drop corridor"
            reached = st.hits > 0
            clean = st.violations == 0
            run_ok = st.min_run_at_visit is not None and st.min_run_at_visit >= st.window
            cs.add(
                Certificate(
                    claim=f"the crafted descent reaches the {label} with clean windows",
                    passed=reached and clean and run_ok,
                    margin=0.0 if st.min_run_at_visit is None else float(st.min_run_at_visit - st.window),
                    method="measured",
                    witness={
                        "region": str(st.rid),
                        "window": st.window,
                        "hits": st.hits,
                        "violations": st.violations,
                        "min_run_at_visit": st.min_run_at_visit,
                        "prefix_length": meta["prefix_length"],
                        "landing": meta["landing"],
                    },
                )
            )
    return cs


# ---------------------------------------------------------------------------
# attractor statistics
# ---------------------------------------------------------------------------


def attractor_histogram(
    fam: FiberFamily,
    *,
    orbits: int = 100,
    steps: int = 10**6,
    seed: int = 0,
    grid: int = 64,
    burn_in: int = 1000,
    threads: int = 1,
    base: BaseSequence | None = None,
    x0=None,
    pert: PerturbationSpec | None = None,
) -> tuple[np.ndarray, dict]:
    """Occupancy counts of the last two coordinates over the padded cube.

    Either an ensemble of random orbits (seeded per orbit, so thread
    count does not matter) or one orbit over a supplied base.  Returns
    the grid counts and a metadata dict describing extent and totals.
    """
    p = fam.p
    if base is not None:
        if x0 is None:
            x0 = np.full(p.k, 0.5)
        res = run_orbit(
            fam,
            base,
            x0,
            regions=[RegionId("Qplus")],
            burn_in=burn_in,
            pert=pert,
            hist_grid=grid,
        )
        hist = res.hist
        counted = res.counted_steps
        used = 1
    else:
        ens = run_ensemble(
            fam,
            orbits,
            steps,
            seed,
            burn_in=burn_in,
            pert=pert,
            hist_grid=grid,
            threads=threads,
        )
        hist = ens.hist
        counted = ens.counted_steps
        used = orbits
    meta = {
        "n": p.n,
        "k": p.k,
        "grid": grid,
        "extent": [-2.0 * p.nu, 1.0 + 2.0 * p.nu],
        "coordinates": [p.k - 2, p.k - 1],
        "orbits": used,
        "counted_steps": counted,
        "burn_in": burn_in,
        "seed": None if base is not None else seed,
        "perturbed": pert is not None,
    }
    return hist, meta


def write_histogram_csv(hist: np.ndarray, meta: dict, dest) -> None:
    """Write one row per cell: i, j, x_lo, x_hi, y_lo, y_hi, count, frequency."""
    grid = meta["grid"]
    lo, hi = meta["extent"]
    edges = np.linspace(lo, hi, grid + 1)
    total = max(int(hist.sum()), 1)
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "x_lo", "x_hi", "y_lo", "y_hi", "count", "frequency"])
        for i in range(grid):
            for j in range(grid):
                c = int(hist[i, j])
                w.writerow(
                    [
                        i,
                        j,
                        repr(float(edges[i])),
                        repr(float(edges[i + 1])),
                        repr(float(edges[j])),
                        repr(float(edges[j + 1])),
                        c,
                        repr(c / total),
                    ]
                )
    finally:
        if own:
            fh.close()


def invisibility_report(
    fam: FiberFamily,
    *,
    orbits: int = 100,
    steps: int = 10**6,
    seed: int = 0,
    threads: int = 1,
    burn_in: int = 1000,
) -> dict:
    """Compare the guaranteed deep-visit frequency with observations.

    The deep slab R belongs to the statistical attractor, yet the
    fraction of time any orbit may spend there is bounded by the
    zero-run structure: reaching it costs n**k consecutive zero
    letters, an event of frequency 2**(-n**k) under the Bernoulli
    base.  At desk scale that threshold is far below one observable
    event, so after the burn-in (which drains starts that happen to
    lie inside the slab) the honest empirical finding is zero visits.
    """
    p = fam.p
    regions = [RegionId("R"), RegionId("Wprime"), RegionId("W"), RegionId("D")]
    ens = run_ensemble(
        fam, orbits, steps, seed, regions=regions, threads=threads, burn_in=burn_in
    )
    counted = ens.counted_steps
    r_stats = ens.stats[0]
    freq = r_stats.hits / counted if counted else 0.0
    horizon_log2 = p.n**p.k
    observable = horizon_log2 < math.log2(max(counted, 1))
    if r_stats.hits == 0:
        verdict = "invisible at this horizon"
        detail = (
            "the deep slab was never visited although it belongs to the "
            "statistical attractor; detecting it needs on the order of "
            f"2**{horizon_log2} steps"
        )
    else:
        verdict = "visible"
        detail = "the deep slab was visited within the simulated horizon"
    return {
        "n": p.n,
        "k": p.k,
        "epsilon_log2": p.epsilon_log2,
        "epsilon": p.epsilon,
        "orbits": orbits,
        "steps_per_orbit": steps,
        "burn_in": burn_in,
        "counted_steps": counted,
        "deep_hits": r_stats.hits,
        "deep_frequency": freq,
        "guaranteed_frequency_log2": p.epsilon_log2,
        "threshold_observable_at_this_horizon": observable,
        "verdict": verdict,
        "detail": detail,
        "regions": {str(st.rid): st.to_json(counted) for st in ens.stats},
    }


# ---------------------------------------------------------------------------
# perturbed-orbit shadowing on the shelf
# ---------------------------------------------------------------------------


def check_discrepancy_bound(
    fam: FiberFamily,
    pert: PerturbationSpec,
    *,
    trials: int = 200,
    length: int = 2048,
    seed: int = 0,
) -> Certificate:
    """Perturbed orbits shadow unperturbed ones within the band width.

    Each trial runs the same random base from the same start, once
    plain and once perturbed, and measures the sup-norm deviation over
    the prefix during which the unperturbed orbit stays inside the
    trimmed shelf.  The letters act there as contractions, so the
    deviation is a geometric sum of displacement-budget kicks and must
    stay below the band half-width rho.
    """
    p = fam.p
    pm = region_box(p, RegionId("Pminus"))
    lo, hi = np.asarray(pm.lo), np.asarray(pm.hi)
    worst = 0.0
    longest = 0
    total_steps = 0
    for i in range(trials):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        s_base, s_x0 = ss.spawn(2)
        base = sample_base(p.k, length, s_base)
        rng = np.random.Generator(np.random.PCG64(s_x0))
        x0 = rng.uniform(lo, hi)
        plain = run_orbit(fam, base, x0, trace=True, raise_on_escape=False)
        bumped = run_orbit(fam, base, x0, trace=True, pert=pert, raise_on_escape=False)
        ta, tb = plain.trace, bumped.trace
        m = min(ta.shape[0], tb.shape[0])
        inside = np.all((ta[:m] >= lo) & (ta[:m] <= hi), axis=1)
        prefix = int(np.logical_and.accumulate(inside).sum())
        if prefix == 0:
            continue
        dev = float(np.max(np.abs(ta[:prefix] - tb[:prefix])))
        worst = max(worst, dev)
        longest = max(longest, prefix)
        total_steps += prefix
    return Certificate(
        claim="perturbed orbits shadow unperturbed ones within the band half-width on the shelf",
        passed=worst < p.rho,
        margin=p.rho - worst,
        method="measured",
        witness={
            "trials": trials,
            "length": length,
            "max_deviation": worst,
            "band_half_width": p.rho,
            "longest_shelf_stay": longest,
            "shelf_steps_total": total_steps,
            "budget": pert.delta,
        },
    )
