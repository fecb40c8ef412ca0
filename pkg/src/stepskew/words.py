"""Word machinery: certified steering of the fiber by finite symbol words.

Four layers build on each other:

* an upper coarse system: scaled drift copies acting on the block
  K = L x J above the tooth zone, with robustness certificates
  (inclusion, invariance, contraction, coverage);
* an entry word (1...1 repeated, then 0...0) whose rigorous box image
  takes the whole absorbing cube into K+;
* a greedy contraction word that shrinks K+ into an arbitrarily small
  ball around a point of K, by backward tracking through the coarse
  copies;
* transport: a backward ascent (for targets above the tooth zone) or a
  forward ladder (for targets inside it) that moves the small ball to a
  requested target without ever re-expanding it.

Every delivered word carries one final rigorous certificate: the interval
image of the full absorbing cube under the complete word lies in the
requested ball.  The construction heuristics steer; only that box check
certifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baseseq import BaseSequence, sample_base
from .certs import Certificate, CertificateSet
from .fiber import FiberFamily, fiber_eval
from .orbit import PerturbationSpec, apply_word_box, run_orbit
from .params import Box, Params, RegionId, region_box
from .scalar_maps import ScalarMapId, scalar_deriv_range, scalar_eval, scalar_inverse

__all__ = [
    "UpperSystem",
    "build_upper_system",
    "check_ifs_assumptions",
    "entry_word",
    "greedy_critical_word",
    "ascent_word",
    "critical_word_for",
    "make_descent_base",
    "negut_frequency_experiment",
    "CriticalWordResult",
    "AscentResult",
    "NegutReport",
]


# ---------------------------------------------------------------------------
# upper coarse system
# ---------------------------------------------------------------------------


@dataclass
class UpperSystem:
    """Geometry of the coarse contraction system above the tooth zone.

    The x-axis carries the drift interval triple Lminus c= L c= Lplus and
    the ladder constant c = lam**Kc * a; the y-axis carries the linear-zone
    triple Jminus c= J c= Jplus with safety gap h/8.  The coarse letters
    are (m, v): m drift-0 steps and one drift-1 step on x, paired with a
    v-word of length m+1 on y.
    """

    p: Params
    a: float
    c: float
    Kc: int
    L: tuple[float, float]
    Lplus: tuple[float, float]
    Lminus: tuple[float, float]
    J: tuple[float, float]
    Jplus: tuple[float, float]
    Jminus: tuple[float, float]
    delta_j: float
    lam_pows: np.ndarray  # lam**0 .. lam**Kc

    @property
    def K_box(self) -> Box:
        return Box.make([self.L[0], self.J[0]], [self.L[1], self.J[1]])

    @property
    def Kplus_box(self) -> Box:
        return Box.make(
            [self.Lplus[0], self.Jplus[0]], [self.Lplus[1], self.Jplus[1]]
        )


def build_upper_system(p: Params) -> UpperSystem:
    if p.k != 2:
        raise ValueError("the coarse word system is two-dimensional (k = 2)")
    if p.c is None or p.Kc is None:
        raise ValueError(
            f"no ladder constant at n = {p.n}: the coarse system is undefined"
        )
    a, c, h = p.a, p.c, p.h
    dj = h / 8.0
    lam_pows = p.lam ** np.arange(p.Kc + 1, dtype=np.float64)
    return UpperSystem(
        p=p, a=a, c=c, Kc=p.Kc,
        L=(a + c, 1.0 - 0.75 * c),
        Lplus=(a, 1.0 + c),
        Lminus=(a + 2.0 * c, 1.0 - c),
        J=(0.25 + h / 2.0, 1.0 - h / 2.0),
        Jplus=(0.25 - h / 2.0, 1.0 + h / 2.0),
        Jminus=(0.25 + h / 2.0 + dj, 1.0 - h / 2.0 - dj),
        delta_j=dj,
        lam_pows=lam_pows,
    )


def _f1(x: float) -> float:
    return 1.0 - (2.0 / 3.0) * (1.0 - x)


def _f1_inv(y: float) -> float:
    return 1.0 - 1.5 * (1.0 - y)


def check_ifs_assumptions(fam: FiberFamily) -> CertificateSet:
    """The four robustness groups of the coarse system, with margins.

    inclusion: the nested triples have positive gaps; invariance: every
    coarse letter maps the outer block into itself; contraction: uniform
    factor below 1 on the nominal block (on the outer block the vertical
    factor is exactly 1 at the lower edge, which is why the greedy loop
    budgets with running interval images instead); coverage: the robust
    inner copies still cover the nominal block.
    """
    p = fam.p
    us = build_upper_system(p)
    a, c, h, lam = us.a, us.c, p.h, p.lam
    out = CertificateSet("coarse-system")

    # -- inclusion -----------------------------------------------------
    gaps = {
        "L- in L (left)": (a + 2 * c) - (a + c),
        "L- in L (right)": (1 - 0.75 * c) - (1 - c),
        "L in L+ (left)": (a + c) - a,
        "L in L+ (right)": (1 + c) - (1 - 0.75 * c),
        "J- in J": us.delta_j,
        "J in J+": h / 2.0 + 0.25 - 0.25,  # h/2 on either axis end
    }
    out.add(
        Certificate(
            claim="nested blocks include robustly",
            passed=all(v > 0 for v in gaps.values()),
            margin=min(gaps.values()),
            witness={"gaps": gaps},
        )
    )

    # -- invariance ------------------------------------------------------
    # x: f1(lam**m L+) inside L+ for every m up to Kc
    img_lo = 1.0 - (2.0 / 3.0) * (1.0 - us.lam_pows * us.Lplus[0])
    img_hi = 1.0 - (2.0 / 3.0) * (1.0 - us.lam_pows * us.Lplus[1])
    x_margin = float(min((img_lo - us.Lplus[0]).min(), (us.Lplus[1] - img_hi).min()))
    out.add(
        Certificate(
            claim="drift letters keep the outer block (x)",
            passed=x_margin > 0,
            margin=x_margin,
            witness={"letters": us.Kc + 1},
        )
    )
    # y: g0 and g1 map J+ into J+
    y_margins = []
    for mid in (ScalarMapId.G0, ScalarMapId.G1):
        lo = scalar_eval(p, mid, us.Jplus[0])
        hi = scalar_eval(p, mid, us.Jplus[1])
        y_margins.append(min(lo - us.Jplus[0], us.Jplus[1] - hi))
    out.add(
        Certificate(
            claim="tooth letters keep the outer block (y)",
            passed=min(y_margins) > 0,
            margin=float(min(y_margins)),
            witness={"g0_margin": y_margins[0], "g1_margin": y_margins[1]},
        )
    )

    # -- contraction -----------------------------------------------------
    x_factor = (2.0 / 3.0) * float(us.lam_pows[0])  # worst letter: m = 0
    y_factor = max(
        scalar_deriv_range(p, ScalarMapId.G0, us.J[0], us.J[1])[1],
        scalar_deriv_range(p, ScalarMapId.G1, us.J[0], us.J[1])[1],
    )
    y_factor_outer = max(
        scalar_deriv_range(p, ScalarMapId.G0, us.Jplus[0], us.Jplus[1])[1],
        scalar_deriv_range(p, ScalarMapId.G1, us.Jplus[0], us.Jplus[1])[1],
    )
    factor = max(x_factor, y_factor)
    out.add(
        Certificate(
            claim="coarse letters contract on the nominal block",
            passed=factor < 1.0,
            margin=1.0 - factor,
            witness={
                "x_factor": x_factor,
                "y_factor": y_factor,
                # marginal: the sawtooth slope reaches 1 at the outer lower
                # edge, so no uniform factor below 1 exists on the outer
                # block; the greedy budget works with running intervals
                "y_factor_outer_block": float(y_factor_outer),
            },
        )
    )

    # -- coverage --------------------------------------------------------
    # x: the robust copies f1(lam**m Lminus) must cover L
    kc = us.Kc
    lowest_lo = 1.0 - (2.0 / 3.0) * (1.0 - (lam**kc) * us.Lminus[0])
    low_margin = (a + c) - lowest_lo
    top_hi = 1.0 - (2.0 / 3.0) * (1.0 - us.Lminus[1])
    top_margin = top_hi - (1.0 - 0.75 * c)
    contig = lam * (1.0 - c) - (a + 2.0 * c)
    out.add(
        Certificate(
            claim="robust drift copies cover the nominal block (x)",
            passed=min(low_margin, top_margin, contig) > 0,
            margin=float(low_margin),
            witness={
                "low_edge_margin": float(low_margin),
                "top_edge_margin": float(top_margin),
                "copy_contiguity_margin": float(contig),
                "closed_form_low_edge": c / 3.0 - (4.0 / 3.0) * c * c / a,
            },
        )
    )
    # y: g0(Jminus) and g1(Jminus) must cover J between them
    g0_img = (
        scalar_eval(p, ScalarMapId.G0, us.Jminus[0]),
        scalar_eval(p, ScalarMapId.G0, us.Jminus[1]),
    )
    g1_img = (
        scalar_eval(p, ScalarMapId.G1, us.Jminus[0]),
        scalar_eval(p, ScalarMapId.G1, us.Jminus[1]),
    )
    y_low = us.J[0] - g0_img[0]
    y_overlap = g0_img[1] - g1_img[0]
    y_top = g1_img[1] - us.J[1]
    out.add(
        Certificate(
            claim="robust tooth images cover the nominal block (y)",
            passed=min(y_low, y_overlap, y_top) > 0,
            margin=float(min(y_low, y_overlap, y_top)),
            witness={
                "low_edge_margin": float(y_low),
                "overlap_margin": float(y_overlap),
                "top_edge_margin": float(y_top),
            },
        )
    )
    return out


# ---------------------------------------------------------------------------
# entry word
# ---------------------------------------------------------------------------


def entry_word(
    fam: FiberFamily,
    pert: PerturbationSpec | None = None,
    max_reps: int = 200,
) -> tuple[np.ndarray, Certificate]:
    """Smallest word (1...1)^m (0...0) whose box image of the absorbing
    cube certifies inside the outer block K+."""
    p = fam.p
    us = build_upper_system(p)
    kp = us.Kplus_box
    qplus = region_box(p, RegionId("Qplus"))
    one = np.ones((1, p.k), dtype=np.uint8)
    zero = np.zeros((1, p.k), dtype=np.uint8)
    for m in range(1, max_reps + 1):
        word = np.concatenate([np.repeat(one, m, axis=0), zero])
        img = apply_word_box(fam, word, qplus, pert=pert)
        margin = kp.containment_margin(img)
        if margin > 0:
            cert = Certificate(
                claim="entry word maps the absorbing cube into the outer block",
                passed=True,
                margin=float(margin),
                witness={
                    "reps": m,
                    "length": m + 1,
                    "image": img.to_json(),
                    "perturbed": pert is not None,
                },
            )
            return word, cert
    raise RuntimeError(f"no entry word found with up to {max_reps} repetitions")


# ---------------------------------------------------------------------------
# greedy contraction word
# ---------------------------------------------------------------------------


def _choose_drift_count(us: UpperSystem, z: float) -> int:
    """Smallest m with z / lam**m inside L (exists by coverage)."""
    lo, hi = us.L
    if z > hi:
        raise ValueError(f"tracked x-preimage {z} above the block")
    if z >= lo:
        return 0
    m = int(math.ceil(math.log(lo / z) / -math.log(us.p.lam)))
    for cand in (m - 1, m, m + 1, m + 2):
        if 0 <= cand <= us.Kc and lo <= z / us.lam_pows[cand] <= hi:
            return cand
    raise ValueError(f"no drift count lands {z} in the block (coverage gap?)")


def greedy_critical_word(
    fam: FiberFamily,
    target,
    radius: float,
    max_letters: int = 500_000,
) -> tuple[np.ndarray, Certificate]:
    """Word whose box image of K+ lies in the sup-ball around `target`.

    `target` must lie in the nominal block K.  Rounds prepend coarse
    letters while tracking the preimage of the target through the block;
    the stopping estimate uses running interval images and the returned
    certificate is a full interval pass over the assembled word.
    """
    p = fam.p
    us = build_upper_system(p)
    tx, ty = float(target[0]), float(target[1])
    if not (us.L[0] <= tx <= us.L[1] and us.J[0] <= ty <= us.J[1]):
        raise ValueError(f"target {target} outside the nominal block")
    if radius <= 0:
        raise ValueError("radius must be positive")

    ball = Box.make([tx - radius, ty - radius], [tx + radius, ty + radius])
    kplus = us.Kplus_box
    rounds: list[np.ndarray] = []  # rounds[i] applied after rounds[i+1]
    qx, qy = tx, ty
    # running width estimates (heuristic; certificates do the real work)
    wx = kplus.widths[0]
    wy = kplus.widths[1]
    y_int = list(us.Jplus)
    total = 0

    def assembled() -> np.ndarray:
        return np.concatenate(list(reversed(rounds)), axis=0)

    while total < max_letters:
        # x-part: m drift-0 letters and one drift-1 letter
        z = _f1_inv(qx)
        m = _choose_drift_count(us, z)
        qx = z / float(us.lam_pows[m])
        # y-part: m+1 tooth letters tracked backward through J
        v_rev = []
        t = qy
        for _ in range(m + 1):
            g0_hi = scalar_eval(p, ScalarMapId.G0, us.J[1])
            b = 0 if t <= g0_hi else 1
            t = scalar_inverse(p, ScalarMapId.G0 if b == 0 else ScalarMapId.G1, t)
            assert us.J[0] - 1e-9 <= t <= us.J[1] + 1e-9, "tracking left the block"
            v_rev.append(b)
        qy = t
        v = list(reversed(v_rev))
        letters = np.zeros((m + 1, 2), dtype=np.uint8)
        letters[m, 0] = 1
        letters[:, 1] = v
        rounds.append(letters)
        total += m + 1
        # update estimates: exact on x, running interval chain on y
        wx *= (2.0 / 3.0) * float(us.lam_pows[m])
        for b in v:
            mid = ScalarMapId.G0 if b == 0 else ScalarMapId.G1
            wy *= scalar_deriv_range(p, mid, y_int[0], y_int[1])[1]
            y_int = [
                scalar_eval(p, mid, y_int[0]),
                scalar_eval(p, mid, y_int[1]),
            ]
        if wx <= 0.45 * radius and wy <= 0.45 * radius:
            word = assembled()
            img = apply_word_box(fam, word, kplus)
            margin = ball.containment_margin(img)
            if margin > 0:
                cert = Certificate(
                    claim="greedy word maps the outer block into the target ball",
                    passed=True,
                    margin=float(margin),
                    witness={
                        "rounds": len(rounds),
                        "length": int(word.shape[0]),
                        "ball_center": [tx, ty],
                        "radius": radius,
                        "anchor": [qx, qy],
                        "image": img.to_json(),
                    },
                )
                return word, cert
            # tighten and retry
            wx *= 0.5
            wy *= 0.5
    raise RuntimeError(
        f"greedy word exceeded {max_letters} letters without certifying"
    )


# ---------------------------------------------------------------------------
# ascent (backward steering above the tooth zone)
# ---------------------------------------------------------------------------


@dataclass
class AscentResult:
    word: np.ndarray  # forward order: maps `anchor` to (near) the target
    anchor: np.ndarray  # point of K the forward word starts from
    steps: int
    path_min_y: float


def ascent_word(fam: FiberFamily, q, max_steps: int = 10_000) -> AscentResult:
    """Backward greedy from a point of the safe cube up into the block K.

    Works above the tooth zone (q_y >= 1/4 + rho): every backward step
    keeps y in the linear zone and x clear of the coupling support, so the
    forward word is a pure sup-norm contraction along its tube.  Targets
    inside the tooth zone need the forward ladder instead; with the default
    cap this raises once the backward tooth crawl exceeds the budget.
    """
    p = fam.p
    us = build_upper_system(p)
    qx, qy = float(q[0]), float(q[1])
    qminus = region_box(p, RegionId("Qminus"))
    if not qminus.contains_point((qx, qy)):
        raise ValueError(f"ascent point {q} outside the safe cube")

    letters_rev: list[tuple[int, int]] = []
    x, y = qx, qy
    min_y = y
    x_floor = 4.0 * p.nu + 2.0 * p.rho  # stay clear of the coupling support
    y_floor = 0.25 + p.rho
    y_cap = us.J[1]
    cx, cy = 0.5 * (us.L[0] + us.L[1]), 0.5 * (us.J[0] + us.J[1])

    if qy < y_floor:
        raise ValueError(
            f"ascent point y = {qy} below the linear zone; "
            "use the forward ladder for tooth-zone targets"
        )

    for step in range(max_steps):
        if us.L[0] <= x <= us.L[1] and us.J[0] <= y <= us.J[1]:
            word = np.array(list(reversed(letters_rev)), dtype=np.uint8)
            if word.size == 0:
                word = word.reshape(0, 2)
            return AscentResult(
                word=word, anchor=np.array([x, y]), steps=step, path_min_y=min_y
            )
        best = None
        for b1 in (0, 1):
            px = x / p.lam if b1 == 0 else (3.0 * x - 1.0) / 2.0
            if not (x_floor <= px <= us.Lplus[1] - p.rho):
                continue
            for b2 in (0, 1):
                py = scalar_inverse(
                    p, ScalarMapId.G0 if b2 == 0 else ScalarMapId.G1, y
                )
                if not (y_floor <= py <= y_cap):
                    continue
                d = (px - cx) ** 2 + (py - cy) ** 2
                if best is None or d < best[0]:
                    best = (d, b1, b2, px, py)
        if best is None:
            raise RuntimeError(
                f"ascent stuck at ({x}, {y}): no admissible backward letter"
            )
        _, b1, b2, x, y = best
        letters_rev.append((b1, b2))
        min_y = min(min_y, y)
    raise RuntimeError(f"ascent exceeded the {max_steps}-step cap from {q}")


# ---------------------------------------------------------------------------
# forward ladder (descent into the tooth zone) and generic-k positioning
# ---------------------------------------------------------------------------


class _Builder:
    """Simulates a point forward while recording the emitted letters.

    Pure construction heuristics: nothing here is rigorous, the caller
    certifies the finished word with one interval pass.
    """

    def __init__(self, fam: FiberFamily, x0):
        self.fam = fam
        self.p = fam.p
        self.x = np.array(x0, dtype=np.float64)
        self.letters: list[tuple[int, ...]] = []

    def emit(self, s: tuple[int, ...]) -> None:
        self.x = fiber_eval(self.fam, s, self.x)
        self.letters.append(s)

    def emit_many(self, s: tuple[int, ...], count: int) -> None:
        for _ in range(count):
            self.emit(s)

    def word(self) -> np.ndarray:
        return np.array(self.letters, dtype=np.uint8)

    # -- coordinate helpers ------------------------------------------------

    def zeros_letter(self) -> tuple[int, ...]:
        return (0,) * self.p.k

    def up_letter(self, j: int) -> tuple[int, ...]:
        """Kick coordinate j (0-based) upward without coupling anywhere."""
        s = [0] * self.p.k
        s[j] = 1
        return tuple(s)

    def drop_letter(self, j: int) -> tuple[int, ...]:
        """Couple at coordinate j (0-based, j >= 1): 1-prefix, 0 at j."""
        s = [0] * self.p.k
        for i in range(j):
            s[i] = 1
        return tuple(s)

    def settle(self, count: int = 80) -> None:
        """All-zero letters: every tooth coordinate parks at a level."""
        self.emit_many(self.zeros_letter(), count)

    def position_first(self, lo: float, hi: float, cap: int = 100_000) -> None:
        """Drive coordinate 1 into [lo, hi] by drift alternation."""
        for _ in range(cap):
            x1 = self.x[0]
            if lo <= x1 <= hi:
                return
            if x1 > hi:
                self.emit(self.zeros_letter())
            else:
                self.emit(self.up_letter(0))
        raise RuntimeError(f"first-coordinate positioning stalled at {self.x[0]}")

    def position_tooth(self, j: int, lo: float, hi: float, cap: int = 400) -> None:
        """Drive tooth coordinate j (1-based index j >= 2 of the point,
        0-based j-1 here) into [lo, hi] by park/drop/kick cycles."""
        jj = j - 1
        for _ in range(cap):
            self.settle(90)
            xj = self.x[jj]
            if lo <= xj <= hi:
                return
            if xj > hi:
                # one coupled drop: position the driver first
                if jj == 1:
                    self.position_first(2.05 * self.p.nu, 2.95 * self.p.nu)
                else:
                    self.position_tooth(j - 1, 2.05 * self.p.nu, 2.95 * self.p.nu)
                self.emit(self.drop_letter(jj))
            else:
                self.emit(self.up_letter(jj))
        raise RuntimeError(f"tooth positioning of coordinate {j} stalled")


def make_descent_base(
    fam: FiberFamily,
    x0=None,
    target_y: float = None,
    tail: int | None = None,
) -> tuple[BaseSequence, dict]:
    """Craft a base window that drives the deepest coordinate below the
    deep slab threshold and then holds it there with an all-zero tail.

    Works for any k >= 2 by the nested positioning cascade: dropping
    coordinate j needs coordinate j-1 parked on the coupling plateau,
    which needs its own drops, and so on down to the drift coordinate.
    Returns the base and a metadata dict with the landing state; the tail
    default is n**k plus slack, long enough for the zero-run windows.
    """
    p = fam.p
    if x0 is None:
        x0 = np.full(p.k, 0.5)
    if target_y is None:
        target_y = 0.08
    if tail is None:
        tail = p.n**p.k + 512
    b = _Builder(fam, x0)
    deep = p.k - 1
    guard = 16 * p.n + 64
    for _ in range(guard):
        b.settle(90)
        if b.x[deep] < target_y:
            break
        if deep == 0:
            raise RuntimeError("descent base needs k >= 2")
        if deep >= 2:
            b.position_tooth(deep, 2.05 * p.nu, 2.95 * p.nu)
        else:
            b.position_first(2.05 * p.nu, 2.95 * p.nu)
        b.emit(b.drop_letter(deep))
    else:
        raise RuntimeError("descent cascade did not reach the deep slab")
    b.settle(90)
    prefix_len = len(b.letters)
    b.emit_many(b.zeros_letter(), tail)
    meta = {
        "prefix_length": prefix_len,
        "tail": tail,
        "landing": b.x.tolist(),
        "deep_value": float(b.x[deep]),
    }
    return BaseSequence(b.word(), origin=0), meta


def _ladder_word(
    fam: FiberFamily, start, target, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Forward ladder from a point of K down to a tooth-zone target.

    Returns (letters, final point).  The ladder is a contraction pipeline:
    every letter it emits acts on the tracked neighborhood with diagonal
    derivative at most max(lam, 0.9) (drops happen strictly on the
    coupling plateau where both hat derivatives vanish, crawls happen
    above the tooth zone or inside a single tooth flank), so the small
    box delivered by the greedy word never re-expands.
    """
    p = fam.p
    tx, ty = float(target[0]), float(target[1])
    h, nu = p.h, p.nu
    b = _Builder(fam, start)
    wlo, whi = 2.15 * nu, 2.85 * nu

    # target level: even lattice index, clamped inside the tooth zone
    j_star = max(1, round((0.25 - ty) / (2.0 * h)))
    level = 0.25 - 2.0 * h * j_star

    def parked(y: float) -> bool:
        # near the attracting lattice (even index), or pinned above 1/4
        if y > 0.25:
            return y - 0.25 < 1e-12
        d = (0.25 - y) / h
        r = d - 2.0 * round(d / 2.0)
        return abs(r) * h < 1e-9

    def pending_index(y: float) -> int:
        # even lattice index the orbit will park at under zero letters
        return 2 * math.ceil((0.25 - y) / (2.0 * h) - 1e-9)

    # descend one level pair per pass; the break fires at the post-drop
    # state, with x still right of the coupling support for the steer
    for _ in range(2 * p.n + 8):
        if b.x[1] <= 0.25 and pending_index(b.x[1]) == 2 * j_star:
            break
        # crawl: drift down to the drop window while y parks
        cap = 200_000
        while (b.x[0] > whi or not parked(b.x[1])) and cap > 0:
            b.emit((0, 0))
            cap -= 1
        if cap == 0:
            raise RuntimeError("ladder crawl stalled")
        if b.x[0] < wlo:
            raise RuntimeError("ladder drifted through the drop window")
        b.emit((1, 0))  # coupled drop
    else:
        raise RuntimeError("ladder did not reach the target level")

    # park y exactly; x drifts a little but stays right of the support
    cap = 400
    while not parked(b.x[1]) and cap > 0:
        b.emit((0, 0))
        cap -= 1
    if cap == 0 or b.x[0] <= 4.0 * nu + 2.0 * p.rho:
        raise RuntimeError("ladder settle failed clear of the coupling support")

    # steer x to the target; both letter types leave the parked level fixed
    # (the climb letter is uncoupled because x stays right of the support)
    while b.x[0] < tx:
        b.emit((1, 0))
        if b.x[0] <= 4.0 * nu:
            raise RuntimeError("steer entered the coupling support")
    while b.x[0] > tx:
        b.emit((0, 0))
        if b.x[0] <= 4.0 * nu:
            raise RuntimeError("trim entered the coupling support")
    if abs(b.x[0] - tx) > 0.5 * radius or abs(b.x[1] - ty) > 0.75 * radius:
        raise RuntimeError(
            f"ladder landed at {b.x.tolist()}, too far from {target}"
        )
    return b.word(), b.x


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


@dataclass
class CriticalWordResult:
    target: np.ndarray
    radius: float
    word: np.ndarray
    certificate: Certificate
    parts: dict = field(default_factory=dict)


def critical_word_for(
    fam: FiberFamily,
    target,
    radius: float = None,
) -> CriticalWordResult:
    """One word whose box image of the whole absorbing cube certifies
    inside the sup-ball around a safe-cube target.

    Pipeline: entry word into the outer block, greedy contraction to a
    small ball, then transport: a backward-built ascent word for targets
    above the tooth zone, or a forward ladder word for targets inside it.
    The returned certificate is the single rigorous interval pass of the
    complete word over the absorbing cube.
    """
    p = fam.p
    if radius is None:
        radius = p.r
    target = np.asarray(target, dtype=np.float64)
    qminus = region_box(p, RegionId("Qminus"))
    if not qminus.contains_point(target):
        raise ValueError(f"target {target.tolist()} outside the safe cube")
    us = build_upper_system(p)
    e_word, e_cert = entry_word(fam)
    ty = float(target[1])
    if ty >= 0.25 + p.rho:
        asc = ascent_word(fam, target)
        rg = min(0.9 * p.rho, 0.45 * radius)
        g_word, g_cert = greedy_critical_word(fam, asc.anchor, rg)
        word = np.concatenate([e_word, g_word, asc.word], axis=0)
        parts = {
            "route": "ascent",
            "entry": int(e_word.shape[0]),
            "contract": int(g_word.shape[0]),
            "transport": int(asc.word.shape[0]),
            "anchor": asc.anchor.tolist(),
            "ball_radius": rg,
        }
    else:
        start = np.array(
            [0.5 * (us.L[0] + us.L[1]), 0.5 * (us.J[0] + us.J[1])]
        )
        rg = min(1e-6, 0.1 * radius)
        g_word, g_cert = greedy_critical_word(fam, start, rg)
        l_word, landing = _ladder_word(fam, start, target, radius)
        word = np.concatenate([e_word, g_word, l_word], axis=0)
        parts = {
            "route": "ladder",
            "entry": int(e_word.shape[0]),
            "contract": int(g_word.shape[0]),
            "transport": int(l_word.shape[0]),
            "anchor": start.tolist(),
            "landing": landing.tolist(),
            "ball_radius": rg,
        }
    qplus = region_box(p, RegionId("Qplus"))
    ball = Box.make(target - radius, target + radius)
    img = apply_word_box(fam, word, qplus)
    margin = ball.containment_margin(img)
    cert = Certificate(
        claim="word maps the absorbing cube into the target ball",
        passed=margin > 0,
        margin=float(margin),
        witness={
            "target": target.tolist(),
            "radius": radius,
            "length": int(word.shape[0]),
            "image": img.to_json(),
            "entry_margin": e_cert.margin,
            "contract_margin": g_cert.margin,
        },
    )
    return CriticalWordResult(
        target=target, radius=radius, word=word, certificate=cert, parts=parts
    )


# ---------------------------------------------------------------------------
# frequency experiment
# ---------------------------------------------------------------------------


@dataclass
class NegutReport:
    word_length: int
    base_length: int
    occurrences: int
    expected: float
    sigma: float
    z_score: float
    landings_checked: int
    landing_exceptions: int
    frequency_ok: bool
    landings_ok: bool

    def to_json(self) -> dict:
        return {
            "word_length": self.word_length,
            "base_length": self.base_length,
            "occurrences": self.occurrences,
            "expected": self.expected,
            "sigma": self.sigma,
            "z_score": self.z_score,
            "landings_checked": self.landings_checked,
            "landing_exceptions": self.landing_exceptions,
            "frequency_ok": self.frequency_ok,
            "landings_ok": self.landings_ok,
        }


def negut_frequency_experiment(
    fam: FiberFamily,
    word: np.ndarray,
    landing_box: Box,
    length: int = 10**7,
    seed: int = 0,
    x0=None,
    z_bound: float = 3.0,
    chunk: int = 1 << 20,
) -> NegutReport:
    """Count word occurrences in a random base against the Bernoulli law
    and check the orbit state right after every occurrence.

    Each position carries the word with probability 2**(-k*m); the count
    is compared to the binomial mean within z_bound sigmas (overlapping
    positions are positively dependent, so sigma is the i.i.d. bound
    only; for the words used here overlaps cannot occur).  The landing
    check walks the orbit in chunks and records any occurrence after
    which the state is outside `landing_box` (the word certificates make
    exceptions impossible; a nonzero count is a real failure).
    """
    from .baseseq import word_occurrences

    p = fam.p
    w = np.asarray(word, dtype=np.uint8)
    m = w.shape[0]
    base = sample_base(p.k, length, seed)
    occ = word_occurrences(base, w)
    positions = occ + m  # state index right after the word
    n_pos = length - m + 1
    prob = 2.0 ** (-p.k * m)
    expected = n_pos * prob
    sigma = math.sqrt(n_pos * prob * (1.0 - prob))
    z = (len(occ) - expected) / sigma if sigma > 0 else 0.0

    if x0 is None:
        x0 = np.full(p.k, 0.5)
    x = np.array(x0, dtype=np.float64)
    runlens = np.zeros(p.k, dtype=np.int64)
    exceptions = 0
    checked = 0
    pos_idx = 0
    t = 0
    while t < length:
        stop = min(t + chunk, length)
        res = run_orbit(
            fam, base.slice(t, stop), x, trace=True, runlens=runlens,
            regions=[RegionId("Qplus")],
        )
        while pos_idx < len(positions) and positions[pos_idx] < stop:
            s = positions[pos_idx]
            if s >= t:
                state = res.trace[s - t]
                checked += 1
                if not landing_box.contains_point(state):
                    exceptions += 1
            pos_idx += 1
        x = res.x
        runlens = res.runlens
        t = stop
    # positions landing exactly at the end of the base
    while pos_idx < len(positions) and positions[pos_idx] == length:
        checked += 1
        if not landing_box.contains_point(x):
            exceptions += 1
        pos_idx += 1

    return NegutReport(
        word_length=m,
        base_length=length,
        occurrences=int(len(occ)),
        expected=float(expected),
        sigma=float(sigma),
        z_score=float(z),
        landings_checked=checked,
        landing_exceptions=exceptions,
        frequency_ok=abs(z) <= z_bound,
        landings_ok=exceptions == 0,
    )
