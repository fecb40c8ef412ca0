"""Derived parameters and the box geometry of every named region.

All region definitions live here so that the simulator, the word machinery
and the verification suites share one source of truth for edge placement and
edge semantics (closed / half-open / open).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "Params",
    "Box",
    "RegionId",
    "derive_params",
    "region_box",
    "region_contains",
    "block_count",
    "block_index",
    "tilde_block_index",
]


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass
class Params:
    """Derived constants for tooth count n and fiber dimension k.

    lam is the uniform-drift factor 1 - 1/(8n); c and Kc describe the
    coarse-scale contraction ladder used by the descent machinery and are
    None when n is too small for the ladder to land in [d, 2d).
    """

    n: int
    k: int
    nu: float  # 1/n
    h: float  # tooth width 1/(16n)
    rho: float  # band half-width h/10
    r: float  # target ball radius h*nu/10
    d: float  # landing scale 5/n
    lam: float  # drift factor 1 - 1/(8n)
    mu: float  # saddle-side multiplier 2/3
    a: float  # left edge of the drift interval, 1/3
    c: float | None  # ladder landing constant, in [d, 2d) when defined
    Kc: int | None  # number of drift steps to land
    warnings: list[str] = field(default_factory=list)

    @property
    def epsilon_log2(self) -> int:
        """log2 of the invisibility threshold 2**(-n**k) (exact integer)."""
        return -(self.n**self.k)

    @property
    def epsilon(self) -> float:
        """The threshold itself; underflows to 0.0 for large n**k."""
        return math.pow(2.0, self.epsilon_log2)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "nu": self.nu,
            "h": self.h,
            "rho": self.rho,
            "r": self.r,
            "d": self.d,
            "lambda": self.lam,
            "mu": self.mu,
            "a": self.a,
            "c": self.c,
            "Kc": self.Kc,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Params":
        return cls(
            n=obj["n"],
            k=obj["k"],
            nu=obj["nu"],
            h=obj["h"],
            rho=obj["rho"],
            r=obj["r"],
            d=obj["d"],
            lam=obj["lambda"],
            mu=obj["mu"],
            a=obj["a"],
            c=obj["c"],
            Kc=obj["Kc"],
        )


def derive_params(n: int, k: int = 2) -> Params:
    """Compute every derived constant from the two integer inputs.

    Requires n >= 11 (below that the band width exceeds the ball radius
    ordering r < rho) and k >= 2.  The ladder constant c is the value
    lam**Kc * a for the smallest Kc >= 0 with lam**Kc * a in [d, 2d); for
    n <= 14 the interval [d, 2d) sits above a, no ladder step lands, and
    both c and Kc are None with a warning recorded.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an integer")
    if not isinstance(k, int) or isinstance(k, bool):
        raise TypeError("k must be an integer")
    if n < 11:
        raise ValueError(f"n must be at least 11, got {n}")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")

    nu = 1.0 / n
    h = 1.0 / (16 * n)
    rho = h / 10.0
    r = h * nu / 10.0
    d = 5.0 / n
    lam = 1.0 - 1.0 / (8 * n)
    mu = 2.0 / 3.0
    a = 1.0 / 3.0

    warnings: list[str] = []
    c: float | None
    Kc: int | None
    if a < d:
        c = None
        Kc = None
        warnings.append(
            f"no drift step lands in [d, 2d) = [{d}, {2 * d}) because a = 1/3 < d; "
            "descent machinery unavailable at this n"
        )
    else:
        c = a
        Kc = 0
        while c >= 2.0 * d:
            c *= lam
            Kc += 1
        # loop exit guarantees c < 2d; monotone single steps guarantee c >= d
        assert d <= c < 2.0 * d

    if n <= 100:
        warnings.append(
            f"n = {n} is outside the asymptotic regime (n > 100); "
            "quantitative claims hold but constants are not small"
        )
    if c is not None and c > a / 4.0:
        warnings.append(
            f"ladder constant c = {c} exceeds a/4 = {a / 4.0}; "
            "coverage precondition of the greedy word search fails"
        )

    return Params(
        n=n, k=k, nu=nu, h=h, rho=rho, r=r, d=d, lam=lam, mu=mu, a=a, c=c, Kc=Kc,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Product of closed intervals [lo_i, hi_i].  Empty boxes are allowed."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")

    @classmethod
    def make(cls, lo, hi) -> "Box":
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def is_empty(self) -> bool:
        return any(l > h for l, h in zip(self.lo, self.hi))

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(max(0.0, h - l) for l, h in zip(self.lo, self.hi))

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (l + h) for l, h in zip(self.lo, self.hi))

    def contains_point(self, x, tol: float = 0.0) -> bool:
        return all(
            l - tol <= float(v) <= h + tol
            for v, l, h in zip(x, self.lo, self.hi)
        )

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        if other.is_empty:
            return True
        return all(
            sl - tol <= ol and oh <= sh + tol
            for sl, sh, ol, oh in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def containment_margin(self, other: "Box") -> float:
        """Smallest slack of `other` inside self (negative if protruding)."""
        if other.is_empty:
            return math.inf
        return min(
            min(ol - sl, sh - oh)
            for sl, sh, ol, oh in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def intersect(self, other: "Box") -> "Box":
        return Box(
            tuple(max(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(min(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


_INDEXED_KINDS = {"A", "SminusBand", "SplusBand", "U", "Dlow", "Pi", "PiTilde"}
_PLAIN_KINDS = {
    "Q", "Qplus", "Qminus", "P", "Pminus", "D", "W", "Wprime", "R",
    "Kminus", "K", "Kplus",
}


@dataclass(frozen=True)
class RegionId:
    """Name of a region, optionally indexed (strips, bands, blocks)."""

    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind in _INDEXED_KINDS:
            if self.index is None:
                raise ValueError(f"region kind {self.kind!r} requires an index")
        elif self.kind in _PLAIN_KINDS:
            if self.index is not None:
                raise ValueError(f"region kind {self.kind!r} takes no index")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")

    def __str__(self) -> str:
        return self.kind if self.index is None else f"{self.kind}({self.index})"

    @classmethod
    def parse(cls, text: str) -> "RegionId":
        text = text.strip()
        if "(" in text:
            kind, rest = text.split("(", 1)
            if not rest.endswith(")"):
                raise ValueError(f"malformed region name {text!r}")
            return cls(kind, int(rest[:-1]))
        return cls(text)


def _level(p: Params, j: int) -> float:
    """Fixed-point height 1/4 - j*h for lattice index j in 0..4n."""
    return 0.25 - j * p.h


def block_count(p: Params) -> int:
    """Number of forward blocks Pi(0) .. Pi(block_count-1)."""
    return 2 * p.n + 1


def _check_index(kind: str, m: int, lo: int, hi: int) -> None:
    if not (lo <= m <= hi):
        raise ValueError(f"{kind} index {m} outside [{lo}, {hi}]")


def region_box(p: Params, rid: RegionId) -> Box:
    """Closed bounding box of a region in the k-dimensional fiber.

    One-dimensional constraints apply to the last coordinate; two-dimensional
    regions constrain the last two coordinates; remaining coordinates span
    the absorbing range [-2nu, 1+2nu].  The box ignores open/half-open edge
    semantics (see region_contains for exact membership).
    """
    k = p.k
    nu, h, rho = p.nu, p.h, p.rho
    qlo, qhi = -2.0 * nu, 1.0 + 2.0 * nu

    def slab(y_lo: float, y_hi: float) -> Box:
        return Box.make([qlo] * (k - 1) + [y_lo], [qhi] * (k - 1) + [y_hi])

    def cyl2(x_lo, x_hi, y_lo, y_hi) -> Box:
        return Box.make(
            [qlo] * (k - 2) + [x_lo, y_lo], [qhi] * (k - 2) + [x_hi, y_hi]
        )

    kind, m = rid.kind, rid.index

    if kind == "Q":
        return Box.make([0.0] * k, [1.0] * k)
    if kind == "Qplus":
        return Box.make([qlo] * k, [qhi] * k)
    if kind == "Qminus":
        return Box.make([5.0 * nu] * k, [1.0 - 5.0 * nu] * k)
    if kind == "P":
        return Box.make([0.0] * (k - 1) + [0.25], [1.0] * k)
    if kind == "Pminus":
        return Box.make(
            [5.0 * nu] * (k - 1) + [0.25 + rho],
            [1.0 - 5.0 * nu] * k,
        )
    if kind == "D":
        return cyl2(2.0 * nu, 3.0 * nu, 0.0, 0.25)
    if kind == "W":
        return cyl2(nu, 4.0 * nu, -2.0 * nu, 0.25 + 2.0 * nu)
    if kind == "Wprime":
        return cyl2(nu, 4.0 * nu, -2.0 * nu, 0.25 - h)
    if kind == "R":
        return slab(qlo, 0.1)
    if kind == "A":
        _check_index(kind, m, 1, 4 * p.n)
        return slab(_level(p, m), _level(p, m - 1))
    if kind == "SminusBand":
        # bands around the attracting levels 0, 2, ..., 4n (even lattice)
        _check_index(kind, m, 1, 2 * p.n + 1)
        y = _level(p, 2 * (m - 1))
        return slab(y - rho, y + rho)
    if kind == "SplusBand":
        # bands around the repelling levels 1, 3, ..., 4n-1 (odd lattice)
        _check_index(kind, m, 1, 2 * p.n)
        y = _level(p, 2 * m - 1)
        return slab(y - rho, y + rho)
    if kind == "U":
        # up-moving gap inside A(2m-1), bands removed
        _check_index(kind, m, 1, 2 * p.n)
        return slab(_level(p, 2 * m - 1) + rho, _level(p, 2 * m - 2) - rho)
    if kind == "Dlow":
        # down-moving gap above the m-th attracting band; Dlow(1) is the part
        # of the fiber above the top band (no repelling level above it)
        _check_index(kind, m, 1, 2 * p.n + 1)
        if m == 1:
            return slab(0.25 + rho, qhi)
        return slab(_level(p, 2 * m - 2) + rho, _level(p, 2 * m - 3) - rho)
    if kind == "Pi":
        # forward blocks, seamed at the repelling bands' top edges:
        # Pi(m) spans two teeth from level 2m+1 up to level 2m-1 (shifted by
        # +rho), Pi(0) is the half block below 1/4 + rho, and the bottom
        # block absorbs everything below its natural seam (there is nothing
        # further down to descend into).
        _check_index(kind, m, 0, 2 * p.n)
        top = 0.25 + rho if m == 0 else _level(p, 2 * m - 1) + rho
        if m == 2 * p.n:
            return slab(qlo, top)
        return slab(_level(p, 2 * m + 1) + rho, top)
    if kind == "PiTilde":
        # backward blocks, seamed at the attracting bands' top edges and
        # clipped to the safe cube; may be empty for deep indices
        _check_index(kind, m, 1, 2 * p.n + 1)
        qm_lo, qm_hi = 5.0 * nu, 1.0 - 5.0 * nu
        top = _level(p, 2 * m - 2) + rho
        lo = _level(p, 2 * m) + rho
        return slab(max(lo, qm_lo), min(top, qm_hi))
    if kind in ("Kminus", "K", "Kplus"):
        if k != 2:
            raise ValueError("descent regions are defined for k = 2 only")
        if p.c is None:
            raise ValueError(
                "descent regions undefined: no drift step lands in [d, 2d) "
                f"at n = {p.n}"
            )
        a, c = p.a, p.c
        if kind == "Kplus":
            return Box.make([a, 0.25 - h / 2.0], [1.0 + c, 1.0 + h / 2.0])
        if kind == "K":
            return Box.make(
                [a + c, 0.25 + h / 2.0], [1.0 - 0.75 * c, 1.0 - h / 2.0]
            )
        dj = h / 8.0
        return Box.make(
            [a + 2.0 * c, 0.25 + h / 2.0 + dj],
            [1.0 - c, 1.0 - h / 2.0 - dj],
        )
    raise AssertionError(f"unhandled region kind {kind!r}")


def region_contains(p: Params, rid: RegionId, x) -> bool:
    """Exact membership with the region's edge semantics.

    A(m) strips are half-open at the top (so the strips partition the tooth
    zone), R is an open slab, everything else is closed.
    """
    box = region_box(p, rid)
    if box.is_empty:
        return False
    if rid.kind == "A":
        y = float(x[-1])
        if not (box.lo[-1] <= y < box.hi[-1]):
            return False
        return all(
            l <= float(v) <= h for v, l, h in zip(x[:-1], box.lo[:-1], box.hi[:-1])
        )
    if rid.kind == "R":
        y = float(x[-1])
        if not (box.lo[-1] < y < box.hi[-1]):
            return False
        return all(
            l <= float(v) <= h for v, l, h in zip(x[:-1], box.lo[:-1], box.hi[:-1])
        )
    return box.contains_point(x)


def block_index(p: Params, y: float) -> int:
    """Index of the forward block Pi(m) containing height y, else -1.

    Heights above 1/4 + rho are in no block; heights below the bottom seam
    belong to the bottom block (index 2n), which extends to the floor.
    Heights within a float ulp of a seam may index to either adjacent block
    (rho is not dyadic); rigorous checks use interval margins, never this.
    """
    top = 0.25 + p.rho
    if y > top:
        return -1
    u = (top - y) / p.h
    m = int(math.floor((u + 1.0) / 2.0))
    # guard the float boundary: block m spans u in [2m-1, 2m+1)
    if m > 0 and u < 2 * m - 1:
        m -= 1
    elif u >= 2 * m + 1:
        m += 1
    return min(m, 2 * p.n)


def tilde_block_index(p: Params, y: float) -> int:
    """Index of the backward block PiTilde(m) containing height y, else -1.

    The tilde blocks are seamed one tooth higher: PiTilde(m) spans
    [level(2m) + rho, level(2m-2) + rho], intersected with the safe cube.
    Heights outside [5nu, 1-5nu] or above the first seam give -1; heights
    below the last seam belong to the deepest block whose box is nonempty.
    """
    if y < 5.0 * p.nu or y > 1.0 - 5.0 * p.nu:
        return -1
    top = 0.25 + p.rho
    if y > top:
        return -1
    u = (top - y) / p.h
    m = int(math.floor(u / 2.0)) + 1
    if u < 2 * (m - 1):
        m -= 1
    elif u >= 2 * m:
        m += 1
    return min(m, 2 * p.n + 1)


def iter_blocks(p: Params, tilde: bool = False) -> Iterator[tuple[int, Box]]:
    """Yield (index, box) for the nonempty blocks of one seam family."""
    if tilde:
        for m in range(1, 2 * p.n + 2):
            box = region_box(p, RegionId("PiTilde", m))
            if not box.is_empty:
                yield m, box
    else:
        for m in range(0, 2 * p.n + 1):
            yield m, region_box(p, RegionId("Pi", m))


def region_array_bundle(p: Params, rids: list[RegionId]):
    """Pack regions into the flat arrays consumed by the orbit kernels.

    Returns (lo, hi, lo_open, hi_open) with shape (R, k).  Open flags encode
    the per-edge semantics used during visit counting: A(m) tops and both R
    edges are open, everything else closed.
    """
    R, k = len(rids), p.k
    lo = np.empty((R, k), dtype=np.float64)
    hi = np.empty((R, k), dtype=np.float64)
    lo_open = np.zeros((R, k), dtype=np.bool_)
    hi_open = np.zeros((R, k), dtype=np.bool_)
    for i, rid in enumerate(rids):
        box = region_box(p, rid)
        lo[i] = box.lo
        hi[i] = box.hi
        if rid.kind == "A":
            hi_open[i, k - 1] = True
        elif rid.kind == "R":
            lo_open[i, k - 1] = True
            hi_open[i, k - 1] = True
    return lo, hi, lo_open, hi_open
