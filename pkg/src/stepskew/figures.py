"""Report figures: occupancy heatmap, norm fields, descent traces.

Rendering is optional equipment for the CLI report path; nothing in
the verification suites depends on it.  The Agg backend keeps output
headless and file-only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fiber import FiberFamily, coupling_position, spectral_norm_2x2_vec
from .params import RegionId, region_box
from .scalar_maps import (
    ScalarMapId,
    hat_derivative_vec,
    hat_eval_vec,
    scalar_derivative,
)

__all__ = [
    "save_histogram_figure",
    "save_norm_figure",
    "save_trace_figure",
]

_DPI = 120


def _rect(ax, box, color, label=None):
    lo, hi = box.lo[-2:], box.hi[-2:]
    ax.add_patch(
        plt.Rectangle(
            (lo[0], lo[1]),
            hi[0] - lo[0],
            hi[1] - lo[1],
            fill=False,
            edgecolor=color,
            linewidth=1.0,
            label=label,
        )
    )


def save_histogram_figure(hist: np.ndarray, meta: dict, path, p=None) -> None:
    """Log-scale occupancy of the last two coordinates with the working
    rectangles drawn on top."""
    lo, hi = meta["extent"]
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    shown = np.ma.masked_equal(hist.T, 0)
    im = ax.imshow(
        shown,
        origin="lower",
        extent=(lo, hi, lo, hi),
        norm=matplotlib.colors.LogNorm(vmin=1, vmax=max(int(hist.max()), 2)),
        cmap="viridis",
        interpolation="nearest",
    )
    fig.colorbar(im, ax=ax, label="visits")
    if p is not None:
        _rect(ax, region_box(p, RegionId("Q")), "white", "unit cube")
        _rect(ax, region_box(p, RegionId("Qminus")), "orange", "inner cube")
        _rect(ax, region_box(p, RegionId("R")), "red", "deep slab")
    ax.set_xlabel("driver coordinate")
    ax.set_ylabel("deep coordinate")
    ax.set_title(f"occupancy, n={meta['n']} k={meta['k']}, {meta['counted_steps']} steps")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def _norm_field(fam: FiberFamily, s, grid: int) -> np.ndarray:
    """Pointwise derivative norms on cell centers over the padded cube
    (display only; the certificates use interval hulls instead)."""
    p = fam.p
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    xs = np.linspace(qlo, qhi, grid)
    ys = np.linspace(qlo, qhi, grid)
    a = 2.0 / 3.0 if s[0] else p.lam
    if s[1] == 1:
        d = np.full(grid, 2.0 / 3.0)
    else:
        d = np.array([scalar_derivative(p, ScalarMapId.G0, float(y)) for y in ys])
    if coupling_position(s) == 1:
        ad = np.abs(hat_derivative_vec(fam.alpha, xs))
        av = hat_eval_vec(fam.alpha, xs)
        b = hat_eval_vec(fam.beta, ys)
        bd = hat_derivative_vec(fam.beta, ys)
        off = np.outer(ad, b)
        dd = np.abs(d[None, :] - np.outer(av, bd))
        return spectral_norm_2x2_vec(np.full(off.shape, a), off, dd)
    return np.maximum(a, np.abs(np.broadcast_to(d, (grid, grid))))


def save_norm_figure(fam: FiberFamily, path, grid: int = 256) -> None:
    """Four panels, one per letter, of pointwise derivative norms."""
    p = fam.p
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    fig, axes = plt.subplots(2, 2, figsize=(9.2, 8.0), sharex=True, sharey=True)
    vmax = 0.0
    fields = {}
    for s in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        fields[s] = _norm_field(fam, s, grid)
        vmax = max(vmax, float(fields[s].max()))
    for ax, s in zip(axes.flat, [(0, 0), (0, 1), (1, 0), (1, 1)]):
        im = ax.imshow(
            fields[s].T,
            origin="lower",
            extent=(qlo, qhi, qlo, qhi),
            vmin=0.0,
            vmax=vmax,
            cmap="magma",
            interpolation="nearest",
        )
        ax.set_title(f"letter {s[0]}{s[1]}")
    fig.colorbar(im, ax=axes.ravel().tolist(), label="derivative norm")
    fig.suptitle(f"pointwise derivative norms, n={p.n}")
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_trace_figure(trace: np.ndarray, p, path, stride: int = 1) -> None:
    """Projection of an orbit onto the last two coordinates, with the
    shelf edge and the coupling corridor marked."""
    t = trace[::stride]
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    ax.plot(t[:, -2], t[:, -1], lw=0.3, color="tab:blue", alpha=0.8)
    ax.scatter([t[0, -2]], [t[0, -1]], s=18, color="tab:green", zorder=3, label="start")
    ax.scatter([t[-1, -2]], [t[-1, -1]], s=18, color="tab:red", zorder=3, label="end")
    ax.axhline(0.25, color="gray", lw=0.8, ls="--", label="shelf edge")
    wbox = region_box(p, RegionId("W"))
    _rect(ax, wbox, "purple", "drop corridor")
    qlo, qhi = -2.0 * p.nu, 1.0 + 2.0 * p.nu
    ax.set_xlim(qlo, qhi)
    ax.set_ylim(qlo, qhi)
    ax.set_xlabel("driver coordinate")
    ax.set_ylabel("deep coordinate")
    ax.set_title(f"orbit projection, {trace.shape[0]} states")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
