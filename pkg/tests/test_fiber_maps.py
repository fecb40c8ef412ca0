"""Fiber maps: recursion against a flat 2-D oracle, inverses, Jacobians,
box-image soundness."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepskew.fiber import (
    all_symbols,
    coupling_position,
    coupling_term,
    fiber_box_image,
    fiber_eval,
    fiber_inverse,
    fiber_jacobian,
    make_family,
    min_singular_2x2,
    spectral_norm_2x2,
    symbol_code,
)
from stepskew.params import Box, derive_params
from stepskew.scalar_maps import ScalarMapId, hat_eval, scalar_eval


def fam_n(n, k=2):
    return make_family(derive_params(n, k))


# ---------------------------------------------------------------------------
# oracle: the 2-D family written out flat, no recursion, no shared helpers
# ---------------------------------------------------------------------------


def oracle_eval_2d(fam, s, x, y):
    p = fam.p
    n = p.n

    def f0(t):
        return (1.0 - 1.0 / (8 * n)) * t

    def f1(t):
        return 1.0 - (2.0 / 3.0) * (1.0 - t)

    def g(t):
        if t >= 0.25:
            return 0.25 + (2.0 / 3.0) * (t - 0.25)
        if t >= 0.0:
            return t - (p.h / (3 * math.pi)) * math.sin(math.pi * t / p.h)
        return (2.0 / 3.0) * t

    fx = f1(x) if s[0] else f0(x)
    gy = f1(y) if s[1] else g(y)
    if s == (1, 0):
        gy -= hat_eval(fam.alpha, x) * hat_eval(fam.beta, y)
    return fx, gy


def test_symbols_and_coupling_position():
    assert all_symbols(2) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert symbol_code((1, 0)) == 2
    assert coupling_position((1, 0)) == 1
    assert coupling_position((0, 0)) == -1  # leading zero: no coupling
    assert coupling_position((0, 1)) == -1
    assert coupling_position((1, 1)) == -1
    assert coupling_position((1, 1, 0)) == 2
    assert coupling_position((1, 0, 0)) == 1
    assert coupling_position((1, 0, 1)) == 1
    assert coupling_position((0, 1, 0)) == -1
    assert coupling_position((1, 1, 1)) == -1


@given(
    st.sampled_from([16, 128]),
    st.sampled_from([(0, 0), (0, 1), (1, 0), (1, 1)]),
    st.floats(-0.2, 1.2),
    st.floats(-0.2, 1.2),
)
@settings(max_examples=400)
def test_eval_matches_flat_oracle(n, s, x, y):
    fam = fam_n(n)
    got = fiber_eval(fam, s, (x, y))
    want = oracle_eval_2d(fam, s, x, y)
    assert got[0] == pytest.approx(want[0], abs=1e-15)
    assert got[1] == pytest.approx(want[1], abs=1e-15)


def test_coupling_plateau_value_is_exact():
    fam = fam_n(16)
    p = fam.p
    # on the drop window the product is exactly 1/(10n)
    assert coupling_term(fam, (2.5 * p.nu, 0.1)) == 1.0 / (10 * p.n)
    assert coupling_term(fam, (2.0 * p.nu, 0.0)) == 1.0 / (10 * p.n)
    # vanishes outside the coupling region
    assert coupling_term(fam, (p.nu, 0.1)) == 0.0
    assert coupling_term(fam, (0.5, 0.1)) == 0.0
    assert coupling_term(fam, (2.5 * p.nu, 0.25 + 2 * p.nu)) == 0.0
    # the uncoupled symbols never see the hats
    x = np.array([2.5 * p.nu, 0.1])
    for s in [(0, 0), (0, 1), (1, 1)]:
        shifted = fiber_eval(fam, s, x)
        ref0 = scalar_eval(p, ScalarMapId.F1 if s[0] else ScalarMapId.F0, x[0])
        ref1 = scalar_eval(p, ScalarMapId.G1 if s[1] else ScalarMapId.G0, x[1])
        assert shifted[0] == ref0 and shifted[1] == ref1


def test_k3_recursion_structure():
    fam = fam_n(12, k=3)
    p = fam.p
    x = np.array([2.5 * p.nu, 2.5 * p.nu, 0.1])
    # symbol 110: coupling acts at the last coordinate, driven by coord 2
    out = fiber_eval(fam, (1, 1, 0), x)
    g0_x3 = scalar_eval(p, ScalarMapId.G0, 0.1)
    assert out[2] == pytest.approx(g0_x3 - 1.0 / (10 * p.n), abs=1e-15)
    # symbol 100: coupling acts at coordinate 2, driven by coord 1
    out = fiber_eval(fam, (1, 0, 0), x)
    g0_x2 = scalar_eval(p, ScalarMapId.G0, x[1])
    assert out[1] == pytest.approx(
        g0_x2 - hat_eval(fam.alpha, x[0]) * hat_eval(fam.beta, x[1]), abs=1e-15
    )
    # ... and coordinate 3 is then uncoupled
    assert out[2] == pytest.approx(g0_x3, abs=1e-15)
    # symbol 010: no coordinate is coupled
    out = fiber_eval(fam, (0, 1, 0), x)
    assert out[2] == pytest.approx(g0_x3, abs=1e-15)


@given(
    st.sampled_from([16, 128]),
    st.sampled_from([(0, 0), (0, 1), (1, 0), (1, 1)]),
    st.floats(-0.12, 1.12),
    st.floats(-0.12, 1.12),
)
@settings(max_examples=300, deadline=None)
def test_inverse_round_trip(n, s, x, y):
    fam = fam_n(n)
    pt = np.array([x, y])
    img = fiber_eval(fam, s, pt)
    back = fiber_inverse(fam, s, img)
    assert np.max(np.abs(back - pt)) < 2e-12


def test_inverse_round_trip_k3():
    fam = fam_n(12, k=3)
    rng = np.random.default_rng(7)
    for _ in range(50):
        pt = rng.uniform(-0.1, 1.1, size=3)
        for s in all_symbols(3):
            img = fiber_eval(fam, s, pt)
            back = fiber_inverse(fam, s, img)
            assert np.max(np.abs(back - pt)) < 2e-12


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------


def _fd_jacobian(fam, s, pt, eps=1e-7):
    k = fam.p.k
    J = np.zeros((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = eps
        J[:, j] = (fiber_eval(fam, s, pt + e) - fiber_eval(fam, s, pt - e)) / (2 * eps)
    return J


def test_jacobian_structure_and_fd_agreement():
    fam = fam_n(16)
    rng = np.random.default_rng(3)
    p = fam.p
    for _ in range(100):
        pt = rng.uniform(-0.1, 1.1, size=2)
        # keep clear of the piecewise seams so central differences are clean
        if min(abs(pt[1] - 0.25), abs(pt[1]), abs(pt[1] % p.h)) < 1e-3 * p.h:
            continue
        for s in all_symbols(2):
            J = fiber_jacobian(fam, s, pt)
            assert J[0, 1] == 0.0
            if s != (1, 0):
                assert J[1, 0] == 0.0
            fd = _fd_jacobian(fam, s, pt)
            assert np.max(np.abs(J - fd)) < 1e-5


def test_jacobian_coupled_entries_on_plateau():
    fam = fam_n(16)
    p = fam.p
    # on the plateau interior both hat derivatives vanish: the Jacobian is
    # diagonal even for the coupled symbol
    pt = np.array([2.5 * p.nu, 0.1249])
    J = fiber_jacobian(fam, (1, 0), pt)
    assert J[1, 0] == 0.0
    assert J[0, 0] == pytest.approx(2 / 3)
    # on the alpha ramp the off-diagonal term appears
    pt = np.array([1.5 * p.nu, 0.1249])
    J = fiber_jacobian(fam, (1, 0), pt)
    assert J[1, 0] != 0.0
    assert abs(J[1, 0]) <= 1.01 / (2 * p.nu - p.nu) * (1 / (10 * p.n)) + 1e-15


def test_jacobian_k3_bidiagonal():
    fam = fam_n(12, k=3)
    p = fam.p
    pt = np.array([1.5 * p.nu, 0.12, 0.9])
    J = fiber_jacobian(fam, (1, 0, 1), pt)
    assert J[1, 0] != 0.0  # coupled at coordinate 2
    assert J[2, 1] == 0.0
    assert np.all(np.triu(J, 1) == 0.0)


def test_2x2_norm_closed_forms():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b, c = rng.uniform(-2, 2, size=3)
        M = np.array([[a, 0.0], [b, c]])
        sv = np.linalg.svd(M, compute_uv=False)
        assert spectral_norm_2x2(a, b, c) == pytest.approx(sv[0], abs=1e-12)
        assert min_singular_2x2(a, b, c) == pytest.approx(sv[1], abs=1e-12)


# ---------------------------------------------------------------------------
# box images
# ---------------------------------------------------------------------------


@given(
    st.sampled_from([16, 128]),
    st.sampled_from([(0, 0), (0, 1), (1, 0), (1, 1)]),
    st.floats(-0.1, 1.0),
    st.floats(0.0, 0.3),
    st.floats(-0.1, 1.0),
    st.floats(0.0, 0.3),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=200, deadline=None)
def test_box_image_soundness(n, s, xlo, xw, ylo, yw, seed):
    fam = fam_n(n)
    box = Box.make([xlo, ylo], [xlo + xw, ylo + yw])
    img = fiber_box_image(fam, s, box)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(box.lo, box.hi, size=(32, 2))
    for pt in pts:
        out = fiber_eval(fam, s, pt)
        assert img.contains_point(out), (s, box, out, img)


def test_box_image_tightness_uncoupled():
    fam = fam_n(16)
    box = Box.make([0.3, 0.5], [0.4, 0.6])
    img = fiber_box_image(fam, (1, 1), box, outward=False)
    assert img.lo[0] == pytest.approx(1 - (2 / 3) * 0.7)
    assert img.hi[1] == pytest.approx(1 - (2 / 3) * 0.4)
    # outward mode pads by single ulps only
    out = fiber_box_image(fam, (1, 1), box, outward=True)
    assert 0 < img.lo[0] - out.lo[0] < 1e-15
    assert 0 < out.hi[0] - img.hi[0] < 1e-15


def test_box_image_coupled_drop_window():
    fam = fam_n(128)
    p = fam.p
    # a box inside the drop window: the image subtracts exactly the plateau
    box = Box.make([2.2 * p.nu, 0.05], [2.8 * p.nu, 0.06])
    img = fiber_box_image(fam, (1, 0), box, outward=False)
    drop = 1.0 / (10 * p.n)
    g_lo = scalar_eval(p, ScalarMapId.G0, 0.05)
    g_hi = scalar_eval(p, ScalarMapId.G0, 0.06)
    assert img.lo[1] == pytest.approx(g_lo - drop, abs=1e-15)
    assert img.hi[1] == pytest.approx(g_hi - drop, abs=1e-15)
    # a box outside the coupling support sees no drop at all
    far = Box.make([0.5, 0.05], [0.6, 0.06])
    img2 = fiber_box_image(fam, (1, 0), far, outward=False)
    assert img2.lo[1] == pytest.approx(g_lo, abs=1e-15)


def test_box_image_empty_passthrough():
    fam = fam_n(16)
    empty = Box.make([1.0, 0.0], [0.0, 1.0])
    assert fiber_box_image(fam, (0, 0), empty).is_empty
