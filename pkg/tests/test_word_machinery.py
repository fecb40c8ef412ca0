"""Word machinery: coarse system certificates, entry/greedy/transport
words, crafted descent bases, and the frequency experiment.

Frozen constants (entry repetitions, descent-base lengths, occurrence
counts) were computed once from the deterministic construction and are
pinned here as oracles; a change in any of them means the construction
changed, not that the pin is stale.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepskew.fiber import make_family
from stepskew.orbit import apply_word, apply_word_box, make_perturbation, run_orbit
from stepskew.params import Box, RegionId, derive_params, region_box
from stepskew.words import (
    ascent_word,
    build_upper_system,
    check_ifs_assumptions,
    critical_word_for,
    entry_word,
    greedy_critical_word,
    make_descent_base,
    negut_frequency_experiment,
)
from stepskew.words import _choose_drift_count


@pytest.fixture(scope="module")
def fam128():
    return make_family(derive_params(128))


@pytest.fixture(scope="module")
def fam16():
    return make_family(derive_params(16))


@pytest.fixture(scope="module")
def us128(fam128):
    return build_upper_system(fam128.p)


# ---------------------------------------------------------------------------
# coarse system
# ---------------------------------------------------------------------------


class TestUpperSystem:
    def test_blocks_nest(self, us128):
        assert us128.Lminus[0] > us128.L[0] > us128.Lplus[0]
        assert us128.Lminus[1] < us128.L[1] < us128.Lplus[1]
        assert us128.Jminus[0] > us128.J[0] > us128.Jplus[0]
        assert us128.Jminus[1] < us128.J[1] < us128.Jplus[1]

    def test_geometry_from_parameters(self, us128):
        p = us128.p
        assert us128.L == (p.a + p.c, 1 - 0.75 * p.c)
        assert us128.J == (0.25 + p.h / 2, 1 - p.h / 2)
        assert us128.delta_j == p.h / 8

    def test_unavailable_without_ladder_constant(self):
        p = derive_params(12)
        with pytest.raises(ValueError, match="ladder constant"):
            build_upper_system(p)

    def test_k3_rejected(self):
        p = derive_params(16, k=3)
        with pytest.raises(ValueError, match="two-dimensional"):
            build_upper_system(p)


class TestIfsAssumptions:
    def test_all_certificates_pass_at_128(self, fam128):
        cs = check_ifs_assumptions(fam128)
        assert cs.passed
        assert len(cs.certificates) == 6
        assert all(c.margin > 0 for c in cs.certificates)

    def test_contraction_factor_is_two_thirds(self, fam128):
        cs = check_ifs_assumptions(fam128)
        c = next(x for x in cs.certificates if "contract" in x.claim)
        assert c.margin == pytest.approx(1.0 / 3.0, abs=1e-15)
        # on the outer block the sawtooth slope reaches exactly 1; the
        # witness records it so nobody mistakes the nominal factor for it
        assert c.witness["y_factor_outer_block"] == pytest.approx(1.0, abs=1e-12)

    def test_coverage_margin_matches_closed_form(self, fam128):
        p = fam128.p
        cs = check_ifs_assumptions(fam128)
        c = next(x for x in cs.certificates if "cover" in x.claim and "(x)" in x.claim)
        closed = p.c / 3.0 - (4.0 / 3.0) * p.c * p.c / p.a
        assert abs(c.margin - closed) < 1e-10
        assert c.witness["closed_form_low_edge"] == pytest.approx(closed, abs=1e-15)

    def test_tooth_coverage_margins_are_h_over_12(self, fam128):
        h = fam128.p.h
        cs = check_ifs_assumptions(fam128)
        c = next(x for x in cs.certificates if "cover" in x.claim and "(y)" in x.claim)
        assert c.witness["low_edge_margin"] == pytest.approx(h / 12.0, abs=1e-15)
        assert c.witness["top_edge_margin"] == pytest.approx(h / 12.0, abs=1e-15)


class TestDriftCount:
    @given(st.floats(0.01, 0.99))
    @settings(max_examples=200, deadline=None)
    def test_choice_lands_in_block(self, u):
        p = derive_params(128)
        us = build_upper_system(p)
        z_lo = 1.5 * p.c
        z_hi = 1.0 - 1.125 * p.c
        z = z_lo + u * (z_hi - z_lo)
        m = _choose_drift_count(us, z)
        assert 0 <= m <= p.Kc
        assert us.L[0] <= z / p.lam**m <= us.L[1]

    def test_no_coverage_at_16(self, fam16):
        # Kc = 0 and the block sits above every reachable preimage, so
        # the greedy machinery is correctly unavailable at n = 16
        us = build_upper_system(fam16.p)
        with pytest.raises(ValueError, match="drift count"):
            _choose_drift_count(us, 0.5)


# ---------------------------------------------------------------------------
# entry word
# ---------------------------------------------------------------------------


class TestEntryWord:
    @pytest.mark.parametrize("n", [16, 128])
    def test_three_letters_suffice(self, n):
        fam = make_family(derive_params(n))
        w, cert = entry_word(fam)
        assert w.shape == (3, 2)  # two all-one letters, one all-zero
        assert w[:2].min() == 1 and w[2].max() == 0
        assert cert.passed and cert.margin > 0.05

    def test_perturbed_entry_still_certifies(self, fam16):
        pert = make_perturbation(fam16, seed=3, probes=800)
        w, cert = entry_word(fam16, pert=pert)
        assert w.shape[0] == 3
        assert cert.passed and cert.margin > 0.05
        assert cert.witness["perturbed"] is True

    def test_certificate_is_absorbing(self, fam16):
        # the image of the full absorbing cube lies in the outer block,
        # so the landing holds after any occurrence, not just the first
        w, cert = entry_word(fam16)
        us = build_upper_system(fam16.p)
        img = Box.make(cert.witness["image"]["lo"], cert.witness["image"]["hi"])
        assert us.Kplus_box.contains_box(img)


# ---------------------------------------------------------------------------
# greedy contraction
# ---------------------------------------------------------------------------


class TestGreedyWord:
    def test_certifies_small_ball(self, fam128, us128):
        target = np.array(
            [0.5 * (us128.L[0] + us128.L[1]), 0.5 * (us128.J[0] + us128.J[1])]
        )
        w, cert = greedy_critical_word(fam128, target, 1e-6)
        assert cert.passed and cert.margin > 0
        ball = Box.make(target - 1e-6, target + 1e-6)
        img = apply_word_box(fam128, w, us128.Kplus_box)
        assert ball.contains_box(img)

    def test_off_block_target_rejected(self, fam128, us128):
        with pytest.raises(ValueError, match="outside the nominal block"):
            greedy_critical_word(fam128, [0.1, 0.5], 1e-3)

    def test_point_tracking_matches_word(self, fam128, us128):
        # the cert witness's anchor is the tracked preimage: applying the
        # word to it must reproduce the target to near machine precision
        target = np.array([0.6, 0.5])
        w, cert = greedy_critical_word(fam128, target, 1e-5)
        anchor = np.array(cert.witness["anchor"])
        end = apply_word(fam128, w, anchor)
        assert np.abs(end - target).max() < 1e-9


# ---------------------------------------------------------------------------
# ascent
# ---------------------------------------------------------------------------


class TestAscentWord:
    def test_exact_backward_tracking(self, fam128):
        q = np.array([0.1, 0.5])
        asc = ascent_word(fam128, q)
        end = apply_word(fam128, asc.word, asc.anchor)
        assert np.abs(end - q).max() < 1e-12
        us = build_upper_system(fam128.p)
        assert us.L[0] <= asc.anchor[0] <= us.L[1]
        assert us.J[0] <= asc.anchor[1] <= us.J[1]

    def test_path_stays_in_linear_zone(self, fam128):
        p = fam128.p
        asc = ascent_word(fam128, [0.05, 0.3])
        assert asc.path_min_y >= 0.25 + p.rho
        # forward x-path stays clear of the coupling support
        x = asc.anchor.copy()
        from stepskew.fiber import fiber_eval

        for s in asc.word:
            assert x[0] > 4.0 * p.nu
            x = fiber_eval(fam128, tuple(int(b) for b in s), x)

    def test_tooth_zone_target_rejected(self, fam128):
        with pytest.raises(ValueError, match="forward ladder"):
            ascent_word(fam128, [0.5, 0.1])

    def test_target_already_in_block_is_trivial(self, fam128, us128):
        q = [0.6, 0.5]
        asc = ascent_word(fam128, q)
        assert asc.steps == 0
        assert asc.word.shape == (0, 2)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


class TestCriticalWordFor:
    def test_ascent_route(self, fam128):
        res = critical_word_for(fam128, [0.5, 0.6], radius=0.05)
        assert res.parts["route"] == "ascent"
        assert res.certificate.passed
        assert res.certificate.margin > 0.04

    def test_ladder_route(self, fam128):
        res = critical_word_for(fam128, [0.12, 0.24], radius=0.05)
        assert res.parts["route"] == "ladder"
        assert res.certificate.passed
        assert res.certificate.margin > 0.04

    def test_certificate_covers_whole_cube(self, fam128):
        res = critical_word_for(fam128, [0.5, 0.6], radius=0.05)
        p = fam128.p
        qplus = region_box(p, RegionId("Qplus"))
        img = apply_word_box(fam128, res.word, qplus)
        ball = Box.make(res.target - res.radius, res.target + res.radius)
        assert ball.contains_box(img)

    def test_unsafe_target_rejected(self, fam128):
        with pytest.raises(ValueError, match="outside the safe cube"):
            critical_word_for(fam128, [0.01, 0.5])


# ---------------------------------------------------------------------------
# crafted descent bases
# ---------------------------------------------------------------------------


class TestDescentBase:
    def test_k2_reaches_deep_slab(self, fam16):
        base, meta = make_descent_base(fam16)
        # deterministic construction: landing parks on the even lattice
        assert meta["prefix_length"] == 2766
        assert meta["deep_value"] == pytest.approx(0.078125, abs=1e-12)
        assert meta["deep_value"] < 0.1
        res = run_orbit(fam16, base, np.full(2, 0.5), regions=[RegionId("R")])
        st = res.stats[0]
        assert st.hits > 0
        assert st.violations == 0
        assert st.min_run_at_visit >= 16**2

    def test_k3_cascade_reaches_deep_slab(self):
        fam = make_family(derive_params(12, k=3))
        base, meta = make_descent_base(fam)
        assert meta["prefix_length"] == 5536
        assert meta["deep_value"] == pytest.approx(0.25 - 34.0 / 192.0, abs=1e-12)
        res = run_orbit(fam, base, np.full(3, 0.5), regions=[RegionId("R")])
        st = res.stats[0]
        assert st.hits > 0
        assert st.violations == 0
        assert st.min_run_at_visit >= 12**3

    def test_tail_length_default(self, fam16):
        base, meta = make_descent_base(fam16)
        assert meta["tail"] == 16**2 + 512
        assert base.length == meta["prefix_length"] + meta["tail"]


# ---------------------------------------------------------------------------
# frequency experiment
# ---------------------------------------------------------------------------


class TestNegutExperiment:
    def test_frozen_run(self, fam16):
        ew, _ = entry_word(fam16)
        us = build_upper_system(fam16.p)
        rep = negut_frequency_experiment(fam16, ew, us.Kplus_box, length=10**6, seed=7)
        assert rep.occurrences == 15512  # frozen: PCG64 stream for seed 7
        assert rep.expected == pytest.approx((10**6 - 2) * 4.0**-3)
        assert abs(rep.z_score) < 3.0
        assert rep.landings_checked == rep.occurrences
        assert rep.landing_exceptions == 0
        assert rep.frequency_ok and rep.landings_ok

    def test_chunk_boundaries_do_not_lose_landings(self, fam16):
        ew, _ = entry_word(fam16)
        us = build_upper_system(fam16.p)
        a = negut_frequency_experiment(
            fam16, ew, us.Kplus_box, length=40_000, seed=5, chunk=1 << 20
        )
        b = negut_frequency_experiment(
            fam16, ew, us.Kplus_box, length=40_000, seed=5, chunk=997
        )
        assert a.occurrences == b.occurrences
        assert a.landings_checked == b.landings_checked
        assert a.landing_exceptions == b.landing_exceptions == 0

    def test_report_serializes(self, fam16):
        ew, _ = entry_word(fam16)
        us = build_upper_system(fam16.p)
        rep = negut_frequency_experiment(fam16, ew, us.Kplus_box, length=10**4, seed=1)
        d = rep.to_json()
        assert d["word_length"] == 3
        assert d["landing_exceptions"] == 0
