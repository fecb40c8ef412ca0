"""Orbit engine: kernel agreement with the interpreted maps, visit
accounting, run-length windows, escapes, ensembles, perturbations."""

import numpy as np
import pytest

from stepskew.baseseq import BaseSequence, CraftSpec, craft_base, sample_base
from stepskew.fiber import all_symbols, fiber_eval, fiber_inverse, make_family
from stepskew.orbit import (
    OrbitEscapeError,
    apply_word,
    apply_word_box,
    make_perturbation,
    perturbed_eval,
    perturbed_inverse,
    perturbed_jacobian,
    psi_box_pad,
    run_ensemble,
    run_orbit,
)
from stepskew.params import Box, RegionId, derive_params, region_box, region_contains


def fam_n(n, k=2):
    return make_family(derive_params(n, k))


def test_kernel_matches_interpreted_bitwise():
    fam = fam_n(16)
    base = sample_base(2, 5000, seed=9)
    x0 = np.array([0.37, 0.81])
    res = run_orbit(fam, base, x0, trace=True)
    x = np.array(x0)
    for i in range(200):
        s = tuple(int(b) for b in base.letters[i])
        assert np.array_equal(res.trace[i], x), i
        x = fiber_eval(fam, s, x)
    assert np.array_equal(res.trace[200], x)
    # and the final state equals a full interpreted pass
    for i in range(200, base.length):
        x = fiber_eval(fam, tuple(int(b) for b in base.letters[i]), x)
    assert np.array_equal(res.x, x)


def test_kernel_matches_interpreted_k3():
    fam = fam_n(12, k=3)
    base = sample_base(3, 400, seed=4)
    x0 = np.array([0.3, 0.5, 0.7])
    res = run_orbit(fam, base, x0, trace=True)
    x = np.array(x0)
    for i in range(base.length):
        assert np.array_equal(res.trace[i], x)
        x = fiber_eval(fam, tuple(int(b) for b in base.letters[i]), x)
    assert np.array_equal(res.x, x)


def test_visit_accounting_against_trace():
    fam = fam_n(16)
    base = sample_base(2, 20000, seed=21)
    x0 = np.array([0.2, 0.6])
    rids = [RegionId("P"), RegionId("W"), RegionId("A", 1), RegionId("R")]
    res = run_orbit(fam, base, x0, regions=rids, trace=True)
    for rid, st in zip(rids, res.stats):
        manual = 0
        first = -1
        for t in range(base.length):
            if region_contains(fam.p, rid, res.trace[t]):
                manual += 1
                if first < 0:
                    first = t
        assert st.hits == manual, str(rid)
        assert st.first_hit == first, str(rid)
    assert res.counted_steps == base.length


def test_burn_in_only_counts_late_visits():
    fam = fam_n(16)
    base = sample_base(2, 1000, seed=2)
    x0 = np.array([0.5, 0.5])
    rids = [RegionId("P")]
    full = run_orbit(fam, base, x0, regions=rids)
    cut = run_orbit(fam, base, x0, regions=rids, burn_in=500)
    assert cut.counted_steps == 500
    assert cut.stats[0].hits <= full.stats[0].hits
    # first_hit ignores burn-in by design
    assert cut.stats[0].first_hit == full.stats[0].first_hit


def test_zero_run_window_crafted_violation_free():
    # an all-zero tail drives the deep coordinate into R with a long run;
    # the counters must see the run and report no violation
    fam = fam_n(16)
    p = fam.p
    L = p.n**2 + 2000
    base = craft_base(CraftSpec(k=2, length=L, background="all-zero"))
    x0 = np.array([0.9, 0.02])  # already deep
    res = run_orbit(fam, base, x0, regions=[RegionId("R")])
    st = res.stats[0]
    assert st.window == p.n**2
    assert st.hits > 0
    assert st.violations == 0
    assert st.min_run_at_visit is not None and st.min_run_at_visit >= p.n**2


def test_breaking_the_run_expels_the_orbit_from_R():
    # a single 1 planted in the deep coordinate kicks the orbit out of R
    # (toward the upper fixed point) and the sawtooth cannot bring it back
    # below 1/10 within the remaining window: no violation is producible
    # from genuine dynamics, which is the content of the implication
    fam = fam_n(16)
    p = fam.p
    L = p.n**2 + 500
    letters = np.zeros((L, 2), dtype=np.uint8)
    letters[L - 100, 1] = 1
    base = BaseSequence(letters)
    x0 = np.array([0.9, 0.02])
    res = run_orbit(fam, base, x0, regions=[RegionId("R")], trace=True)
    st = res.stats[0]
    assert st.violations == 0
    # the kick really did expel it: no R visits after the planted 1
    for t in range(L - 99, L):
        assert not region_contains(p, RegionId("R"), res.trace[t])


def test_zero_run_violation_flagged_for_unseeded_window():
    # continuing a window past the threshold with fresh (unseeded) counters
    # treats the unknown history as run length 0, which must flag at once
    fam = fam_n(16)
    p = fam.p
    letters = np.zeros((50, 2), dtype=np.uint8)
    base = BaseSequence(letters, origin=p.n**2 + 10)
    x0 = np.array([0.9, 0.02])
    res = run_orbit(fam, base, x0, regions=[RegionId("R")])
    st = res.stats[0]
    assert st.violations > 0
    assert st.min_run_at_visit == 0
    # seeding the true history clears the flag
    seeded = run_orbit(
        fam, base, x0, regions=[RegionId("R")],
        runlens=[base.origin, base.origin],
    )
    assert seeded.stats[0].violations == 0


def test_runlen_carry_across_windows():
    fam = fam_n(16)
    base = craft_base(CraftSpec(k=2, length=1000, background="all-zero"))
    x0 = np.array([0.9, 0.02])
    first = run_orbit(fam, base.slice(0, 600), x0, regions=[RegionId("R")])
    second = run_orbit(
        fam, base.slice(600, 1000), first.x, regions=[RegionId("R")],
        runlens=first.runlens,
    )
    assert first.runlens.tolist() == [600, 600]
    assert second.runlens.tolist() == [1000, 1000]
    assert second.stats[0].violations == 0


def test_escape_raises_with_diagnostics():
    fam = fam_n(16)
    base = craft_base(CraftSpec(k=2, length=10, background="all-zero"))
    x0 = np.array([5.0, 0.5])  # far outside the absorbing cube
    with pytest.raises(OrbitEscapeError) as exc:
        run_orbit(fam, base, x0)
    assert exc.value.t >= 0
    res = run_orbit(fam, base, x0, raise_on_escape=False)
    assert res.escaped_at >= 0


def test_absorbing_cube_holds_for_random_orbits():
    fam = fam_n(16)
    res = run_ensemble(fam, orbits=20, length=20000, seed=77)
    assert res.counted_steps == 20 * 20000
    # merged region stats carry windows
    rstats = {str(st.rid): st for st in res.stats}
    assert rstats["R"].window == 256


def test_ensemble_thread_determinism():
    fam = fam_n(16)
    a = run_ensemble(fam, orbits=8, length=5000, seed=5, threads=1, hist_grid=16)
    b = run_ensemble(fam, orbits=8, length=5000, seed=5, threads=4, hist_grid=16)
    for sa, sb in zip(a.stats, b.stats):
        assert sa.hits == sb.hits
        assert sa.first_hit == sb.first_hit
        assert sa.violations == sb.violations
    assert np.array_equal(a.hist, b.hist)


def test_histogram_mass_and_support():
    fam = fam_n(16)
    res = run_ensemble(fam, orbits=4, length=10000, seed=13, hist_grid=8)
    assert res.hist.sum() == res.counted_steps


# ---------------------------------------------------------------------------
# word application
# ---------------------------------------------------------------------------


def test_apply_word_matches_stepwise():
    fam = fam_n(16)
    base = sample_base(2, 300, seed=1)
    x0 = np.array([0.4, 0.7])
    via_word = apply_word(fam, base.letters, x0)
    res = run_orbit(fam, base, x0)
    assert np.array_equal(via_word, res.x)


def test_apply_word_box_soundness_random_words():
    fam = fam_n(16)
    rng = np.random.default_rng(3)
    box = Box.make([0.3, 0.4], [0.5, 0.6])
    word = sample_base(2, 40, seed=8).letters
    img = apply_word_box(fam, word, box)
    for _ in range(200):
        x = rng.uniform(box.lo, box.hi)
        assert img.contains_point(apply_word(fam, word, x))


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def pert16():
    fam = fam_n(16)
    return fam, make_perturbation(fam, seed=11, probes=600)


def test_perturbation_meets_budget(pert16):
    fam, pert = pert16
    p = fam.p
    assert pert.delta == p.r / 2
    m = pert.measured
    assert m["d_c0"] <= pert.delta
    assert m["d_c0_inverse"] <= pert.delta
    assert m["d_jacobian"] <= pert.delta
    assert max(m.values()) > 0.0  # genuinely nonzero perturbation


def test_perturbed_eval_and_inverse_round_trip(pert16):
    fam, pert = pert16
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = rng.uniform(-0.1, 1.1, size=2)
        for s in all_symbols(2):
            y = perturbed_eval(fam, s, x, pert)
            assert np.max(np.abs(y - fiber_eval(fam, s, x))) <= pert.delta
            back = perturbed_inverse(fam, s, y, pert)
            assert np.max(np.abs(back - x)) < 1e-9


def test_perturbed_jacobian_close_to_plain(pert16):
    fam, pert = pert16
    rng = np.random.default_rng(6)
    for _ in range(50):
        x = rng.uniform(-0.1, 1.1, size=2)
        for s in all_symbols(2):
            Jg = perturbed_jacobian(fam, s, x, pert)
            Jf = perturbed_jacobian(fam, s, x, None)
            assert np.linalg.norm(Jg - Jf, 2) <= 1.55 * pert.delta


def test_kernel_perturbed_matches_python(pert16):
    fam, pert = pert16
    base = sample_base(2, 500, seed=15)
    x0 = np.array([0.3, 0.6])
    res = run_orbit(fam, base, x0, pert=pert, trace=True)
    x = np.array(x0)
    for i in range(base.length):
        assert np.array_equal(res.trace[i], x)
        x = perturbed_eval(fam, tuple(int(b) for b in base.letters[i]), x, pert)
    assert np.array_equal(res.x, x)


def test_perturbed_box_pad_soundness(pert16):
    fam, pert = pert16
    rng = np.random.default_rng(8)
    word = sample_base(2, 25, seed=17).letters
    box = Box.make([0.35, 0.45], [0.45, 0.55])
    img = apply_word_box(fam, word, box, pert=pert)
    for _ in range(200):
        x = rng.uniform(box.lo, box.hi)
        y = apply_word(fam, word, x, pert=pert)
        assert img.contains_point(y)


def test_perturbation_rejects_bad_delta():
    fam = fam_n(16)
    with pytest.raises(ValueError):
        make_perturbation(fam, delta=0.0)
