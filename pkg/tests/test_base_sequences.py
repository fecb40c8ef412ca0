"""Base windows: sampling, crafting, scans against naive oracles, IO."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepskew.baseseq import (
    BaseSequence,
    CraftSpec,
    craft_base,
    find_zero_runs,
    read_base_packed,
    read_base_text,
    sample_base,
    word_from_text,
    word_occurrences,
    word_to_text,
    write_base_packed,
    write_base_text,
)


def naive_zero_runs(letters, coord, runlen):
    L = letters.shape[0]
    out = []
    for e in range(runlen, L + 1):
        if not letters[e - runlen : e, coord].any():
            out.append(e)
    return np.array(out, dtype=np.int64)


def naive_occurrences(letters, word):
    L, m = letters.shape[0], word.shape[0]
    out = []
    for p in range(L - m + 1):
        if (letters[p : p + m] == word).all():
            out.append(p)
    return np.array(out, dtype=np.int64)


def test_sample_base_reproducible_and_fair():
    b1 = sample_base(2, 10000, seed=42)
    b2 = sample_base(2, 10000, seed=42)
    assert np.array_equal(b1.letters, b2.letters)
    assert b1.letters.shape == (10000, 2)
    mean = b1.letters.mean()
    assert 0.47 < mean < 0.53
    b3 = sample_base(2, 10000, seed=43)
    assert not np.array_equal(b1.letters, b3.letters)
    # frozen digest so a silent generator change cannot slip through
    assert b1.letters[:4].tolist() == [[1, 0], [1, 0], [1, 1], [0, 1]]


def test_slice_by_absolute_time():
    b = sample_base(2, 100, seed=1)
    s = b.slice(10, 20)
    assert s.origin == 10 and s.length == 10
    assert np.array_equal(s.letters, b.letters[10:20])
    with pytest.raises(IndexError):
        b.slice(-1, 5)
    with pytest.raises(IndexError):
        b.slice(95, 105)


def test_craft_backgrounds_and_insertions():
    word = np.array([[1, 0]] * 8, dtype=np.uint8)
    spec = CraftSpec(k=2, length=50, background="all-zero",
                     insertions=[(5, word)])
    base = craft_base(spec)
    assert base.letters[:5].sum() == 0
    assert np.array_equal(base.letters[5:13], word)
    assert base.letters[13:].sum() == 0
    ones = craft_base(CraftSpec(k=2, length=10, background="all-one"))
    assert ones.letters.sum() == 20
    rnd = craft_base(CraftSpec(k=2, length=10, background="random", seed=3))
    assert np.array_equal(rnd.letters, sample_base(2, 10, 3).letters)


def test_craft_rejects_bad_insertions():
    w = np.ones((4, 2), dtype=np.uint8)
    with pytest.raises(ValueError):
        craft_base(CraftSpec(k=2, length=10, insertions=[(8, w)]))
    with pytest.raises(ValueError):
        craft_base(CraftSpec(k=2, length=20, insertions=[(2, w), (5, w)]))
    with pytest.raises(ValueError):
        craft_base(CraftSpec(k=2, length=10, background="plaid"))


@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(1, 2))
@settings(max_examples=60, deadline=None)
def test_zero_runs_match_oracle(seed, runlen, coord_sel):
    base = sample_base(2, 300, seed)
    coord = coord_sel - 1
    got = find_zero_runs(base, coord, runlen)
    want = naive_zero_runs(base.letters, coord, runlen)
    assert np.array_equal(got, want)


def test_zero_runs_edges():
    letters = np.zeros((6, 2), dtype=np.uint8)
    letters[3, 0] = 1
    base = BaseSequence(letters)
    # coord 0: zeros at 0,1,2 then a one at 3 then zeros at 4,5
    assert find_zero_runs(base, 0, 2).tolist() == [2, 3, 6]
    assert find_zero_runs(base, 0, 3).tolist() == [3]
    assert find_zero_runs(base, 1, 6).tolist() == [6]
    assert find_zero_runs(base, 1, 7).tolist() == []
    with pytest.raises(ValueError):
        find_zero_runs(base, 0, 0)


@given(st.integers(0, 2**31), st.integers(1, 5))
@settings(max_examples=60, deadline=None)
def test_occurrences_match_oracle(seed, m):
    base = sample_base(2, 200, seed)
    word = sample_base(2, m, seed + 1).letters
    got = word_occurrences(base, word)
    want = naive_occurrences(base.letters, word)
    assert np.array_equal(got, want)


def test_occurrences_overlapping():
    base = BaseSequence(np.array([[1], [1], [1], [0]], dtype=np.uint8).reshape(4, 1))
    word = np.array([[1], [1]], dtype=np.uint8)
    assert word_occurrences(base, word).tolist() == [0, 1]


def test_word_text_round_trip():
    w = word_from_text("10 01 11", 2)
    assert w.shape == (3, 2)
    assert word_to_text(w) == "10\n01\n11"
    with pytest.raises(ValueError):
        word_from_text("102", 2)
    with pytest.raises(ValueError):
        word_from_text("", 2)


def test_base_file_round_trips(tmp_path):
    base = sample_base(3, 977, seed=5)
    tpath = tmp_path / "base.txt"
    write_base_text(tpath, base)
    back = read_base_text(tpath, 3)
    assert np.array_equal(back.letters, base.letters)
    ppath = tmp_path / "base.skb"
    write_base_packed(ppath, base)
    packed = read_base_packed(ppath)
    assert packed.k == 3 and packed.length == 977
    assert np.array_equal(packed.letters, base.letters)
    # packed files are dense: ~k/8 bytes per letter plus a 20-byte header
    assert ppath.stat().st_size <= 20 + (977 * 3 + 7) // 8 + 1
    with pytest.raises(ValueError):
        read_base_packed(tpath)
