import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagrec.similarity import (
    SimParams,
    bounded_levenshtein,
    jaccard,
    levenshtein,
    max_distance,
    nco,
    sim_lev,
    sim_time,
)

from conftest import make_index
from oracles import edit_distance

INF = 2**62

words = st.text(alphabet="abcé日́", max_size=9)


def test_jaccard_examples():
    idx = make_index([(1, 1, r, 0) for r in (1, 2, 3)] + [(1, 2, r, 0) for r in (2, 3, 4)]
                     + [(1, 3, r, 0) for r in (1, 2, 3)] + [(1, 4, 9, 0)])
    assert jaccard(1, 2, idx) == 0.5
    assert jaccard(1, 3, idx) == 1.0
    assert jaccard(1, 4, idx) == 0.0
    with pytest.raises(KeyError):
        jaccard(1, 99, idx)


@pytest.mark.parametrize("a,b,d", [("abc", "abc", 0), ("", "abc", 3), ("kitten", "sitting", 3)])
def test_levenshtein_examples(a, b, d):
    assert levenshtein(a, b) == d


def test_sim_lev_examples():
    assert sim_lev("recipe", "recipes") == pytest.approx(1 - 1 / 7)
    assert sim_lev("tag", "tag") == 1.0
    assert sim_lev("abc", "xyz") == 0.0
    assert sim_lev("", "") == 1.0


def test_levenshtein_counts_code_points():
    # precomposed vs decomposed e-acute differ by one code point edit plus one insert
    assert levenshtein("\u00e9", "e\u0301") == 2
    assert levenshtein("日本", "日") == 1


def _timed_index():
    return make_index([(1, 1, 1, 100), (1, 2, 1, 105), (1, 1, 2, 100), (1, 2, 2, 200),
                       (1, 3, 7, 0)])


def test_nco_and_sim_time_examples():
    idx = _timed_index()
    assert nco(1, 2, idx, 10) == {1}
    assert sim_time(1, 2, idx, 10) == 0.5
    assert nco(1, 2, idx, INF) == {1, 2}
    assert sim_time(1, 2, idx, INF) == 1.0
    assert nco(1, 3, idx, INF) == set()
    assert sim_time(1, 3, idx, INF) == 0.0


def test_window_is_inclusive():
    idx = _timed_index()
    assert nco(1, 2, idx, 5) == {1}
    assert nco(1, 2, idx, 4) == set()


@settings(max_examples=300, deadline=None)
@given(words, words)
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == edit_distance(a, b)


@settings(max_examples=300, deadline=None)
@given(words, words, st.integers(0, 10))
def test_bounded_levenshtein(a, b, k):
    d = edit_distance(a, b)
    got = bounded_levenshtein(a, b, k)
    if d <= k:
        assert got == d
    else:
        assert got > k


@settings(max_examples=200, deadline=None)
@given(words, words)
def test_sim_lev_range_and_symmetry(a, b):
    s = sim_lev(a, b)
    assert 0.0 <= s <= 1.0
    assert s == sim_lev(b, a)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.7, 0.75, 0.8, 0.9, 1 - 1 / 7, 0.3 + 0.4, 1.0])
def test_max_distance_agrees_with_similarity(alpha):
    for length in range(0, 40):
        k = max_distance(length, alpha)
        for d in range(0, length + 1):
            ok = (1.0 - d / length if length else 1.0) >= alpha
            assert ok == (d <= k), (length, d, alpha)


def test_sim_params_validation():
    with pytest.raises(ValueError):
        SimParams(lam=1.5)
    with pytest.raises(ValueError):
        SimParams(tau=-1)


def test_floor_example_for_length_bound():
    # alpha 0.8 on length 10 admits at most 2 edits
    assert max_distance(10, 0.8) == math.floor(0.2 * 10)


def test_random_kernels_in_range():
    rnd = random.Random(5)
    rows = [(rnd.randint(1, 4), rnd.randint(1, 8), rnd.randint(1, 12), rnd.randint(0, 100))
            for _ in range(80)]
    idx = make_index(rows)
    tags = sorted(idx.resources_of_tag)
    for a in tags:
        for b in tags:
            for f in (jaccard, lambda x, y, i: sim_time(x, y, i, 20)):
                v = f(a, b, idx)
                assert 0.0 <= v <= 1.0
                assert v == f(b, a, idx)
