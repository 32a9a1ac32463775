from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagrec.folksonomy import Assignment, Folksonomy, build_index

from conftest import make_folk

rows_strategy = st.lists(
    st.tuples(
        st.integers(1, 5), st.integers(1, 6), st.integers(1, 8), st.integers(0, 1000)
    ),
    max_size=40,
)


def test_empty_folksonomy_gives_empty_index():
    idx = build_index(Folksonomy.from_assignments([], {}))
    assert idx.resources_of_tag == {}
    assert idx.users_of_resource == {}
    assert idx.tags_of_user == {}
    assert idx.resources_of_user == {}
    assert idx.last_assignment == {}
    assert idx.assignment_count == {}


def test_single_assignment():
    idx = build_index(make_folk([(1, 1, 1, 100)]))
    assert idx.resources_of_tag[1] == {1}
    assert idx.users_of_resource[1] == {1}
    assert idx.last_assignment[(1, 1)] == 100


def test_last_assignment_is_global_max_and_counts_every_user():
    idx = build_index(make_folk([(1, 1, 1, 100), (2, 1, 1, 250)]))
    assert idx.last_assignment[(1, 1)] == 250
    assert idx.assignment_count[(1, 1)] == 2
    assert idx.users_of_resource[1] == {1, 2}


def test_duplicate_quadruples_collapse():
    f = make_folk([(1, 1, 1, 5), (1, 1, 1, 5), (1, 1, 1, 6)])
    assert len(f.assignments) == 2


def test_invalid_assignments_rejected():
    with pytest.raises(ValueError):
        Folksonomy.from_assignments([(1, 1, 1, -1)], {1: "a"})
    with pytest.raises(ValueError):
        Folksonomy.from_assignments([(1, 2, 1, 0)], {1: "a"})
    with pytest.raises(ValueError):
        Folksonomy.from_assignments([], {1: ""})


def test_tags_of_user_is_a_multiset():
    idx = build_index(make_folk([(1, 1, 1, 0), (1, 1, 2, 0), (1, 2, 2, 0)]))
    assert idx.tags_of_user[1] == Counter({1: 2, 2: 1})
    assert idx.resources_of_user[1] == {1, 2}


@settings(max_examples=60, deadline=None)
@given(rows_strategy, st.randoms(use_true_random=False))
def test_index_is_order_independent(rows, rnd):
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    tags = {t: f"t{t}" for t in range(1, 7)}
    a = build_index(Folksonomy.from_assignments(rows, tags))
    b = build_index(Folksonomy.from_assignments(shuffled, tags))
    assert a == b


@settings(max_examples=60, deadline=None)
@given(rows_strategy)
def test_index_invariants(rows):
    f = Folksonomy.from_assignments(rows, {t: f"t{t}" for t in range(1, 7)})
    idx = build_index(f)
    assert sum(idx.assignment_count.values()) == len(f.assignments)
    pairs = {(a.tag, a.resource) for a in f.assignments}
    assert set(idx.last_assignment) == pairs
    assert {(t, r) for t, rs in idx.resources_of_tag.items() for r in rs} == pairs
    for (t, r), stamp in idx.last_assignment.items():
        assert stamp == max(a.timestamp for a in f.assignments if (a.tag, a.resource) == (t, r))


def test_array_views_follow_sorted_ids():
    idx = build_index(make_folk([(1, 5, 30, 7), (2, 3, 10, 9), (2, 5, 10, 11)]))
    assert idx.tag_ids.tolist() == [3, 5]
    assert idx.resource_ids.tolist() == [10, 30]
    ti, ri, ts = idx.tag_resource_arrays
    assert list(zip(ti.tolist(), ri.tolist(), ts.tolist())) == [(0, 0, 9), (1, 0, 11), (1, 1, 7)]
    assert idx.tag_resource_matrix.toarray().tolist() == [[1, 0], [1, 1]]


def test_content_hash_tracks_data():
    a = make_folk([(1, 1, 1, 0)])
    b = make_folk([(1, 1, 1, 1)])
    assert a.content_hash() == make_folk([(1, 1, 1, 0)]).content_hash()
    assert a.content_hash() != b.content_hash()
    assert isinstance(a.assignments[0], Assignment)
