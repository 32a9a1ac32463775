from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagrec.folksonomy import Folksonomy
from tagrec.ingest import CleaningRules, IngestError, SplitSpec, clean, parse_hetrec, split

from conftest import make_folk

ASG_HEADER = "userID\tbookmarkID\ttagID\ttimestamp\n"


def write(d: Path, name: str, text: str | bytes):
    p = d / name
    if isinstance(text, bytes):
        p.write_bytes(text)
    else:
        p.write_text(text, encoding="utf-8")
    return p


@pytest.fixture
def hetrec_dir(tmp_path):
    write(tmp_path, "tags.dat", "id\tvalue\n1\tjava\n2\tpython\n")
    write(tmp_path, "user_taggedbookmarks-timestamps.dat",
          ASG_HEADER + "8\t100\t1\t1000\n8\t100\t1\t1000\n9\t101\t2\t2000\n")
    return tmp_path


def test_header_only_files_give_empty_folksonomy(tmp_path):
    write(tmp_path, "tags.dat", "id\tvalue\n")
    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER)
    f = parse_hetrec(tmp_path)
    assert f.assignments == () and f.tags == {} and not f.users


def test_duplicate_quadruple_is_deduplicated(hetrec_dir):
    f = parse_hetrec(hetrec_dir)
    assert len(f.assignments) == 2
    assert f.tags == {1: "java", 2: "python"}
    assert f.users == {8, 9} and f.resources == {100, 101}


def test_unknown_tag_is_materialized_by_id(tmp_path):
    write(tmp_path, "tags.dat", "id\tvalue\n1\tjava\n")
    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER + "1\t1\t77\t5\n")
    assert parse_hetrec(tmp_path).tags[77] == "77"


def test_malformed_rows_are_counted_and_capped(tmp_path):
    write(tmp_path, "tags.dat", "id\tvalue\n1\tjava\n")
    good = "".join(f"{u}\t1\t1\t{u}\n" for u in range(1, 201))
    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER + good + "x\ty\n")
    counts = {}
    f = parse_hetrec(tmp_path, counts)
    assert len(f.assignments) == 200
    assert counts["user_taggedbookmarks-timestamps.dat"] == 1

    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER + good + "x\ty\n" * 3)
    with pytest.raises(IngestError, match="malformed"):
        parse_hetrec(tmp_path)


def test_missing_file_is_named(tmp_path):
    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER)
    with pytest.raises(IngestError, match="tags.dat"):
        parse_hetrec(tmp_path)


def test_latin1_rows_fall_back(tmp_path):
    write(tmp_path, "tags.dat", b"id\tvalue\n1\tcaf\xe9\n2\tna\xc3\xafve\n")
    write(tmp_path, "user_taggedbookmarks-timestamps.dat", ASG_HEADER + "1\t1\t1\t0\n1\t1\t2\t0\n")
    f = parse_hetrec(tmp_path)
    assert f.tags == {1: "café", 2: "naïve"}


def test_bookmark_file_adds_resource_ids(hetrec_dir):
    write(hetrec_dir, "bookmarks.dat", "id\tmd5\ttitle\n100\ta\tb\n555\tc\td\n")
    assert parse_hetrec(hetrec_dir).resources == {100, 101, 555}


def test_files_located_by_header(tmp_path):
    write(tmp_path, "t.tsv", "id\tvalue\n1\tjava\n")
    write(tmp_path, "a.tsv", "userID\tbookmarkID\ttagID\ttimestamp\tExtra\n1\t2\t1\t3\tz\n")
    f = parse_hetrec(tmp_path)
    assert [tuple(a) for a in f.assignments] == [(1, 1, 2, 3)]


# ---------------------------------------------------------------- clean

def test_case_variants_merge():
    f = make_folk([(1, 1, 1, 0), (2, 2, 2, 0)], {1: "Java", 2: "java"})
    c = clean(f)
    assert c.tags == {1: "java"}
    assert {(a.user, a.tag, a.resource) for a in c.assignments} == {(1, 1, 1), (2, 1, 2)}


def test_whitespace_tag_dropped_with_assignments():
    f = make_folk([(1, 1, 1, 0), (2, 2, 2, 0)], {1: "   ", 2: "ok"})
    c = clean(f)
    assert c.tags == {2: "ok"}
    assert c.users == {2} and c.resources == {2}


def test_five_tag_fixture():
    # "Web"/"web " merge, "!!!" drops, "css" and "html" survive
    tags = {1: "Web", 2: "web ", 3: "!!!", 4: "css", 5: "html"}
    rows = [(1, t, t, 10 * t) for t in range(1, 6)] + [(2, 3, 9, 1)]
    c = clean(make_folk(rows, tags))
    assert c.tags == {1: "web", 4: "css", 5: "html"}
    assert len(c.assignments) == len(rows) - 2


def test_length_limit():
    f = make_folk([(1, 1, 1, 0), (1, 2, 1, 0)], {1: "x" * 65, 2: "y" * 64})
    assert clean(f).tags == {2: "y" * 64}
    assert clean(f, CleaningRules(max_tag_length=100)).n_tags == 2
    with pytest.raises(ValueError):
        CleaningRules(max_tag_length=0)


tag_text = st.text(alphabet=" aAbB-é!", min_size=1, max_size=5).filter(lambda s: s != "")


@settings(max_examples=80, deadline=None)
@given(st.lists(tag_text, min_size=1, max_size=8), st.integers(0, 1000))
def test_clean_is_idempotent(strings, seed):
    tags = {i + 1: s for i, s in enumerate(strings)}
    rows = [(1 + (i % 3), t, 1 + (i * seed) % 5, i) for i, t in enumerate(list(tags) * 2)]
    f = Folksonomy.from_assignments(rows, tags)
    once = clean(f)
    assert clean(once) == once


# ---------------------------------------------------------------- split

def test_ten_assignments_split_eight_two():
    f = make_folk([(1, t, t, t) for t in range(10)])
    train, test = split(f, SplitSpec(0.8, seed=1))
    assert len(train.assignments) == 8 and len(test.assignments) == 2


def test_single_assignment_stays_in_train():
    f = make_folk([(1, 1, 1, 0), (2, 1, 1, 0), (2, 2, 2, 0)])
    train, test = split(f, SplitSpec(0.8, seed=0))
    assert 1 in train.users and 1 not in test.users


def test_split_is_deterministic():
    f = make_folk([(u, t, r, u * t) for u in range(5) for t in range(6) for r in range(2)])
    a = split(f, SplitSpec(seed=42))
    b = split(f, SplitSpec(seed=42))
    assert a == b
    assert a[0].content_hash() == b[0].content_hash()
    assert split(f, SplitSpec(seed=43)) != a


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 6), st.integers(1, 5), st.integers(1, 9), st.integers(0, 50)),
             min_size=1, max_size=60),
    st.floats(0.05, 0.95),
    st.integers(0, 2**63),
    st.booleans(),
)
def test_split_partitions_assignments(rows, frac, seed, stratified):
    f = make_folk(rows)
    train, test = split(f, SplitSpec(frac, seed, stratified))
    tr, te = set(train.assignments), set(test.assignments)
    assert not tr & te
    assert tr | te == set(f.assignments)
    assert len(tr) + len(te) == len(f.assignments)
    if stratified:
        assert test.users <= train.users


def test_split_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec(1.0)
    with pytest.raises(ValueError):
        split(Folksonomy.from_assignments([], {}))
