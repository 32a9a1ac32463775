from fractions import Fraction

import pytest

from tagrec.community import Partition, louvain
from tagrec.folksonomy import build_index
from tagrec.graph import build_graph
from tagrec.evaluation import (
    VARIANTS,
    ComparisonError,
    EvalReport,
    ablation_violations,
    compare,
    held_out_resources,
    load_report,
    precision_recall_at_k,
    report_from_json,
    report_to_json,
    run_experiment,
    score_recommendations,
    write_report,
)
from tagrec.ingest import SplitSpec, split
from tagrec.recommender import Recommender, build_membership_table, prune
from tagrec.similarity import SimParams
from tagrec.synthetic import planted_folksonomy

import trace_fixture as fx
from conftest import make_folk


def test_precision_recall_examples():
    p, r = precision_recall_at_k(list("abcde"), set("bef"), 5)
    assert (p, r) == (0.4, pytest.approx(2 / 3))
    assert precision_recall_at_k(list("abc"), set("abc"), 3) == (1.0, 1.0)
    assert precision_recall_at_k(list("abc"), set("xyz"), 3) == (0.0, 0.0)
    assert precision_recall_at_k([], set("xyz"), 3) == (0.0, 0.0)


def test_short_list_uses_its_length():
    assert precision_recall_at_k(["a", "b"], {"a"}, 5) == (0.5, 1.0)


def test_literal_denominators():
    p, r = precision_recall_at_k(list("abcde"), set("bef"), 5, swap_denominators=True)
    assert (p, r) == (pytest.approx(2 / 3), 0.4)


def test_bad_arguments():
    with pytest.raises(ValueError):
        precision_recall_at_k(["a"], {"a"}, 0)
    with pytest.raises(ValueError):
        precision_recall_at_k(["a"], set(), 5)


def _fixture_report(threshold, k_values):
    train = make_folk(fx.rows(fx.TRAIN), fx.TAGS)
    test = make_folk(fx.rows(fx.TEST, 1000), fx.TAGS)
    idx, tidx = build_index(train), build_index(test)
    part = Partition.from_labels(fx.COMMUNITY)
    rec = Recommender(part, prune(build_membership_table(part, idx), threshold), idx)
    held = held_out_resources(idx, tidx)
    lists = {u: rec.recommend(u, max(k_values)).resources for u in held}
    return held, score_recommendations("X", lists, held, k_values)


@pytest.mark.parametrize("threshold", [Fraction(0), Fraction(1, 4), Fraction(2, 5)])
def test_fixture_means_match_trace(threshold):
    k_values = [1, 2, 3, 5]
    held, rep = _fixture_report(float(threshold), k_values)
    assert held == fx.held_out()
    assert rep.n_skipped == 1  # user 6 only revisits a training resource
    for k in k_values:
        per_user, mp, mr = fx.precision_recall(threshold, k)
        rows = {u: (p, r) for u, kk, p, r in rep.per_user if kk == k}
        assert rows == {u: (float(p), float(r)) for u, (p, r) in per_user.items()}
        assert rep.mean_precision[k] == pytest.approx(float(mp), abs=1e-12)
        assert rep.mean_recall[k] == pytest.approx(float(mr), abs=1e-12)


def test_planted_run_matches_trace():
    f = planted_folksonomy(n_users=20, n_resources=80, n_tags=40, n_assignments=700, seed=4)
    train, test = split(f, SplitSpec(0.8, seed=4))
    rep = run_experiment("CDR_TIME", train, test, SimParams(), prune_threshold=0.1,
                         k_values=(5, 10), seed=4)
    part = louvain(build_graph(build_index(train), SimParams()), seed=4)
    tri = lambda g: [(a.user, a.tag, a.resource) for a in g.assignments]
    for k in (5, 10):
        _, mp, mr = fx.precision_recall(Fraction(0.1), k, tri(train), tri(test), part.community_of)
        assert rep.mean_precision[k] == pytest.approx(float(mp), abs=1e-12)
        assert rep.mean_recall[k] == pytest.approx(float(mr), abs=1e-12)
    assert rep.run_meta["n_communities"] == part.n_communities
    assert rep.n_scored + rep.n_skipped == len(test.users)


def test_variant_switches():
    assert VARIANTS["SEM_CDR"].apply(SimParams()) == SimParams(use_lexical=False, use_time=False)
    assert VARIANTS["LEXSEM_CDR"].apply(SimParams()).use_lexical
    assert VARIANTS["CDR_TIME"].apply(SimParams(use_time=False)).use_time


def _report(name, p5, r5, **meta):
    base = {"dataset_hash": "d", "louvain_seed": 0, "split_seed": 0}
    base.update(meta)
    return EvalReport(name, [5, 10], {5: p5, 10: p5 / 2}, {5: r5, 10: r5 * 2}, base)


def test_compare_table_shape_and_deltas():
    reps = [_report("SEM_CDR", 0.24, 0.08), _report("LEXSEM_CDR", 0.25, 0.081),
            _report("CDR_TIME", 0.26, 0.09)]
    cmp = compare(reps)
    assert [n for n, _ in cmp.rows] == ["SEM_CDR", "LEXSEM_CDR", "CDR_TIME"]
    assert cmp.columns == ["P@5", "P@10", "R@5", "R@10"]
    assert cmp.deltas[0][1]["P@5"] == pytest.approx(0.01)
    text = cmp.to_text()
    assert "24.00" in text and "+1.00" in text
    assert len(cmp.to_tsv().splitlines()) == 1 + 3 + 2


def test_compare_identical_reports_zero_deltas():
    r = _report("A", 0.3, 0.1)
    cmp = compare([r, r])
    assert all(v == 0 for v in cmp.deltas[0][1].values())


@pytest.mark.parametrize("meta", [{"louvain_seed": 1}, {"dataset_hash": "e"}, {"split_seed": 3}])
def test_compare_rejects_mismatched_runs(meta):
    with pytest.raises(ComparisonError, match=list(meta)[0]):
        compare([_report("A", 0.3, 0.1), _report("B", 0.3, 0.1, **meta)])


def test_compare_rejects_k_grid_mismatch():
    a = _report("A", 0.3, 0.1)
    b = EvalReport("B", [5], {5: 0.1}, {5: 0.1}, a.run_meta)
    with pytest.raises(ComparisonError):
        compare([a, b])
    with pytest.raises(ComparisonError):
        compare([a])


def test_ablation_violations():
    good = [_report("SEM_CDR", 0.24, 0.08), _report("LEXSEM_CDR", 0.25, 0.08),
            _report("CDR_TIME", 0.26, 0.09)]
    assert ablation_violations(good) == []
    bad = [_report("SEM_CDR", 0.27, 0.08), _report("LEXSEM_CDR", 0.25, 0.08),
           _report("CDR_TIME", 0.26, 0.07)]
    issues = ablation_violations(bad)
    assert any(i.startswith("P@5: LEXSEM_CDR") for i in issues)
    assert any(i.startswith("R@5: CDR_TIME") for i in issues)


def test_report_roundtrip(tmp_path):
    _, rep = _fixture_report(0.1, [1, 3])
    assert report_from_json(report_to_json(rep, include_per_user=True)) == rep
    tsv, js = write_report(rep, tmp_path / "report_X")
    assert load_report(js) == rep
    assert tsv.read_text().splitlines()[0] == "variant\tk\tmetric\tvalue"
