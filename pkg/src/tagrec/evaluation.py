"""Top-k precision/recall, ablation variants and report handling."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .community import louvain
from .folksonomy import Folksonomy, FolkIndex, build_index
from .graph import build_graph
from .recommender import Recommender, build_membership_table, prune
from .similarity import SimParams

log = logging.getLogger(__name__)

DEFAULT_K = (5, 10, 15, 20)


class ComparisonError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause!r}")
        self.stage = stage


@dataclass(frozen=True)
class VariantSpec:
    name: str
    use_lexical: bool
    use_time: bool

    def apply(self, params: SimParams) -> SimParams:
        return replace(params, use_lexical=self.use_lexical, use_time=self.use_time)


VARIANTS = {
    "SEM_CDR": VariantSpec("SEM_CDR", use_lexical=False, use_time=False),
    "LEXSEM_CDR": VariantSpec("LEXSEM_CDR", use_lexical=True, use_time=False),
    "CDR_TIME": VariantSpec("CDR_TIME", use_lexical=True, use_time=True),
}


@dataclass
class EvalReport:
    variant: str
    k_values: list[int]
    mean_precision: dict[int, float]
    mean_recall: dict[int, float]
    run_meta: dict = field(default_factory=dict)
    per_user: list[tuple[int, int, float, float]] = field(default_factory=list)
    n_scored: int = 0
    n_skipped: int = 0


def precision_recall_at_k(recommended, test_set, k: int,
                          swap_denominators: bool = False) -> tuple[float, float]:
    """P@k and R@k of a ranked list against a set of held-out resources.

    Precision divides by k, or by the list length when fewer than k items
    were recommended. ``swap_denominators`` swaps in the alternative
    denominators: hits / |test| for precision and hits / |top-k| for recall.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not test_set:
        raise ValueError("empty test set; such users are skipped, not scored")
    top = list(recommended)[:k]
    if not top:
        return 0.0, 0.0
    hits = len(set(top) & set(test_set))
    if swap_denominators:
        return hits / len(test_set), hits / len(top)
    return hits / len(top), hits / len(test_set)


def held_out_resources(train_idx: FolkIndex, test_idx: FolkIndex) -> dict[int, set[int]]:
    """Per user, the test resources the user has not touched in training."""
    out = {}
    for u, rs in test_idx.resources_of_user.items():
        out[u] = set(rs) - train_idx.resources_of_user.get(u, frozenset())
    return out


def score_recommendations(variant: str, recs: dict, held_out: dict[int, set[int]],
                          k_values=DEFAULT_K, swap_denominators: bool = False,
                          run_meta: dict | None = None) -> EvalReport:
    """Average P@k / R@k over users with a non-empty held-out set.

    ``recs`` maps users to ranked resource lists; users absent from it count
    as having received an empty list.
    """
    k_values = sorted(k_values)
    per_user = []
    skipped = 0
    for u in sorted(held_out):
        test = held_out[u]
        if not test:
            skipped += 1
            continue
        ranked = recs.get(u, [])
        for k in k_values:
            p, r = precision_recall_at_k(ranked, test, k, swap_denominators)
            per_user.append((u, k, p, r))
    n = len(held_out) - skipped
    mean_p, mean_r = {}, {}
    for k in k_values:
        rows = [x for x in per_user if x[1] == k]
        mean_p[k] = math.fsum(x[2] for x in rows) / n if n else 0.0
        mean_r[k] = math.fsum(x[3] for x in rows) / n if n else 0.0
    meta = dict(run_meta or {})
    meta["users_skipped_empty_test"] = skipped
    return EvalReport(variant, k_values, mean_p, mean_r, meta, per_user, n, skipped)


def recommend_users(rec: Recommender, users, k: int, threads: int = 1) -> dict:
    users = sorted(users)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            lists = list(pool.map(lambda u: rec.recommend(u, k), users))
    else:
        lists = [rec.recommend(u, k) for u in users]
    return {rl.user: rl for rl in lists}


def run_experiment(variant: VariantSpec | str, train: Folksonomy, test: Folksonomy,
                   sim: SimParams = SimParams(), prune_threshold: float = 0.1,
                   k_values=DEFAULT_K, seed: int = 0, swap_denominators: bool = False,
                   threads: int = 1) -> EvalReport:
    """Full pipeline for one variant: graph, Louvain, memberships,
    recommendations for every test user, and averaged P@k / R@k."""
    if isinstance(variant, str):
        variant = VARIANTS[variant]
    params = variant.apply(sim)
    timings = {}

    def stage(name, fn, *args):
        t0 = time.perf_counter()
        try:
            out = fn(*args)
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = round(time.perf_counter() - t0, 3)
        log.info("%s: %.1fs", name, timings[name])
        return out

    train_idx = stage("index", build_index, train)
    test_idx = stage("index", build_index, test)
    g = stage("graph", build_graph, train_idx, params)
    part = stage("communities", louvain, g, seed)
    table = stage(
        "membership",
        lambda: prune(build_membership_table(part, train_idx), prune_threshold),
    )
    held_out = held_out_resources(train_idx, test_idx)
    scoreable = [u for u, s in held_out.items() if s]
    rec = stage("recommend", Recommender, part, table, train_idx)
    lists = stage("recommend", recommend_users, rec, scoreable, max(k_values), threads)

    meta = {
        "variant": variant.name,
        "sim_params": asdict(params),
        "prune_threshold": prune_threshold,
        "louvain_seed": seed,
        "dataset_hash": train.content_hash() + ":" + test.content_hash(),
        "swap_denominators": swap_denominators,
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "n_communities": part.n_communities,
        "modularity": part.modularity,
    }
    return score_recommendations(
        variant.name, {u: rl.resources for u, rl in lists.items()}, held_out,
        k_values, swap_denominators, meta,
    )


# ---------------------------------------------------------------- report files

def report_to_json(report: EvalReport, include_per_user: bool = False) -> str:
    obj = {
        "variant": report.variant,
        "k_values": report.k_values,
        "mean_precision": {str(k): v for k, v in report.mean_precision.items()},
        "mean_recall": {str(k): v for k, v in report.mean_recall.items()},
        "n_scored": report.n_scored,
        "n_skipped": report.n_skipped,
        "run_meta": report.run_meta,
    }
    if include_per_user:
        obj["per_user"] = [list(x) for x in report.per_user]
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> EvalReport:
    obj = json.loads(text)
    return EvalReport(
        variant=obj["variant"],
        k_values=[int(k) for k in obj["k_values"]],
        mean_precision={int(k): float(v) for k, v in obj["mean_precision"].items()},
        mean_recall={int(k): float(v) for k, v in obj["mean_recall"].items()},
        run_meta=obj.get("run_meta", {}),
        per_user=[tuple(x) for x in obj.get("per_user", [])],
        n_scored=obj.get("n_scored", 0),
        n_skipped=obj.get("n_skipped", 0),
    )


def report_to_tsv(report: EvalReport) -> str:
    lines = ["variant\tk\tmetric\tvalue"]
    for k in report.k_values:
        lines.append(f"{report.variant}\t{k}\tP\t{report.mean_precision[k]!r}")
    for k in report.k_values:
        lines.append(f"{report.variant}\t{k}\tR\t{report.mean_recall[k]!r}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, stem: str | Path) -> tuple[Path, Path]:
    stem = Path(stem)
    tsv, js = stem.with_suffix(".tsv"), stem.with_suffix(".json")
    tsv.write_text(report_to_tsv(report), encoding="utf-8")
    js.write_text(report_to_json(report, include_per_user=True), encoding="utf-8")
    return tsv, js


def load_report(path: str | Path) -> EvalReport:
    return report_from_json(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- comparison

_MATCH_KEYS = ("dataset_hash", "louvain_seed", "split_seed")


@dataclass
class Comparison:
    k_values: list[int]
    rows: list[tuple[str, dict[str, float]]]  # (variant, {"P@5": ..., "R@5": ...})
    deltas: list[tuple[str, dict[str, float]]]

    @property
    def columns(self) -> list[str]:
        return [f"P@{k}" for k in self.k_values] + [f"R@{k}" for k in self.k_values]

    def to_text(self) -> str:
        cols = self.columns
        width = max([len("Models")] + [len(n) for n, _ in self.rows + self.deltas]) + 2
        out = ["Models".ljust(width) + "".join(c.rjust(9) for c in cols)]
        for name, vals in self.rows:
            out.append(name.ljust(width) + "".join(f"{100 * vals[c]:9.2f}" for c in cols))
        for name, vals in self.deltas:
            out.append(name.ljust(width) + "".join(f"{100 * vals[c]:+9.2f}" for c in cols))
        return "\n".join(out) + "\n"

    def to_tsv(self) -> str:
        out = ["\t".join(["model"] + self.columns)]
        for name, vals in self.rows + self.deltas:
            out.append("\t".join([name] + [repr(vals[c]) for c in self.columns]))
        return "\n".join(out) + "\n"


def compare(reports: list[EvalReport]) -> Comparison:
    """Align reports on a common k grid, with deltas against the first."""
    if len(reports) < 2:
        raise ComparisonError("need at least two reports to compare")
    first = reports[0]
    for rep in reports[1:]:
        if rep.k_values != first.k_values:
            raise ComparisonError(
                f"k grid mismatch: {first.variant} {first.k_values} vs {rep.variant} {rep.k_values}"
            )
        for key in _MATCH_KEYS:
            a, b = first.run_meta.get(key), rep.run_meta.get(key)
            if a != b:
                raise ComparisonError(f"{key} mismatch: {first.variant}={a!r} vs {rep.variant}={b!r}")

    def values(rep):
        v = {f"P@{k}": rep.mean_precision[k] for k in rep.k_values}
        v.update({f"R@{k}": rep.mean_recall[k] for k in rep.k_values})
        return v

    base = values(first)
    rows = [(rep.variant, values(rep)) for rep in reports]
    deltas = [
        (f"{rep.variant}-{first.variant}", {c: v - base[c] for c, v in vals.items()})
        for rep, (_, vals) in zip(reports[1:], rows[1:])
    ]
    return Comparison(list(first.k_values), rows, deltas)


def ablation_violations(reports: list[EvalReport], k: int = 5) -> list[str]:
    """Breaches of the expected order CDR_TIME >= LEXSEM_CDR >= SEM_CDR on
    P@k and R@k; an empty list means the ordering holds."""
    by_name = {r.variant: r for r in reports}
    order = ["CDR_TIME", "LEXSEM_CDR", "SEM_CDR"]
    issues = []
    for hi, lo in zip(order, order[1:]):
        if hi not in by_name or lo not in by_name:
            continue
        for metric, get in (("P", lambda r: r.mean_precision[k]), ("R", lambda r: r.mean_recall[k])):
            a, b = get(by_name[hi]), get(by_name[lo])
            if a < b:
                issues.append(f"{metric}@{k}: {hi} {a:.4f} < {lo} {b:.4f}")
    return issues
