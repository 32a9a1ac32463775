"""Resource recommendation from tag communities.

Resources get a probability distribution over tag communities from the
tags they were annotated with. A user's resources are matched against the
resources of the communities the user has tagged in, scoring candidates by
shared annotators plus Ellenberg similarity of their community memberships.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .community import Partition
from .folksonomy import FolkIndex

log = logging.getLogger(__name__)

# candidates within this much of the fast path's best score are re-scored exactly
_RESCORE_SLACK = 1e-9
# dense score cells per block of training resources
_BLOCK = 2_000_000


@dataclass(frozen=True)
class MembershipTable:
    prob: dict[int, dict[int, float]]
    prune_threshold: float = 0.0

    def __contains__(self, r: int) -> bool:
        return r in self.prob

    def __len__(self) -> int:
        return len(self.prob)


@dataclass(frozen=True)
class RecommendationList:
    user: int
    items: tuple[tuple[int, float], ...]

    @property
    def resources(self) -> list[int]:
        return [r for r, _ in self.items]


def community_counts(r: int, part: Partition, idx: FolkIndex,
                     distinct_tags: bool = False) -> dict[int, int]:
    """Number of assignments of ``r`` made with tags of each community.

    With ``distinct_tags`` each tag counts once regardless of how many
    users assigned it.
    """
    counts: dict[int, int] = defaultdict(int)
    for t, n in idx.tags_of_resource.get(r, {}).items():
        c = part.community_of.get(t)
        if c is not None:
            counts[c] += 1 if distinct_tags else n
    return dict(sorted(counts.items()))


def membership(r: int, part: Partition, idx: FolkIndex,
               distinct_tags: bool = False) -> dict[int, float]:
    counts = community_counts(r, part, idx, distinct_tags)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {c: n / total for c, n in counts.items()}


def build_membership_table(part: Partition, idx: FolkIndex,
                           distinct_tags: bool = False) -> MembershipTable:
    prob = {}
    for r in idx.users_of_resource:
        row = membership(r, part, idx, distinct_tags)
        if row:
            prob[r] = row
    return MembershipTable(prob, 0.0)


def prune(table: MembershipTable, threshold: float,
          renormalize: bool = False) -> MembershipTable:
    """Drop memberships below ``threshold``; resources left empty disappear.

    Surviving probabilities keep their values unless ``renormalize`` is set.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("prune threshold must lie in [0, 1)")
    prob = {}
    for r, row in table.prob.items():
        kept = {c: p for c, p in row.items() if p >= threshold}
        if not kept:
            continue
        if renormalize:
            s = sum(kept.values())
            kept = {c: p / s for c, p in kept.items()}
        prob[r] = kept
    return MembershipTable(prob, threshold)


def _ellenberg_rows(pi: dict[int, float], pj: dict[int, float]) -> float:
    common = sorted(pi.keys() & pj.keys())
    if not common:
        return 0.0
    common_mass = 0.0
    for c in common:
        common_mass += pi[c] + pj[c]
    b = 0.0
    for c in sorted(pi.keys() - pj.keys()):
        b += pi[c]
    cc = 0.0
    for c in sorted(pj.keys() - pi.keys()):
        cc += pj[c]
    half = common_mass / 2.0
    return half / (half + b + cc)


def ellenberg(r_i: int, r_j: int, table: MembershipTable) -> float:
    """Ellenberg similarity of two membership distributions: half the mass on
    shared communities over itself plus the mass on unshared ones."""
    return _ellenberg_rows(table.prob[r_i], table.prob[r_j])


def sim_users(r_i: int, r_j: int, idx: FolkIndex) -> float:
    ui = idx.users_of_resource.get(r_i, frozenset())
    uj = idx.users_of_resource.get(r_j, frozenset())
    if not ui or not uj:
        return 0.0
    return len(ui & uj) / max(len(ui), len(uj))


def target_communities(u: int, part: Partition, idx: FolkIndex) -> set[int]:
    tags = idx.tags_of_user.get(u, {})
    return {part.community_of[t] for t in tags if t in part.community_of}


def _pair_score(r_i: int, r_j: int, table: MembershipTable, idx: FolkIndex) -> float:
    # a training resource pruned out of the table has no memberships left
    return sim_users(r_i, r_j, idx) + _ellenberg_rows(
        table.prob.get(r_i, {}), table.prob[r_j]
    )


def msr(r_i: int, candidates, table: MembershipTable, idx: FolkIndex) -> tuple[int, float]:
    """Most similar candidate to ``r_i`` by shared users + Ellenberg score;
    ties go to the lowest resource id."""
    if not candidates:
        raise ValueError("no candidate resources to choose from")
    best_r, best = None, -1.0
    for r_j in sorted(candidates):
        s = _pair_score(r_i, r_j, table, idx)
        if s > best:
            best_r, best = r_j, s
    return best_r, best


def candidate_resources(u: int, part: Partition, table: MembershipTable,
                        idx: FolkIndex) -> set[int]:
    """Resources of the user's target communities not already seen by the user."""
    targets = target_communities(u, part, idx)
    if not targets:
        return set()
    own = idx.resources_of_user.get(u, frozenset())
    return {
        r for r, row in table.prob.items()
        if r not in own and not targets.isdisjoint(row)
    }


def _rank(u: int, picks, k: int) -> RecommendationList:
    best: dict[int, float] = {}
    for r, s in picks:
        if s > best.get(r, -1.0):
            best[r] = s
    items = sorted(best.items(), key=lambda x: (-x[1], x[0]))[:k]
    return RecommendationList(u, tuple(items))


def recommend(u: int, k: int, part: Partition, table: MembershipTable,
              idx: FolkIndex) -> RecommendationList:
    """Reference implementation: one msr pick per training resource of the
    user, deduplicated by maximum score, ranked and cut to ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    own = idx.resources_of_user.get(u)
    if not own:
        return RecommendationList(u, ())
    cands = candidate_resources(u, part, table, idx)
    if not cands:
        log.debug("user %s: no candidate resources", u)
        return RecommendationList(u, ())
    return _rank(u, (msr(r, cands, table, idx) for r in sorted(own)), k)


class Recommender:
    """Vectorized ``recommend`` over precomputed sparse matrices.

    Scores of all candidates are computed with sparse products; the
    near-best candidates of each training resource are then re-scored with
    the scalar functions, so picks and scores equal those of ``recommend``.
    """

    def __init__(self, part: Partition, table: MembershipTable, idx: FolkIndex):
        self.part = part
        self.table = table
        self.idx = idx
        self.res_ids = idx.resource_ids
        self.rpos = {r: i for i, r in enumerate(self.res_ids.tolist())}
        n_res = len(self.res_ids)
        n_comm = max(part.n_communities, 1)

        rows, cols, vals = [], [], []
        for r, row in table.prob.items():
            for c, p in row.items():
                rows.append(self.rpos[r])
                cols.append(c)
                vals.append(p)
        self.P = sp.csr_matrix((vals, (rows, cols)), shape=(n_res, n_comm))
        self.I = self.P.copy()
        self.I.data[:] = 1.0
        self.P_total = np.asarray(self.P.sum(axis=1)).ravel()

        self.RU = idx.user_resource_matrix.T.tocsr()  # resources x users
        self.n_users_of = np.asarray(self.RU.sum(axis=1)).ravel()
        self.PT = self.I.T.tocsr()

    def _candidates(self, u: int) -> np.ndarray:
        targets = sorted(target_communities(u, self.part, self.idx))
        if not targets:
            return np.empty(0, dtype=np.int64)
        hit = np.asarray(self.PT[targets].sum(axis=0)).ravel() > 0
        own = [self.rpos[r] for r in self.idx.resources_of_user.get(u, ())]
        hit[own] = False
        return np.flatnonzero(hit)

    def recommend(self, u: int, k: int) -> RecommendationList:
        if k < 1:
            raise ValueError("k must be >= 1")
        own = sorted(self.idx.resources_of_user.get(u, ()))
        if not own:
            return RecommendationList(u, ())
        cand = self._candidates(u)
        if len(cand) == 0:
            log.debug("user %s: no candidate resources", u)
            return RecommendationList(u, ())
        cand_ids = self.res_ids[cand]
        Pc, Ic = self.P[cand], self.I[cand]
        RUc_T = self.RU[cand].T.tocsr()
        n_users_c = self.n_users_of[cand][None, :]
        total_c = self.P_total[cand][None, :]
        step = max(1, _BLOCK // len(cand))
        picks = []
        for lo in range(0, len(own), step):
            block = own[lo:lo + step]
            src = np.array([self.rpos[r] for r in block])

            inter = (self.RU[src] @ RUc_T).toarray()
            denom = np.maximum(self.n_users_of[src][:, None], n_users_c)
            su = np.divide(inter, denom, out=np.zeros_like(inter), where=denom > 0)

            common_i = (self.P[src] @ Ic.T).toarray()
            common_j = (self.I[src] @ Pc.T).toarray()
            shared = (self.I[src] @ Ic.T).toarray() > 0
            half = (common_i + common_j) / 2.0
            denom = half + (self.P_total[src][:, None] - common_i) + (total_c - common_j)
            se = np.divide(half, denom, out=np.zeros_like(half), where=shared & (denom > 0))
            approx = su + se

            for row, r_i in enumerate(block):
                top = np.flatnonzero(approx[row] >= approx[row].max() - _RESCORE_SLACK)
                picks.append(msr(r_i, cand_ids[top].tolist(), self.table, self.idx))
        return _rank(u, picks, k)


def write_recommendations(lists, path: str | Path) -> None:
    """One JSON object per line; scores fixed to 6 decimals."""
    lines = []
    for rec in lists:
        items = ", ".join(f"[{r}, {s:.6f}]" for r, s in rec.items)
        lines.append(f'{{"user": {rec.user}, "items": [{items}]}}')
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_recommendations(path: str | Path) -> list[RecommendationList]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.append(RecommendationList(obj["user"], tuple((r, s) for r, s in obj["items"])))
    return out
