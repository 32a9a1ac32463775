"""Weighted undirected tag graph.

Edges come from two candidate streams: tags that co-occur on a resource, and
tag strings that are lexically close. Both streams are enumerated without
touching all O(m^2) tag pairs: co-occurrence by grouping tags per resource,
lexical closeness by length and character-bigram count filtering.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .folksonomy import FolkIndex
from .similarity import (
    SimParams,
    bounded_levenshtein,
    jaccard,
    max_distance,
    sim_lev,
    sim_time,
)

log = logging.getLogger(__name__)

# triples (pair, resource) materialized at once while grouping tags per resource
_CHUNK = 4_000_000


@dataclass(frozen=True, eq=False)
class TagGraph:
    """Edges are stored once, as parallel arrays sorted by (src, dst) with
    src < dst. ``edges`` and ``adjacency`` are derived dict views."""

    node_ids: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        if np.any(self.src >= self.dst):
            raise ValueError("edges must satisfy src < dst (no self-loops)")
        if np.any(self.weight <= 0) or np.any(self.weight > 1):
            raise ValueError("edge weights must lie in (0, 1]")

    def __eq__(self, other):
        if not isinstance(other, TagGraph):
            return NotImplemented
        return (
            np.array_equal(self.node_ids, other.node_ids)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def edges(self) -> dict[tuple[int, int], float]:
        return {
            (a, b): w
            for a, b, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())
        }

    @cached_property
    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {t: [] for t in self.node_ids.tolist()}
        for (a, b), w in self.edges.items():
            adj[a].append((b, w))
            adj[b].append((a, w))
        for nbrs in adj.values():
            nbrs.sort()
        return adj

    def neighbors(self, t: int) -> list[tuple[int, float]]:
        return self.adjacency[t]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric adjacency over node positions (order of ``node_ids``)."""
        n = len(self.node_ids)
        i = np.searchsorted(self.node_ids, self.src)
        j = np.searchsorted(self.node_ids, self.dst)
        a = sp.csr_matrix(
            (np.concatenate([self.weight, self.weight]),
             (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        )
        a.sort_indices()
        return a


def _canonical_graph(node_ids, src, dst, weight) -> TagGraph:
    node_ids = np.unique(np.asarray(node_ids, dtype=np.int64))
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    weight = np.asarray(weight, dtype=np.float64)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    keep = weight > 0
    lo, hi, weight = lo[keep], hi[keep], weight[keep]
    order = np.lexsort((hi, lo))
    return TagGraph(node_ids, lo[order], hi[order], weight[order])


# ---------------------------------------------------------------- co-occurrence

def co_occurrence_counts(idx: FolkIndex, tau: int):
    """Per co-occurring pair: (tag position i < j, |R(i) & R(j)|, |nco(i, j)|).

    Pairs are generated within each resource; resources with the same
    number of tags are processed together as dense blocks.
    """
    ti, ri, ts = idx.tag_resource_arrays
    m = len(idx.tag_ids)
    acc = sp.csr_matrix((m, m), dtype=np.int64)
    if len(ti) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty, empty

    starts = np.flatnonzero(np.r_[True, ri[1:] != ri[:-1]])
    degrees = np.diff(np.r_[starts, len(ri)])
    pending: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    n_pending = 0

    def flush(acc):
        a = np.concatenate([x[0] for x in pending])
        b = np.concatenate([x[1] for x in pending])
        data = np.concatenate([x[2] for x in pending])
        pending.clear()
        return acc + sp.csr_matrix((data, (a, b)), shape=(m, m), dtype=np.int64)

    for d in np.unique(degrees):
        if d < 2:
            continue
        block_starts = starts[degrees == d]
        iu0, iu1 = np.triu_indices(d, 1)
        step = max(1, _CHUNK // len(iu0))
        for c in range(0, len(block_starts), step):
            rows = block_starts[c:c + step, None] + np.arange(d)
            tags, stamps = ti[rows], ts[rows]
            close = np.abs(stamps[:, iu0] - stamps[:, iu1]) <= tau
            # low 32 bits count the shared resource, high bits count time-close ones
            data = np.int64(1) + (close.ravel().astype(np.int64) << 32)
            pending.append((tags[:, iu0].ravel(), tags[:, iu1].ravel(), data))
            n_pending += len(data)
            if n_pending >= 5 * _CHUNK:
                acc = flush(acc)
                n_pending = 0
    if pending:
        acc = flush(acc)

    coo = acc.tocoo()
    order = np.lexsort((coo.col, coo.row))
    i, j, v = coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]
    return i, j, v & 0xFFFFFFFF, v >> 32


def co_occurring_pairs(idx: FolkIndex) -> Iterator[tuple[int, int]]:
    """Unordered pairs of tag ids sharing at least one resource, as (a, b)
    with a < b, each emitted once in ascending order."""
    i, j, _, _ = co_occurrence_counts(idx, 0)
    ids = idx.tag_ids
    yield from zip(ids[i].tolist(), ids[j].tolist())


# ---------------------------------------------------------------- lexical

def _bigram_matrix(strings: list[str]) -> sp.csr_matrix:
    vocab: dict[str, int] = {}
    rows, cols = [], []
    for r, s in enumerate(strings):
        for k in range(len(s) - 1):
            rows.append(r)
            cols.append(vocab.setdefault(s[k:k + 2], len(vocab)))
    return sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)),
        shape=(len(strings), max(1, len(vocab))),
        dtype=np.int64,
    )


def _lexical_candidates(strings: list[str], alpha: float, row_chunk: int = 2048):
    """Candidate position pairs (i, j), i != j, for ``sim_lev >= alpha``.

    For a pair whose longer string has length L, a distance of at most
    k = max_distance(L, alpha) implies |len difference| <= k and at least
    L - 1 - 2k shared bigrams (counted with multiplicity). The bigram count
    product used here is an upper bound of the multiset intersection, so
    the filter never drops a qualifying pair.
    """
    lengths = np.array([len(s) for s in strings], dtype=np.int64)
    grams = _bigram_matrix(strings)
    by_len = {int(L): np.flatnonzero(lengths == L) for L in np.unique(lengths)}
    out_i, out_j = [], []
    for L, rows in by_len.items():
        k = max_distance(L, alpha)
        if k < 0:
            continue
        partners = np.concatenate(
            [by_len[l] for l in range(L - k, L + 1) if l in by_len]
        )
        bound = (L - 1) - 2 * k
        pt = grams[partners].T.tocsc()
        for c in range(0, len(rows), row_chunk):
            block = rows[c:c + row_chunk]
            if bound <= 0:
                bi = np.repeat(block, len(partners))
                bj = np.tile(partners, len(block))
            else:
                prod = (grams[block] @ pt).tocoo()
                keep = prod.data >= bound
                bi = block[prod.row[keep]]
                bj = partners[prod.col[keep]]
            # same-length pairs appear twice; keep one orientation
            keep = (lengths[bj] < L) | (bi < bj)
            out_i.append(bi[keep])
            out_j.append(bj[keep])
    if not out_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(out_i), np.concatenate(out_j)


def lexical_candidate_pairs(tags: dict[int, str], alpha_nonco: float) -> Iterator[tuple[int, int]]:
    """Blocked candidate pairs (a < b by id) containing every pair with
    ``sim_lev >= alpha_nonco``."""
    ids = np.array(sorted(tags), dtype=np.int64)
    strings = [tags[t] for t in ids.tolist()]
    i, j = _lexical_candidates(strings, alpha_nonco)
    a, b = np.minimum(ids[i], ids[j]), np.maximum(ids[i], ids[j])
    order = np.lexsort((b, a))
    yield from zip(a[order].tolist(), b[order].tolist())


def lexical_similar_pairs(tags: dict[int, str], alpha: float):
    """Verified pairs with ``sim_lev >= alpha``: arrays (a, b, sim) with a < b,
    sorted by (a, b)."""
    ids = np.array(sorted(tags), dtype=np.int64)
    strings = [tags[t] for t in ids.tolist()]
    ci, cj = _lexical_candidates(strings, alpha)
    a_out, b_out, s_out = [], [], []
    for i, j in zip(ci.tolist(), cj.tolist()):
        s, t = strings[i], strings[j]
        longest = max(len(s), len(t))
        k = max_distance(longest, alpha)
        d = bounded_levenshtein(s, t, k)
        if d <= k:
            a_out.append(min(ids[i], ids[j]))
            b_out.append(max(ids[i], ids[j]))
            s_out.append(1.0 - d / longest)
    a = np.array(a_out, dtype=np.int64)
    b = np.array(b_out, dtype=np.int64)
    sims = np.array(s_out, dtype=np.float64)
    order = np.lexsort((b, a))
    return a[order], b[order], sims[order]


# ---------------------------------------------------------------- weights

def _combine(jac, lev, st, p: SimParams):
    """Co-occurring edge weight; works on floats and on numpy arrays alike.

    ``lev`` is None when lexical similarity is switched off.
    """
    if lev is None:
        s = jac
    else:
        s = np.where(lev >= p.alpha_co, np.maximum(jac, lev), jac)
    if not p.use_time:
        return s
    return p.lam * s + (1.0 - p.lam) * st


def edge_weight(t_i: int, t_j: int, idx: FolkIndex, p: SimParams) -> float:
    """Weight of the edge between two tags; 0 means no edge."""
    if t_i == t_j:
        return 0.0
    common = idx.resources_of_tag[t_i] & idx.resources_of_tag[t_j]
    lev = sim_lev(idx.tags[t_i], idx.tags[t_j]) if p.use_lexical else None
    if common:
        w = _combine(
            jaccard(t_i, t_j, idx), lev, sim_time(t_i, t_j, idx, p.tau), p
        )
        return float(w)
    if lev is not None and lev >= p.alpha_nonco:
        return p.lam * lev
    return 0.0


def build_graph(train_idx: FolkIndex, p: SimParams) -> TagGraph:
    """Tag graph over every tag of the training data."""
    ids = train_idx.tag_ids
    m = len(ids)
    i, j, inter, close = co_occurrence_counts(train_idx, p.tau)
    log.info("co-occurring pairs: %d", len(i))

    deg = np.array([len(train_idx.resources_of_tag[t]) for t in ids.tolist()], dtype=np.int64)
    jac = inter / (deg[i] + deg[j] - inter)
    st = close / inter

    co_keys = i * m + j
    if p.use_lexical:
        tags = {t: train_idx.tags[t] for t in ids.tolist()}
        la, lb, lsim = lexical_similar_pairs(tags, min(p.alpha_co, p.alpha_nonco))
        lex_keys = np.searchsorted(ids, la) * m + np.searchsorted(ids, lb)
        log.info("lexically similar pairs: %d", len(lex_keys))
        pos = np.searchsorted(lex_keys, co_keys)
        pos_c = np.minimum(pos, max(len(lex_keys) - 1, 0))
        hit = (pos < len(lex_keys)) & (lex_keys[pos_c] == co_keys) if len(lex_keys) else np.zeros(len(co_keys), bool)
        # pairs absent from the lexical list fall below alpha_co, so -1 never passes the gate
        lev = np.where(hit, lsim[pos_c] if len(lsim) else 0.0, -1.0)
        w_co = _combine(jac, lev, st, p)

        nonco = ~np.isin(lex_keys, co_keys) & (lsim >= p.alpha_nonco)
        src = np.concatenate([ids[i], la[nonco]])
        dst = np.concatenate([ids[j], lb[nonco]])
        weight = np.concatenate([w_co, p.lam * lsim[nonco]])
    else:
        src, dst = ids[i], ids[j]
        weight = _combine(jac, None, st, p)

    return _canonical_graph(ids, src, dst, np.asarray(weight, dtype=np.float64))


# ---------------------------------------------------------------- cache file

def graph_hash(g: TagGraph) -> str:
    h = hashlib.sha256()
    for arr in (g.node_ids, g.src, g.dst, g.weight):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def save_graph(g: TagGraph, path: str | Path, params: SimParams, train_hash: str) -> None:
    header = {"params": asdict(params), "train_hash": train_hash, "n_nodes": g.n_nodes}
    lines = ["# " + json.dumps(header, sort_keys=True)]
    lines += [
        f"{a}\t{b}\t{w!r}"
        for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph_header(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path}: not a graph cache file")
    return json.loads(first[2:])


def load_graph(path: str | Path, node_ids=None) -> TagGraph:
    """Read a graph cache file. Isolated nodes are not stored in the file and
    must be supplied through ``node_ids``."""
    src, dst, w = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            a, b, x = line.rstrip("\n").split("\t")
            src.append(int(a))
            dst.append(int(b))
            w.append(float(x))
    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    nodes = np.concatenate([src, dst]) if node_ids is None else np.asarray(node_ids)
    return _canonical_graph(nodes, src, dst, np.array(w, dtype=np.float64))
