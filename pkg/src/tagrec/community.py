"""Newman-Girvan modularity and Louvain community detection on a TagGraph."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import TagGraph

# a local-move phase ends once a full pass gains less modularity than this
MIN_PHASE_GAIN = 1e-7


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Non-overlapping assignment of tags to communities.

    Community ids are canonical: communities are numbered 0, 1, ... in order
    of their smallest tag id. ``history`` holds the modularity before the
    first local-move phase and after every phase.
    """

    community_of: dict[int, int]
    communities: dict[int, frozenset[int]]
    modularity: float
    history: tuple[float, ...] = field(default=(), compare=False)

    @classmethod
    def from_labels(cls, labels: dict[int, int], modularity: float = float("nan"),
                    history=()) -> Partition:
        groups: dict[int, list[int]] = {}
        for t in sorted(labels):
            groups.setdefault(labels[t], []).append(t)
        ordered = sorted(groups.values(), key=lambda ts: ts[0])
        communities = {c: frozenset(ts) for c, ts in enumerate(ordered)}
        community_of = {t: c for c, ts in communities.items() for t in sorted(ts)}
        return cls(dict(sorted(community_of.items())), communities, modularity, tuple(history))

    @property
    def n_communities(self) -> int:
        return len(self.communities)


def total_weight(g: TagGraph) -> float:
    return float(g.weight.sum())


def degree(g: TagGraph, t: int) -> float:
    return float(sum(w for _, w in g.adjacency[t]))


def modularity(g: TagGraph, part: Partition | dict[int, int]) -> float:
    """Modularity of a partition, computed from scratch.

    Equivalent to the ordered-pair double sum with zero self-weights; a
    graph without edges has modularity 0.
    """
    labels = part.community_of if isinstance(part, Partition) else part
    nodes = g.node_ids.tolist()
    if len(labels) != len(nodes) or any(t not in labels for t in nodes):
        raise ContractError("partition does not cover exactly the graph's nodes")
    m = total_weight(g)
    if m == 0:
        return 0.0
    comm = np.array([labels[t] for t in nodes])
    _, comm = np.unique(comm, return_inverse=True)
    i = np.searchsorted(g.node_ids, g.src)
    j = np.searchsorted(g.node_ids, g.dst)
    same = comm[i] == comm[j]
    internal = np.bincount(comm[i][same], weights=g.weight[same], minlength=comm.max() + 1)
    k = np.asarray(g.csr.sum(axis=1)).ravel()
    tot = np.bincount(comm, weights=k, minlength=comm.max() + 1)
    two_m = 2.0 * m
    # sum before dividing: exact for small integer weights
    return float((2.0 * math.fsum(internal) - math.fsum(tot * tot) / two_m) / two_m)


def _local_moves(indptr, indices, data, k, comm, tot, order, two_m, q):
    """Greedy node moves until a pass gains less than MIN_PHASE_GAIN.

    Mutates ``comm`` and ``tot``; returns (new modularity, any move made).
    A node moves only on a strictly positive gain; among equally good
    targets the lowest community id wins.
    """
    m = two_m / 2.0
    moved_any = False
    while True:
        pass_gain = 0.0
        moved = 0
        for i in order:
            ci = comm[i]
            ki = k[i]
            links: dict[int, float] = {}
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i:
                    c = comm[j]
                    links[c] = links.get(c, 0.0) + data[p]
            tot[ci] -= ki
            stay = links.get(ci, 0.0) - tot[ci] * ki / two_m
            best_c, best = ci, stay
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - tot[c] * ki / two_m
                if gain > best:  # ascending ids: ties keep the lowest
                    best_c, best = c, gain
            if best_c != ci and best > stay:
                comm[i] = best_c
                delta = (best - stay) / m
                q += delta
                pass_gain += delta
                moved += 1
            else:
                best_c = ci
            tot[best_c] += ki
        if moved:
            moved_any = True
        if moved == 0 or pass_gain < MIN_PHASE_GAIN:
            return q, moved_any


def louvain(g: TagGraph, seed: int = 0) -> Partition:
    """Two-phase Louvain: seeded local moves, then aggregation of each
    community into a super-node, repeated until no move improves modularity."""
    n = g.n_nodes
    node_ids = g.node_ids.tolist()
    m = total_weight(g)
    if n == 0:
        return Partition({}, {}, 0.0, (0.0,))
    if m == 0:
        return Partition.from_labels({t: t for t in node_ids}, 0.0, (0.0,))

    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    two_m = 2.0 * m
    adj = g.csr.copy()
    membership = np.arange(n)  # original node -> current super-node
    k = np.asarray(adj.sum(axis=1)).ravel()
    q = float(-np.sum((k / two_m) ** 2))
    history = [q]

    while True:
        size = adj.shape[0]
        k = np.asarray(adj.sum(axis=1)).ravel()
        comm = list(range(size))
        tot = k.tolist()
        order = rng.permutation(size).tolist()
        q, moved = _local_moves(
            adj.indptr.tolist(), adj.indices.tolist(), adj.data.tolist(),
            k.tolist(), comm, tot, order, two_m, q,
        )
        history.append(q)
        if not moved:
            break
        _, relabel = np.unique(np.array(comm), return_inverse=True)
        n_comm = relabel.max() + 1
        membership = relabel[membership]
        s = sp.csr_matrix((np.ones(size), (np.arange(size), relabel)), shape=(size, n_comm))
        adj = (s.T @ adj @ s).tocsr()
        adj.sort_indices()
        if n_comm == size:
            break

    labels = dict(zip(node_ids, membership.tolist()))
    return Partition.from_labels(labels, q, history)


# ---------------------------------------------------------------- cache file

def save_partition(part: Partition, path: str | Path, seed: int, graph_hash: str) -> None:
    header = {"seed": seed, "modularity": part.modularity, "graph_hash": graph_hash,
              "history": list(part.history)}
    lines = ["# " + json.dumps(header, sort_keys=True)]
    lines += [f"{t}\t{c}" for t, c in part.community_of.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_partition_header(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path}: not a partition cache file")
    return json.loads(first[2:])


def load_partition(path: str | Path) -> Partition:
    header = read_partition_header(path)
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            t, c = line.split("\t")
            labels[int(t)] = int(c)
    return Partition.from_labels(labels, header["modularity"], header.get("history", ()))
