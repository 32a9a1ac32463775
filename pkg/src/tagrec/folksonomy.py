"""Folksonomy data model: users, resources, tags and timestamped tag assignments."""

from __future__ import annotations

import hashlib
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp


class Assignment(NamedTuple):
    user: int
    tag: int
    resource: int
    timestamp: int  # epoch milliseconds


@dataclass(frozen=True)
class Folksonomy:
    """The <U, R, T, Y> quadruple.

    ``tags`` maps tag ids to their (normalized) strings. Assignments are kept
    sorted and free of duplicates so that two folksonomies holding the same
    data compare and hash identically.
    """

    users: frozenset[int]
    tags: dict[int, str]
    resources: frozenset[int]
    assignments: tuple[Assignment, ...]

    @classmethod
    def from_assignments(
        cls,
        assignments: Iterable[Assignment | tuple],
        tags: dict[int, str],
        users: Iterable[int] = (),
        resources: Iterable[int] = (),
    ) -> Folksonomy:
        """Build a folksonomy, deduplicating quadruples and deriving id sets.

        Ids referenced by assignments are always included; ``users`` and
        ``resources`` may add ids that carry no assignment.
        """
        rows = sorted({Assignment(*a) for a in assignments})
        for a in rows:
            if a.timestamp < 0:
                raise ValueError(f"negative timestamp in {a}")
            if a.tag not in tags:
                raise ValueError(f"assignment {a} references unknown tag {a.tag}")
        for t, s in tags.items():
            if not s:
                raise ValueError(f"tag {t} has an empty string")
        return cls(
            users=frozenset(users) | {a.user for a in rows},
            tags=dict(sorted(tags.items())),
            resources=frozenset(resources) | {a.resource for a in rows},
            assignments=tuple(rows),
        )

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    def content_hash(self) -> str:
        """SHA-256 over tags and assignments in canonical order."""
        h = hashlib.sha256()
        for t, s in self.tags.items():
            h.update(f"T\t{t}\t{s}\n".encode("utf-8"))
        for a in self.assignments:
            h.update(f"A\t{a.user}\t{a.tag}\t{a.resource}\t{a.timestamp}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class FolkIndex:
    """Inverted indices over a folksonomy.

    The dict fields are the canonical lookups. The cached array views
    (incidence matrices, sorted id arrays) back the vectorized paths of graph
    construction and recommendation.
    """

    tags: dict[int, str]
    resources_of_tag: dict[int, frozenset[int]]
    users_of_resource: dict[int, frozenset[int]]
    tags_of_user: dict[int, Counter]
    resources_of_user: dict[int, frozenset[int]]
    last_assignment: dict[tuple[int, int], int]
    assignment_count: dict[tuple[int, int], int]
    n_assignments: int = 0

    @cached_property
    def tag_ids(self) -> np.ndarray:
        """Sorted ids of tags with at least one assignment."""
        return np.array(sorted(self.resources_of_tag), dtype=np.int64)

    @cached_property
    def resource_ids(self) -> np.ndarray:
        return np.array(sorted(self.users_of_resource), dtype=np.int64)

    @cached_property
    def user_ids(self) -> np.ndarray:
        return np.array(sorted(self.resources_of_user), dtype=np.int64)

    @cached_property
    def tags_of_resource(self) -> dict[int, dict[int, int]]:
        """resource -> {tag: assignment count}, tags ascending."""
        out: dict[int, dict[int, int]] = defaultdict(dict)
        for (t, r), n in self.assignment_count.items():
            out[r][t] = n
        return dict(out)

    @cached_property
    def tag_resource_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(tag position, resource position, last timestamp) per (t, r) pair,
        sorted by resource position then tag position."""
        tpos = {t: i for i, t in enumerate(self.tag_ids.tolist())}
        rpos = {r: i for i, r in enumerate(self.resource_ids.tolist())}
        n = len(self.last_assignment)
        ti = np.empty(n, dtype=np.int64)
        ri = np.empty(n, dtype=np.int64)
        ts = np.empty(n, dtype=np.int64)
        for k, ((t, r), stamp) in enumerate(self.last_assignment.items()):
            ti[k] = tpos[t]
            ri[k] = rpos[r]
            ts[k] = stamp
        order = np.lexsort((ti, ri))
        return ti[order], ri[order], ts[order]

    @cached_property
    def tag_resource_matrix(self) -> sp.csr_matrix:
        """Binary tags x resources incidence (rows follow ``tag_ids``)."""
        ti, ri, _ = self.tag_resource_arrays
        data = np.ones(len(ti), dtype=np.float64)
        m = sp.csr_matrix(
            (data, (ti, ri)), shape=(len(self.tag_ids), len(self.resource_ids))
        )
        m.sort_indices()
        return m

    @cached_property
    def user_resource_matrix(self) -> sp.csr_matrix:
        """Binary users x resources incidence (rows follow ``user_ids``)."""
        upos = {u: i for i, u in enumerate(self.user_ids.tolist())}
        rpos = {r: i for i, r in enumerate(self.resource_ids.tolist())}
        rows, cols = [], []
        for u, rs in self.resources_of_user.items():
            for r in rs:
                rows.append(upos[u])
                cols.append(rpos[r])
        m = sp.csr_matrix(
            (np.ones(len(rows)), (rows, cols)),
            shape=(len(upos), len(rpos)),
        )
        m.sort_indices()
        return m


def build_index(f: Folksonomy) -> FolkIndex:
    resources_of_tag: dict[int, set[int]] = defaultdict(set)
    users_of_resource: dict[int, set[int]] = defaultdict(set)
    tags_of_user: dict[int, Counter] = defaultdict(Counter)
    resources_of_user: dict[int, set[int]] = defaultdict(set)
    last: dict[tuple[int, int], int] = {}
    count: Counter = Counter()

    for a in f.assignments:
        resources_of_tag[a.tag].add(a.resource)
        users_of_resource[a.resource].add(a.user)
        tags_of_user[a.user][a.tag] += 1
        resources_of_user[a.user].add(a.resource)
        key = (a.tag, a.resource)
        if a.timestamp > last.get(key, -1):
            last[key] = a.timestamp
        count[key] += 1

    return FolkIndex(
        tags=dict(f.tags),
        resources_of_tag={t: frozenset(v) for t, v in sorted(resources_of_tag.items())},
        users_of_resource={r: frozenset(v) for r, v in sorted(users_of_resource.items())},
        tags_of_user=dict(sorted(tags_of_user.items())),
        resources_of_user={u: frozenset(v) for u, v in sorted(resources_of_user.items())},
        last_assignment=dict(sorted(last.items())),
        assignment_count=dict(sorted(count.items())),
        n_assignments=len(f.assignments),
    )
