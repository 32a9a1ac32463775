"""Synthetic folksonomies with planted topic structure, for tests and demos.

Tags belong to topics; each user favours a few topics and each resource has
one topic, so co-occurrence carries real signal. A share of the tag
vocabulary is generated as misspelled or suffixed variants of other tags,
giving the lexical kernel something to find. The output can be written in
the HetRec 2011 Delicious file layout.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .folksonomy import Assignment, Folksonomy

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
_T0 = 1_104_537_600_000  # 2005-01-01 in epoch ms
_YEAR_MS = 365 * 24 * 3600 * 1000


def _word(rng, lo=3, hi=12) -> str:
    n = int(rng.integers(lo, hi + 1))
    return "".join(rng.choice(list(_ALPHABET), size=n))


def _variant(rng, w: str) -> str:
    kind = rng.integers(4)
    if kind == 0:
        return w + "s"
    if kind == 1 and len(w) > 3:
        i = int(rng.integers(len(w)))
        return w[:i] + w[i + 1:]
    if kind == 2:
        i = int(rng.integers(len(w)))
        return w[:i] + rng.choice(list(_ALPHABET)) + w[i + 1:]
    return w + "_" + _word(rng, 2, 4)


def tag_vocabulary(n_tags: int, seed: int = 0, variant_share: float = 0.2) -> list[str]:
    rng = np.random.default_rng(seed)
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < n_tags:
        if words and rng.random() < variant_share:
            w = _variant(rng, words[int(rng.integers(len(words)))])
        else:
            w = _word(rng)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def planted_folksonomy(
    n_users: int = 40,
    n_resources: int = 200,
    n_tags: int = 120,
    n_assignments: int = 3000,
    n_topics: int = 6,
    topic_focus: float = 0.85,
    seed: int = 0,
) -> Folksonomy:
    """Random folksonomy whose users, resources and tags share topics.

    Popularity of resources and tags within a topic is Zipf-like. Every
    assignment picks a user, one of the user's topics (``topic_focus`` of
    the time) or a random one, then a resource and a tag of that topic.
    """
    rng = np.random.default_rng(seed)
    names = tag_vocabulary(n_tags, seed)
    tags = {i + 1: s for i, s in enumerate(names)}

    tag_topic = rng.integers(n_topics, size=n_tags)
    res_topic = rng.integers(n_topics, size=n_resources)
    user_topics = [rng.choice(n_topics, size=min(2, n_topics), replace=False) for _ in range(n_users)]

    def zipf_pool(members):
        w = 1.0 / np.arange(1, len(members) + 1) ** 0.9
        return members, w / w.sum()

    tag_pool = [zipf_pool(rng.permutation(np.flatnonzero(tag_topic == z))) for z in range(n_topics)]
    res_pool = [zipf_pool(rng.permutation(np.flatnonzero(res_topic == z))) for z in range(n_topics)]
    user_w = 1.0 / np.arange(1, n_users + 1) ** 0.7
    user_w /= user_w.sum()

    rows = set()
    attempts = 0
    while len(rows) < n_assignments and attempts < 20 * n_assignments:
        attempts += 1
        u = int(rng.choice(n_users, p=user_w))
        z = int(rng.choice(user_topics[u])) if rng.random() < topic_focus else int(rng.integers(n_topics))
        tp, rp = tag_pool[z], res_pool[z]
        if len(tp[0]) == 0 or len(rp[0]) == 0:
            continue
        t = int(rng.choice(tp[0], p=tp[1])) + 1
        r = int(rng.choice(rp[0], p=rp[1])) + 1
        ts = _T0 + int(rng.integers(_YEAR_MS)) + z * _YEAR_MS // 4
        rows.add(Assignment(u + 1, t, r, ts))
    return Folksonomy.from_assignments(rows, tags)


def hetrec_scale(seed: int = 0, scale: float = 1.0) -> Folksonomy:
    """Corpus with the cardinalities of HetRec Delicious-2k at ``scale`` = 1:
    1,867 users, 69,226 resources, 53,388 tags, 437,593 assignments.

    Sampling is vectorized; this is a stand-in for load and timing tests,
    not a model of the real tag distribution.
    """
    rng = np.random.default_rng(seed)
    n_users = max(2, int(1867 * scale))
    n_res = max(2, int(69226 * scale))
    n_tags = max(2, int(53388 * scale))
    n_asg = max(2, int(437593 * scale))
    n_topics = max(2, int(400 * scale))

    names = tag_vocabulary(n_tags, seed)
    tags = {i + 1: s for i, s in enumerate(names)}
    tag_topic = rng.integers(n_topics, size=n_tags)
    res_topic = rng.integers(n_topics, size=n_res)
    user_topics = rng.integers(n_topics, size=(n_users, 3))

    # heavy-tailed but bounded user activity
    user_w = rng.lognormal(0.0, 1.2, size=n_users)
    u = rng.choice(n_users, size=n_asg, p=user_w / user_w.sum())
    focus = rng.random(n_asg) < 0.85
    z = np.where(focus, user_topics[u, rng.integers(3, size=n_asg)], rng.integers(n_topics, size=n_asg))

    def pick(topic_of, n_items):
        order = np.argsort(topic_of, kind="stable")
        sorted_topics = topic_of[order]
        start = np.searchsorted(sorted_topics, np.arange(n_topics))
        stop = np.searchsorted(sorted_topics, np.arange(n_topics), side="right")
        size = stop - start
        ok = size[z] > 0
        rank = np.minimum(rng.zipf(1.3, size=n_asg) - 1, np.maximum(size[z] - 1, 0))
        return np.where(ok, order[np.minimum(start[z] + rank, n_items - 1)], -1)

    t = pick(tag_topic, n_tags)
    r = pick(res_topic, n_res)
    ts = _T0 + rng.integers(3 * _YEAR_MS, size=n_asg) + z.astype(np.int64) * (_YEAR_MS // 50)
    keep = (t >= 0) & (r >= 0)
    rows = zip((u[keep] + 1).tolist(), (t[keep] + 1).tolist(), (r[keep] + 1).tolist(), ts[keep].tolist())
    return Folksonomy.from_assignments(rows, tags, resources=range(1, n_res + 1))


def write_hetrec(f: Folksonomy, directory: str | Path) -> Path:
    """Write ``tags.dat``, ``bookmarks.dat`` and
    ``user_taggedbookmarks-timestamps.dat`` in the HetRec layout."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "tags.dat", "w", encoding="utf-8") as fh:
        fh.write("id\tvalue\n")
        for t, s in f.tags.items():
            fh.write(f"{t}\t{s}\n")
    with open(d / "bookmarks.dat", "w", encoding="utf-8") as fh:
        fh.write("id\tmd5\ttitle\turl\tmd5Principal\turlPrincipal\n")
        for r in sorted(f.resources):
            fh.write(f"{r}\t-\t-\t-\t-\t-\n")
    with open(d / "user_taggedbookmarks-timestamps.dat", "w", encoding="utf-8") as fh:
        fh.write("userID\tbookmarkID\ttagID\ttimestamp\n")
        for a in f.assignments:
            fh.write(f"{a.user}\t{a.resource}\t{a.tag}\t{a.timestamp}\n")
    return d
