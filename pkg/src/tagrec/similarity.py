"""Pairwise tag similarity kernels: co-occurrence Jaccard, normalized
Levenshtein similarity and assignment-time agreement."""

from __future__ import annotations

from dataclasses import dataclass

from .folksonomy import FolkIndex

DAY_MS = 24 * 60 * 60 * 1000


@dataclass(frozen=True)
class SimParams:
    """Tunables of the tag-graph edge weights.

    tau is in milliseconds. ``lam`` mixes the semantic/lexical similarity
    with the time similarity and scales lexical-only edges. The two flags
    switch the lexical and time components off for ablation runs; with time
    off the co-occurring weight is the plain similarity (lam taken as 1).
    """

    tau: int = 30 * DAY_MS
    lam: float = 0.5
    alpha_co: float = 0.7
    alpha_nonco: float = 0.8
    use_lexical: bool = True
    use_time: bool = True

    def __post_init__(self):
        for name in ("lam", "alpha_co", "alpha_nonco"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")


def jaccard(t_i: int, t_j: int, idx: FolkIndex) -> float:
    a = idx.resources_of_tag[t_i]
    b = idx.resources_of_tag[t_j]
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def levenshtein(a: str, b: str) -> int:
    """Edit distance over code points (insert, delete, substitute, unit cost)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def bounded_levenshtein(a: str, b: str, k: int) -> int:
    """Edit distance if it is <= k, otherwise any value > k.

    Restricts the dynamic program to the diagonal band of width k and stops
    as soon as a whole row exceeds k.
    """
    la, lb = len(a), len(b)
    if abs(la - lb) > k:
        return k + 1
    if la == 0 or lb == 0:
        return max(la, lb)
    big = k + 1
    prev = [j if j <= k else big for j in range(lb + 1)]
    for i in range(1, la + 1):
        lo = max(1, i - k)
        hi = min(lb, i + k)
        cur = [big] * (lb + 1)
        if i <= k:
            cur[0] = i
        ca = a[i - 1]
        row_min = cur[0]
        for j in range(lo, hi + 1):
            v = prev[j - 1] + (ca != b[j - 1])
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            if v > big:
                v = big
            cur[j] = v
            if v < row_min:
                row_min = v
        if row_min > k:
            return big
        prev = cur
    return prev[lb]


def sim_lev(a: str, b: str) -> float:
    """1 - distance / longer length; two empty strings are identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def max_distance(length: int, alpha: float) -> int:
    """Largest edit distance d with ``1 - d/length >= alpha``.

    Evaluated with the same float expression as ``sim_lev`` so that a
    threshold check on the distance agrees bit-for-bit with one on the
    similarity. Returns -1 when even identical strings would fail.
    """
    if length == 0:
        return 0 if 1.0 >= alpha else -1
    d = -1
    while d + 1 <= length and 1.0 - (d + 1) / length >= alpha:
        d += 1
    return d


def nco(t_i: int, t_j: int, idx: FolkIndex, tau: int) -> set[int]:
    """Common resources whose last assignment times for the two tags lie
    within ``tau`` of each other."""
    last = idx.last_assignment
    common = idx.resources_of_tag[t_i] & idx.resources_of_tag[t_j]
    return {r for r in common if abs(last[(t_i, r)] - last[(t_j, r)]) <= tau}


def sim_time(t_i: int, t_j: int, idx: FolkIndex, tau: int) -> float:
    common = idx.resources_of_tag[t_i] & idx.resources_of_tag[t_j]
    if not common:
        return 0.0
    return len(nco(t_i, t_j, idx, tau)) / len(common)
