"""HetRec 2011 Delicious-2k loading, tag cleaning and seeded train/test splitting."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .folksonomy import Assignment, Folksonomy

log = logging.getLogger(__name__)

TAG_FILE = "tags.dat"
ASSIGNMENT_FILE = "user_taggedbookmarks-timestamps.dat"
BOOKMARK_FILE = "bookmarks.dat"

TAG_COLUMNS = ("id", "value")
ASSIGNMENT_COLUMNS = ("userid", "bookmarkid", "tagid", "timestamp")

MAX_MALFORMED_FRACTION = 0.01


class IngestError(Exception):
    pass


@dataclass(frozen=True)
class CleaningRules:
    lowercase: bool = True
    trim_whitespace: bool = True
    max_tag_length: int = 64
    drop_non_alphanumeric_only: bool = True

    def __post_init__(self):
        if self.max_tag_length < 1:
            raise ValueError("max_tag_length must be >= 1")

    def normalize(self, tag: str) -> str | None:
        """Normalized form of ``tag``, or None if the tag is dropped."""
        if self.trim_whitespace:
            tag = tag.strip()
        if self.lowercase:
            tag = tag.lower()
        if not tag.strip() or len(tag) > self.max_tag_length:
            return None
        if self.drop_non_alphanumeric_only and not any(ch.isalnum() for ch in tag):
            return None
        return tag


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    per_user_stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def _decode(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1", errors="replace")


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header (lower-cased column names) and the data rows of a TSV file."""
    with open(path, "rb") as fh:
        lines = fh.read().split(b"\n")
    lines = [ln.rstrip(b"\r") for ln in lines]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise IngestError(f"{path.name}: file is empty (header row expected)")
    header = [c.strip().lower() for c in _decode(lines[0]).split("\t")]
    return header, [_decode(ln).split("\t") for ln in lines[1:]]


def _column_positions(header: list[str], wanted: tuple[str, ...], path: Path) -> list[int]:
    try:
        return [header.index(c) for c in wanted]
    except ValueError:
        raise IngestError(
            f"{path.name}: header {header} lacks required columns {list(wanted)}"
        ) from None


def _check_malformed(path: Path, bad: int, total: int) -> None:
    if bad:
        log.warning("%s: skipped %d malformed rows of %d", path.name, bad, total)
    if total and bad / total > MAX_MALFORMED_FRACTION:
        raise IngestError(
            f"{path.name}: {bad} of {total} rows malformed (limit "
            f"{MAX_MALFORMED_FRACTION:.0%})"
        )


def _find_file(directory: Path, name: str, columns: tuple[str, ...]) -> Path:
    """Locate a file by its conventional name, else by its header columns."""
    path = directory / name
    if path.is_file():
        return path
    for cand in sorted(directory.iterdir()):
        if not cand.is_file():
            continue
        with open(cand, "rb") as fh:
            first = _decode(fh.readline().rstrip(b"\r\n"))
        header = [c.strip().lower() for c in first.split("\t")]
        if all(c in header for c in columns):
            return cand
    raise IngestError(f"missing file: {path}")


def parse_hetrec(directory: str | Path, malformed: dict | None = None) -> Folksonomy:
    """Parse a HetRec 2011 Delicious directory into a raw folksonomy.

    Reads the tag definitions and the timestamped assignment file; the
    bookmark file, when present, contributes resource ids only. Malformed
    rows are skipped and counted (into ``malformed`` if given, keyed by file
    name); more than 1% malformed rows in a file is fatal.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"data directory not found: {directory}")
    tag_path = _find_file(directory, TAG_FILE, TAG_COLUMNS)
    asg_path = _find_file(directory, ASSIGNMENT_FILE, ASSIGNMENT_COLUMNS)
    malformed = {} if malformed is None else malformed

    header, rows = _read_rows(tag_path)
    id_col, value_col = _column_positions(header, TAG_COLUMNS, tag_path)
    tags: dict[int, str] = {}
    bad = 0
    for row in rows:
        try:
            tid = int(row[id_col])
            value = row[value_col]
        except (ValueError, IndexError):
            bad += 1
            continue
        if not value:
            bad += 1
            continue
        tags[tid] = value
    malformed[tag_path.name] = bad
    _check_malformed(tag_path, bad, len(rows))

    header, rows = _read_rows(asg_path)
    cols = _column_positions(header, ASSIGNMENT_COLUMNS, asg_path)
    assignments = []
    bad = 0
    for row in rows:
        try:
            u, r, t, ts = (int(row[c]) for c in cols)
        except (ValueError, IndexError):
            bad += 1
            continue
        if ts < 0:
            bad += 1
            continue
        assignments.append(Assignment(u, t, r, ts))
        if t not in tags:
            tags[t] = str(t)
    malformed[asg_path.name] = bad
    _check_malformed(asg_path, bad, len(rows))

    resources: set[int] = set()
    bm_path = directory / BOOKMARK_FILE
    if bm_path.is_file():
        header, rows = _read_rows(bm_path)
        (id_col,) = _column_positions(header, ("id",), bm_path)
        for row in rows:
            try:
                resources.add(int(row[id_col]))
            except (ValueError, IndexError):
                continue

    return Folksonomy.from_assignments(assignments, tags, resources=resources)


def clean(f: Folksonomy, rules: CleaningRules = CleaningRules()) -> Folksonomy:
    """Normalize tag strings, merging tags that collapse to the same string.

    The merged tag keeps the smallest id of its group. Dropped tags take
    their assignments with them, and users or resources left without any
    assignment disappear.
    """
    canonical: dict[str, int] = {}
    remap: dict[int, int] = {}
    for tid, value in f.tags.items():  # ascending ids
        norm = rules.normalize(value)
        if norm is None:
            continue
        remap[tid] = canonical.setdefault(norm, tid)
    tags = {tid: norm for norm, tid in canonical.items()}

    assignments = [
        Assignment(a.user, remap[a.tag], a.resource, a.timestamp)
        for a in f.assignments
        if a.tag in remap
    ]
    return Folksonomy.from_assignments(assignments, tags)


def _n_train(n: int, fraction: float) -> int:
    # rounding toward train; the epsilon absorbs float noise in n * fraction
    return min(n, math.ceil(n * fraction - 1e-9))


def split(f: Folksonomy, spec: SplitSpec = SplitSpec()) -> tuple[Folksonomy, Folksonomy]:
    """Seeded assignment-level split into (train, test).

    With per-user stratification every user's assignments are shuffled and
    cut independently, so a user with a single assignment stays in train.
    """
    if not f.assignments:
        raise ValueError("cannot split an empty folksonomy")
    rng = np.random.default_rng(spec.seed & 0xFFFFFFFFFFFFFFFF)
    train, test = [], []

    if spec.per_user_stratified:
        by_user: dict[int, list[Assignment]] = defaultdict(list)
        for a in f.assignments:
            by_user[a.user].append(a)
        for user in sorted(by_user):
            rows = by_user[user]
            order = rng.permutation(len(rows))
            cut = _n_train(len(rows), spec.train_fraction)
            train.extend(rows[i] for i in order[:cut])
            test.extend(rows[i] for i in order[cut:])
    else:
        rows = f.assignments
        order = rng.permutation(len(rows))
        cut = _n_train(len(rows), spec.train_fraction)
        train = [rows[i] for i in order[:cut]]
        test = [rows[i] for i in order[cut:]]

    return (
        Folksonomy.from_assignments(train, f.tags),
        Folksonomy.from_assignments(test, f.tags),
    )
