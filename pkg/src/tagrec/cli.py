"""Staged command-line pipeline with content-hash keyed artifact caching.

Stages: ingest -> graph -> communities -> recommend -> evaluate. Each stage
writes its artifact under ``<work_dir>/cache`` keyed by a hash of its
inputs and parameters, so changing tau rebuilds the graph and everything
downstream while leaving the ingest cache alone.

Exit codes: 0 success, 2 ingest error, 3 comparison/contract error,
4 pipeline stage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .community import ContractError, load_partition, louvain, save_partition
from .evaluation import (
    DEFAULT_K,
    VARIANTS,
    ComparisonError,
    StageError,
    ablation_violations,
    compare,
    held_out_resources,
    load_report,
    recommend_users,
    report_to_json,
    report_to_tsv,
    score_recommendations,
)
from .folksonomy import Assignment, Folksonomy, build_index
from .graph import build_graph, graph_hash, load_graph, save_graph
from .ingest import (
    ASSIGNMENT_FILE,
    BOOKMARK_FILE,
    TAG_FILE,
    CleaningRules,
    IngestError,
    SplitSpec,
    clean,
    parse_hetrec,
    split,
)
from .recommender import (
    Recommender,
    build_membership_table,
    prune,
    read_recommendations,
    write_recommendations,
)
from .similarity import DAY_MS, SimParams

log = logging.getLogger("tagrec")

EXIT_INGEST, EXIT_COMPARE, EXIT_STAGE = 2, 3, 4


@dataclass
class PipelineConfig:
    data_dir: Path = Path("data")
    work_dir: Path = Path("work")
    sim: SimParams = field(default_factory=SimParams)
    prune_threshold: float = 0.1
    split: SplitSpec = field(default_factory=SplitSpec)
    cleaning: CleaningRules = field(default_factory=CleaningRules)
    louvain_seed: int = 0
    k_values: tuple[int, ...] = DEFAULT_K
    variant: str = "CDR_TIME"
    threads: int = 1
    swap_denominators: bool = False

    def as_meta(self) -> dict:
        """Every tunable, for embedding in artifacts. Paths and the thread
        count are excluded: they never change results."""
        sim = VARIANTS[self.variant].apply(self.sim) if self.variant in VARIANTS else self.sim
        return {
            "sim": asdict(sim),
            "prune_threshold": self.prune_threshold,
            "split": asdict(self.split),
            "cleaning": asdict(self.cleaning),
            "louvain_seed": self.louvain_seed,
            "k_values": list(self.k_values),
            "variant": self.variant,
            "swap_denominators": self.swap_denominators,
            "lexical_gate": "sim_lev admitted for co-occurring pairs only when >= alpha_co",
            "time_off": "co-occurring weight = similarity (lambda -> 1)",
        }

    def config_hash(self) -> str:
        return _hash(json.dumps(self.as_meta(), sort_keys=True))


def _hash(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def _file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, writer) -> None:
    """Run ``writer(tmp_path)`` and move the result into place, so a failed
    stage never leaves a partial artifact behind."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    os.close(fd)
    try:
        writer(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# ---------------------------------------------------------------- folksonomy cache

def _write_folksonomy(f: Folksonomy, path: Path) -> None:
    lines = [f"# tags={len(f.tags)}"]
    lines += [f"T\t{t}\t{s}" for t, s in f.tags.items()]
    lines += [f"A\t{a.user}\t{a.tag}\t{a.resource}\t{a.timestamp}" for a in f.assignments]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_folksonomy(path: Path) -> Folksonomy:
    tags, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "T":
                tags[int(parts[1])] = parts[2]
            elif parts[0] == "A":
                rows.append(Assignment(*map(int, parts[1:5])))
    return Folksonomy.from_assignments(rows, tags)


# ---------------------------------------------------------------- stages

class Pipeline:
    def __init__(self, config: PipelineConfig, out=None):
        self.config = config
        self.cache = Path(config.work_dir) / "cache"
        self.out = out

    def _say(self, msg: str) -> None:
        print(msg, file=self.out or sys.stdout)

    def _raw_hash(self) -> str:
        d = Path(self.config.data_dir)
        if not d.is_dir():
            raise IngestError(f"data directory not found: {d}")
        parts = []
        for name in (TAG_FILE, ASSIGNMENT_FILE, BOOKMARK_FILE):
            p = d / name
            if p.is_file():
                parts.append(f"{name}:{_file_hash(p)}")
            elif name != BOOKMARK_FILE:
                raise IngestError(f"missing file: {p}")
        return _hash(*parts)

    def ingest(self) -> tuple[Folksonomy, Folksonomy, dict]:
        cfg = self.config
        key = _hash(self._raw_hash(), json.dumps(
            {"cleaning": asdict(cfg.cleaning), "split": asdict(cfg.split)}, sort_keys=True))
        stem = self.cache / f"ingest-{key[:16]}"
        meta_path = stem.with_suffix(".json")
        train_path, test_path = stem.with_suffix(".train.tsv"), stem.with_suffix(".test.tsv")
        if meta_path.is_file() and train_path.is_file() and test_path.is_file():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            self._say(f"ingest: cache hit {meta_path.name}")
            train, test = _read_folksonomy(train_path), _read_folksonomy(test_path)
        else:
            malformed: dict = {}
            try:
                raw = parse_hetrec(cfg.data_dir, malformed)
            except OSError as exc:
                raise IngestError(str(exc)) from exc
            cleaned = clean(raw, cfg.cleaning)
            train, test = split(cleaned, cfg.split)
            meta = {
                "key": key,
                "raw": {"tags": raw.n_tags, "resources": raw.n_resources,
                        "users": raw.n_users, "assignments": len(raw.assignments)},
                "cleaned": {"tags": cleaned.n_tags, "resources": cleaned.n_resources,
                            "users": cleaned.n_users, "assignments": len(cleaned.assignments)},
                "train_assignments": len(train.assignments),
                "test_assignments": len(test.assignments),
                "malformed_rows": malformed,
                "train_hash": train.content_hash(),
                "test_hash": test.content_hash(),
                "cleaning": asdict(cfg.cleaning),
                "split": asdict(cfg.split),
            }
            _atomic_write(train_path, lambda p: _write_folksonomy(train, p))
            _atomic_write(test_path, lambda p: _write_folksonomy(test, p))
            _atomic_write(meta_path, lambda p: p.write_text(
                json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"))
        raw, cl = meta["raw"], meta["cleaned"]
        self._say(
            f"raw: {raw['assignments']} rows, {raw['tags']} tags, {raw['resources']} resources, "
            f"{raw['users']} users; cleaned: {cl['tags']} tags, {cl['resources']} resources, "
            f"{cl['users']} users; train/test assignments: "
            f"{meta['train_assignments']}/{meta['test_assignments']}"
        )
        return train, test, meta

    def params(self) -> SimParams:
        return VARIANTS[self.config.variant].apply(self.config.sim)

    def graph(self):
        train, test, meta = self.ingest()
        train_idx = build_index(train)
        params = self.params()
        key = _hash(meta["train_hash"], json.dumps(asdict(params), sort_keys=True))
        path = self.cache / f"graph-{key[:16]}.tsv"
        if path.is_file():
            self._say(f"graph: cache hit {path.name}")
            g = load_graph(path, train_idx.tag_ids)
        else:
            g = _run_stage("graph", build_graph, train_idx, params)
            _atomic_write(path, lambda p: save_graph(g, p, params, meta["train_hash"]))
        self._say(f"graph: {g.n_nodes} nodes, {g.n_edges} edges")
        return train, test, meta, train_idx, g

    def communities(self):
        train, test, meta, train_idx, g = self.graph()
        gh = graph_hash(g)
        seed = self.config.louvain_seed
        key = _hash(gh, str(seed))
        path = self.cache / f"partition-{key[:16]}.tsv"
        if path.is_file():
            self._say(f"communities: cache hit {path.name}")
            part = load_partition(path)
        else:
            part = _run_stage("communities", louvain, g, seed)
            _atomic_write(path, lambda p: save_partition(part, p, seed, gh))
        self._say(f"communities: {part.n_communities}, modularity {part.modularity:.6f}")
        return train, test, meta, train_idx, g, part, key

    def recommend(self):
        train, test, meta, train_idx, g, part, part_key = self.communities()
        cfg = self.config
        test_idx = build_index(test)
        held_out = held_out_resources(train_idx, test_idx)
        k_max = max(cfg.k_values)
        key = _hash(part_key, meta["test_hash"], repr(cfg.prune_threshold), str(k_max))
        path = self.cache / f"recs-{key[:16]}.jsonl"
        if path.is_file():
            self._say(f"recommend: cache hit {path.name}")
            lists = read_recommendations(path)
        else:
            def run():
                table = prune(build_membership_table(part, train_idx), cfg.prune_threshold)
                rec = Recommender(part, table, train_idx)
                users = [u for u, s in held_out.items() if s]
                return list(recommend_users(rec, users, k_max, cfg.threads).values())
            lists = _run_stage("recommend", run)
            _atomic_write(path, lambda p: write_recommendations(lists, p))
        self._say(f"recommend: {len(lists)} users")
        return meta, g, part, held_out, lists, path

    def evaluate(self):
        cfg = self.config
        meta, g, part, held_out, lists, recs_path = self.recommend()
        run_meta = {
            "config": cfg.as_meta(),
            "config_hash": cfg.config_hash(),
            "dataset_hash": meta["train_hash"] + ":" + meta["test_hash"],
            "split_seed": cfg.split.seed,
            "louvain_seed": cfg.louvain_seed,
            "graph_hash": graph_hash(g),
            "n_nodes": g.n_nodes,
            "n_edges": g.n_edges,
            "n_communities": part.n_communities,
            "modularity": part.modularity,
            "recommendations_hash": _file_hash(recs_path),
        }
        report = _run_stage(
            "evaluate", score_recommendations, cfg.variant,
            {rl.user: rl.resources for rl in lists}, held_out,
            cfg.k_values, cfg.swap_denominators, run_meta,
        )
        stem = Path(cfg.work_dir) / f"report_{cfg.variant}"
        _atomic_write(stem.with_suffix(".tsv"), lambda p: p.write_text(report_to_tsv(report), encoding="utf-8"))
        _atomic_write(stem.with_suffix(".json"), lambda p: p.write_text(
            report_to_json(report, include_per_user=True), encoding="utf-8"))
        self._say(report_to_tsv(report).rstrip())
        return report


def _run_stage(name, fn, *args):
    try:
        return fn(*args)
    except (StageError, IngestError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def write_comparison(reports, out_stem: Path, out=None):
    cmp = compare(reports)
    text = cmp.to_text()
    violations = ablation_violations(reports)
    if violations:
        text += "".join(f"ORDERING VIOLATION (investigate): {v}\n" for v in violations)
    elif {r.variant for r in reports} >= {"SEM_CDR", "LEXSEM_CDR"}:
        text += "ordering CDR_TIME >= LEXSEM_CDR >= SEM_CDR on P@5/R@5 holds\n"
    _atomic_write(out_stem.with_suffix(".txt"), lambda p: p.write_text(text, encoding="utf-8"))
    _atomic_write(out_stem.with_suffix(".tsv"), lambda p: p.write_text(cmp.to_tsv(), encoding="utf-8"))
    print(text, end="", file=out or sys.stdout)
    return cmp, violations


# ---------------------------------------------------------------- argument handling

def _read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


_DEFAULTS = {
    "data_dir": "data", "work_dir": "work", "tau_ms": str(30 * DAY_MS), "lambda": "0.5",
    "alpha_co": "0.7", "alpha_nonco": "0.8", "prune_threshold": "0.1", "split_seed": "0",
    "train_fraction": "0.8", "no_stratify": "false", "max_tag_len": "64",
    "louvain_seed": "0", "variant": "CDR_TIME", "k": "5,10,15,20", "threads": "1",
    "swap_denominators": "false",
}


def _truthy(v) -> bool:
    return str(v).lower() in ("1", "true", "yes", "on")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    values = dict(_DEFAULTS)
    if args.config:
        values.update(_read_config_file(args.config))
    for key in _DEFAULTS:
        v = getattr(args, key.replace("lambda", "lam"), None)
        if v is not None and v is not False:
            values[key] = str(v)
    return PipelineConfig(
        data_dir=Path(values["data_dir"]),
        work_dir=Path(values["work_dir"]),
        sim=SimParams(
            tau=int(values["tau_ms"]), lam=float(values["lambda"]),
            alpha_co=float(values["alpha_co"]), alpha_nonco=float(values["alpha_nonco"]),
        ),
        prune_threshold=float(values["prune_threshold"]),
        split=SplitSpec(
            train_fraction=float(values["train_fraction"]), seed=int(values["split_seed"]),
            per_user_stratified=not _truthy(values["no_stratify"]),
        ),
        cleaning=CleaningRules(max_tag_length=int(values["max_tag_len"])),
        louvain_seed=int(values["louvain_seed"]),
        k_values=tuple(sorted(int(k) for k in str(values["k"]).split(","))),
        variant=values["variant"],
        threads=int(values["threads"]),
        swap_denominators=_truthy(values["swap_denominators"]),
    )


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--data-dir")
    common.add_argument("--work-dir")
    common.add_argument("--tau-ms", type=int)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--alpha-co", type=float)
    common.add_argument("--alpha-nonco", type=float)
    common.add_argument("--prune-threshold", type=float)
    common.add_argument("--split-seed", type=int)
    common.add_argument("--train-fraction", type=float)
    common.add_argument("--no-stratify", action="store_true")
    common.add_argument("--max-tag-len", type=int)
    common.add_argument("--louvain-seed", type=int)
    common.add_argument("--variant", choices=[*VARIANTS, "ALL"])
    common.add_argument("--k", help="comma-separated cut-offs, e.g. 5,10,15,20")
    common.add_argument("--threads", type=int)
    common.add_argument("--paper-literal-eq17", dest="swap_denominators", action="store_true",
                        help="score P and R with the alternative (swapped) denominators")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tagrec", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "graph", "communities", "recommend", "evaluate", "pipeline"):
        sub.add_parser(name, parents=[common])
    cmp = sub.add_parser("compare", parents=[common])
    cmp.add_argument("reports", nargs="+", help="report JSON files")
    cmp.add_argument("--out", help="output stem (default <work-dir>/comparison)")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        config = build_config(args)
    except ValueError as exc:
        parser.error(str(exc))

    if args.command == "compare":
        if len(args.reports) < 2:
            parser.error("compare needs at least two report files")
        reports = []
        for p in args.reports:
            try:
                reports.append(load_report(p))
            except (OSError, ValueError, KeyError, TypeError) as exc:
                print(f"error: cannot read report {p}: {exc}", file=sys.stderr)
                return EXIT_COMPARE
        out = Path(args.out) if args.out else Path(config.work_dir) / "comparison"
        try:
            write_comparison(reports, out)
        except ComparisonError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_COMPARE
        return 0

    variants = list(VARIANTS) if config.variant == "ALL" else [config.variant]
    if config.variant == "ALL" and args.command not in ("evaluate", "pipeline"):
        parser.error("--variant ALL is only valid for evaluate/pipeline")
    try:
        reports = []
        for v in variants:
            pipe = Pipeline(replace(config, variant=v))
            step = {
                "ingest": pipe.ingest, "graph": pipe.graph, "communities": pipe.communities,
                "recommend": pipe.recommend, "evaluate": pipe.evaluate, "pipeline": pipe.evaluate,
            }[args.command]
            result = step()
            if args.command in ("evaluate", "pipeline"):
                reports.append(result)
        if len(reports) > 1:
            write_comparison(reports, Path(config.work_dir) / "comparison")
    except IngestError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (ComparisonError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPARE
    except StageError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
