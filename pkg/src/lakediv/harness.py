"""End-to-end pipeline and experiment suites over benchmark manifests.

The pipeline runs per query: candidate tables (from the manifest, or the naive
built-in table scorer) -> column alignment -> outer union -> serialization ->
embedding -> diversification -> diversity metrics. A failing query is recorded
and the run continues. All outputs are reproducible given (config, seed);
wall-time fields are the only nondeterministic values in reports.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .alignment import (
    AlignmentMap,
    BuiltinColumnProvider,
    ImportedColumnProvider,
    UnionedTupleSet,
    align_columns,
    alignment_prf,
    outer_union,
    rank_candidate_tables,
    truth_pairs,
    write_alignment_json,
)
from .diversify import (
    DiverseResult,
    DiversifyParams,
    brute_force_best,
    clt,
    diversify_dust,
    gmc,
    gne,
    prune_tuples,
    random_select,
    top_similar,
    write_result_json,
)
from .embedding import (
    BuiltinTupleProvider,
    EmbeddingMatrix,
    ImportedTupleProvider,
    embed_tuples,
    write_embeddings_jsonl,
)
from .metrics import DiversityScore, novel_values, winner_tally
from .serialization import serialize_tuple, write_serialized_file
from .synth import MixtureInstance, mixture_instance
from .tables import (
    BenchmarkManifest,
    Table,
    TupleRef,
    drop_null_columns,
    load_manifest,
    load_table,
    validate_query,
)

BENCH_SUMMARY_COLUMNS = ["method", "average_wins", "min_wins", "mean_time_s"]
SCALE_COLUMNS = ["algorithm", "vary", "size", "seconds"]
SWEEP_COLUMNS = ["p", "mean_average", "mean_min", "pct_change_average", "pct_change_min"]
ABLATE_COLUMNS = ["s", "seconds", "mean_average", "mean_min"]
CASE_COLUMNS = ["method", "k", "column", "novel_values"]
ALIGN_EVAL_COLUMNS = ["query", "precision", "recall", "f1"]

KNOWN_ALGORITHMS = ("dust", "gmc", "gne", "clt", "random", "topsim", "brute-max-sum", "brute-max-min")

RANDOM_BASELINE_SEEDS = 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Pipeline configuration; paths are resolved before running."""

    manifest: Path
    out_dir: Path
    params: DiversifyParams
    algorithms: tuple[str, ...] = ("dust",)
    provider: str = "builtin"
    mode: str = "column"
    metric: str = "cosine"
    lam: float = 0.5
    gne_iterations: int = 10
    gne_alpha: int = 3
    seed: int = 0
    search_top: int = 10
    delimiter: str = ","

    def __post_init__(self) -> None:
        unknown = [a for a in self.algorithms if a not in KNOWN_ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {KNOWN_ALGORITHMS}")
        if self.mode not in ("cell", "column"):
            raise ConfigError(f"mode must be cell or column, got {self.mode!r}")
        if not (self.provider == "builtin" or self.provider.startswith("import:")):
            raise ConfigError(f"provider must be 'builtin' or 'import:<path>', got {self.provider!r}")


def column_provider_from_config(cfg: RunConfig):
    if cfg.provider == "builtin":
        return BuiltinColumnProvider()
    path = Path(cfg.provider.split(":", 1)[1])
    # an import path may hold tuple embeddings ({"table","row",...}); column
    # alignment then falls back to the built-in column embedder
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            first = json.loads(line)
            break
        else:
            first = {}
    if "index" in first:
        return ImportedColumnProvider(path)
    return BuiltinColumnProvider()


def tuple_provider_from_config(cfg: RunConfig):
    if cfg.provider == "builtin":
        return BuiltinTupleProvider()
    return ImportedTupleProvider(cfg.provider.split(":", 1)[1])


@dataclass
class AlignArtifacts:
    """Alignment-stage outputs for one query."""

    query: Table
    candidates: list[str]
    amap: AlignmentMap
    unioned: UnionedTupleSet


@dataclass
class QueryArtifacts(AlignArtifacts):
    """Everything the pipeline derived for one query."""

    e_q: EmbeddingMatrix = None
    e_t: EmbeddingMatrix = None
    q_serialized: list = field(default_factory=list)
    t_serialized: list = field(default_factory=list)
    skipped_tuples: list[TupleRef] = field(default_factory=list)


def build_alignment_artifacts(
    query_path: Path, manifest: BenchmarkManifest, cfg: RunConfig
) -> AlignArtifacts:
    """Candidate selection, column alignment, and outer union for one query."""
    query = drop_null_columns(load_table(query_path, role="query", delimiter=cfg.delimiter))
    rejection = validate_query(query)
    if rejection is not None:
        raise ConfigError(f"{query.name}: {rejection.reason} (has {rejection.n_rows})")
    lake_paths = manifest.lake_by_name()
    col_provider = column_provider_from_config(cfg)
    names = manifest.candidates.get(query.name)
    if names is None:
        all_lake = [
            drop_null_columns(load_table(p, delimiter=cfg.delimiter)) for p in manifest.lake_tables
        ]
        ranked = rank_candidate_tables(query, all_lake, col_provider, mode=cfg.mode)
        names = [name for name, _ in ranked[: cfg.search_top]]
    missing = [n for n in names if n not in lake_paths]
    if missing:
        raise ConfigError(f"{query.name}: candidate tables not in manifest: {missing}")
    lake = [drop_null_columns(load_table(lake_paths[n], delimiter=cfg.delimiter)) for n in names]
    amap = align_columns(query, lake, column_provider_from_config(cfg), mode=cfg.mode)
    unioned = outer_union(query, lake, amap)
    return AlignArtifacts(query=query, candidates=names, amap=amap, unioned=unioned)


def build_query_artifacts(
    query_path: Path, manifest: BenchmarkManifest, cfg: RunConfig
) -> QueryArtifacts:
    """Alignment plus serialization and embedding for one query table.

    Unioned tuples whose every cell is null cannot be embedded and add no
    information; they are skipped and recorded in ``skipped_tuples``.
    """
    base = build_alignment_artifacts(query_path, manifest, cfg)
    headers = base.unioned.headers
    q_serialized = [
        serialize_tuple(row, base.query.headers, TupleRef(base.query.name, i))
        for i, row in enumerate(base.query.rows)
    ]
    t_serialized = [serialize_tuple(t.cells, headers, t.source) for t in base.unioned.tuples]
    skipped = [st.source for st in t_serialized if st.all_null]
    t_serialized = [st for st in t_serialized if not st.all_null]
    provider = tuple_provider_from_config(cfg)
    e_q = embed_tuples(q_serialized, list(base.query.headers), provider)
    e_t = embed_tuples(t_serialized, headers, provider)
    return QueryArtifacts(
        query=base.query,
        candidates=base.candidates,
        amap=base.amap,
        unioned=base.unioned,
        e_q=e_q,
        e_t=e_t,
        q_serialized=q_serialized,
        t_serialized=t_serialized,
        skipped_tuples=skipped,
    )


def instances_from_manifest(cfg: RunConfig) -> tuple[list[MixtureInstance], list[dict]]:
    """Embedding-level instances (one per query) from a benchmark manifest;
    failing queries are recorded, not fatal."""
    manifest = load_manifest(cfg.manifest)
    instances, errors = [], []
    for query_path in manifest.query_tables:
        try:
            art = build_query_artifacts(query_path, manifest, cfg)
            instances.append(MixtureInstance(name=art.query.name, e_q=art.e_q, e_t=art.e_t))
        except Exception as exc:  # noqa: BLE001 - per-query isolation is the contract
            errors.append({"query": query_path.stem, "error": str(exc)})
    return instances, errors


def _timed(fn: Callable[[], DiverseResult]) -> tuple[DiverseResult, float]:
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


def run_algorithm(
    name: str,
    e_q: EmbeddingMatrix,
    pool: EmbeddingMatrix,
    cfg: RunConfig,
) -> tuple[DiverseResult | list[DiverseResult], float]:
    """Run one registered algorithm on an (already pruned) pool; wall time
    covers the diversification call only."""
    params = cfg.params
    if name == "dust":
        return _timed(lambda: diversify_dust(e_q, pool, params, metric=cfg.metric))
    if name == "gmc":
        return _timed(lambda: gmc(e_q, pool, params.k, lam=cfg.lam, metric=cfg.metric))
    if name == "gne":
        return _timed(
            lambda: gne(
                e_q, pool, params.k, lam=cfg.lam, iterations=cfg.gne_iterations,
                alpha=cfg.gne_alpha, seed=cfg.seed, metric=cfg.metric,
            )
        )
    if name == "clt":
        return _timed(lambda: clt(e_q, pool, params.k, metric=cfg.metric))
    if name == "topsim":
        return _timed(lambda: top_similar(e_q, pool, params.k, metric=cfg.metric))
    if name == "random":
        seeds = [cfg.seed + i for i in range(RANDOM_BASELINE_SEEDS)]
        start = time.perf_counter()
        results = random_select(pool, params.k, seeds, e_q=e_q, metric=cfg.metric)
        return results, time.perf_counter() - start
    if name.startswith("brute-"):
        objective = name.split("-", 1)[1]
        return _timed(lambda: brute_force_best(e_q, pool, params.k, objective=objective, metric=cfg.metric))
    raise ConfigError(f"unknown algorithm {name!r}")


def best_random_score(results: Sequence[DiverseResult]) -> DiversityScore:
    """Best-of-seeds composite: the random baseline keeps its best set per metric."""
    best_avg = max(r.metrics.average for r in results)
    best_min = max(r.metrics.min for r in results)
    any_score = results[0].metrics
    return DiversityScore(average=best_avg, min=best_min, n=any_score.n, k=any_score.k)


@dataclass
class BenchReport:
    config: dict
    queries: list[dict]
    errors: list[dict]
    tally: dict | None

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "queries": self.queries,
            "errors": self.errors,
            "winner_tally": self.tally,
        }


def _config_dict(cfg: RunConfig) -> dict:
    return {
        "manifest": str(cfg.manifest),
        "provider": cfg.provider,
        "mode": cfg.mode,
        "metric": cfg.metric,
        "algorithms": list(cfg.algorithms),
        "params": cfg.params.as_dict(),
        "lambda": cfg.lam,
        "seed": cfg.seed,
    }


def run_pipeline(cfg: RunConfig) -> BenchReport:
    """Full benchmark run: artifacts per query under out_dir/<query>/, plus a
    report with per-query scores, per-method winner tally, and recorded errors."""
    manifest = load_manifest(cfg.manifest)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    queries, errors = [], []
    per_query_scores: dict[str, dict[str, DiversityScore]] = {}
    for query_path in manifest.query_tables:
        qname = query_path.stem
        qdir = cfg.out_dir / qname
        try:
            art = build_query_artifacts(query_path, manifest, cfg)
            if len(art.e_t) < cfg.params.k:
                raise ConfigError(
                    f"{qname}: only {len(art.e_t)} unionable tuples for k={cfg.params.k}"
                )
            qdir.mkdir(parents=True, exist_ok=True)
            write_alignment_json(art.amap, qdir / "alignment.json")
            _write_unioned_sample(art.unioned, qdir / "unioned_sample.csv")
            write_serialized_file(
                [*art.q_serialized, *art.t_serialized],
                qdir / "serialized.txt",
                qdir / "serialized.index.json",
            )
            write_embeddings_jsonl(art.e_q, qdir / "query_embeddings.jsonl")
            write_embeddings_jsonl(art.e_t, qdir / "tuple_embeddings.jsonl")
            pool = prune_tuples(art.e_t, cfg.params.s, metric=cfg.metric)
            entry = {"query": qname, "n_tuples": len(art.e_t), "n_pruned": len(pool), "algorithms": {}}
            scores: dict[str, DiversityScore] = {}
            for name in cfg.algorithms:
                result, elapsed = run_algorithm(name, art.e_q, pool, cfg)
                if name == "random":
                    score = best_random_score(result)
                    for i, r in enumerate(result):
                        write_result_json(r, qdir / f"result_random_{i}.json")
                    entry["algorithms"][name] = {
                        "time_s": elapsed,
                        "metrics": score.as_dict(),
                        "seeds": [r.params["seed"] for r in result],
                    }
                else:
                    score = result.metrics
                    write_result_json(result, qdir / f"result_{name}.json")
                    entry["algorithms"][name] = {
                        "time_s": elapsed,
                        "metrics": score.as_dict(),
                        "selected": [s.ref.key() for s in result.selected],
                    }
                scores[name] = score
            per_query_scores[qname] = scores
            queries.append(entry)
        except Exception as exc:  # noqa: BLE001 - per-query isolation is the contract
            errors.append({"query": qname, "error": str(exc)})
    tally = None
    if per_query_scores and len(cfg.algorithms) > 1:
        t = winner_tally(per_query_scores)
        tally = {
            "average_wins": t.average_wins,
            "min_wins": t.min_wins,
            "ties": [[q, m, list(ms)] for q, m, ms in t.ties],
        }
    report = BenchReport(config=_config_dict(cfg), queries=queries, errors=errors, tally=tally)
    _write_json(report.as_dict(), cfg.out_dir / "report.json")
    if tally is not None:
        _write_bench_summary(report, cfg.out_dir / "summary.csv")
    return report


def _write_unioned_sample(unioned: UnionedTupleSet, path: Path, limit: int = 50) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_table", "source_row", *unioned.headers])
        for t in unioned.tuples[:limit]:
            writer.writerow([t.source.table, t.source.row, *["" if c is None else c for c in t.cells]])


def _write_json(doc: dict, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_csv(rows: Sequence[dict], columns: Sequence[str], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_bench_summary(report: BenchReport, path: Path) -> None:
    methods = sorted(report.tally["average_wins"])
    rows = []
    for m in methods:
        times = [q["algorithms"][m]["time_s"] for q in report.queries if m in q["algorithms"]]
        rows.append(
            {
                "method": m,
                "average_wins": report.tally["average_wins"][m],
                "min_wins": report.tally["min_wins"][m],
                "mean_time_s": sum(times) / len(times) if times else "",
            }
        )
    _write_csv(rows, BENCH_SUMMARY_COLUMNS, path)


def evaluate_alignment(cfg: RunConfig) -> list[dict]:
    """Alignment precision/recall/F1 per query against the manifest ground truth."""
    manifest = load_manifest(cfg.manifest)
    if not manifest.alignment_ground_truth:
        raise ConfigError(f"{cfg.manifest}: manifest has no alignment_ground_truth")
    truth = truth_pairs(manifest.alignment_ground_truth)
    rows = []
    for query_path in manifest.query_tables:
        art = build_query_artifacts(query_path, manifest, cfg)
        involved = {art.query.name, *(t for t in art.candidates)}
        case_truth = {p for p in truth if p[0][0] in involved and p[1][0] in involved}
        p, r, f1 = alignment_prf(art.amap, case_truth)
        rows.append({"query": art.query.name, "precision": p, "recall": r, "f1": f1})
    return rows


def sweep_p(
    instances: Sequence[MixtureInstance],
    k: int,
    s: int | None,
    p_values: Sequence[int],
    metric: str = "cosine",
) -> list[dict]:
    """Mean diversity scores per candidate multiplier p, with % change vs the
    previous p."""
    if list(p_values) != sorted(p_values):
        raise ConfigError("p_values must be ascending")
    rows = []
    prev: dict | None = None
    for p in p_values:
        params = DiversifyParams(k=k, s=s, p=p)
        avgs, mins = [], []
        for inst in instances:
            res = diversify_dust(inst.e_q, inst.e_t, params, metric=metric)
            avgs.append(res.metrics.average)
            mins.append(res.metrics.min)
        row = {
            "p": p,
            "mean_average": float(np.mean(avgs)),
            "mean_min": float(np.mean(mins)),
            "pct_change_average": "" if prev is None else _pct(prev["mean_average"], float(np.mean(avgs))),
            "pct_change_min": "" if prev is None else _pct(prev["mean_min"], float(np.mean(mins))),
        }
        rows.append(row)
        prev = row
    return rows


def _pct(old: float, new: float) -> float:
    return 0.0 if old == 0 else 100.0 * (new - old) / old


def ablate_pruning(
    instances: Sequence[MixtureInstance],
    k: int,
    p: int,
    s_values: Sequence[int | None],
    metric: str = "cosine",
    repeats: int = 1,
) -> list[dict]:
    """Wall time and diversity per prune budget; include None for no pruning."""
    rows = []
    for s in s_values:
        params = DiversifyParams(k=k, s=s, p=p)
        times, avgs, mins = [], [], []
        for inst in instances:
            best = None
            for _ in range(max(1, repeats)):
                start = time.perf_counter()
                res = diversify_dust(inst.e_q, inst.e_t, params, metric=metric)
                elapsed = time.perf_counter() - start
                best = elapsed if best is None else min(best, elapsed)
            times.append(best)
            avgs.append(res.metrics.average)
            mins.append(res.metrics.min)
        rows.append(
            {
                "s": "inf" if s is None else s,
                "seconds": float(np.mean(times)),
                "mean_average": float(np.mean(avgs)),
                "mean_min": float(np.mean(mins)),
            }
        )
    return rows


def fit_exponent(sizes: Sequence[float], seconds: Sequence[float]) -> float | None:
    """Log-log slope of runtime vs size; None when fewer than two points."""
    if len(sizes) < 2:
        return None
    slope = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(seconds, float)), 1)[0]
    return float(slope)


def scale_runtime(
    vary: str,
    sizes: Sequence[int],
    k: int = 100,
    s_budget: int = 2500,
    p: int = 2,
    fixed_pool: int = 5000,
    algorithms: Sequence[str] = ("dust", "gmc"),
    dim: int = 32,
    lam: float = 0.5,
    seed: int = 0,
    repeats: int = 3,
    metric: str = "cosine",
) -> tuple[list[dict], dict[str, float | None]]:
    """Runtime curves varying the pool size s (or the output size k).

    The clustering pipeline runs with its own prune budget (s_budget), as in
    normal operation; the greedy baseline consumes the whole pool, which is
    what its cost model is about. Reported seconds are best-of-``repeats``.
    """
    if vary not in ("s", "k"):
        raise ConfigError(f"vary must be 's' or 'k', got {vary!r}")
    rows = []
    for size in sizes:
        n_tuples = size if vary == "s" else fixed_pool
        this_k = k if vary == "s" else size
        inst = mixture_instance(
            n_query=5,
            n_tuples=n_tuples,
            dim=dim,
            n_modes=min(300, max(20, n_tuples // 20)),
            duplicate_fraction=0.3,
            n_tables=8,
            seed=seed,
            name=f"scale{size}",
        )
        for algo in algorithms:
            best = None
            for _ in range(max(1, repeats)):
                start = time.perf_counter()
                if algo == "dust":
                    params = DiversifyParams(k=this_k, s=max(s_budget, this_k * p), p=p)
                    diversify_dust(inst.e_q, inst.e_t, params, metric=metric)
                elif algo == "gmc":
                    gmc(inst.e_q, inst.e_t, this_k, lam=lam, metric=metric)
                elif algo == "clt":
                    clt(inst.e_q, inst.e_t, this_k, metric=metric)
                else:
                    raise ConfigError(f"scale_runtime does not support algorithm {algo!r}")
                elapsed = time.perf_counter() - start
                best = elapsed if best is None else min(best, elapsed)
            rows.append({"algorithm": algo, "vary": vary, "size": size, "seconds": best})
    exponents = {}
    for algo in algorithms:
        pts = [(r["size"], r["seconds"]) for r in rows if r["algorithm"] == algo]
        exponents[algo] = fit_exponent([p_[0] for p_ in pts], [p_[1] for p_ in pts])
    return rows, exponents


def case_study(
    cfg: RunConfig,
    columns: Sequence[str],
    ks: Sequence[int],
    methods: Sequence[str] = ("dust", "topsim"),
) -> list[dict]:
    """Novel-value counts per method, k, and query column over a benchmark of
    unionable-only tables (selection is materialized back to cell values)."""
    manifest = load_manifest(cfg.manifest)
    rows = []
    for query_path in manifest.query_tables:
        art = build_query_artifacts(query_path, manifest, cfg)
        by_key = {t.source.key(): t for t in art.unioned.tuples}
        for k in ks:
            if k < 1:
                for method in methods:
                    for col in columns:
                        rows.append({"method": method, "k": k, "column": col, "novel_values": 0})
                continue
            cfg_k = RunConfig(
                manifest=cfg.manifest,
                out_dir=cfg.out_dir,
                params=DiversifyParams(k=k, s=cfg.params.s, p=cfg.params.p, seed=cfg.params.seed),
                algorithms=cfg.algorithms,
                provider=cfg.provider,
                mode=cfg.mode,
                metric=cfg.metric,
                lam=cfg.lam,
                seed=cfg.seed,
            )
            pool = prune_tuples(art.e_t, cfg_k.params.s, metric=cfg.metric)
            for method in methods:
                result, _ = run_algorithm(method, art.e_q, pool, cfg_k)
                if isinstance(result, list):
                    result = result[0]
                selected = UnionedTupleSet(
                    schema=art.unioned.schema,
                    tuples=[by_key[s.ref.key()] for s in result.selected],
                )
                for col in columns:
                    rows.append(
                        {
                            "method": method,
                            "k": k,
                            "column": col,
                            "novel_values": novel_values(art.query, selected, col),
                        }
                    )
    return rows
