"""Command-line entry points for the pipeline and the experiment suites.

Exit codes: 0 success, 1 configuration error, 2 completed with per-query
failures, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .alignment import AlignmentError
from .distances import available_metrics
from .diversify import DiversifyError, DiversifyParams
from .embedding import EmbeddingError, EmbeddingMatrix, write_embeddings_jsonl
from .harness import (
    ABLATE_COLUMNS,
    ALIGN_EVAL_COLUMNS,
    CASE_COLUMNS,
    KNOWN_ALGORITHMS,
    SCALE_COLUMNS,
    SWEEP_COLUMNS,
    ConfigError,
    RunConfig,
    _write_csv,
    _write_json,
    ablate_pruning,
    build_alignment_artifacts,
    build_query_artifacts,
    case_study,
    evaluate_alignment,
    instances_from_manifest,
    run_pipeline,
    scale_runtime,
    sweep_p,
    _write_unioned_sample,
)
from .serialization import SerializationError, write_serialized_file
from .synth import mixture_instance
from .tables import TableError, load_manifest
from .alignment import write_alignment_json

CONFIG_ERRORS = (
    ConfigError,
    TableError,
    AlignmentError,
    DiversifyError,
    EmbeddingError,
    SerializationError,
    ValueError,
    FileNotFoundError,
)


def _add_common(parser: argparse.ArgumentParser, manifest_required: bool = True) -> None:
    parser.add_argument("--manifest", type=Path, required=manifest_required, help="benchmark manifest JSON")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--provider", default="builtin", help="builtin or import:<jsonl path>")
    parser.add_argument("--mode", default="column", choices=["cell", "column"], help="column embedding mode")
    parser.add_argument("--distance", default="cosine", choices=available_metrics())
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--s", type=int, default=None, help="prune budget (omit for no pruning)")
    parser.add_argument("--p", type=int, default=2, help="candidate multiplier")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.5, help="relevance/diversity trade-off")
    parser.add_argument(
        "--algorithm",
        default="dust",
        help=f"comma-separated algorithm list from {KNOWN_ALGORITHMS}",
    )
    parser.add_argument("--gne-iterations", type=int, default=10)
    parser.add_argument("--gne-alpha", type=int, default=3)
    parser.add_argument("--search-top", type=int, default=10, help="candidates kept by the naive table search")
    parser.add_argument("--delimiter", default=",", help="input CSV delimiter")


def _config(args: argparse.Namespace, manifest: Path | None = None) -> RunConfig:
    return RunConfig(
        manifest=manifest if manifest is not None else args.manifest,
        out_dir=args.out,
        params=DiversifyParams(k=args.k, s=args.s, p=args.p, seed=args.seed),
        algorithms=tuple(a.strip() for a in args.algorithm.split(",") if a.strip()),
        provider=args.provider,
        mode=args.mode,
        metric=args.distance,
        lam=args.lam,
        gne_iterations=args.gne_iterations,
        gne_alpha=args.gne_alpha,
        seed=args.seed,
        search_top=args.search_top,
        delimiter=args.delimiter,
    )


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_align(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(cfg.manifest)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for query_path in manifest.query_tables:
        try:
            art = build_alignment_artifacts(query_path, manifest, cfg)
            write_alignment_json(art.amap, cfg.out_dir / f"{art.query.name}.alignment.json")
            print(f"{art.query.name}: {len(art.amap.clusters)} anchors, {len(art.amap.discarded)} discarded")
        except CONFIG_ERRORS as exc:
            failures += 1
            print(f"{query_path.stem}: FAILED: {exc}", file=sys.stderr)
    return 2 if failures else 0


def cmd_union(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(cfg.manifest)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for query_path in manifest.query_tables:
        try:
            art = build_alignment_artifacts(query_path, manifest, cfg)
            out = cfg.out_dir / f"{art.query.name}.unioned.csv"
            _write_unioned_sample(art.unioned, out, limit=len(art.unioned.tuples))
            print(f"{art.query.name}: {len(art.unioned.tuples)} unionable tuples -> {out}")
        except CONFIG_ERRORS as exc:
            failures += 1
            print(f"{query_path.stem}: FAILED: {exc}", file=sys.stderr)
    return 2 if failures else 0


def cmd_embed(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(cfg.manifest)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for query_path in manifest.query_tables:
        try:
            art = build_query_artifacts(query_path, manifest, cfg)
            qdir = cfg.out_dir / art.query.name
            qdir.mkdir(parents=True, exist_ok=True)
            write_serialized_file(
                [*art.q_serialized, *art.t_serialized],
                qdir / "serialized.txt",
                qdir / "serialized.index.json",
            )
            write_embeddings_jsonl(art.e_q, qdir / "query_embeddings.jsonl")
            write_embeddings_jsonl(art.e_t, qdir / "tuple_embeddings.jsonl")
            merged = EmbeddingMatrix(
                ids=[*art.e_q.ids, *art.e_t.ids],
                vectors=np.vstack([art.e_q.vectors, art.e_t.vectors]),
                provider_tag=art.e_t.provider_tag,
            )
            write_embeddings_jsonl(merged, qdir / "embeddings.jsonl")
            print(f"{art.query.name}: {len(art.e_q)} query + {len(art.e_t)} lake tuples embedded")
        except CONFIG_ERRORS as exc:
            failures += 1
            print(f"{query_path.stem}: FAILED: {exc}", file=sys.stderr)
    return 2 if failures else 0


def cmd_diversify(args) -> int:
    cfg = _config(args)
    report = run_pipeline(cfg)
    for entry in report.queries:
        algs = ", ".join(sorted(entry["algorithms"]))
        print(f"{entry['query']}: {entry['n_tuples']} tuples, ran [{algs}]")
    for err in report.errors:
        print(f"{err['query']}: FAILED: {err['error']}", file=sys.stderr)
    return 2 if report.errors else 0


cmd_bench = cmd_diversify


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    rows = evaluate_alignment(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, ALIGN_EVAL_COLUMNS, cfg.out_dir / "alignment_eval.csv")
    mean_f1 = sum(r["f1"] for r in rows) / len(rows) if rows else 0.0
    for r in rows:
        print(f"{r['query']}: P={r['precision']:.3f} R={r['recall']:.3f} F1={r['f1']:.3f}")
    print(f"mean F1 = {mean_f1:.3f}")
    return 0


def _synthetic_instances(args) -> list:
    return [
        mixture_instance(
            n_query=args.synth_query_rows,
            n_tuples=args.synth_tuples,
            dim=args.synth_dim,
            n_modes=args.synth_modes,
            duplicate_fraction=args.synth_dup,
            seed=args.seed + i,
            name=f"synth{i}",
        )
        for i in range(args.synth_queries)
    ]


def _add_synth(parser) -> None:
    parser.add_argument("--synth-queries", type=int, default=10, help="synthetic query count (no manifest)")
    parser.add_argument("--synth-tuples", type=int, default=600)
    parser.add_argument("--synth-dim", type=int, default=16)
    parser.add_argument("--synth-modes", type=int, default=40)
    parser.add_argument("--synth-dup", type=float, default=0.6)
    parser.add_argument("--synth-query-rows", type=int, default=5)


def _instances(args, cfg) -> list:
    if args.manifest is not None:
        instances, errors = instances_from_manifest(cfg)
        for err in errors:
            print(f"{err['query']}: FAILED: {err['error']}", file=sys.stderr)
        return instances
    return _synthetic_instances(args)


def cmd_sweep_p(args) -> int:
    cfg = _config(args)
    instances = _instances(args, cfg)
    rows = sweep_p(instances, k=args.k, s=args.s, p_values=_int_list(args.p_values), metric=args.distance)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, SWEEP_COLUMNS, cfg.out_dir / "p_sweep.csv")
    for r in rows:
        print(f"p={r['p']}: mean_average={r['mean_average']:.4f} mean_min={r['mean_min']:.4f}")
    return 0


def cmd_ablate_prune(args) -> int:
    cfg = _config(args)
    instances = _instances(args, cfg)
    s_values = [None if s.strip() in ("inf", "none") else int(s) for s in args.s_values.split(",")]
    rows = ablate_pruning(instances, k=args.k, p=args.p, s_values=s_values, metric=args.distance)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, ABLATE_COLUMNS, cfg.out_dir / "prune_ablation.csv")
    for r in rows:
        print(f"s={r['s']}: {r['seconds']:.3f}s mean_average={r['mean_average']:.4f}")
    return 0


def cmd_scale(args) -> int:
    cfg = _config(args)
    rows, exponents = scale_runtime(
        vary=args.vary,
        sizes=_int_list(args.sizes),
        k=args.k,
        s_budget=args.s if args.s is not None else 2500,
        p=args.p,
        algorithms=tuple(a.strip() for a in args.algorithm.split(",")),
        lam=args.lam,
        seed=args.seed,
        repeats=args.repeats,
        metric=args.distance,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, SCALE_COLUMNS, cfg.out_dir / f"scale_{args.vary}.csv")
    _write_json({"vary": args.vary, "exponents": exponents}, cfg.out_dir / f"scale_{args.vary}_fit.json")
    for algo, exp in exponents.items():
        print(f"{algo}: fitted exponent {'n/a' if exp is None else f'{exp:.2f}'}")
    return 0


def cmd_case_study(args) -> int:
    cfg = _config(args)
    rows = case_study(
        cfg,
        columns=[c.strip() for c in args.columns.split(",")],
        ks=_int_list(args.ks),
        methods=tuple(a.strip() for a in args.algorithm.split(",")),
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, CASE_COLUMNS, cfg.out_dir / "case_study.csv")
    print(f"wrote {len(rows)} rows to {cfg.out_dir / 'case_study.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lakediv",
        description="Diverse unionable tuple search: pipeline and experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="column alignment per query")
    _add_common(p_align)
    p_align.set_defaults(fn=cmd_align)

    p_union = sub.add_parser("union", help="alignment + outer union per query")
    _add_common(p_union)
    p_union.set_defaults(fn=cmd_union)

    p_embed = sub.add_parser("embed", help="export serialized tuples and embeddings")
    _add_common(p_embed)
    p_embed.set_defaults(fn=cmd_embed)

    p_div = sub.add_parser("diversify", help="full pipeline: select k diverse tuples per query")
    _add_common(p_div)
    p_div.set_defaults(fn=cmd_diversify)

    p_eval = sub.add_parser("evaluate", help="alignment P/R/F1 against manifest ground truth")
    _add_common(p_eval)
    p_eval.set_defaults(fn=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="pipeline + winner tally across algorithms")
    _add_common(p_bench)
    p_bench.set_defaults(fn=cmd_bench)

    p_sweep = sub.add_parser("sweep-p", help="diversity vs candidate multiplier p")
    _add_common(p_sweep, manifest_required=False)
    _add_synth(p_sweep)
    p_sweep.add_argument("--p-values", default="1,2,3,4")
    p_sweep.set_defaults(fn=cmd_sweep_p)

    p_ablate = sub.add_parser("ablate-prune", help="runtime/score vs prune budget")
    _add_common(p_ablate, manifest_required=False)
    _add_synth(p_ablate)
    p_ablate.add_argument("--s-values", default="inf,2500", help="comma list; 'inf' disables pruning")
    p_ablate.set_defaults(fn=cmd_ablate_prune)

    p_scale = sub.add_parser("scale", help="runtime curves vs pool size or k")
    _add_common(p_scale, manifest_required=False)
    p_scale.set_defaults(algorithm="dust,gmc")
    p_scale.add_argument("--vary", choices=["s", "k"], default="s")
    p_scale.add_argument("--sizes", default="1000,2500,5000,7500,10000")
    p_scale.add_argument("--repeats", type=int, default=3)
    p_scale.set_defaults(fn=cmd_scale)

    p_case = sub.add_parser("case-study", help="novel values added per column vs k")
    _add_common(p_case)
    p_case.add_argument("--columns", required=True, help="comma list of query column headers")
    p_case.add_argument("--ks", default="5,10,20")
    p_case.set_defaults(fn=cmd_case_study)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
