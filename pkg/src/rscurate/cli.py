"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 stage failure. Stage
subcommands mirror the pipeline stages; `run-all` executes them in order from
a config file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import RscurateError, ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_STAGE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _accept_global_flags(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    # The global flags are also accepted after the subcommand; SUPPRESS keeps
    # an absent flag from clobbering the value parsed at the root.
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    parser.add_argument("--config", type=str, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return parser


def build_parser() -> _Parser:
    parser = _Parser(prog="rscurate", description="Remote-sensing image-text corpus curation pipeline.")
    parser.add_argument("--version", action="version", version=f"rscurate {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--config", type=str, default=None, help="pipeline config file (JSON)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = _accept_global_flags(sub.add_parser("keywords", help="filter a manifest by caption keywords"))
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keywords", default=None, help="keyword config path (default: bundled set)")
    p.add_argument("--histogram", default=None, help="write keyword frequency CSV here")
    p.add_argument("--ledger", default=None)

    p = _accept_global_flags(sub.add_parser("fetch", help="download images for kept records"))
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True, help="content-addressed payload store")
    p.add_argument("--manifest", required=True, help="fetch outcome manifest (JSONL)")
    p.add_argument("--records-out", default=None, help="record manifest with dispositions")
    p.add_argument("--concurrency", type=int, default=128)
    p.add_argument("--per-host", type=int, default=4)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--timeout-s", type=float, default=30.0)
    p.add_argument("--backoff-ms", type=int, default=500)
    p.add_argument("--ledger", default=None)

    p = _accept_global_flags(sub.add_parser("dedup", help="remove URL and near-duplicate records"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True, help="embedding archive keyed by record_id")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.96)
    p.add_argument("--out", required=True)
    p.add_argument("--ledger", default=None)

    p = _accept_global_flags(sub.add_parser("score-filter", help="joint (s, c) percentile filter"))
    p.add_argument("--input", required=True)
    p.add_argument("--embeddings", required=True, help="record-keyed archive; probability column supplies c")
    p.add_argument("--templates", default=None, help="prompt template JSON (default: bundled)")
    p.add_argument("--scores-out", required=True, help="scores CSV (record_id,s,c,kept)")
    p.add_argument("--keep-s", type=float, default=0.9)
    p.add_argument("--keep-c", type=float, default=0.8)
    p.add_argument("--out", required=True)
    p.add_argument("--ledger", default=None)

    p = _accept_global_flags(sub.add_parser("caption-select", help="two-stage rank plus rotation-invariant caption choice"))
    p.add_argument("--input", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--mode", choices=("rotation", "rank1", "random"), default="rotation")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=512, help="test embedder dimension")

    p = _accept_global_flags(sub.add_parser("meta-caption", help="render metadata sentences and merge captions"))
    p.add_argument("--input", required=True)
    p.add_argument("--templates", default=None)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--out", required=True)

    p = _accept_global_flags(sub.add_parser("geo-report", help="UTM zone histogram and caption locations"))
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", default=None, help="zone CSV path")
    p.add_argument("--gazetteer", default=None)

    p = _accept_global_flags(sub.add_parser("shard", help="pack records into webdataset tar shards"))
    p.add_argument("--input", required=True)
    p.add_argument("--images", required=True, help="content store directory")
    p.add_argument("--out", required=True)
    p.add_argument("--shard-size", type=int, default=10_000)

    p = _accept_global_flags(sub.add_parser("eval", help="retrieval / zero-shot metrics"))
    esub = p.add_subparsers(dest="eval_command", metavar="TASK")
    pr = _accept_global_flags(esub.add_parser("recall", help="recall@k and mean recall"))
    pr.add_argument("--images", required=True, help="image embedding archive")
    pr.add_argument("--texts", required=True, help="text embedding archive")
    pr.add_argument("--truth", required=True, help="JSON mapping caption id -> image id")
    pr.add_argument("--k", default="1,5,10")
    pr.add_argument("--json-out", default=None)
    pr.add_argument("--csv-out", default=None)
    pz = _accept_global_flags(esub.add_parser("zsc", help="zero-shot top-1 accuracy"))
    pz.add_argument("--images", required=True)
    pz.add_argument("--labels", required=True, help="JSON mapping image key -> class name")
    pz.add_argument("--prompts", default=None, help="prompt templates JSON (default: bundled)")
    pz.add_argument("--json-out", default=None)
    pz.add_argument("--csv-out", default=None)

    p = _accept_global_flags(sub.add_parser("serve-review", help="run the caption review service"))
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data", required=True, help="directory with corpus.jsonl and images")
    p.add_argument("--ui-dir", default=None, help="static UI bundle to mount at /")
    p.add_argument("--host", default="127.0.0.1")

    _accept_global_flags(sub.add_parser("run-all", help="run every stage in order (requires --config)"))
    return parser


def _write_ledger_if(path_arg, ledger):
    if path_arg:
        from .manifest import write_ledger

        write_ledger(path_arg, ledger)


def cmd_keywords(args) -> int:
    from . import keywords as kw
    from .manifest import read_kept, write_manifest
    from .records import RS3_SOURCES

    matcher = kw.compile_keywords(kw.load_keyword_set(args.keywords))
    records = list(read_kept(args.input))
    rows, ledger = kw.filter_records(matcher, records, passthrough_sources=RS3_SOURCES)
    write_manifest(args.out, rows)
    if args.histogram:
        kw.write_histogram_csv(args.histogram, kw.keyword_histogram(matcher, (r.caption for r in records)))
    _write_ledger_if(args.ledger, ledger)
    print(f"keywords: attempted={len(rows)} kept={ledger.total_kept('keywords')}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    from . import fetch as fx
    from .manifest import read_kept, write_manifest

    policy = fx.FetchPolicy(
        global_concurrency=args.concurrency,
        per_host_concurrency=args.per_host,
        retries=args.retries,
        backoff_base_s=args.backoff_ms / 1000.0,
        timeout_s=args.timeout_s,
    )
    store = fx.ContentStore(args.out_dir)
    rows, outcomes, ledger = fx.run_fetch(read_kept(args.input), policy, store)
    fx.write_outcomes(args.manifest, outcomes)
    if args.records_out:
        write_manifest(args.records_out, rows)
    _write_ledger_if(args.ledger, ledger)
    print(f"fetch: attempted={len(rows)} kept={ledger.total_kept('fetch')}")
    return EXIT_OK


def cmd_dedup(args) -> int:
    from . import dedup as dd
    from .embeddings import EmbeddingArchive
    from .manifest import read_kept, write_manifest
    from .pipeline import dedup_stage

    records = list(read_kept(args.manifest))
    archive = EmbeddingArchive(args.embeddings)
    embeddings = {r.record_id: archive.lookup(r.record_id) for r in records if r.record_id in archive}
    policy = dd.DedupPolicy(k=args.k, edge_threshold=args.threshold, seed=args.seed)
    rows, ledger = dedup_stage(records, embeddings, policy)
    write_manifest(args.out, rows)
    _write_ledger_if(args.ledger, ledger)
    print(f"dedup: attempted={len(rows)} kept={ledger.total_kept('dedup')}")
    return EXIT_OK


def cmd_score_filter(args) -> int:
    from . import scoring as sc
    from .embeddings import EmbeddingArchive, HashEmbedder
    from .manifest import read_kept, write_manifest
    from .pipeline import score_stage
    from .records import FilterPolicy, PipelineLedger, RS3_SOURCES

    records = list(read_kept(args.input))
    archive = EmbeddingArchive(args.embeddings)
    embeddings = {r.record_id: archive.lookup(r.record_id) for r in records if r.record_id in archive}
    scored = [r for r in records if r.source not in RS3_SOURCES]
    if archive.has_probabilities:
        probs = {r.record_id: archive.probability(r.record_id) for r in scored}
    else:
        embedder = HashEmbedder(dim=archive.dim)
        probs = dict(
            zip((r.record_id for r in scored), embedder.detector_probability([r.image_ref or r.record_id for r in scored]))
        )
    templates = sc.load_template_set(args.templates)
    centroid = sc.template_centroid(HashEmbedder(dim=archive.dim).embed_text(list(templates.templates), archive.model_id))
    policy = FilterPolicy(keep_fraction_s=args.keep_s, keep_fraction_c=args.keep_c)
    rows, pairs, kept_ids = score_stage(records, embeddings, probs, centroid, policy)
    sc.write_scores_csv(args.scores_out, pairs, kept_ids)
    write_manifest(args.out, rows)
    ledger = PipelineLedger()
    for record, disposition in rows:
        ledger.record(record.source, "score-filter", disposition)
    _write_ledger_if(args.ledger, ledger)
    print(f"score-filter: attempted={len(rows)} kept={ledger.total_kept('score-filter')}")
    return EXIT_OK


def cmd_caption_select(args) -> int:
    from . import captions as cap
    from .embeddings import HashEmbedder
    from .manifest import read_kept, write_manifest
    from .pipeline import caption_stage, load_candidates

    records = list(read_kept(args.input))
    rows = caption_stage(
        records,
        load_candidates(args.candidates),
        HashEmbedder(dim=args.dim),
        "clip-vith14",
        "clip-rn50x64",
        cap.SelectionMode(args.mode),
        args.seed,
    )
    write_manifest(args.out, rows)
    print(f"caption-select: records={len(rows)}")
    return EXIT_OK


def cmd_meta_caption(args) -> int:
    from . import metacaption as mc
    from .manifest import read_kept, write_manifest
    from .pipeline import meta_stage

    records = list(read_kept(args.input))
    rows = meta_stage(records, mc.load_meta_templates(args.templates), mc.Gazetteer.load(args.gazetteer))
    write_manifest(args.out, rows)
    print(f"meta-caption: records={len(rows)}")
    return EXIT_OK


def cmd_geo_report(args) -> int:
    from . import metacaption as mc
    from .manifest import dumps_canonical, read_kept
    from .pipeline import geo_report, write_zone_csv

    report = geo_report(read_kept(args.input), mc.Gazetteer.load(args.gazetteer))
    Path(args.out).write_text(dumps_canonical(report) + "\n", encoding="utf-8")
    if args.csv:
        write_zone_csv(args.csv, report["zone_counts"])
    print(f"geo-report: records={report['records']} zones={len(report['zone_counts'])}")
    return EXIT_OK


def cmd_shard(args) -> int:
    from .fetch import ContentStore
    from .manifest import read_kept
    from .pipeline import shard_stage
    from .shards import ShardSpec

    records = list(read_kept(args.input))
    paths, index = shard_stage(
        records, ContentStore(args.images), Path(args.out), ShardSpec(max_samples_per_shard=args.shard_size)
    )
    print(f"shard: shards={len(paths)} samples={len(index)}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.eval_command == "recall":
        return _eval_recall(args)
    if args.eval_command == "zsc":
        return _eval_zsc(args)
    raise UsageError("eval requires a task: recall or zsc")


def _emit_results(results: dict, json_out, csv_out) -> None:
    text = json.dumps(results, indent=2, sort_keys=True)
    if json_out:
        Path(json_out).write_text(text + "\n", encoding="utf-8")
    print(text)
    if csv_out:
        lines = ["metric,value"] + [f"{k},{v}" for k, v in sorted(results.items())]
        Path(csv_out).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _eval_recall(args) -> int:
    from .embeddings import EmbeddingArchive
    from .metrics import RetrievalGroundTruth, mean_recall, recall_at_k, similarity_matrix

    images = EmbeddingArchive(args.images)
    texts = EmbeddingArchive(args.texts)
    truth_map = json.loads(Path(args.truth).read_text(encoding="utf-8"))
    truth = RetrievalGroundTruth(
        image_ids=sorted(images.keys), caption_ids=sorted(texts.keys), caption_to_image=truth_map
    )
    matrix = similarity_matrix(
        [images.lookup(k) for k in truth.image_ids], [texts.lookup(k) for k in truth.caption_ids]
    )
    ks = [int(k) for k in str(args.k).split(",") if k]
    results = {}
    for direction in ("i2t", "t2i"):
        for k in ks:
            results[f"{direction}_r@{k}"] = recall_at_k(matrix, truth, k, direction)
    results["mean_recall"] = mean_recall(matrix, truth)
    _emit_results(results, args.json_out, args.csv_out)
    return EXIT_OK


def _eval_zsc(args) -> int:
    from .embeddings import EmbeddingArchive, HashEmbedder
    from .metrics import load_zsc_prompts, zero_shot_top1

    images = EmbeddingArchive(args.images)
    labels = json.loads(Path(args.labels).read_text(encoding="utf-8"))
    prompt_set = load_zsc_prompts(sorted(set(labels.values())), args.prompts)
    accuracy = zero_shot_top1(
        images.as_mapping(), labels, prompt_set, HashEmbedder(dim=images.dim), model_id=images.model_id
    )
    _emit_results({"top1_accuracy": accuracy}, args.json_out, args.csv_out)
    return EXIT_OK


def cmd_serve_review(args) -> int:
    from .review import serve

    serve(args.data, port=args.port, seed=args.seed, ui_dir=args.ui_dir, host=args.host)
    return EXIT_OK


def cmd_run_all(args) -> int:
    from .config import load_config, require_files
    from .pipeline import run_all

    if not args.config:
        raise UsageError("run-all requires --config")
    config = load_config(args.config)
    if args.seed:
        config.seed = args.seed
    require_files(config, "input_manifest")
    result = run_all(config)
    violations = result.ledger.verify_conservation()
    if violations:
        raise RscurateError(f"ledger conservation violated: {violations}")
    print(f"run-all: out={result.out_dir} shards={len(result.shard_paths)}")
    return EXIT_OK


_COMMANDS = {
    "keywords": cmd_keywords,
    "fetch": cmd_fetch,
    "dedup": cmd_dedup,
    "score-filter": cmd_score_filter,
    "caption-select": cmd_caption_select,
    "meta-caption": cmd_meta_caption,
    "geo-report": cmd_geo_report,
    "shard": cmd_shard,
    "eval": cmd_eval,
    "serve-review": cmd_serve_review,
    "run-all": cmd_run_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage())
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse --version/--help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"validation error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RscurateError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
