"""Stage orchestration: each stage reads a manifest, writes a manifest with
dispositions plus its ledger, and run_all chains them in pipeline order.

Outputs are reproducible byte for byte given the same config, seed, and
inputs; wall-clock information goes only to the sidecar run log.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import captions as cap
from . import dedup as dd
from . import fetch as fx
from . import geo
from . import keywords as kw
from . import metacaption as mc
from . import scoring as sc
from .config import PipelineConfig
from .embeddings import (
    ROTATION_ANGLES,
    HashEmbedder,
    RemoteEmbedder,
    rotation_key,
    write_archive,
)
from .errors import ValidationError
from .manifest import dumps_canonical, read_kept, write_ledger, write_manifest
from .records import RS3_SOURCES, Disposition, PipelineLedger, SourceRecord, caption_stats
from .shards import ShardSample, ShardSpec, write_index_csv, write_shards

STAGE_FILES = {
    "keywords": "01_keywords.jsonl",
    "fetch": "02_fetch.jsonl",
    "dedup": "03_dedup.jsonl",
    "score-filter": "04_score_filter.jsonl",
    "caption-select": "05_caption_select.jsonl",
    "meta-caption": "06_meta_caption.jsonl",
}
RUN_ORDER = ("keywords", "fetch", "dedup", "score-filter", "caption-select", "meta-caption", "geo-report", "shard")


def make_embedder(config: PipelineConfig):
    if config.embedding.backend == "remote":
        return RemoteEmbedder(config.embedding.remote_url, timeout_s=config.fetch.timeout_s)
    return HashEmbedder(dim=config.embedding.dim)


def load_candidates(path: str | Path) -> dict[str, cap.CaptionCandidateSet]:
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            cs = cap.CaptionCandidateSet(image_id=d["image_id"], candidates=list(d["candidates"]))
            out[cs.image_id] = cs
    return out


def dedup_stage(
    records: Sequence[SourceRecord],
    embeddings,
    policy: dd.DedupPolicy,
) -> tuple[list[tuple[SourceRecord, Disposition]], PipelineLedger]:
    """URL dedup then near-duplicate clustering, accounted as one stage."""
    url_kept, url_removed, _ = dd.dedup_urls(records)
    near_kept, _ = dd.run_dedup(url_kept, embeddings, policy)
    url_removed_ids = {r.record_id for r in url_removed}
    near_kept_ids = {r.record_id for r in near_kept}
    ledger = PipelineLedger()
    rows = []
    for record in records:
        if record.record_id in url_removed_ids:
            disposition = Disposition.REMOVED_DUPLICATE_URL
        elif record.record_id in near_kept_ids:
            disposition = Disposition.KEPT
        else:
            disposition = Disposition.REMOVED_DUPLICATE_NEAR
        ledger.record(record.source, "dedup", disposition)
        rows.append((record, disposition))
    return rows, ledger


def score_stage(
    records: Sequence[SourceRecord],
    embeddings,
    probabilities: dict[str, float],
    centroid,
    policy,
    passthrough_sources: Sequence[str] = RS3_SOURCES,
) -> tuple[list[tuple[SourceRecord, Disposition]], dict[str, sc.ScorePair], set[str]]:
    """Joint (s, c) filter over web-sourced records; archive-sourced records
    pass through (their images are already known remote-sensing content)."""
    passthrough = frozenset(passthrough_sources)
    scored = [r for r in records if r.source not in passthrough]
    pairs = sc.score_records(
        {r.record_id: embeddings[r.record_id] for r in scored},
        centroid,
        {r.record_id: probabilities[r.record_id] for r in scored},
    )
    kept, _ = sc.joint_filter(pairs, policy)
    rows = []
    for record in records:
        if record.source in passthrough or record.record_id in kept:
            rows.append((record, Disposition.KEPT))
        else:
            rows.append((record, Disposition.REMOVED_BY_SCORE_FILTER))
    return rows, pairs, kept


def caption_stage(
    records: Sequence[SourceRecord],
    candidate_sets: dict[str, cap.CaptionCandidateSet],
    embedder,
    model_a: str,
    model_b: str,
    mode: cap.SelectionMode,
    seed: int,
    top_m: int = 10,
    top_k: int = 5,
) -> list[tuple[SourceRecord, Disposition]]:
    """Two-stage re-ranking plus rotation-invariant selection for records that
    have candidate captions; everything else passes through unchanged."""
    rows = []
    for record in records:
        cs = candidate_sets.get(record.record_id)
        if cs is None:
            rows.append((record, Disposition.KEPT))
            continue
        if not record.image_ref:
            raise ValidationError(f"{record.record_id}: candidates present but no image_ref")
        image_a = embedder.embed_image([record.image_ref], model_a)[0]
        text_a = embedder.embed_text(cs.candidates, model_a)
        stage_a = cap.rank_stage_a(image_a, text_a, top_m=top_m)
        image_b = embedder.embed_image([record.image_ref], model_b)[0]
        text_b_subset = embedder.embed_text([cs.candidates[i] for i in stage_a], model_b)
        stage_b = cap.rerank_stage_b(image_b, text_b_subset, stage_a, top_k=top_k)
        matrix = None
        if mode is not cap.SelectionMode.RANK1:
            rotation_embs = embedder.embed_image(
                [rotation_key(record.image_ref, a) for a in ROTATION_ANGLES], model_b
            )
            rot = np.stack([e.values for e in rotation_embs]).astype(np.float64)
            rot /= np.linalg.norm(rot, axis=1, keepdims=True)
            txt = np.stack(
                [embedder.embed_text([cs.candidates[i]], model_b)[0].values for i in stage_b]
            ).astype(np.float64)
            txt /= np.linalg.norm(txt, axis=1, keepdims=True)
            matrix = txt @ rot.T
        chosen = cap.select_final_caption(cs, stage_b, matrix, mode, seed=seed)
        rows.append(
            (
                SourceRecord(
                    record_id=record.record_id,
                    source=record.source,
                    caption=chosen,
                    url=record.url,
                    meta=record.meta,
                    image_ref=record.image_ref,
                ),
                Disposition.KEPT,
            )
        )
    return rows


def meta_stage(
    records: Sequence[SourceRecord],
    templates: mc.MetaTemplateSet,
    gazetteer: mc.Gazetteer,
) -> list[tuple[SourceRecord, Disposition]]:
    """Render each record's metadata into a sentence and prepend it."""
    rows = []
    for record in records:
        meta = record.meta
        if meta is None or meta.is_empty():
            rows.append((record, Disposition.KEPT))
            continue
        if meta.lon is not None and meta.lat is not None and (meta.city is None or meta.country is None):
            found = mc.reverse_geocode(meta.lon, meta.lat, gazetteer)
            if meta.city is None and "city" in found:
                meta.city = found["city"]
            if meta.country is None and "country" in found:
                meta.country = found["country"]
        sentence = mc.render_meta_caption(meta, templates)
        merged = mc.merge_captions(sentence, record.caption)
        rows.append(
            (
                SourceRecord(
                    record_id=record.record_id,
                    source=record.source,
                    caption=merged,
                    url=record.url,
                    meta=meta,
                    image_ref=record.image_ref,
                ),
                Disposition.KEPT,
            )
        )
    return rows


def geo_report(records: Iterable[SourceRecord], gazetteer: mc.Gazetteer) -> dict:
    """Zone histogram, caption location mentions, and caption statistics."""
    records = list(records)
    points = [(r.meta.lon, r.meta.lat) for r in records if r.meta and r.meta.lon is not None and r.meta.lat is not None]
    counts, skipped = geo.zone_histogram(points)
    matcher = geo.LocationMatcher(gazetteer.names())
    location_counts: dict[str, int] = {}
    for r in records:
        for name in matcher.extract(r.caption):
            location_counts[name] = location_counts.get(name, 0) + 1
    stats = caption_stats(r.caption for r in records)
    return {
        "records": len(records),
        "zone_counts": dict(sorted(counts.items())),
        "zones_sorted": geo.sorted_zone_counts(counts),
        "points_skipped": skipped,
        "points_total": len(points),
        "location_counts": dict(sorted(location_counts.items())),
        "caption_stats": {
            "count": stats.count,
            "mean_words": stats.mean_words,
            "max_words": stats.max_words,
            "histogram": {str(k): v for k, v in stats.histogram.items()},
        },
    }


def write_zone_csv(path: str | Path, counts: dict[str, int]) -> None:
    lines = ["designator,count"]
    lines.extend(f"{d},{n}" for d, n in geo.sorted_zone_counts(counts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def shard_stage(
    records: Sequence[SourceRecord],
    store: fx.ContentStore,
    out_dir: Path,
    spec: ShardSpec,
) -> tuple[list[Path], list[tuple[str, str]]]:
    def samples():
        for r in records:
            if not r.image_ref:
                raise ValidationError(f"{r.record_id}: cannot shard a record without image bytes")
            meta = r.meta.to_json_dict() if r.meta else {}
            meta["source"] = r.source
            yield ShardSample(key=r.record_id, image=store.get(r.image_ref), caption=r.caption, meta=meta)

    paths, index = write_shards(samples(), out_dir, spec)
    write_index_csv(out_dir / "index.csv", index)
    return paths, index


@dataclass
class RunResult:
    out_dir: Path
    ledger: PipelineLedger
    final_manifest: Path
    shard_paths: list[Path]


def run_all(config: PipelineConfig) -> RunResult:
    """Run every stage in order on the configured input manifest."""
    paths = config.paths
    if paths.input_manifest is None:
        raise ValidationError("paths.input_manifest is required for run-all")
    out_dir = Path(paths.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = fx.ContentStore(paths.store_dir or out_dir / "store")
    embedder = make_embedder(config)
    log_lines: list[str] = []
    t_start = time.time()

    def log(stage: str, detail: str) -> None:
        log_lines.append(f"[{time.strftime('%Y-%m-%dT%H:%M:%S%z')}] {stage}: {detail}")

    ledgers: list[PipelineLedger] = []

    def emit(stage: str, rows, stage_ledger: PipelineLedger) -> list[SourceRecord]:
        write_manifest(out_dir / STAGE_FILES[stage], rows)
        write_ledger(out_dir / (STAGE_FILES[stage].replace(".jsonl", ".ledger.json")), stage_ledger)
        ledgers.append(stage_ledger)
        kept = [r for r, d in rows if d is Disposition.KEPT]
        log(stage, f"attempted={len(rows)} kept={len(kept)}")
        return kept

    # keywords
    matcher = kw.compile_keywords(kw.load_keyword_set(paths.keywords))
    records = list(read_kept(paths.input_manifest))
    rows, stage_ledger = kw.filter_records(matcher, records, passthrough_sources=RS3_SOURCES)
    kw.write_histogram_csv(
        out_dir / "keyword_histogram.csv", kw.keyword_histogram(matcher, (r.caption for r in records))
    )
    kept = emit("keywords", rows, stage_ledger)

    # fetch
    rows, outcomes, stage_ledger = fx.run_fetch(kept, config.fetch.to_policy(), store)
    fx.write_outcomes(out_dir / "fetch_outcomes.jsonl", outcomes)
    kept = emit("fetch", rows, stage_ledger)

    # embeddings + detector probabilities for everything that fetched, written
    # as one archive so the dedup and score-filter stages read the same data
    # whether run here or standalone
    from .embeddings import embed_images_for_records

    embeddings = embed_images_for_records(embedder, kept, config.embedding.score_model) if kept else {}
    web_records = [r for r in kept if r.source not in RS3_SOURCES]
    if config.embedding.backend == "test":
        probs = (
            dict(zip((r.record_id for r in web_records), embedder.detector_probability([r.image_ref for r in web_records])))
            if web_records
            else {}
        )
    else:
        raise ValidationError("remote backend has no detector channel; supply a probability archive")
    if kept:
        write_archive(
            out_dir / "image_embeddings.rsemb",
            config.embedding.score_model,
            {r.record_id: embeddings[r.record_id] for r in kept},
            probabilities={r.record_id: probs.get(r.record_id, 1.0) for r in kept},
        )

    # dedup (url + near)
    rows, stage_ledger = dedup_stage(kept, embeddings, config.dedup.to_policy(config.seed))
    kept = emit("dedup", rows, stage_ledger)

    # score-filter
    templates = sc.load_template_set(paths.score_templates)
    centroid = sc.template_centroid(embedder.embed_text(list(templates.templates), config.embedding.score_model))
    rows, pairs, kept_ids = score_stage(kept, embeddings, probs, centroid, config.filter.to_policy())
    sc.write_scores_csv(out_dir / "scores.csv", pairs, kept_ids)
    stage_ledger = PipelineLedger()
    for record, disposition in rows:
        stage_ledger.record(record.source, "score-filter", disposition)
    kept = emit("score-filter", rows, stage_ledger)

    # caption-select
    candidate_sets = load_candidates(paths.candidates) if paths.candidates else {}
    rows = caption_stage(
        kept,
        candidate_sets,
        embedder,
        config.embedding.rank_model_a,
        config.embedding.rank_model_b,
        cap.SelectionMode(config.captions.mode),
        config.seed,
        top_m=config.captions.top_m,
        top_k=config.captions.top_k,
    )
    stage_ledger = PipelineLedger()
    for record, disposition in rows:
        stage_ledger.record(record.source, "caption-select", disposition)
    kept = emit("caption-select", rows, stage_ledger)

    # meta-caption
    gazetteer = mc.Gazetteer.load(paths.gazetteer)
    rows = meta_stage(kept, mc.load_meta_templates(paths.meta_templates), gazetteer)
    stage_ledger = PipelineLedger()
    for record, disposition in rows:
        stage_ledger.record(record.source, "meta-caption", disposition)
    kept = emit("meta-caption", rows, stage_ledger)
    final_manifest = out_dir / STAGE_FILES["meta-caption"]

    # geo-report
    report = geo_report(kept, gazetteer)
    (out_dir / "geo_report.json").write_text(dumps_canonical(report) + "\n", encoding="utf-8")
    write_zone_csv(out_dir / "zones.csv", report["zone_counts"])
    log("geo-report", f"zones={len(report['zone_counts'])} skipped={report['points_skipped']}")

    # shard
    shard_dir = out_dir / "shards"
    shard_paths, index = shard_stage(kept, store, shard_dir, config.shard.to_spec())
    log("shard", f"shards={len(shard_paths)} samples={len(index)}")

    merged = PipelineLedger()
    for stage_ledger in ledgers:
        merged.merge(stage_ledger)
    write_ledger(out_dir / "ledger.json", merged)
    log("run-all", f"finished in {time.time() - t_start:.2f}s")
    (out_dir / "run_log.txt").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    return RunResult(out_dir=out_dir, ledger=merged, final_manifest=final_manifest, shard_paths=shard_paths)
