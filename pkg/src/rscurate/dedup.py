"""Exact URL dedup plus near-duplicate clustering over image embeddings.

Near-duplicate structure: a cosine kNN graph (k nearest neighbors per node,
edges kept above a similarity threshold, symmetrized by union), with clusters
as connected components. One keeper survives per cluster, chosen by
source-priority rules with a seeded random fallback.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit, urlunsplit

import numpy as np

from .embeddings import EmbeddingVector
from .errors import MissingKeyError, ValidationError
from .records import Disposition, PipelineLedger, SourceRecord

# Sources dropped from keeper candidacy (machine-concatenated captions), and
# the sources preferred as keepers when present.
DROP_SOURCES = frozenset({"laioncoco"})
PREFER_SOURCES = frozenset({"laion2b", "laion400m", "coyo700m"})


@dataclass
class DedupPolicy:
    k: int = 5
    edge_threshold: float = 0.96
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if self.k < 1:
            problems.append(f"k must be >= 1, got {self.k}")
        if not (-1.0 < self.edge_threshold <= 1.0):
            problems.append(f"edge_threshold must be in (-1, 1], got {self.edge_threshold}")
        if problems:
            raise ValidationError(problems)


@dataclass
class SimilarityGraph:
    nodes: list[str]
    edges: list[tuple[str, str, float]] = field(default_factory=list)


def normalize_url(url: str) -> str:
    """Canonical form: trimmed, lowercase scheme+host, default port stripped,
    fragment dropped. Path and query keep their case."""
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    netloc = parts.netloc.lower()
    if "@" in netloc:
        creds, _, hostport = netloc.rpartition("@")
        netloc = f"{creds}@{hostport}"
    default = {"http": ":80", "https": ":443"}.get(scheme)
    if default and netloc.endswith(default):
        netloc = netloc[: -len(default)]
    return urlunsplit((scheme, netloc, parts.path, parts.query, ""))


def dedup_urls(
    records: Iterable[SourceRecord], stage: str = "dedup"
) -> tuple[list[SourceRecord], list[SourceRecord], PipelineLedger]:
    """First record per normalized URL wins; URL-less records pass through."""
    seen: set[str] = set()
    kept, removed = [], []
    ledger = PipelineLedger()
    for record in records:
        if record.url is None:
            kept.append(record)
            ledger.record(record.source, stage, Disposition.KEPT)
            continue
        key = normalize_url(record.url)
        if key in seen:
            removed.append(record)
            ledger.record(record.source, stage, Disposition.REMOVED_DUPLICATE_URL)
        else:
            seen.add(key)
            kept.append(record)
            ledger.record(record.source, stage, Disposition.KEPT)
    return kept, removed, ledger


def build_knn_graph(embeddings: Mapping[str, EmbeddingVector], policy: DedupPolicy) -> SimilarityGraph:
    """Edges from each node to its top-k most similar nodes at or above the
    threshold, symmetrized by union. Exact (all-pairs cosine), which is the
    reference behavior any approximate index must reproduce."""
    nodes = sorted(embeddings.keys())
    if not nodes:
        return SimilarityGraph(nodes=[])
    model_ids = {embeddings[n].model_id for n in nodes}
    if len(model_ids) != 1:
        raise ValidationError(f"mixed model_ids in embeddings: {sorted(model_ids)}")
    dims = {embeddings[n].dim for n in nodes}
    if len(dims) != 1:
        raise ValidationError(f"mixed dimensions in embeddings: {sorted(dims)}")
    matrix = np.stack([embeddings[n].values for n in nodes]).astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if (norms < 1e-12).any():
        bad = [nodes[i] for i in np.nonzero(norms[:, 0] < 1e-12)[0]]
        raise ValidationError(f"zero-norm embeddings for: {bad}")
    unit = matrix / norms
    sims = unit @ unit.T
    n = len(nodes)
    k = min(policy.k, n - 1)
    edge_set: set[tuple[int, int]] = set()
    edge_sims: dict[tuple[int, int], float] = {}
    for i in range(n):
        row = sims[i]
        # Exclude self, sort candidates by similarity desc then node id asc.
        order = sorted((j for j in range(n) if j != i), key=lambda j: (-row[j], nodes[j]))
        for j in order[:k]:
            if row[j] >= policy.edge_threshold:
                a, b = (i, j) if i < j else (j, i)
                edge_set.add((a, b))
                edge_sims[(a, b)] = float(sims[a, b])
    edges = [(nodes[a], nodes[b], edge_sims[(a, b)]) for a, b in sorted(edge_set)]
    return SimilarityGraph(nodes=nodes, edges=edges)


class _UnionFind:
    def __init__(self, items: Sequence[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def connected_components(graph: SimilarityGraph) -> list[list[str]]:
    """Partition of the nodes; order-independent (clusters and members sorted)."""
    uf = _UnionFind(graph.nodes)
    for a, b, _ in graph.edges:
        uf.union(a, b)
    clusters: dict[str, list[str]] = {}
    for node in graph.nodes:
        clusters.setdefault(uf.find(node), []).append(node)
    return sorted((sorted(c) for c in clusters.values()), key=lambda c: c[0])


def _cluster_rng(cluster_ids: Sequence[str], seed: int) -> np.random.Generator:
    # Seed derived from cluster membership so the pick is a pure function of
    # (cluster, seed), independent of enumeration order.
    h = hashlib.sha256(seed.to_bytes(8, "little", signed=True) + "\x00".join(sorted(cluster_ids)).encode("utf-8"))
    return np.random.Generator(np.random.PCG64(int.from_bytes(h.digest()[:16], "little")))


def select_keeper(cluster: Sequence[SourceRecord], seed: int = 0) -> str:
    """Pick the surviving record of a duplicate cluster.

    laioncoco members are discarded from candidacy; among the rest, records
    from the preferred training sources win; otherwise a seeded-uniform pick.
    An all-laioncoco cluster falls back to a seeded pick among its members.
    """
    if not cluster:
        raise ValidationError("empty cluster")
    ordered = sorted(cluster, key=lambda r: r.record_id)
    candidates = [r for r in ordered if r.source not in DROP_SOURCES]
    if not candidates:
        candidates = ordered
    preferred = [r for r in candidates if r.source in PREFER_SOURCES]
    if preferred:
        candidates = preferred
    if len(candidates) == 1:
        return candidates[0].record_id
    rng = _cluster_rng([r.record_id for r in cluster], seed)
    return candidates[int(rng.integers(len(candidates)))].record_id


def run_dedup(
    records: Iterable[SourceRecord],
    embeddings: Mapping[str, EmbeddingVector],
    policy: DedupPolicy,
    stage: str = "dedup",
) -> tuple[list[SourceRecord], PipelineLedger]:
    """Near-duplicate pass: cluster, keep one record per cluster."""
    records = list(records)
    missing = [r.record_id for r in records if r.record_id not in embeddings]
    if missing:
        raise MissingKeyError(missing, context="embeddings")
    by_id = {r.record_id: r for r in records}
    graph = build_knn_graph({r.record_id: embeddings[r.record_id] for r in records}, policy)
    keepers: set[str] = set()
    for cluster in connected_components(graph):
        keepers.add(select_keeper([by_id[rid] for rid in cluster], policy.seed))
    ledger = PipelineLedger()
    kept = []
    for record in records:
        if record.record_id in keepers:
            kept.append(record)
            ledger.record(record.source, stage, Disposition.KEPT)
        else:
            ledger.record(record.source, stage, Disposition.REMOVED_DUPLICATE_NEAR)
    return kept, ledger
