"""Per-candidate feature vectors for concept ranking.

Sixteen features describe one candidate concept for one instance: graph
connectivity (degree, betweenness, closeness, pagerank, seed proximity),
cluster and relatedness signals, origin booleans, and text overlap between
the concept's title/abstract and the instance's tags and image labels.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import Partition, relatedness
from .errors import IntegrityError, ParseError
from .kg import KnowledgeGraph, NodeKind
from .linking import Instance
from .query_graph import QueryGraph

FEATURE_NAMES: tuple[str, ...] = (
    "degree_centrality",
    "betweenness",
    "closeness",
    "pagerank",
    "seeds_within_2hops",
    "is_intermediate",
    "cluster_size_ratio",
    "mean_intra_cluster_relatedness",
    "mean_seed_relatedness",
    "origin_tag",
    "origin_image",
    "origin_both",
    "title_token_jaccard",
    "abstract_tfidf_cosine",
    "log_abstract_length",
    "is_category",
)

BOOLEAN_FEATURES: frozenset[str] = frozenset(
    {"is_intermediate", "origin_tag", "origin_image", "origin_both", "is_category"}
)
_BOOLEAN_DIMS = tuple(i for i, name in enumerate(FEATURE_NAMES) if name in BOOLEAN_FEATURES)

N_FEATURES = len(FEATURE_NAMES)

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-order vector of the 16 candidate features."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != N_FEATURES:
            raise IntegrityError(f"feature vector must have {N_FEATURES} entries")
        if any(not math.isfinite(v) for v in self.values):
            raise IntegrityError("feature vector contains non-finite values")

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_NAMES.index(name)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def betweenness(qg: QueryGraph) -> dict[int, float]:
    """Exact shortest-path betweenness (Brandes), normalized to [0, 1].

    Each unordered node pair counts once; scores are divided by
    (n-1)(n-2)/2. Graphs with fewer than three nodes score all zeros.
    """
    nodes = sorted(qg.nodes)
    raw = {v: 0.0 for v in nodes}
    for source in nodes:
        stack: list[int] = []
        predecessors: dict[int, list[int]] = {v: [] for v in nodes}
        sigma = {v: 0.0 for v in nodes}
        dist = {v: -1 for v in nodes}
        sigma[source], dist[source] = 1.0, 0
        queue = [source]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            stack.append(v)
            for w in qg.adjacency.get(v, ()):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    predecessors[w].append(v)
        delta = {v: 0.0 for v in nodes}
        while stack:
            w = stack.pop()
            for v in predecessors[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != source:
                raw[w] += delta[w]

    n = len(nodes)
    if n < 3:
        return {v: 0.0 for v in nodes}
    scale = (n - 1) * (n - 2)  # raw counts each pair twice (both endpoints)
    return {v: raw[v] / scale for v in nodes}


def pagerank(qg: QueryGraph, damping: float = 0.85, tol: float = 1e-9) -> dict[int, float]:
    """PageRank by power iteration with uniform teleport.

    Mass of isolated (dangling) nodes is redistributed uniformly; iteration
    stops once the largest per-node change drops below ``tol``. Scores sum
    to 1 within 1e-6 on a nonempty graph.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must be in (0, 1)")
    nodes = sorted(qg.nodes)
    n = len(nodes)
    if n == 0:
        return {}
    index = {v: i for i, v in enumerate(nodes)}
    neighbors = [np.array([index[w] for w in qg.adjacency.get(v, ())], dtype=np.intp) for v in nodes]
    degree = np.array([len(nb) for nb in neighbors], dtype=np.float64)
    dangling = degree == 0

    scores = np.full(n, 1.0 / n)
    for _ in range(10_000):
        share = np.where(dangling, 0.0, scores / np.maximum(degree, 1.0))
        incoming = np.zeros(n)
        for i, nb in enumerate(neighbors):
            if nb.size:
                incoming[i] = share[nb].sum()
        dangling_mass = scores[dangling].sum()
        updated = (1.0 - damping) / n + damping * (incoming + dangling_mass / n)
        if np.max(np.abs(updated - scores)) < tol:
            scores = updated
            break
        scores = updated
    return {v: float(scores[index[v]]) for v in nodes}


@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies over all article abstracts in a graph."""

    doc_frequency: Mapping[str, int]
    n_documents: int

    def idf(self, token: str) -> float:
        if self.n_documents == 0:
            return 0.0
        return math.log(self.n_documents / (1 + self.doc_frequency.get(token, 0))) + 1.0

    def tfidf(self, tokens: Sequence[str]) -> dict[str, float]:
        counts = Counter(tokens)
        return {t: c * self.idf(t) for t, c in counts.items()}


def build_idf_table(graph: KnowledgeGraph) -> IdfTable:
    doc_frequency: Counter[str] = Counter()
    n_documents = 0
    for node in graph.nodes.values():
        if node.kind is NodeKind.ARTICLE and node.abstract_text:
            n_documents += 1
            doc_frequency.update(set(tokenize(node.abstract_text)))
    return IdfTable(doc_frequency=dict(doc_frequency), n_documents=n_documents)


def _cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    if dot == 0.0:
        return 0.0
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    return dot / (norm_a * norm_b)


class _InstanceContext:
    """Shared per-instance computations reused across candidate nodes."""

    def __init__(
        self,
        qg: QueryGraph,
        partition: Partition,
        instance: Instance,
        graph: KnowledgeGraph,
        idf: IdfTable,
    ):
        self.qg = qg
        self.partition = partition
        self.instance = instance
        self.graph = graph
        self.idf = idf
        self.n = qg.n_nodes
        self.seed_ids = sorted(qg.seeds)
        self.betweenness = betweenness(qg)
        self.pagerank = pagerank(qg)
        self.cluster_sizes = partition.cluster_sizes()
        self.members: dict[int, list[int]] = {}
        for node, cluster in partition.assignment.items():
            self.members.setdefault(cluster, []).append(node)
        mention_text = " ".join(list(instance.tags) + list(instance.image_labels))
        self.instance_tokens = set(tokenize(mention_text))
        self.instance_tfidf = idf.tfidf(tokenize(mention_text))


def _extract(ctx: _InstanceContext, node_id: int) -> FeatureVector:
    qg, graph, n = ctx.qg, ctx.graph, ctx.n
    if node_id not in qg.nodes:
        raise IntegrityError(f"node {node_id} is not in the query graph")
    if node_id not in ctx.partition.assignment:
        raise IntegrityError(f"node {node_id} is not assigned to a cluster")
    node = graph.node(node_id)

    degree_centrality = qg.degree(node_id) / (n - 1) if n > 1 else 0.0

    reachable = [qg.distance(node_id, other) for other in qg.nodes if other != node_id]
    finite = [d for d in reachable if d is not None]
    if finite and n > 1:
        # Scaled by the reachable fraction so disconnected graphs stay in [0, 1].
        r = len(finite)
        closeness = (r / (n - 1)) * (r / sum(finite))
    else:
        closeness = 0.0

    seeds_near = sum(
        1
        for s in ctx.seed_ids
        if s != node_id and (d := qg.distance(node_id, s)) is not None and d <= 2
    )
    seeds_within = seeds_near / len(ctx.seed_ids) if ctx.seed_ids else 0.0

    cluster = ctx.partition.assignment[node_id]
    cluster_size_ratio = ctx.cluster_sizes[cluster] / n

    peers = [m for m in ctx.members[cluster] if m != node_id]
    intra = sum(relatedness(qg, node_id, m) for m in peers) / len(peers) if peers else 0.0
    other_seeds = [s for s in ctx.seed_ids if s != node_id]
    seed_rel = (
        sum(relatedness(qg, node_id, s) for s in other_seeds) / len(other_seeds)
        if other_seeds
        else 0.0
    )

    origin = qg.seeds.get(node_id)
    origin_tag = 1.0 if origin and origin.from_tags else 0.0
    origin_image = 1.0 if origin and origin.from_image else 0.0
    origin_both = 1.0 if origin and origin.from_tags and origin.from_image else 0.0

    title_tokens = set(tokenize(node.title))
    union = title_tokens | ctx.instance_tokens
    jaccard = len(title_tokens & ctx.instance_tokens) / len(union) if union else 0.0

    abstract_tokens = tokenize(node.abstract_text)
    cosine = _cosine(ctx.idf.tfidf(abstract_tokens), ctx.instance_tfidf)

    return FeatureVector(
        values=(
            degree_centrality,
            ctx.betweenness[node_id],
            closeness,
            ctx.pagerank[node_id],
            seeds_within,
            1.0 if node_id in qg.intermediates else 0.0,
            cluster_size_ratio,
            intra,
            seed_rel,
            origin_tag,
            origin_image,
            origin_both,
            jaccard,
            cosine,
            math.log(1.0 + len(abstract_tokens)),
            1.0 if node.is_category else 0.0,
        )
    )


def extract_features(
    qg: QueryGraph,
    partition: Partition,
    instance: Instance,
    node: int,
    graph: KnowledgeGraph,
    idf: IdfTable | None = None,
) -> FeatureVector:
    """Feature vector for one candidate node of one instance.

    Pass a prebuilt ``idf`` table when extracting many candidates; it only
    depends on the knowledge graph.
    """
    ctx = _InstanceContext(qg, partition, instance, graph, idf or build_idf_table(graph))
    return _extract(ctx, node)


def extract_instance_features(
    qg: QueryGraph,
    partition: Partition,
    instance: Instance,
    graph: KnowledgeGraph,
    idf: IdfTable,
    candidates: Iterable[int] | None = None,
) -> dict[int, FeatureVector]:
    """Vectors for all candidate nodes of one instance, sharing computations."""
    ctx = _InstanceContext(qg, partition, instance, graph, idf)
    node_ids = sorted(qg.nodes) if candidates is None else sorted(candidates)
    return {node_id: _extract(ctx, node_id) for node_id in node_ids}


def normalize_per_query(vectors: Sequence[FeatureVector]) -> list[FeatureVector]:
    """Min-max scale each dimension to [0, 1] within one instance's candidates.

    Boolean dimensions pass through unchanged; constant non-boolean
    dimensions collapse to 0. Normalizing twice equals normalizing once.
    """
    if not vectors:
        raise ValueError("normalize_per_query requires at least one vector")
    matrix = np.array([v.values for v in vectors], dtype=np.float64)
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    span = hi - lo
    for dim in range(N_FEATURES):
        if dim in _BOOLEAN_DIMS:
            continue
        if span[dim] > 1e-12:
            matrix[:, dim] = (matrix[:, dim] - lo[dim]) / span[dim]
        else:
            matrix[:, dim] = 0.0
    return [FeatureVector(values=tuple(float(x) for x in row)) for row in matrix]


def write_feature_rows(
    path: str | Path,
    rows: Iterable[tuple[str, int, FeatureVector, int | None]],
) -> None:
    """Write the feature dump TSV: instance id, node id, 16 features, grade."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("\t".join(("instance_id", "node_id") + FEATURE_NAMES + ("grade",)) + "\n")
        for instance_id, node_id, vector, grade in rows:
            cells = [instance_id, str(node_id)]
            cells.extend(repr(v) for v in vector.values)
            cells.append("" if grade is None else str(grade))
            fh.write("\t".join(cells) + "\n")


def read_feature_rows(path: str | Path) -> list[tuple[str, int, FeatureVector, int | None]]:
    """Read a feature dump; fails when the header names do not match."""
    path = Path(path)
    rows: list[tuple[str, int, FeatureVector, int | None]] = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        expected = ["instance_id", "node_id", *FEATURE_NAMES, "grade"]
        if header != expected:
            raise IntegrityError(f"{path}: feature header mismatch: {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != len(expected):
                raise ParseError(f"{path}:{lineno}: expected {len(expected)} fields")
            try:
                vector = FeatureVector(values=tuple(float(c) for c in cells[2:-1]))
                grade = int(cells[-1]) if cells[-1] else None
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed numeric field") from None
            rows.append((cells[0], int(cells[1]), vector, grade))
    return rows
