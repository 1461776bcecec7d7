"""Query-specific subgraph expansion.

A seed set is expanded by collecting every category node that lies on a
shortest path of at most four edges between two distinct seeds. The
resulting subgraph keeps the seeds, those intermediate categories, and all
category-link edges induced among the retained nodes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

from .errors import IntegrityError, NotFoundError
from .kg import KnowledgeGraph
from .linking import SeedOrigin, SeedSet

MAX_PATH_LENGTH = 4


def _bfs(adjacency: Mapping[int, tuple[int, ...]], source: int, cutoff: int | None) -> dict[int, int]:
    distances = {source: 0}
    queue = deque([source])
    while queue:
        current = queue.popleft()
        d = distances[current]
        if cutoff is not None and d >= cutoff:
            continue
        for neighbor in adjacency.get(current, ()):
            if neighbor not in distances:
                distances[neighbor] = d + 1
                queue.append(neighbor)
    return distances


def bfs_distances(graph: KnowledgeGraph, source: int, cutoff: int) -> dict[int, int]:
    """Unweighted shortest-path distances from ``source`` up to ``cutoff`` hops.

    Traversal follows category-link adjacency (undirected); nodes farther
    than the cutoff are omitted from the result.
    """
    if source not in graph.nodes:
        raise NotFoundError(f"unknown source node {source}")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    return _bfs(graph.adjacency, source, cutoff)


@dataclass(frozen=True)
class QueryGraph:
    """Per-instance subgraph of seeds, intermediate categories, and edges.

    ``distances`` holds hop counts between all reachable node pairs within
    the subgraph, keyed by sorted id pairs; self distances are implicit 0.
    """

    instance_id: str
    seeds: Mapping[int, SeedOrigin]
    intermediates: frozenset[int]
    edges: frozenset[tuple[int, int]]
    adjacency: Mapping[int, tuple[int, ...]] = field(repr=False)
    distances: Mapping[tuple[int, int], int] = field(repr=False)

    @classmethod
    def from_parts(
        cls,
        instance_id: str,
        seeds: Mapping[int, SeedOrigin],
        intermediates: frozenset[int],
        edges: frozenset[tuple[int, int]],
    ) -> "QueryGraph":
        nodes = set(seeds) | intermediates
        neighbor_sets: dict[int, set[int]] = {n: set() for n in nodes}
        for a, b in edges:
            neighbor_sets[a].add(b)
            neighbor_sets[b].add(a)
        adjacency = {n: tuple(sorted(ns)) for n, ns in neighbor_sets.items()}
        distances: dict[tuple[int, int], int] = {}
        for source in nodes:
            for target, d in _bfs(adjacency, source, None).items():
                if source < target:
                    distances[(source, target)] = d
        return cls(
            instance_id=instance_id,
            seeds=dict(seeds),
            intermediates=intermediates,
            edges=edges,
            adjacency=adjacency,
            distances=distances,
        )

    @property
    def nodes(self) -> set[int]:
        return set(self.seeds) | set(self.intermediates)

    @property
    def n_nodes(self) -> int:
        return len(self.seeds) + len(self.intermediates)

    def distance(self, a: int, b: int) -> int | None:
        """Hop distance within the subgraph, or None when unreachable."""
        if a == b:
            return 0
        key = (a, b) if a < b else (b, a)
        return self.distances.get(key)

    def degree(self, node_id: int) -> int:
        return len(self.adjacency.get(node_id, ()))

    def to_json_obj(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "seeds": [
                {"id": nid, "from_tags": o.from_tags, "from_image": o.from_image}
                for nid, o in sorted(self.seeds.items())
            ],
            "intermediates": sorted(self.intermediates),
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "QueryGraph":
        seeds = {
            int(s["id"]): SeedOrigin(bool(s["from_tags"]), bool(s["from_image"]))
            for s in obj["seeds"]
        }
        edges = frozenset((int(a), int(b)) if a < b else (int(b), int(a)) for a, b in obj["edges"])
        return cls.from_parts(
            instance_id=obj["instance_id"],
            seeds=seeds,
            intermediates=frozenset(int(n) for n in obj["intermediates"]),
            edges=edges,
        )


def build_query_graph(graph: KnowledgeGraph, seedset: SeedSet) -> QueryGraph:
    """Expand a seed set into its query-specific subgraph.

    For every unordered seed pair within distance 4 of each other, all
    category nodes on *any* shortest path between them become intermediates
    (membership tested as d(s,v) + d(v,t) = d(s,t) over two BFS frontiers).
    Seeds never re-enter the intermediate set, and article nodes are never
    collected. An empty seed set yields an empty subgraph.
    """
    for seed_id in seedset.seeds:
        if seed_id not in graph.nodes:
            raise IntegrityError(
                f"instance {seedset.instance_id!r}: seed {seed_id} is not in the graph"
            )

    seeds = dict(seedset.seeds)
    frontiers = {
        seed_id: _bfs(graph.adjacency, seed_id, MAX_PATH_LENGTH) for seed_id in seeds
    }

    intermediates: set[int] = set()
    for s, t in combinations(sorted(seeds), 2):
        d_pair = frontiers[s].get(t)
        if d_pair is None or d_pair > MAX_PATH_LENGTH:
            continue
        far = frontiers[t]
        for v, d_sv in frontiers[s].items():
            if v in seeds or not graph.nodes[v].is_category:
                continue
            d_vt = far.get(v)
            if d_vt is not None and d_sv + d_vt == d_pair:
                intermediates.add(v)

    nodes = set(seeds) | intermediates
    edges = {
        (node, neighbor) if node < neighbor else (neighbor, node)
        for node in nodes
        for neighbor in graph.adjacency.get(node, ())
        if neighbor in nodes
    }
    return QueryGraph.from_parts(
        instance_id=seedset.instance_id,
        seeds=seeds,
        intermediates=frozenset(intermediates),
        edges=frozenset(edges),
    )
