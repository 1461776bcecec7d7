"""Relatedness weights, modularity, and deterministic Louvain clustering."""

import itertools

import numpy as np
import pytest

from gistrank.clustering import (
    Partition,
    WeightedGraph,
    build_relatedness_graph,
    louvain,
    modularity,
    relatedness,
)
from gistrank.errors import IntegrityError, NotFoundError

from tests.conftest import query_graph_from_edges, random_query_graph


def wgraph(n, weighted_edges):
    return WeightedGraph(
        nodes=tuple(range(n)),
        weights={(min(a, b), max(a, b)): w for a, b, w in weighted_edges},
    )


def all_partitions(n):
    """All set partitions of range(n) as assignment dicts (restricted growth)."""
    def grow(prefix, n_used):
        i = len(prefix)
        if i == n:
            yield dict(enumerate(prefix))
            return
        for c in range(n_used + 1):
            yield from grow(prefix + [c], max(n_used, c + 1))

    yield from grow([], 0)


def modularity_oracle(wg, assignment):
    """Independent matrix-form modularity: (1/2m) sum_ij (w_ij - k_i k_j / 2m) delta."""
    nodes = sorted(wg.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    w = np.zeros((n, n))
    for (a, b), weight in wg.weights.items():
        w[index[a], index[b]] = weight
        w[index[b], index[a]] = weight
    two_m = w.sum()
    if two_m == 0:
        return 0.0
    k = w.sum(axis=1)
    same = np.equal.outer(
        [assignment[n] for n in nodes], [assignment[n] for n in nodes]
    )
    return float(((w - np.outer(k, k) / two_m) * same).sum() / two_m)


class TestRelatedness:
    def test_identity(self, tiny_kg):
        qg = query_graph_from_edges(3, [(0, 2), (1, 2)])
        assert relatedness(qg, 0, 0) == 1.0

    def test_adjacent(self):
        qg = query_graph_from_edges(2, [(0, 1)])
        assert relatedness(qg, 0, 1) == 0.5

    def test_separate_components(self):
        qg = query_graph_from_edges(4, [(0, 1), (2, 3)])
        assert relatedness(qg, 0, 3) == 0.0

    def test_beyond_horizon_is_zero(self):
        qg = query_graph_from_edges(6, [(i, i + 1) for i in range(5)])
        assert relatedness(qg, 0, 4) == 0.5**4
        assert relatedness(qg, 0, 5) == 0.0

    def test_unknown_node(self):
        qg = query_graph_from_edges(2, [(0, 1)])
        with pytest.raises(NotFoundError):
            relatedness(qg, 0, 9)

    def test_symmetry_exhaustive(self):
        rng = np.random.default_rng(3)
        qg = random_query_graph(rng, 12, 0.25)
        for a, b in itertools.combinations(sorted(qg.nodes), 2):
            assert relatedness(qg, a, b) == relatedness(qg, b, a)


class TestBuildRelatednessGraph:
    def test_empty(self):
        qg = query_graph_from_edges(0, [])
        wg = build_relatedness_graph(qg)
        assert wg.nodes == () and wg.weights == {}

    def test_triangle(self):
        qg = query_graph_from_edges(3, [(0, 1), (1, 2), (0, 2)])
        wg = build_relatedness_graph(qg)
        assert wg.weights == {(0, 1): 0.5, (1, 2): 0.5, (0, 2): 0.5}

    def test_matches_per_pair_calls(self):
        rng = np.random.default_rng(9)
        qg = random_query_graph(rng, 10, 0.3)
        wg = build_relatedness_graph(qg)
        for a, b in itertools.combinations(sorted(qg.nodes), 2):
            expected = relatedness(qg, a, b)
            assert wg.weights.get((a, b), 0.0) == expected


class TestModularity:
    def test_single_edge_one_cluster(self):
        wg = wgraph(2, [(0, 1, 1.0)])
        assert modularity(wg, {0: 0, 1: 0}) == pytest.approx(0.0)

    def test_two_disconnected_edges_two_clusters(self):
        wg = wgraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        assert modularity(wg, {0: 0, 1: 0, 2: 1, 3: 1}) == pytest.approx(0.5)

    def test_singletons_on_single_edge(self):
        wg = wgraph(2, [(0, 1, 1.0)])
        assert modularity(wg, {0: 0, 1: 1}) == pytest.approx(-0.5)

    def test_unassigned_node_is_integrity_error(self):
        wg = wgraph(2, [(0, 1, 1.0)])
        with pytest.raises(IntegrityError):
            modularity(wg, {0: 0})

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            n = int(rng.integers(2, 9))
            edges = [
                (a, b, float(rng.uniform(0.1, 2.0)))
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.5
            ]
            wg = wgraph(n, edges)
            assignment = {i: int(rng.integers(0, 3)) for i in range(n)}
            assert modularity(wg, assignment) == pytest.approx(
                modularity_oracle(wg, assignment), abs=1e-12
            )


def barbell_graph():
    """Two 4-cliques (nodes 0-3 and 4-7) joined by the single edge 3-4."""
    edges = []
    for block in (range(0, 4), range(4, 8)):
        edges.extend((a, b, 1.0) for a, b in itertools.combinations(block, 2))
    edges.append((3, 4, 1.0))
    return wgraph(8, edges)


class TestLouvain:
    def test_single_node(self):
        wg = WeightedGraph(nodes=(7,), weights={})
        part = louvain(wg)
        assert part.assignment == {7: 0}
        assert part.modularity == 0.0

    def test_empty_graph(self):
        part = louvain(WeightedGraph(nodes=(), weights={}))
        assert part.assignment == {}
        assert part.modularity == 0.0

    def test_barbell_recovers_cliques(self):
        part = louvain(barbell_graph())
        clusters = {part.assignment[i] for i in range(4)}, {
            part.assignment[i] for i in range(4, 8)
        }
        assert len(clusters[0]) == 1 and len(clusters[1]) == 1
        assert clusters[0] != clusters[1]

    def test_barbell_is_exhaustive_optimum(self):
        wg = barbell_graph()
        part = louvain(wg)
        best = max(modularity_oracle(wg, a) for a in all_partitions(8))
        assert part.modularity == pytest.approx(best, abs=1e-12)

    def test_two_disconnected_edges(self):
        wg = wgraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        part = louvain(wg)
        assert part.modularity == pytest.approx(0.5)
        assert part.assignment[0] == part.assignment[1]
        assert part.assignment[2] == part.assignment[3]
        assert part.assignment[0] != part.assignment[2]

    def test_isolated_nodes_are_singletons(self):
        wg = WeightedGraph(nodes=(0, 1, 2), weights={(0, 1): 1.0})
        part = louvain(wg)
        assert part.assignment[2] not in (part.assignment[0], part.assignment[1])

    def test_cluster_ids_contiguous(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            qg = random_query_graph(rng, int(rng.integers(1, 15)), 0.3)
            part = louvain(build_relatedness_graph(qg))
            ids = set(part.assignment.values())
            assert ids == set(range(len(ids)))

    def test_never_below_singleton_modularity(self):
        rng = np.random.default_rng(43)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            edges = [
                (a, b, float(rng.uniform(0.1, 1.0)))
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.4
            ]
            wg = wgraph(n, edges)
            part = louvain(wg)
            singleton = modularity(wg, {i: i for i in range(n)})
            assert part.modularity >= singleton - 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            qg = random_query_graph(rng, 12, 0.3)
            wg = build_relatedness_graph(qg)
            assert louvain(wg, seed=1).assignment == louvain(wg, seed=99).assignment

    def test_phase_modularity_non_decreasing(self):
        rng = np.random.default_rng(53)
        for _ in range(30):
            n = int(rng.integers(2, 16))
            edges = [
                (a, b, float(rng.uniform(0.05, 1.0)))
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.35
            ]
            part = louvain(wgraph(n, edges))
            for earlier, later in zip(part.phase_modularity, part.phase_modularity[1:]):
                assert later >= earlier - 1e-9

    def test_small_graphs_near_exhaustive_optimum(self):
        rng = np.random.default_rng(59)
        for _ in range(8):
            n = int(rng.integers(2, 8))
            edges = [
                (a, b, float(rng.uniform(0.1, 1.0)))
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.5
            ]
            wg = wgraph(n, edges)
            part = louvain(wg)
            best = max(modularity_oracle(wg, a) for a in all_partitions(n))
            assert part.modularity >= best - 0.05


def test_partition_json():
    part = Partition(assignment={3: 0, 5: 1}, modularity=0.25)
    obj = part.to_json_obj()
    assert obj == {"assignment": {"3": 0, "5": 1}, "modularity": 0.25}
