import math
from collections import Counter

import numpy as np
import pytest

from eventea.kg import KnowledgeGraph, strip_isolated
from eventea.wlkernel import (
    LabelCompressor,
    build_label_graphs,
    wl_feature_vector,
    wl_similarity,
)


def naive_features(adjacency, labels, iterations):
    """WL features with uncompressed signature trees as labels."""
    feats = Counter()
    current = dict(labels)
    feats.update((0, label) for label in current.values())
    for it in range(1, iterations + 1):
        current = {
            node: (current[node], tuple(sorted(current[peer] for peer in adjacency[node])))
            for node in adjacency
        }
        feats.update((it, label) for label in current.values())
    return feats


def naive_similarity(kg1, kg2, links, iterations):
    """From-the-definition normalized kernel used as the oracle."""
    kg1, kg2 = strip_isolated(kg1), strip_isolated(kg2)
    labels1, labels2 = {}, {}
    fresh = 0
    for s, t in links:
        if s in kg1.entities and t in kg2.entities:
            labels1[s] = fresh
            labels2[t] = fresh
            fresh += 1
    for e in sorted(kg1.entities):
        if e not in labels1:
            labels1[e] = fresh
            fresh += 1
    for e in sorted(kg2.entities):
        if e not in labels2:
            labels2[e] = fresh
            fresh += 1

    def adjacency(kg):
        nbrs = {e: set() for e in kg.entities}
        for h, _, t in kg.relation_triples:
            if h != t:
                nbrs[h].add(t)
                nbrs[t].add(h)
        return nbrs

    f1 = naive_features(adjacency(kg1), labels1, iterations)
    f2 = naive_features(adjacency(kg2), labels2, iterations)
    dot = lambda a, b: sum(c * b[k] for k, c in a.items() if k in b)
    k11, k22 = dot(f1, f1), dot(f2, f2)
    if k11 == 0 or k22 == 0:
        return 0.0
    return dot(f1, f2) / math.sqrt(k11 * k22)


def random_graph(rng, n_nodes, n_edges, prefix):
    nodes = [f"{prefix}{i}" for i in range(n_nodes)]
    triples = []
    for _ in range(n_edges):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        triples.append((nodes[a], "rel", nodes[b]))
    return KnowledgeGraph(relation_triples=triples)


class TestBuildLabelGraphs:
    def make_pair(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b"), ("b", "r", "c")])
        twin = KnowledgeGraph(relation_triples=[("x", "r", "y"), ("y", "r", "z")])
        return kg, twin

    def test_fully_linked_twins_identical_label_multisets(self):
        kg, twin = self.make_pair()
        links = [("a", "x"), ("b", "y"), ("c", "z")]
        g1, g2 = build_label_graphs(kg, twin, links)
        assert g1.labels["a"] == g2.labels["x"]
        assert g1.labels["b"] == g2.labels["y"]
        assert g1.labels["c"] == g2.labels["z"]
        assert sorted(g1.labels.values()) == sorted(g2.labels.values())

    def test_no_links_all_labels_distinct(self):
        kg, twin = self.make_pair()
        g1, g2 = build_label_graphs(kg, twin, [])
        all_labels = list(g1.labels.values()) + list(g2.labels.values())
        assert len(set(all_labels)) == len(all_labels)

    def test_single_link_shares_exactly_one_label(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b")])
        twin = KnowledgeGraph(relation_triples=[("x", "r", "y")])
        g1, g2 = build_label_graphs(kg, twin, [("a", "x")])
        shared = set(g1.labels.values()) & set(g2.labels.values())
        assert len(shared) == 1
        assert g1.labels["a"] in shared and g2.labels["x"] in shared


class TestFeatureVector:
    def test_symmetric_edge_same_signature(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b")])
        twin = KnowledgeGraph(relation_triples=[("x", "r", "y")])
        g1, _ = build_label_graphs(kg, twin, [("a", "x"), ("b", "x2")])
        # force equal labels on both endpoints
        g1.labels["a"] = 0
        g1.labels["b"] = 0
        feats = wl_feature_vector(g1, 1)
        level1 = [count for (it, _), count in feats.items() if it == 1]
        assert level1 == [2]  # both nodes share one iteration-1 signature

    def test_path_center_distinguished(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b"), ("b", "r", "c")])
        graph, _ = build_label_graphs(kg, KnowledgeGraph(), [])
        for node in graph.labels:
            graph.labels[node] = 7
        feats = wl_feature_vector(graph, 1)
        level1 = sorted(count for (it, _), count in feats.items() if it == 1)
        assert level1 == [1, 2]  # endpoints together, center alone

    def test_five_node_fixture_matches_manual_run(self):
        triples = [
            ("n0", "r", "n1"),
            ("n1", "r", "n2"),
            ("n2", "r", "n3"),
            ("n3", "r", "n4"),
            ("n4", "r", "n0"),
            ("n0", "r", "n2"),
        ]
        kg = KnowledgeGraph(relation_triples=triples)
        graph, _ = build_label_graphs(kg, KnowledgeGraph(), [])
        feats = wl_feature_vector(graph, 2)

        nbrs = {e: set() for e in kg.entities}
        for h, _, t in kg.relation_triples:
            nbrs[h].add(t)
            nbrs[t].add(h)
        expected = naive_features(nbrs, graph.labels, 2)
        assert sorted(feats.values()) == sorted(expected.values())
        for it in (0, 1, 2):
            mine = sorted(c for (i, _), c in feats.items() if i == it)
            theirs = sorted(c for (i, _), c in expected.items() if i == it)
            assert mine == theirs

    def test_negative_iterations_rejected(self):
        graph, _ = build_label_graphs(KnowledgeGraph(), KnowledgeGraph(), [])
        with pytest.raises(ValueError):
            wl_feature_vector(graph, -1)


class TestSimilarity:
    def test_identical_fully_linked_is_one(self):
        triples = [("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")]
        kg = KnowledgeGraph(relation_triples=triples)
        twin = KnowledgeGraph(
            relation_triples=[(f"x{h}", r, f"x{t}") for h, r, t in triples]
        )
        links = [(e, f"x{e}") for e in ("a", "b", "c")]
        assert wl_similarity(kg, twin, links, iterations=3) == pytest.approx(1.0, abs=1e-9)

    def test_zero_shared_labels_h0_is_zero(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b")])
        twin = KnowledgeGraph(relation_triples=[("x", "r", "y")])
        assert wl_similarity(kg, twin, [], iterations=0) == 0.0

    def test_empty_graph_scores_zero(self):
        assert wl_similarity(KnowledgeGraph(), KnowledgeGraph(), [], 3) == 0.0

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            kg1 = random_graph(rng, 8, 12, "a")
            kg2 = random_graph(rng, 8, 12, "b")
            links = [(f"a{i}", f"b{i}") for i in range(4)]
            for h in (0, 1, 3):
                assert wl_similarity(kg1, kg2, links, h) == pytest.approx(
                    naive_similarity(kg1, kg2, links, h), abs=1e-12
                )

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            kg1 = random_graph(rng, 7, 10, "a")
            kg2 = random_graph(rng, 7, 10, "b")
            links = [(f"a{i}", f"b{i}") for i in range(rng.integers(0, 5))]
            forward = wl_similarity(kg1, kg2, links, 3)
            backward = wl_similarity(kg2, kg1, [(t, s) for s, t in links], 3)
            assert 0.0 <= forward <= 1.0 + 1e-12
            assert forward == pytest.approx(backward, abs=1e-12)

    def test_invariant_under_node_renaming(self):
        rng = np.random.default_rng(13)
        kg1 = random_graph(rng, 8, 11, "a")
        kg2 = random_graph(rng, 8, 11, "b")
        links = [(f"a{i}", f"b{i}") for i in range(3)]
        renamed = KnowledgeGraph(
            relation_triples=[(f"zz_{h}", r, f"zz_{t}") for h, r, t in kg2.relation_triples]
        )
        renamed_links = [(s, f"zz_{t}") for s, t in links]
        assert wl_similarity(kg1, kg2, links, 3) == pytest.approx(
            wl_similarity(kg1, renamed, renamed_links, 3), abs=1e-12
        )

    def test_more_links_never_decrease_score_on_twins(self):
        rng = np.random.default_rng(21)
        for seed in range(8):
            kg = random_graph(np.random.default_rng(seed), 9, 14, "a")
            twin = KnowledgeGraph(
                relation_triples=[(f"x{h}", r, f"x{t}") for h, r, t in kg.relation_triples]
            )
            entities = sorted(strip_isolated(kg).entities)
            previous = -1.0
            for count in range(0, len(entities) + 1, 2):
                links = [(e, f"x{e}") for e in entities[:count]]
                score = wl_similarity(kg, twin, links, 3)
                assert score >= previous - 1e-12
                previous = score


def test_shared_compressor_alignment():
    kg = KnowledgeGraph(relation_triples=[("a", "r", "b")])
    twin = KnowledgeGraph(relation_triples=[("x", "r", "y")])
    g1, g2 = build_label_graphs(kg, twin, [("a", "x"), ("b", "y")])
    shared = LabelCompressor()
    f1 = wl_feature_vector(g1, 2, shared)
    f2 = wl_feature_vector(g2, 2, shared)
    assert f1 == f2  # isomorphic twins compress to identical features
