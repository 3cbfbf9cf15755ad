import pytest

from eventea.errors import DataError
from eventea.kg import (
    AlignmentSet,
    EntityTypeMap,
    KnowledgeGraph,
    degree_stats,
    entity_names,
    iri_fragment,
    resolve_names,
    strip_isolated,
)

LABEL = "http://www.w3.org/2000/01/rdf-schema#label"


def test_graph_collects_entities_and_dedups():
    kg = KnowledgeGraph(
        relation_triples=[("a", "r", "b"), ("a", "r", "b"), ("b", "r", "c")],
        attribute_triples=[("a", LABEL, "Alpha"), ("a", LABEL, "Alpha")],
        extra_entities=["lonely"],
    )
    assert kg.entities == {"a", "b", "c", "lonely"}
    assert len(kg.relation_triples) == 2
    assert len(kg.attribute_triples) == 1
    assert kg.duplicates_removed == 2


def test_graph_rejects_empty_fields():
    with pytest.raises(DataError):
        KnowledgeGraph(relation_triples=[("a", "", "b")])
    with pytest.raises(DataError):
        KnowledgeGraph(attribute_triples=[("", "attr", "v")])


def test_identifiers_nfc_normalized():
    composed = "café"
    decomposed = "café"
    kg = KnowledgeGraph(relation_triples=[(composed, "r", "x"), (decomposed, "r", "y")])
    assert composed in kg.entities
    assert decomposed not in kg.entities  # folded into the composed form


class TestEntityNames:
    def test_label_attribute_wins(self):
        kg = KnowledgeGraph(
            attribute_triples=[("http://x/e1", LABEL, "Battle of Aden 2019")]
        )
        assert entity_names(kg)["http://x/e1"] == "Battle of Aden 2019"

    def test_fragment_fallback_replaces_underscores(self):
        kg = KnowledgeGraph(
            relation_triples=[
                ("http://dbpedia.org/resource/2010_GCC_U-23_Championship", "r", "http://x/y")
            ]
        )
        names = entity_names(kg)
        assert (
            names["http://dbpedia.org/resource/2010_GCC_U-23_Championship"]
            == "2010 GCC U-23 Championship"
        )

    def test_two_labels_tie_break_lexicographic(self):
        kg = KnowledgeGraph(
            attribute_triples=[("e", LABEL, "Zeta name"), ("e", LABEL, "Alpha name")],
            extra_entities=["e"],
        )
        assert entity_names(kg)["e"] == "Alpha name"

    def test_policy_order_respected(self):
        alt = "http://xmlns.com/foaf/0.1/name"
        kg = KnowledgeGraph(
            attribute_triples=[("e", alt, "Foaf name"), ("e", LABEL, "Label name")]
        )
        assert entity_names(kg, policy=[alt, LABEL])["e"] == "Foaf name"
        assert entity_names(kg, policy=[LABEL, alt])["e"] == "Label name"

    def test_every_entity_named_nonempty(self):
        kg = KnowledgeGraph(
            relation_triples=[("http://x/a", "r", "http://x/b")],
            extra_entities=["http://x/", "plain"],
        )
        for name in entity_names(kg).values():
            assert name

    def test_resolve_names_reports_source_attribute(self):
        kg = KnowledgeGraph(
            attribute_triples=[("e", LABEL, "Named")], extra_entities=["f"]
        )
        records = resolve_names(kg)
        assert records["e"].attribute == LABEL
        assert records["f"].attribute is None

    def test_empty_policy_rejected(self):
        kg = KnowledgeGraph(extra_entities=["e"])
        with pytest.raises(DataError):
            entity_names(kg, policy=[])


def test_iri_fragment_hash_and_slash():
    assert iri_fragment("http://x/y#z_1") == "z 1"
    assert iri_fragment("http://x/path/Thing_One") == "Thing One"
    assert iri_fragment("no-separators") == "no-separators"


class TestStripIsolated:
    def test_removes_triple_less_entity(self):
        kg = KnowledgeGraph(
            relation_triples=[("a", "r", "b")], extra_entities=["c"]
        )
        stripped = strip_isolated(kg)
        assert stripped.entities == {"a", "b"}

    def test_connected_graph_unchanged(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b"), ("b", "r", "c")])
        assert strip_isolated(kg) == kg

    def test_drops_attribute_triples_of_removed(self):
        kg = KnowledgeGraph(
            relation_triples=[("a", "r", "b")],
            attribute_triples=[("c", f"attr{i}", f"v{i}") for i in range(5)],
        )
        stripped = strip_isolated(kg)
        assert stripped.entities == {"a", "b"}
        assert stripped.attribute_triples == ()
        # input untouched
        assert len(kg.attribute_triples) == 5

    def test_attribute_only_entity_is_isolated(self):
        kg = KnowledgeGraph(attribute_triples=[("x", "attr", "v")])
        assert strip_isolated(kg).entities == set()

    def test_idempotent(self):
        kg = KnowledgeGraph(
            relation_triples=[("a", "r", "b")],
            attribute_triples=[("a", "attr", "v"), ("z", "attr", "w")],
            extra_entities=["q"],
        )
        once = strip_isolated(kg)
        assert strip_isolated(once) == once


class TestDegreeStats:
    def test_empty_graph(self):
        stats = degree_stats(KnowledgeGraph())
        assert (stats.min_degree, stats.mean_degree, stats.max_degree, stats.isolated) == (
            0,
            0.0,
            0,
            0,
        )

    def test_single_triple(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b")])
        stats = degree_stats(kg)
        assert stats.min_degree == 1
        assert stats.max_degree == 1
        assert stats.isolated == 0

    def test_star_graph(self):
        kg = KnowledgeGraph(
            relation_triples=[("hub", "r", f"leaf{i}") for i in range(4)]
        )
        stats = degree_stats(kg)
        assert stats.max_degree == 4
        assert stats.mean_degree == pytest.approx(1.6)
        assert stats.min_degree == 1

    def test_isolated_counted(self):
        kg = KnowledgeGraph(relation_triples=[("a", "r", "b")], extra_entities=["c"])
        assert degree_stats(kg).isolated == 1


class TestAlignmentSet:
    def test_valid_partition(self):
        links = [("s1", "t1"), ("s2", "t2"), ("s3", "t3")]
        alignment = AlignmentSet(links, train=[0], valid=[1], test=[2])
        assert alignment.train_links == (("s1", "t1"),)
        assert alignment.valid_links == (("s2", "t2"),)
        assert alignment.test_links == (("s3", "t3"),)
        assert len(alignment) == 3

    def test_one_to_one_enforced(self):
        with pytest.raises(DataError):
            AlignmentSet([("s", "t1"), ("s", "t2")], train=[0, 1], valid=[], test=[])
        with pytest.raises(DataError):
            AlignmentSet([("s1", "t"), ("s2", "t")], train=[0, 1], valid=[], test=[])

    def test_partition_enforced(self):
        links = [("s1", "t1"), ("s2", "t2")]
        with pytest.raises(DataError):
            AlignmentSet(links, train=[0], valid=[], test=[])  # missing index
        with pytest.raises(DataError):
            AlignmentSet(links, train=[0, 1], valid=[1], test=[])  # overlap

    def test_split_sizes_sum_to_links(self):
        links = [(f"s{i}", f"t{i}") for i in range(10)]
        alignment = AlignmentSet(links, train=range(6), valid=range(6, 8), test=range(8, 10))
        assert len(alignment.train) + len(alignment.valid) + len(alignment.test) == len(links)


class TestEntityTypeMap:
    def test_category_defaults_to_other(self):
        types = EntityTypeMap({"e1": "event"})
        assert types.category("e1") == "event"
        assert types.category("unknown") == "other"

    def test_unknown_tag_rejected(self):
        with pytest.raises(DataError):
            EntityTypeMap({"e1": "place"})
