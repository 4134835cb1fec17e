import random

import pytest

from amrpointer.graph import (AmrGraph, Concept, GraphError, PenmanError,
                              infer_root, is_connected, parse_penman,
                              print_penman, print_penman_with_map, to_triples)

from genexamples import random_corpus


def test_parse_single_node():
    g = parse_penman("(b / boy)")
    assert list(g.nodes) == ["b"]
    assert g.root == "b"
    assert not g.edges


def test_parse_reentrancy_shares_nodes():
    g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
    assert len(g.nodes) == 3
    assert len(g.edges) == 3
    assert g.has_edge("g", ":ARG0", "b")


def test_parse_inverse_role_keeps_orientation():
    g = parse_penman("(t / thing :ARG1-of (o / opine-01))")
    assert len(g.nodes) == 2
    assert g.has_edge("t", ":ARG1-of", "o")


def test_parse_constants_become_nodes():
    g = parse_penman('(g / go-02 :polarity - :time (d / date-entity :day 29))')
    assert g.nodes["g.polarity"].is_constant
    assert g.nodes["d.day"].label == "29"
    assert g.has_edge("g", ":polarity", "g.polarity")


def test_parse_reports_position():
    with pytest.raises(PenmanError) as err:
        parse_penman("(b / boy :ARG0 )")
    assert "line 1" in str(err.value)


def test_parse_conflicting_redeclaration():
    with pytest.raises(PenmanError, match="conflicting"):
        parse_penman("(b / boy :mod (b / girl))")


def test_triples_single_node():
    t = to_triples(parse_penman("(w / want-01)"))
    assert t.instances == frozenset({("w", "want-01")})
    assert t.attributes == frozenset({("TOP", "w", "top")})


def test_triples_counts_and_top_toggle():
    g = parse_penman("(w / want-01 :ARG0 (b / boy))")
    t = to_triples(g)
    assert len(t.instances) == 2
    assert t.relations == frozenset({("ARG0", "w", "b")})
    assert ("TOP", "w", "top") in t.attributes
    assert to_triples(g, top=False).attributes == frozenset()


def test_triples_figure_graph():
    g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
    t = to_triples(g)
    assert len(t.instances) == 3
    assert len(t.relations) == 3
    assert len(t.attributes) == 1  # just TOP


def test_print_roundtrip_trivial():
    g = parse_penman("(b / boy)")
    assert to_triples(parse_penman(print_penman(g))).instances == \
        frozenset({("b0", "boy")})


def test_print_roundtrip_reentrancy():
    g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
    text, names = print_penman_with_map(g)
    reparsed = parse_penman(text)
    renamed = {(names[v], c) for v, c in to_triples(g).instances}
    assert renamed == set(to_triples(reparsed).instances)
    relations = {(r, names[a], names[b]) for r, a, b in to_triples(g).relations}
    assert relations == set(to_triples(reparsed).relations)


def test_print_disconnected_fails():
    g = AmrGraph()
    g.add_node("a", Concept("boy"))
    g.add_node("b", Concept("girl"))
    g.set_root("a")
    with pytest.raises(PenmanError, match="disconnected"):
        print_penman(g)


def test_print_requires_root():
    g = AmrGraph()
    g.add_node("a", Concept("boy"))
    with pytest.raises(PenmanError, match="rootless"):
        print_penman(g)


def test_print_roundtrip_random_graphs():
    for ex in random_corpus(seed=101, count=60, max_nodes=12):
        g = ex.graph
        text, names = print_penman_with_map(g)
        reparsed = parse_penman(text)
        original = to_triples(g, top=False)
        renamed_instances = {(names[v], c) for v, c in original.instances}
        renamed_relations = {(r, names[a], names[b])
                             for r, a, b in original.relations}
        renamed_attributes = {(r, names[v], value)
                              for r, v, value in original.attributes}
        got = to_triples(reparsed, top=False)
        assert renamed_instances == set(got.instances)
        assert renamed_relations == set(got.relations)
        assert renamed_attributes == set(got.attributes)


def test_triple_counts_on_random_graphs():
    for ex in random_corpus(seed=11, count=40):
        g = ex.graph
        t = to_triples(g)
        variables = sum(1 for c in g.nodes.values() if not c.is_constant)
        constant_edges = sum(1 for e in g.edges if g.nodes[e.dst].is_constant)
        assert len(t.instances) == variables
        assert len(t.attributes) == constant_edges + 1
        assert len(t.relations) == len(g.edges) - constant_edges


def test_is_connected_cases():
    single = AmrGraph()
    single.add_node("a", Concept("boy"))
    assert is_connected(single)
    two = AmrGraph()
    two.add_node("a", Concept("boy"))
    two.add_node("b", Concept("girl"))
    assert not is_connected(two)
    fig = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
    assert is_connected(fig)


def _union_find_connected(graph):
    parent = {n: n for n in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph.edges:
        parent[find(e.src)] = find(e.dst)
    return len({find(n) for n in graph.nodes}) <= 1


def test_is_connected_matches_union_find():
    rng = random.Random(7)
    for ex in random_corpus(seed=23, count=40):
        g = ex.graph
        # Randomly drop edges to create disconnected variants.
        trimmed = AmrGraph()
        for node_id, concept in g.nodes.items():
            trimmed.add_node(node_id, concept)
        for e in g.edges:
            if rng.random() < 0.8:
                trimmed.add_edge(e.src, e.role, e.dst)
        assert is_connected(trimmed) == _union_find_connected(trimmed)


def test_infer_root():
    g = AmrGraph()
    g.add_node("n", Concept("boy"))
    assert infer_root(g) == "n"

    chain = AmrGraph()
    for name in ("a", "b", "c"):
        chain.add_node(name, Concept("x" + name))
    chain.add_edge("a", ":ARG0", "b")
    chain.add_edge("b", ":ARG0", "c")
    assert infer_root(chain) == "a"

    # Two in-degree-0 nodes; creation order breaks the tie.
    forked = AmrGraph()
    for name in ("n2", "n3", "n5"):
        forked.add_node(name, Concept("c" + name))
    forked.add_edge("n2", ":ARG0", "n3")
    forked.add_edge("n5", ":ARG1", "n3")
    assert infer_root(forked) == "n2"

    with pytest.raises(GraphError):
        infer_root(AmrGraph())


def test_constants_cannot_have_outgoing_edges():
    g = AmrGraph()
    g.add_node("a", Concept("boy"))
    g.add_node("c", Concept("-", is_constant=True))
    with pytest.raises(GraphError, match="constant"):
        g.add_edge("c", ":mod", "a")
