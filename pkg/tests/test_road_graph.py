"""Graph model, load tensor, and configuration enumeration tests."""

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from elmopp.road_graph import (
    Configuration,
    DirectedEdge,
    GraphError,
    PseudoDiedge,
    RoadGraph,
    enumerate_configurations,
    four_star,
    load_tensor,
    movements_conflict,
    parse_graph,
    serialize_graph,
    validate_graph,
)

# Worked 4-cycle example: quantity/capacity/load cell triples.
WORKED_Q_AB = [0.0, 2.0, 3.0]
WORKED_C_AB = [0.0, 4.0, 4.0]
WORKED_L_AB = [0.0, 0.5, 0.75]


def test_load_tensor_zero_quantity():
    C = np.full((2, 2, 3), 5.0)
    assert (load_tensor(np.zeros((2, 2, 3)), C) == 0).all()


def test_load_tensor_worked_example():
    Q = np.zeros((2, 2, 3))
    C = np.zeros((2, 2, 3))
    Q[0, 1] = WORKED_Q_AB
    C[0, 1] = WORKED_C_AB
    L = load_tensor(Q, C)
    assert L[0, 1].tolist() == WORKED_L_AB


def test_load_tensor_dead_cell_is_zero():
    Q = np.zeros((1, 1, 3))
    C = np.zeros((1, 1, 3))
    assert (load_tensor(Q, C) == 0).all()


def test_load_tensor_shape_mismatch():
    with pytest.raises(GraphError, match="shape"):
        load_tensor(np.zeros((2, 2, 3)), np.zeros((3, 3, 3)))


def test_load_tensor_overfull_cell():
    Q = np.zeros((2, 2, 3))
    C = np.zeros((2, 2, 3))
    C[0, 1] = (4, 4, 4)
    Q[0, 1] = (5, 0, 0)
    with pytest.raises(GraphError, match=r"\(0, 1, 0\)"):
        load_tensor(Q, C)


def test_load_tensor_full_capacity_gives_ones():
    rng = np.random.default_rng(3)
    C = rng.uniform(0, 10, size=(3, 3, 3))
    C[1, 2, 0] = 0.0
    L = load_tensor(C, C)
    assert (L[C > 0] == 1.0).all()
    assert (L[C == 0] == 0.0).all()


@given(st.integers(min_value=0, max_value=2 ** 16))
def test_load_tensor_monotone_in_quantity(seed):
    rng = np.random.default_rng(seed)
    C = rng.uniform(0, 10, size=(2, 2, 3))
    C[rng.random((2, 2, 3)) < 0.3] = 0.0
    Q1 = rng.uniform(0, 1, size=(2, 2, 3)) * C
    Q2 = Q1 + rng.uniform(0, 1, size=(2, 2, 3)) * (C - Q1)
    assert (load_tensor(Q1, C) <= load_tensor(Q2, C) + 1e-15).all()


# --- configurations ---------------------------------------------------------

def _members(config: Configuration) -> frozenset:
    return config.members


def paper_eight(star: RoadGraph) -> set[frozenset]:
    """The expected configuration sets for a 4-leg intersection."""
    return {
        frozenset({("n", 0), ("s", 0)}),
        frozenset({("n", 1), ("n", 2), ("s", 1), ("s", 2)}),
        frozenset({("e", 0), ("w", 0)}),
        frozenset({("e", 1), ("e", 2), ("w", 1), ("w", 2)}),
        frozenset({("n", 0), ("n", 1), ("n", 2)}),
        frozenset({("e", 0), ("e", 1), ("e", 2)}),
        frozenset({("s", 0), ("s", 1), ("s", 2)}),
        frozenset({("w", 0), ("w", 1), ("w", 2)}),
    }


def test_four_leg_yields_the_eight_configurations():
    star = four_star()
    cset = enumerate_configurations(star, "a")
    assert len(cset) == 8
    assert {_members(c) for c in cset.configurations} == paper_eight(star)


def test_members_pairwise_compatible():
    star = four_star()
    approach_of = {e.tail: e.approach for e in star.inroads("a")}
    for config in enumerate_configurations(star, "a").configurations:
        for (t1, l1), (t2, l2) in itertools.combinations(config.members, 2):
            assert not movements_conflict(approach_of[t1], l1, approach_of[t2], l2)


def test_single_inroad_vertex():
    g = RoadGraph(
        vertices=["x", "y"],
        edges=[DirectedEdge("y", "x", (10, 10, 10), approach="N")],
    )
    cset = enumerate_configurations(g, "x")
    assert len(cset) == 1
    assert _members(cset.configurations[0]) == frozenset({("y", 0), ("y", 1), ("y", 2)})


def test_vertex_without_inroads_is_empty():
    g = RoadGraph(
        vertices=["x", "y"],
        edges=[DirectedEdge("x", "y", (10, 10, 10), approach="S")],
    )
    assert len(enumerate_configurations(g, "x")) == 0


def test_unlabeled_inroad_is_an_error():
    g = RoadGraph(
        vertices=["x", "y"],
        edges=[DirectedEdge("y", "x", (10, 10, 10))],
    )
    with pytest.raises(GraphError, match="approach"):
        enumerate_configurations(g, "x")


def _brute_force_maximal_sets(graph: RoadGraph, vertex: str) -> set[frozenset]:
    """Oracle: every maximal subedge subset passing the conflict predicate."""
    approach_of = {e.tail: e.approach for e in graph.inroads(vertex)}
    subedges = [(tail, lane) for tail in approach_of for lane in range(3)]
    compatible = []
    for r in range(1, len(subedges) + 1):
        for combo in itertools.combinations(subedges, r):
            ok = all(
                not movements_conflict(approach_of[t1], l1, approach_of[t2], l2)
                for (t1, l1), (t2, l2) in itertools.combinations(combo, 2))
            if ok:
                compatible.append(frozenset(combo))
    return {c for c in compatible
            if not any(c < other for other in compatible)}


def _t_junction() -> RoadGraph:
    edges = [
        DirectedEdge("up", "x", (10, 10, 10), approach="N"),
        DirectedEdge("down", "x", (10, 10, 10), approach="S"),
        DirectedEdge("side", "x", (10, 10, 10), approach="E"),
    ]
    return RoadGraph(vertices=["x", "up", "down", "side"], edges=edges)


@pytest.mark.parametrize("builder", [four_star, _t_junction],
                         ids=["four-leg", "three-leg"])
def test_enumerator_matches_brute_force(builder):
    g = builder()
    vertex = g.vertices[0] if builder is four_star else "x"
    got = {_members(c) for c in enumerate_configurations(g, vertex).configurations}
    assert got == _brute_force_maximal_sets(g, vertex)


def test_relabeling_preserves_configurations():
    base = four_star()
    swapped_edges = []
    for e in base.edges:
        approach = {"N": "S", "S": "N"}.get(e.approach, e.approach)
        swapped_edges.append(DirectedEdge(e.tail, e.head, e.capacity, approach))
    swapped = RoadGraph(vertices=list(base.vertices), edges=swapped_edges,
                        pseudo_diedges=list(base.pseudo_diedges))
    got_base = {_members(c) for c in enumerate_configurations(base, "a").configurations}
    got_swap = {_members(c) for c in enumerate_configurations(swapped, "a").configurations}
    assert got_base == got_swap


# --- validation ---------------------------------------------------------------

def test_validate_four_star_ok():
    star = four_star(capacity=1000.0)
    assert validate_graph(star, star.capacity_tensor()) == []


def test_validate_flags_stray_capacity():
    star = four_star()
    C = star.capacity_tensor()
    C[1, 2, 0] = 7.0  # no edge between two leaves
    problems = validate_graph(star, C)
    assert any("non-edge" in p for p in problems)


def test_validate_flags_overfull_quantity():
    star = four_star()
    C = star.capacity_tensor()
    Q = np.zeros_like(C)
    i, j = star.vertex_index("n"), star.vertex_index("a")
    Q[i, j, 1] = C[i, j, 1] + 1
    problems = validate_graph(star, C, Q)
    assert any(f"({i}, {j}, 1)" in p for p in problems)


# --- description files ---------------------------------------------------------

def test_graph_file_round_trip():
    star = four_star()
    text = serialize_graph(star)
    again = parse_graph(text)
    assert serialize_graph(again) == text
    assert again.vertices == star.vertices
    assert again.edges == star.edges
    assert again.pseudo_diedges == star.pseudo_diedges


def test_parse_graph_rejects_bad_section():
    with pytest.raises(GraphError, match="unknown section"):
        parse_graph("[roads]\nx\n")


def test_parse_graph_rejects_short_edge_line():
    with pytest.raises(GraphError, match="6 fields"):
        parse_graph("[vertices]\na\nb\n[edges]\na b 1 2\n")


def test_pseudo_diedges_not_in_capacity_tensor():
    star = four_star()
    C = star.capacity_tensor()
    # tensor mass comes from the 8 real edges only
    assert (C.sum(axis=2) > 0).sum() == len(star.edges)
    assert len(star.pseudo_diedges) == 4
