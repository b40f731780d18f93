"""Road-network model: intersections, lane-group subedges, order-3 tensors.

A road system is a directed graph whose vertices are intersections. Every
directed road (edge) is split into three lane groups, indexed 0=left,
1=middle, 2=right, so quantities live in dense arrays of shape
(|V|, |V|, 3): cell (i, j, k) describes lane group k of the road from
vertex i to vertex j. Roads attached to only one intersection ("pseudo
diedges") feed traffic into the network but never occupy a tensor cell.
"""

import math
from dataclasses import dataclass, field

import numpy as np

LANE_GROUPS = ("left", "middle", "right")
LEFT, MIDDLE, RIGHT = 0, 1, 2

# Compass labels for approach legs, in clockwise canonical order.
COMPASS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
_OPPOSITE = {
    "N": "S", "S": "N", "E": "W", "W": "E",
    "NE": "SW", "SW": "NE", "SE": "NW", "NW": "SE",
}


class GraphError(ValueError):
    """Raised for malformed graphs or tensor/graph mismatches."""


@dataclass(frozen=True)
class DirectedEdge:
    """One directed road. `capacity` holds the three lane-group capacities.

    `approach` is the compass position of the leg at the head vertex
    (e.g. the edge arriving from the north leg carries "N"); it is needed
    to enumerate signal configurations at the head.
    """

    tail: str
    head: str
    capacity: tuple[float, float, float]
    approach: str | None = None

    def __post_init__(self):
        if self.tail == self.head:
            raise GraphError(f"edge {self.tail}->{self.head}: tail equals head")
        if len(self.capacity) != 3:
            raise GraphError(f"edge {self.tail}->{self.head}: need 3 lane-group capacities")
        if any(c < 0 for c in self.capacity):
            raise GraphError(f"edge {self.tail}->{self.head}: negative capacity")
        if self.approach is not None and self.approach not in COMPASS:
            raise GraphError(f"edge {self.tail}->{self.head}: bad approach {self.approach!r}")


@dataclass(frozen=True)
class PseudoDiedge:
    """Stub road attached to a single vertex; carries inflow only."""

    vertex: str
    approach: str

    def __post_init__(self):
        if self.approach not in COMPASS:
            raise GraphError(f"pseudo-diedge at {self.vertex}: bad approach {self.approach!r}")


@dataclass
class RoadGraph:
    vertices: list[str]
    edges: list[DirectedEdge]
    pseudo_diedges: list[PseudoDiedge] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        vset = set(self.vertices)
        for e in self.edges:
            if e.tail not in vset or e.head not in vset:
                raise GraphError(f"edge {e.tail}->{e.head}: unknown vertex")
        seen = set()
        for e in self.edges:
            if (e.tail, e.head) in seen:
                raise GraphError(f"duplicate edge {e.tail}->{e.head}")
            seen.add((e.tail, e.head))
        for p in self.pseudo_diedges:
            if p.vertex not in vset:
                raise GraphError(f"pseudo-diedge at unknown vertex {p.vertex}")
        self._index = {v: i for i, v in enumerate(self.vertices)}

    def vertex_index(self, v: str) -> int:
        return self._index[v]

    def inroads(self, vertex: str) -> list[DirectedEdge]:
        return [e for e in self.edges if e.head == vertex]

    def capacity_tensor(self) -> np.ndarray:
        """Dense (|V|, |V|, 3) capacity tensor; zero on non-edge cells."""
        n = len(self.vertices)
        C = np.zeros((n, n, 3))
        for e in self.edges:
            C[self._index[e.tail], self._index[e.head], :] = e.capacity
        return C


def load_tensor(Q: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Cellwise quotient Q/C with dead cells (zero capacity) pinned to 0.

    Raises GraphError on shape mismatch, negative cells, or any cell where
    the quantity exceeds a positive capacity (corrupted state).
    """
    Q = np.asarray(Q, dtype=float)
    C = np.asarray(C, dtype=float)
    if Q.shape != C.shape:
        raise GraphError(f"shape mismatch: Q{Q.shape} vs C{C.shape}")
    if (Q < 0).any() or (C < 0).any():
        raise GraphError("negative quantity or capacity cell")
    bad = Q > C
    if bad.any():
        i, j, k = (int(x) for x in np.argwhere(bad)[0])
        raise GraphError(f"quantity exceeds capacity at cell ({i}, {j}, {k})")
    L = np.zeros_like(Q)
    np.divide(Q, C, out=L, where=C > 0)
    return L


# --- signal configurations -------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    """A set of inbound subedges at one vertex that may share a green.

    Members are (tail vertex, lane-group index) pairs; the head vertex is
    the configuration's own vertex.
    """

    vertex: str
    members: frozenset[tuple[str, int]]


@dataclass(frozen=True)
class ConfigurationSet:
    vertex: str
    configurations: tuple[Configuration, ...]

    def __len__(self) -> int:
        return len(self.configurations)


def movements_conflict(approach_a: str, lane_a: int, approach_b: str, lane_b: int) -> bool:
    """Whether two inbound subedges' traffic streams may not share a green.

    Movements from the same approach never conflict (parallel lanes fanning
    out). Across approaches, only antiparallel legs can be compatible, and
    then only within a movement class: left lanes (left turn + U-turn) pair
    with the opposing left lane, while middle/right lanes (through + right
    turn) pair with the opposing middle/right lanes. Mixing the classes, or
    pairing non-opposite legs, crosses a traffic stream.
    """
    if approach_a == approach_b:
        return False
    if _OPPOSITE.get(approach_a) != approach_b:
        return True
    return (lane_a == LEFT) != (lane_b == LEFT)


def enumerate_configurations(graph: RoadGraph, vertex: str) -> ConfigurationSet:
    """All maximal non-conflicting sets of inbound subedges at `vertex`.

    A four-leg intersection with legs N/E/S/W yields eight configurations:
    for each antiparallel pair, the two left lanes and the four
    middle+right lanes; plus, for each leg, all three of its own lanes.
    Legs without an antiparallel partner contribute only their own
    single-approach configuration.

    Raises GraphError if any inroad lacks an approach label or two inroads
    share one.
    """
    if vertex not in graph.vertices:
        raise GraphError(f"unknown vertex {vertex!r}")
    inroads = graph.inroads(vertex)
    if not inroads:
        return ConfigurationSet(vertex=vertex, configurations=())

    by_approach: dict[str, DirectedEdge] = {}
    for e in inroads:
        if e.approach is None:
            raise GraphError(f"inroad {e.tail}->{e.head} has no approach label")
        if e.approach in by_approach:
            raise GraphError(f"two inroads at {vertex} share approach {e.approach}")
        by_approach[e.approach] = e

    order = [a for a in COMPASS if a in by_approach]
    configs: list[Configuration] = []
    paired: set[str] = set()
    for a in order:
        b = _OPPOSITE[a]
        if b in by_approach and a not in paired:
            paired.update((a, b))
            ea, eb = by_approach[a], by_approach[b]
            configs.append(Configuration(vertex, frozenset(
                {(ea.tail, LEFT), (eb.tail, LEFT)})))
            configs.append(Configuration(vertex, frozenset(
                {(ea.tail, MIDDLE), (ea.tail, RIGHT), (eb.tail, MIDDLE), (eb.tail, RIGHT)})))
    for a in order:
        e = by_approach[a]
        configs.append(Configuration(vertex, frozenset(
            {(e.tail, LEFT), (e.tail, MIDDLE), (e.tail, RIGHT)})))
    return ConfigurationSet(vertex=vertex, configurations=tuple(configs))


def validate_graph(graph: RoadGraph, C: np.ndarray, Q: np.ndarray | None = None) -> list[str]:
    """Check graph/tensor consistency; returns a list of violations (empty = ok)."""
    problems: list[str] = []
    n = len(graph.vertices)
    C = np.asarray(C, dtype=float)
    if C.shape != (n, n, 3):
        return [f"capacity tensor shape {C.shape} does not match ({n}, {n}, 3)"]
    if (C < 0).any():
        problems.append("negative capacity cell")

    edge_cells = np.zeros((n, n), dtype=bool)
    for e in graph.edges:
        i, j = graph.vertex_index(e.tail), graph.vertex_index(e.head)
        edge_cells[i, j] = True
        for k in range(3):
            if not math.isclose(C[i, j, k], e.capacity[k], rel_tol=0, abs_tol=1e-12):
                problems.append(
                    f"capacity tensor cell ({i}, {j}, {k}) = {C[i, j, k]} "
                    f"disagrees with edge {e.tail}->{e.head} capacity {e.capacity[k]}")
    stray = (C.sum(axis=2) > 0) & ~edge_cells
    for i, j in np.argwhere(stray):
        problems.append(f"positive capacity at non-edge cell ({i}, {j})")

    if Q is not None:
        Q = np.asarray(Q, dtype=float)
        if Q.shape != C.shape:
            problems.append(f"quantity tensor shape {Q.shape} does not match {C.shape}")
            return problems
        if (Q < 0).any():
            problems.append("negative quantity cell")
        for i, j, k in np.argwhere(Q > C):
            problems.append(f"quantity exceeds capacity at cell ({i}, {j}, {k})")
        for i, j, k in np.argwhere((Q > 0) & (C == 0)):
            problems.append(f"vehicles on zero-capacity cell ({i}, {j}, {k})")
    return problems


def four_star(capacity: float = 1000.0,
              lane_split: tuple[float, float, float] = (0.25, 0.50, 0.25),
              center: str = "a") -> RoadGraph:
    """The single four-leg intersection: center `a` fed by legs n/e/s/w.

    Each leg contributes one inroad to the center and one outroad back;
    per-lane-group capacities are the inroad capacity times `lane_split`.
    """
    if abs(sum(lane_split) - 1.0) > 1e-9:
        raise GraphError("lane_split must sum to 1")
    caps = tuple(capacity * s for s in lane_split)
    legs = [("n", "N"), ("e", "E"), ("s", "S"), ("w", "W")]
    edges = []
    for leaf, approach in legs:
        edges.append(DirectedEdge(tail=leaf, head=center, capacity=caps, approach=approach))
    for leaf, approach in legs:
        edges.append(DirectedEdge(tail=center, head=leaf, capacity=caps,
                                  approach=_OPPOSITE[approach]))
    stubs = [PseudoDiedge(vertex=leaf, approach=approach) for leaf, approach in legs]
    return RoadGraph(vertices=[center, "n", "e", "s", "w"], edges=edges,
                     pseudo_diedges=stubs)


# --- plain-text graph description files ------------------------------------

def serialize_graph(graph: RoadGraph) -> str:
    """Render a graph in the section format accepted by `parse_graph`."""
    lines = ["[vertices]"]
    lines.extend(graph.vertices)
    lines.append("")
    lines.append("[edges]")
    lines.append("# tail head cap_left cap_middle cap_right approach")
    for e in graph.edges:
        approach = e.approach if e.approach is not None else "-"
        caps = " ".join(repr(float(c)) for c in e.capacity)
        lines.append(f"{e.tail} {e.head} {caps} {approach}")
    lines.append("")
    lines.append("[pseudo_diedges]")
    lines.append("# vertex approach")
    for p in graph.pseudo_diedges:
        lines.append(f"{p.vertex} {p.approach}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> RoadGraph:
    """Parse the plain-text graph description format.

    Three sections: `[vertices]` (one id per line), `[edges]` (tail, head,
    three lane-group capacities, approach label or `-`), and
    `[pseudo_diedges]` (vertex, approach). `#` starts a comment.
    """
    vertices: list[str] = []
    edges: list[DirectedEdge] = []
    stubs: list[PseudoDiedge] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("vertices", "edges", "pseudo_diedges"):
                raise GraphError(f"line {lineno}: unknown section [{section}]")
            continue
        if section == "vertices":
            vertices.append(line)
        elif section == "edges":
            parts = line.split()
            if len(parts) != 6:
                raise GraphError(f"line {lineno}: edge needs 6 fields, got {len(parts)}")
            tail, head = parts[0], parts[1]
            try:
                caps = tuple(float(p) for p in parts[2:5])
            except ValueError as exc:
                raise GraphError(f"line {lineno}: bad capacity: {exc}") from exc
            approach = None if parts[5] == "-" else parts[5]
            edges.append(DirectedEdge(tail=tail, head=head, capacity=caps, approach=approach))
        elif section == "pseudo_diedges":
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"line {lineno}: pseudo-diedge needs 2 fields")
            stubs.append(PseudoDiedge(vertex=parts[0], approach=parts[1]))
        else:
            raise GraphError(f"line {lineno}: content outside any section")
    return RoadGraph(vertices=vertices, edges=edges, pseudo_diedges=stubs)
