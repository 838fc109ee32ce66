"""Circuit decomposition of a slot-labelled 4-regular graph.

A circuit is traced by entering a vertex on one slot and leaving on its
partner (1<->3, 2<->4) until the starting edge comes round again. Circuits
are found in order of their lowest unused edge id, first traversing that
edge from endpoint ``a`` towards endpoint ``b``. If no pass of the circuit
then enters at slot 1 or 2 the circuit is re-traced in the opposite
direction, so every circuit has an initial hop entering at an x1/x2 slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from .graph import PARTNER, LabeledGraph, SlotRef, check_valid

CONVENTIONS = ("intersection", "neighbor")


def check_convention(convention: str) -> str:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown delta convention {convention!r}; use one of {CONVENTIONS}")
    return convention


@dataclass(frozen=True)
class Hop:
    edge: int
    entry: SlotRef
    exit: SlotRef

    @property
    def vertex(self) -> int:
        return self.entry.vertex


@dataclass(frozen=True)
class Circuit:
    id: int
    hops: tuple[Hop, ...]
    initial_hop: int

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(h.edge for h in self.hops)

    @property
    def initial_edge(self) -> int:
        return self.hops[self.initial_hop].edge

    @property
    def initial_slot(self) -> SlotRef:
        """The x1/x2 slot whose half-value is the circuit's value."""
        return self.hops[self.initial_hop].entry

    @property
    def vertices(self) -> tuple[int, ...]:
        """Vertices in pass order (repeats mean a self-intersection)."""
        return tuple(h.vertex for h in self.hops)

    def __len__(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class Decomposition:
    circuits: tuple[Circuit, ...]
    vertex_count: int
    shared_vertices: dict[tuple[int, int], int] = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.circuits)

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in self.circuits]
        for (i, j), count in self.shared_vertices.items():
            if count:
                nbrs[i].add(j)
                nbrs[j].add(i)
        return tuple(frozenset(s) for s in nbrs)

    @cached_property
    def self_intersections(self) -> tuple[int, ...]:
        out = []
        for c in self.circuits:
            verts = c.vertices
            out.append(len(verts) - len(set(verts)))
        return tuple(out)

    @cached_property
    def delta_neighbor(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.adjacency)

    @cached_property
    def delta_intersection(self) -> tuple[int, ...]:
        totals = [0] * self.n
        for (i, j), count in self.shared_vertices.items():
            totals[i] += count
            totals[j] += count
        return tuple(totals)

    def deltas(self, convention: str = "intersection") -> tuple[int, ...]:
        if check_convention(convention) == "neighbor":
            return self.delta_neighbor
        return self.delta_intersection

    def delta_max(self, convention: str = "intersection") -> int:
        return max(self.deltas(convention), default=0)

    def shared(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("shared() needs two distinct circuits")
        return self.shared_vertices.get((min(i, j), max(i, j)), 0)

    @cached_property
    def coherent(self) -> bool:
        return all(h.entry.slot in (1, 2) for c in self.circuits for h in c.hops)

    @property
    def is_self_intersection_free(self) -> bool:
        return not any(self.self_intersections)

    @cached_property
    def two_by_two_free(self) -> bool:
        adj = self.adjacency
        for i in range(self.n):
            for j in adj[i]:
                if j > i and adj[i] & adj[j]:
                    return False
        return True

    @property
    def single_intersection(self) -> bool:
        """Every adjacent pair shares exactly one vertex."""
        return all(count <= 1 for count in self.shared_vertices.values())

    @cached_property
    def passes(self) -> dict[int, list[tuple[int, Hop]]]:
        """Vertex -> list of (circuit id, hop) passing through it."""
        out: dict[int, list[tuple[int, Hop]]] = {v: [] for v in range(self.vertex_count)}
        for c in self.circuits:
            for h in c.hops:
                out[h.vertex].append((c.id, h))
        return out

    def to_json(self, convention: str = "intersection") -> dict:
        deltas = self.deltas(convention)
        return {
            "convention": convention,
            "n": self.n,
            "circuits": [
                {
                    "id": c.id,
                    "edges": list(c.edges),
                    "initial_edge": c.initial_edge,
                    "initial_slot": {"v": c.initial_slot.vertex, "slot": c.initial_slot.slot},
                    "delta": deltas[c.id],
                }
                for c in self.circuits
            ],
            "adjacency": [
                {"i": i, "j": j, "shared_vertices": count}
                for (i, j), count in sorted(self.shared_vertices.items())
                if count
            ],
            "delta_max": self.delta_max(convention),
            "flags": {
                "two_by_two_free": self.two_by_two_free,
                "coherent": self.coherent,
                "self_intersection_free": self.is_self_intersection_free,
            },
        }


def _trace(g: LabeledGraph, slot_edge: dict[SlotRef, int], start: int, forward: bool) -> list[Hop]:
    e0 = g.edges[start]
    origin = e0.a if forward else e0.b
    edge, here = start, origin
    hops = []
    while True:
        entry = g.edges[edge].other(here)
        exit_ = SlotRef(entry.vertex, PARTNER[entry.slot])
        hops.append(Hop(edge, entry, exit_))
        edge, here = slot_edge[exit_], exit_
        if edge == start and here == origin:
            return hops


def decompose(g: LabeledGraph) -> Decomposition:
    """Partition the edges of ``g`` into circuits routed along slot pairs."""
    check_valid(g)
    slot_edge = g.endpoint_map()
    used = [False] * len(g.edges)
    circuits: list[Circuit] = []
    for start in range(len(g.edges)):
        if used[start]:
            continue
        hops = _trace(g, slot_edge, start, forward=True)
        if not any(h.entry.slot in (1, 2) for h in hops):
            hops = _trace(g, slot_edge, start, forward=False)
        initial = next(t for t, h in enumerate(hops) if h.entry.slot in (1, 2))
        for h in hops:
            used[h.edge] = True
        circuits.append(Circuit(len(circuits), tuple(hops), initial))

    on_vertex: list[set[int]] = [set() for _ in range(g.vertex_count)]
    for c in circuits:
        for v in c.vertices:
            on_vertex[v].add(c.id)
    shared: dict[tuple[int, int], int] = {}
    for ids in on_vertex:
        for i, j in combinations(sorted(ids), 2):
            shared[(i, j)] = shared.get((i, j), 0) + 1
    return Decomposition(tuple(circuits), g.vertex_count, shared)


def neighbors(d: Decomposition, i: int) -> frozenset[int]:
    return d.adjacency[i]


def delta(d: Decomposition, i: int, convention: str = "intersection") -> int:
    return d.deltas(convention)[i]


def is_two_by_two_free(d: Decomposition) -> bool:
    """No three circuits pairwise share a vertex (triangle-free adjacency)."""
    return d.two_by_two_free


def is_coherent(d: Decomposition) -> bool:
    """Every pass of every circuit enters its vertex at slot 1 or 2.

    Under this condition the x1/x2 half-value at each pass equals the
    circuit's value, so adjacency-level validity matches the vertex weights.
    """
    return d.coherent


def has_self_intersection(d: Decomposition, i: int) -> bool:
    return d.self_intersections[i] > 0


def is_isolated(d: Decomposition, i: int) -> bool:
    return not d.adjacency[i]
