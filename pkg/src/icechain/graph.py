"""Slot-labelled 4-regular multigraphs and the JSON instance format.

Every vertex has four named slots 1..4 (the variable positions x1..x4 of the
constraint function sitting on it). An edge joins two slots; loops and
parallel edges are allowed. The degree-2 disequality nodes of the
edge-vertex incidence graph are implicit: an edge's two half-values are
always unequal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

SLOTS = (1, 2, 3, 4)
# slot pairs routed through a vertex: x1 <-> x3, x2 <-> x4
PARTNER = {1: 3, 3: 1, 2: 4, 4: 2}


class GraphFormatError(ValueError):
    """Malformed or invalid instance file."""


@dataclass(frozen=True, order=True)
class SlotRef:
    vertex: int
    slot: int

    def __post_init__(self) -> None:
        if self.slot not in SLOTS:
            raise ValueError(f"slot must be in 1..4, got {self.slot!r}")


@dataclass(frozen=True)
class Edge:
    id: int
    a: SlotRef
    b: SlotRef

    def other(self, end: SlotRef) -> SlotRef:
        if end == self.a:
            return self.b
        if end == self.b:
            return self.a
        raise ValueError(f"{end} is not an endpoint of edge {self.id}")


@dataclass(frozen=True)
class LabeledGraph:
    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))

    @classmethod
    def from_pairs(cls, vertex_count: int, pairs: Iterable[tuple[tuple[int, int], tuple[int, int]]]) -> "LabeledGraph":
        """Build from ``[((va, slot_a), (vb, slot_b)), ...]``; ids follow list order."""
        edges = tuple(
            Edge(i, SlotRef(*a), SlotRef(*b)) for i, (a, b) in enumerate(pairs)
        )
        return cls(vertex_count, edges)

    def endpoint_map(self) -> dict[SlotRef, int]:
        """Map each used slot to the id of the edge attached there."""
        out: dict[SlotRef, int] = {}
        for e in self.edges:
            out.setdefault(e.a, e.id)
            out.setdefault(e.b, e.id)
        return out

    def to_json(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "edges": [
                {
                    "id": e.id,
                    "a": {"v": e.a.vertex, "slot": e.a.slot},
                    "b": {"v": e.b.vertex, "slot": e.b.slot},
                }
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, data: object) -> "LabeledGraph":
        return _parse_instance(data)


def validate(g: LabeledGraph) -> list[str]:
    """Return a list of violations; empty iff ``g`` is a well-formed instance."""
    problems: list[str] = []
    if g.vertex_count < 0:
        problems.append(f"negative vertex count {g.vertex_count}")
    for pos, e in enumerate(g.edges):
        if e.id != pos:
            problems.append(f"edge ids not dense: position {pos} has id {e.id}")
        for end in (e.a, e.b):
            if not 0 <= end.vertex < g.vertex_count:
                problems.append(f"edge {e.id}: vertex {end.vertex} out of range")
        if e.a == e.b:
            problems.append(f"edge {e.id}: both endpoints on ({e.a.vertex},{e.a.slot})")
    seen: dict[SlotRef, int] = {}
    for e in g.edges:
        ends = (e.a,) if e.a == e.b else (e.a, e.b)
        for end in ends:
            if end in seen:
                problems.append(
                    f"duplicate slot ({end.vertex},{end.slot}) used by edges {seen[end]} and {e.id}"
                )
            else:
                seen[end] = e.id
    for v in range(max(g.vertex_count, 0)):
        for s in SLOTS:
            if SlotRef(v, s) not in seen:
                problems.append(f"unused slot ({v},{s})")
    return problems


def check_valid(g: LabeledGraph) -> LabeledGraph:
    problems = validate(g)
    if problems:
        raise GraphFormatError("invalid instance: " + "; ".join(problems))
    return g


# -- fixtures and families ---------------------------------------------------


def gen_theta() -> LabeledGraph:
    """One vertex carrying two loops, on slots (1,3) and (2,4)."""
    return LabeledGraph.from_pairs(1, [((0, 1), (0, 3)), ((0, 2), (0, 4))])


def gen_fig2() -> LabeledGraph:
    """Two vertices joined by four parallel edges forming two circuits.

    Circuit 0 runs v0 -> v1 -> v0 through slots 1/3, circuit 1 through
    slots 2/4; every pass enters its vertex at slot 1 or 2.
    """
    return LabeledGraph.from_pairs(
        2,
        [
            ((0, 3), (1, 1)),
            ((1, 4), (0, 2)),
            ((1, 3), (0, 1)),
            ((0, 4), (1, 2)),
        ],
    )


def gen_torus(rows: int, cols: int) -> LabeledGraph:
    """``rows x cols`` toroidal grid.

    Row circuits use the (x1, x3) pair, column circuits (x2, x4). Edges run
    from an exit slot (3 or 4) to an entry slot (1 or 2), so the instance is
    coherent. Row edges come first, so rows get the lower circuit ids.
    """
    if rows < 2 or cols < 2:
        raise ValueError(f"torus needs rows, cols >= 2, got {rows}x{cols}")

    def vid(r: int, c: int) -> int:
        return r * cols + c

    pairs = []
    for r in range(rows):
        for c in range(cols):
            pairs.append(((vid(r, c), 3), (vid(r, (c + 1) % cols), 1)))
    for r in range(rows):
        for c in range(cols):
            pairs.append(((vid(r, c), 4), (vid((r + 1) % rows, c), 2)))
    return LabeledGraph.from_pairs(rows * cols, pairs)


def gen_chain(k: int) -> LabeledGraph:
    """Instance whose circuits C0..C{k-1} form a path, one shared vertex per link.

    Vertex ``t`` is shared by circuits ``t`` (slots 1/3) and ``t+1`` (slots
    2/4); end circuits are single loops. ``k == 1`` cannot avoid a
    self-intersection: it is a single vertex with loops on (3,1) and (2,4)
    forming one circuit that passes its vertex twice.
    """
    if k < 1:
        raise ValueError(f"chain length must be >= 1, got {k}")
    if k == 1:
        return LabeledGraph.from_pairs(1, [((0, 1), (0, 4)), ((0, 2), (0, 3))])
    return _circuit_ring(k, closed=False)


def gen_cycle(k: int) -> LabeledGraph:
    """Like :func:`gen_chain` but the circuit adjacency is the cycle ``C_k``.

    ``k == 3`` gives three mutually intersecting circuits (not
    two-by-two-intersection free).
    """
    if k < 3:
        raise ValueError(f"cycle length must be >= 3, got {k}")
    return _circuit_ring(k, closed=True)


def _circuit_ring(k: int, closed: bool) -> LabeledGraph:
    # shared vertex t joins circuit t (pair 1/3) and circuit t+1 (pair 2/4)
    nverts = k if closed else k - 1
    pairs = []
    for t in range(k):
        low = (t - 1) % k if closed else t - 1  # t uses slots 2/4 here
        high = t if t < nverts else -1  # t uses slots 1/3 here
        if low >= 0 and high >= 0:
            pairs.append(((low, 4), (high, 1)))
            pairs.append(((high, 3), (low, 2)))
        elif high >= 0:
            pairs.append(((high, 3), (high, 1)))
        else:
            pairs.append(((low, 4), (low, 2)))
    return LabeledGraph.from_pairs(nverts, pairs)


def gen_random(
    num_vertices: int,
    seed: Optional[int] = None,
    max_circuits: Optional[int] = None,
    max_tries: int = 10_000,
) -> LabeledGraph:
    """Random coherent, self-intersection-free instance.

    Each exit slot (3 or 4) is wired to an entry slot (1 or 2) by a uniform
    random bijection, which makes every traversal enter vertices at slot 1
    or 2. Draws are rejected until no circuit passes a vertex twice (and,
    if given, the circuit count is at most ``max_circuits``).
    """
    from .decomposition import decompose

    if num_vertices < 1:
        raise ValueError("need at least one vertex")
    rng = np.random.default_rng(seed)
    exits = [(v, s) for v in range(num_vertices) for s in (3, 4)]
    entries = [(v, s) for v in range(num_vertices) for s in (1, 2)]
    for _ in range(max_tries):
        perm = rng.permutation(len(entries))
        g = LabeledGraph.from_pairs(
            num_vertices, [(exits[i], entries[int(perm[i])]) for i in range(len(exits))]
        )
        d = decompose(g)
        if d.is_self_intersection_free and (max_circuits is None or d.n <= max_circuits):
            return g
    raise RuntimeError(f"no acceptable instance after {max_tries} draws")


FAMILIES = ("theta", "fig2", "torus", "chain", "cycle", "random")


# -- file format -------------------------------------------------------------


def _field_int(obj: object, key: str, where: str) -> int:
    if not isinstance(obj, dict) or key not in obj:
        raise GraphFormatError(f"{where}: missing field '{key}'")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise GraphFormatError(f"{where}.{key}: expected integer, got {value!r}")
    return value


def _parse_slot(obj: object, where: str) -> SlotRef:
    v = _field_int(obj, "v", where)
    s = _field_int(obj, "slot", where)
    if s not in SLOTS:
        raise GraphFormatError(f"{where}.slot: slot must be in 1..4, got {s}")
    return SlotRef(v, s)


def _parse_instance(data: object) -> LabeledGraph:
    n = _field_int(data, "vertices", "instance")
    raw = data.get("edges") if isinstance(data, dict) else None
    if not isinstance(raw, list):
        raise GraphFormatError("instance.edges: expected a list")
    edges = []
    for pos, item in enumerate(raw):
        where = f"edges[{pos}]"
        eid = _field_int(item, "id", where)
        edges.append(Edge(eid, _parse_slot(item.get("a"), f"{where}.a"), _parse_slot(item.get("b"), f"{where}.b")))
    edges.sort(key=lambda e: e.id)
    return check_valid(LabeledGraph(n, tuple(edges)))


def dumps(g: LabeledGraph) -> str:
    return json.dumps(g.to_json(), indent=2) + "\n"


def loads(text: str) -> LabeledGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return _parse_instance(data)


def save(g: LabeledGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(g))


def load(path: Union[str, Path]) -> LabeledGraph:
    return loads(Path(path).read_text())
