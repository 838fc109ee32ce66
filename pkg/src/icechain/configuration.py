"""Circuit-level configurations and their weights.

A configuration is a tuple of 0/1 values indexed by circuit id. Its value
on a circuit is the half-value at the circuit's initial x1/x2 slot; every
other half-value follows by alternation (across each edge, and through each
vertex pass). Half-value 1 at a slot means the edge points out of that
vertex.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .constraint import ConstraintFunction4, evaluate, parse_rational
from .decomposition import Decomposition
from .graph import LabeledGraph, SlotRef

Configuration = tuple[int, ...]


class InstanceError(ValueError):
    """The instance violates an assumption the circuit-level model relies on."""


def require_chain_instance(d: Decomposition) -> None:
    problems = []
    if not d.coherent:
        problems.append("not coherent (some circuit pass enters at slot 3 or 4)")
    if not d.is_self_intersection_free:
        bad = [i for i, k in enumerate(d.self_intersections) if k]
        problems.append(f"self-intersecting circuits {bad}")
    if problems:
        raise InstanceError(
            "circuit-level validity does not match the vertex weights here: " + "; ".join(problems)
        )


def to_mask(sigma: Sequence[int]) -> int:
    mask = 0
    for i, bit in enumerate(sigma):
        if bit:
            mask |= 1 << i
    return mask


def from_mask(mask: int, n: int) -> Configuration:
    return tuple((mask >> i) & 1 for i in range(n))


def neighbor_masks(d: Decomposition) -> tuple[int, ...]:
    return tuple(sum(1 << j for j in nbrs) for nbrs in d.adjacency)


def _check_length(sigma: Sequence[int], d: Decomposition) -> None:
    if len(sigma) != d.n:
        raise ValueError(f"configuration has length {len(sigma)}, expected {d.n}")
    if any(bit not in (0, 1) for bit in sigma):
        raise ValueError("configuration entries must be 0 or 1")


def is_valid(sigma: Sequence[int], d: Decomposition, strict: bool = True) -> bool:
    """No two adjacent circuits are both 1.

    With ``strict`` the instance must be coherent and self-intersection free,
    otherwise this rule does not describe the nonzero-weight assignments.
    """
    _check_length(sigma, d)
    if strict:
        require_chain_instance(d)
    ones = [i for i, bit in enumerate(sigma) if bit]
    return not any(j in d.adjacency[i] for i in ones for j in ones if j > i)


def mu_weight(
    sigma: Sequence[int], d: Decomposition, b, convention: str = "intersection", strict: bool = True
) -> Fraction:
    """Unnormalised stationary weight: product of ``b**delta_i`` over 1-circuits."""
    b = parse_rational(b)
    if not is_valid(sigma, d, strict=strict):
        raise ValueError(f"configuration {tuple(sigma)} is not valid")
    deltas = d.deltas(convention)
    weight = Fraction(1)
    for i, bit in enumerate(sigma):
        if bit:
            weight *= b ** deltas[i]
    return weight


def half_values(sigma: Sequence[int], d: Decomposition) -> dict[SlotRef, int]:
    """Value at every (vertex, slot), propagated around each circuit."""
    _check_length(sigma, d)
    values: dict[SlotRef, int] = {}
    for c in d.circuits:
        k = len(c.hops)
        value = sigma[c.id]  # at the entry half of the initial hop
        for step in range(k):
            hop = c.hops[(c.initial_hop + step) % k]
            values[hop.entry] = value
            values[hop.exit] = 1 - value  # through the vertex
            value = 1 - values[hop.exit]  # across the next edge
        if value != sigma[c.id]:
            raise AssertionError(f"propagation around circuit {c.id} is inconsistent")
    return values


def exact_weight(
    sigma: Sequence[int], g: LabeledGraph, f: ConstraintFunction4, d: Decomposition
) -> Fraction:
    """Product over vertices of ``f`` at the local (x1, x2, x3, x4)."""
    values = half_values(sigma, d)
    weight = Fraction(1)
    for v in range(g.vertex_count):
        weight *= evaluate(f, tuple(values[SlotRef(v, s)] for s in (1, 2, 3, 4)))
        if not weight:
            break
    return weight


def to_orientation(sigma: Sequence[int], g: LabeledGraph, d: Decomposition) -> dict[int, tuple[SlotRef, SlotRef]]:
    """Edge id -> (tail slot, head slot); the tail end carries half-value 1."""
    values = half_values(sigma, d)
    out = {}
    for e in g.edges:
        if values[e.a] == values[e.b]:
            raise AssertionError(f"edge {e.id} has equal half-values")
        out[e.id] = (e.a, e.b) if values[e.a] == 1 else (e.b, e.a)
    return out


def orientation_json(orientation: dict[int, tuple[SlotRef, SlotRef]]) -> dict[str, dict[str, int]]:
    return {
        str(eid): {"tail": tail.vertex, "head": head.vertex}
        for eid, (tail, head) in sorted(orientation.items())
    }


def ice_rule_holds(orientation: dict[int, tuple[SlotRef, SlotRef]], vertex_count: int) -> bool:
    """Every vertex has exactly two outgoing and two incoming edge ends."""
    outs = [0] * vertex_count
    ins = [0] * vertex_count
    for tail, head in orientation.values():
        outs[tail.vertex] += 1
        ins[head.vertex] += 1
    return all(o == 2 and i == 2 for o, i in zip(outs, ins))
