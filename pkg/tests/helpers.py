"""Shared fixtures and brute-force oracles that do not reuse library internals."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product

from icechain.decomposition import decompose
from icechain.graph import gen_chain, gen_cycle, gen_fig2, gen_random, gen_theta, gen_torus


@lru_cache(maxsize=None)
def named_fixtures() -> dict:
    """Deterministic fixtures keyed by name: (graph, decomposition)."""
    graphs = {
        "theta": gen_theta(),
        "fig2": gen_fig2(),
        "torus22": gen_torus(2, 2),
        "torus23": gen_torus(2, 3),
        "torus33": gen_torus(3, 3),
    }
    for k in range(1, 11):
        graphs[f"chain{k}"] = gen_chain(k)
    for k in (3, 4, 5, 6):
        graphs[f"cycle{k}"] = gen_cycle(k)
    return {name: (g, decompose(g)) for name, g in graphs.items()}


@lru_cache(maxsize=None)
def random_fixtures(count: int = 20) -> tuple:
    """Random coherent instances with at most 12 circuits."""
    out = []
    for seed in range(count):
        g = gen_random(4 + seed % 7, seed=1000 + seed, max_circuits=12)
        out.append((f"random{seed}", g, decompose(g)))
    return tuple(out)


def adjacency_sets(d) -> list[set[int]]:
    """Circuit adjacency rebuilt from vertex incidence, independent of the library."""
    at_vertex: dict[int, set[int]] = {}
    for c in d.circuits:
        for hop in c.hops:
            at_vertex.setdefault(hop.entry.vertex, set()).add(c.id)
    adj = [set() for _ in range(d.n)]
    for ids in at_vertex.values():
        for i in ids:
            adj[i] |= ids - {i}
    return adj


def brute_omega(d) -> list[tuple[int, ...]]:
    adj = adjacency_sets(d)
    return [
        s
        for s in product((0, 1), repeat=d.n)
        if not any(s[i] and s[j] for i in range(d.n) for j in adj[i])
    ]


def brute_partition(d, b, deltas) -> Fraction:
    b = Fraction(b)
    total = Fraction(0)
    for s in brute_omega(d):
        w = Fraction(1)
        for i, bit in enumerate(s):
            if bit:
                w *= b ** deltas[i]
        total += w
    return total


def fibonacci(k: int) -> int:
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a
