"""Brute-force ground truth for small instances.

Everything here is built from the circuit-level rules directly (not from
the sampler code), in exact rational arithmetic. Only the total-variation
curves switch to extended-precision floats, after the exact transition
matrix has been assembled.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .configuration import Configuration, from_mask, neighbor_masks, to_mask
from .constraint import parse_rational
from .decomposition import Decomposition, check_convention

MAX_CIRCUITS = 20
MAX_STATES = 5000


class StateSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class StateSpace:
    n: int
    masks: tuple[int, ...]
    index: dict[int, int] = field(compare=False, repr=False)

    @property
    def states(self) -> list[Configuration]:
        return [from_mask(m, self.n) for m in self.masks]

    def __len__(self) -> int:
        return len(self.masks)

    def __contains__(self, sigma) -> bool:
        key = sigma if isinstance(sigma, int) else to_mask(sigma)
        return key in self.index

    def id_of(self, sigma: Sequence[int]) -> int:
        return self.index[to_mask(sigma)]


@dataclass
class TransitionMatrix:
    """Sparse exact stochastic matrix; ``rows[i]`` maps column -> probability."""

    rows: list[dict[int, Fraction]]

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.rows[i].get(j, Fraction(0))

    def row_sums(self) -> list[Fraction]:
        return [sum(r.values(), Fraction(0)) for r in self.rows]

    def dense(self, dtype=np.longdouble) -> np.ndarray:
        size = len(self.rows)
        out = np.zeros((size, size), dtype=dtype)
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                out[i, j] = to_longdouble(p) if dtype == np.longdouble else float(p)
        return out


def to_longdouble(x: Fraction) -> np.longdouble:
    with localcontext() as ctx:
        ctx.prec = 40
        return np.longdouble(str(Decimal(x.numerator) / Decimal(x.denominator)))


def enumerate_omega(
    d: Decomposition, max_circuits: int = MAX_CIRCUITS, max_states: int = MAX_STATES
) -> StateSpace:
    """All independent sets of the circuit adjacency graph, sorted by bitmask."""
    if d.n > max_circuits:
        raise StateSpaceTooLarge(f"{d.n} circuits exceeds the cap of {max_circuits}")
    nbr = neighbor_masks(d)
    found: list[int] = []

    def extend(i: int, mask: int) -> None:
        if len(found) > max_states:
            raise StateSpaceTooLarge(f"more than {max_states} valid configurations")
        if i == d.n:
            found.append(mask)
            return
        extend(i + 1, mask)
        if not mask & nbr[i]:
            extend(i + 1, mask | (1 << i))

    extend(0, 0)
    masks = tuple(sorted(found))
    return StateSpace(d.n, masks, {m: k for k, m in enumerate(masks)})


def _weights(space: StateSpace, d: Decomposition, b: Fraction, convention: str) -> list[Fraction]:
    deltas = d.deltas(convention)
    factors = [b**k for k in deltas]
    out = []
    for m in space.masks:
        w = Fraction(1)
        for i in range(space.n):
            if m >> i & 1:
                w *= factors[i]
        out.append(w)
    return out


def exact_partition(
    d: Decomposition, b, convention: str = "intersection", space: Optional[StateSpace] = None
) -> Fraction:
    b = parse_rational(b)
    check_convention(convention)
    space = space or enumerate_omega(d)
    return sum(_weights(space, d, b, convention), Fraction(0))


def exact_mu(
    d: Decomposition, b, convention: str = "intersection", space: Optional[StateSpace] = None
) -> list[Fraction]:
    """Stationary probabilities, aligned with ``space.masks``."""
    b = parse_rational(b)
    check_convention(convention)
    space = space or enumerate_omega(d)
    weights = _weights(space, d, b, convention)
    z = sum(weights, Fraction(0))
    return [w / z for w in weights]


def transition_matrix(
    d: Decomposition, b, convention: str = "intersection", space: Optional[StateSpace] = None
) -> TransitionMatrix:
    """Exact one-step kernel of the circuit chain on ``space``."""
    b = parse_rational(b)
    space = space or enumerate_omega(d)
    deltas = d.deltas(check_convention(convention))
    nbr = neighbor_masks(d)
    pick = Fraction(1, d.n)
    up = [b**k / (1 + b**k) for k in deltas]
    rows: list[dict[int, Fraction]] = []
    for mask in space.masks:
        row: dict[int, Fraction] = {}
        for i in range(d.n):
            bit = 1 << i
            target_up = mask if mask & nbr[i] else mask | bit
            target_down = mask & ~bit
            for target, p in ((target_up, up[i]), (target_down, 1 - up[i])):
                if p:
                    j = space.index[target]
                    row[j] = row.get(j, Fraction(0)) + pick * p
        rows.append(row)
    return TransitionMatrix(rows)


def stationarity_residual(P: TransitionMatrix, mu: Sequence[Fraction]) -> Fraction:
    """``max_j |(mu P)_j - mu_j|`` in exact arithmetic."""
    out = [Fraction(0)] * len(mu)
    for i, row in enumerate(P.rows):
        for j, p in row.items():
            out[j] += mu[i] * p
    return max((abs(a - b) for a, b in zip(out, mu)), default=Fraction(0))


def check_detailed_balance(P: TransitionMatrix, mu: Sequence[Fraction]) -> Fraction:
    """``max_{i,j} |mu_i P_ij - mu_j P_ji|``; zero for a reversible chain."""
    worst = Fraction(0)
    for i, row in enumerate(P.rows):
        for j, p in row.items():
            worst = max(worst, abs(mu[i] * p - mu[j] * P[j, i]))
    return worst


def check_irreducible_aperiodic(P: TransitionMatrix) -> bool:
    """Strongly connected positive-transition digraph with a positive self-loop."""
    size = len(P.rows)
    if size == 0:
        return False
    forward = [[j for j, p in row.items() if p > 0] for row in P.rows]
    backward: list[list[int]] = [[] for _ in range(size)]
    for i, targets in enumerate(forward):
        for j in targets:
            backward[j].append(i)

    def reaches_all(adj: list[list[int]]) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == size

    has_loop = any(P[i, i] > 0 for i in range(size))
    return has_loop and reaches_all(forward) and reaches_all(backward)


def tv_curve(P: TransitionMatrix, mu: Sequence[Fraction], t_max: int) -> np.ndarray:
    """``Delta_max(t) = max_i 1/2 sum_j |P^t_ij - mu_j|`` for t = 0..t_max.

    Computed in x87 extended precision; see :func:`tv_error_bound`.
    """
    M = P.dense(np.longdouble)
    target = np.array([to_longdouble(m) for m in mu], dtype=np.longdouble)
    D = np.eye(len(mu), dtype=np.longdouble)
    out = np.empty(t_max + 1, dtype=np.longdouble)
    for t in range(t_max + 1):
        if t:
            D = D @ M
        out[t] = (np.abs(D - target).sum(axis=1) / 2).max()
    return out


def tv_error_bound(size: int, t: int) -> float:
    """First-order bound on the rounding error of ``tv_curve`` at time ``t``.

    Each row update ``x -> x M`` adds at most ``size * eps`` in l1 from the
    summation plus ``eps`` from the rounded entries of ``M``, and a
    stochastic ``M`` does not grow earlier errors. The rounded ``mu`` and
    the final sum add one more such term.
    """
    eps = float(np.finfo(np.longdouble).eps)
    return (t + 2) * (size + 1) * eps


def mixing_time(curve: Sequence[float], eps: float) -> Optional[int]:
    """First ``t`` after which the curve stays at or below ``eps`` (None if never)."""
    last_bad = None
    for t, value in enumerate(curve):
        if value > eps:
            last_bad = t
    if last_bad is None:
        return 0
    return last_bad + 1 if last_bad + 1 < len(curve) else None


class PhiMetric:
    """Shortest-path potential over the state graph of single-circuit flips.

    Flipping circuit ``i`` between ``s`` (with ``s_i = 0``) and ``s + i`` costs
    the adjacent-pair potential ``delta_i - w |B(s, i)|``.
    """

    def __init__(self, d: Decomposition, b, convention: str = "intersection", space: Optional[StateSpace] = None):
        from .coupling import blocked_set, potential_weight

        self.d = d
        self.b = parse_rational(b)
        self.convention = check_convention(convention)
        self.space = space or enumerate_omega(d)
        self.w = potential_weight(self.b, d.delta_max(convention))
        deltas = d.deltas(convention)
        self._graph: dict[int, list[tuple[int, Fraction]]] = {m: [] for m in self.space.masks}
        for m in self.space.masks:
            sigma = from_mask(m, d.n)
            for i in range(d.n):
                up = m | (1 << i)
                if m >> i & 1 or up not in self.space.index:
                    continue
                cost = deltas[i] - self.w * len(blocked_set(sigma, i, d))
                self._graph[m].append((up, cost))
                self._graph[up].append((m, cost))
        self._cache: dict[int, dict[int, Fraction]] = {}

    def edge(self, sigma: Sequence[int], i: int) -> Fraction:
        m = to_mask(sigma)
        up = m | (1 << i)
        for target, cost in self._graph[m & ~(1 << i)]:
            if target == up:
                return cost
        raise ValueError("not an adjacent pair of valid states")

    def _from(self, source: int) -> dict[int, Fraction]:
        if source not in self._cache:
            dist = {source: Fraction(0)}
            heap = [(Fraction(0), source)]
            done = set()
            while heap:
                dd, m = heapq.heappop(heap)
                if m in done:
                    continue
                done.add(m)
                for target, cost in self._graph[m]:
                    nd = dd + cost
                    if target not in dist or nd < dist[target]:
                        dist[target] = nd
                        heapq.heappush(heap, (nd, target))
            self._cache[source] = dist
        return self._cache[source]

    def distance(self, sigma, eta) -> Fraction:
        s = sigma if isinstance(sigma, int) else to_mask(sigma)
        t = eta if isinstance(eta, int) else to_mask(eta)
        dist = self._from(s)
        if t not in dist:
            raise ValueError("states are not connected in the flip graph")
        return dist[t]


def phi_metric(sigma, eta, d: Decomposition, b, convention: str = "intersection") -> Fraction:
    return PhiMetric(d, b, convention).distance(sigma, eta)
