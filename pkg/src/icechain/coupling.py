"""Path coupling for the circuit chain.

Two copies are driven by the same (circuit, u) draw. For an adjacent pair
``sigma ~ sigma + C_i`` the potential is ``delta_i - w |B(sigma, C_i)|`` with
``w = b*delta / (b**delta + 2)``, where ``B`` is the set of blocked
neighbours of ``C_i``; general pairs use the shortest-path extension
(:class:`icechain.exactness.PhiMetric`).

:func:`exact_drift` enumerates every draw for one adjacent pair, computes
the exact expected change of the potential, and compares each circuit's
contribution with the closed-form case analysis (moves on ``C_i``, on its
neighbours ``C_j`` and on neighbours-of-neighbours ``C_k``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .chain import GlauberChain, MoveDraw
from .configuration import Configuration, from_mask, is_valid, neighbor_masks, to_mask
from .constraint import parse_rational
from .decomposition import Decomposition, check_convention, decompose


class OutsideProvenRegion(ValueError):
    """``b * delta > 1``: the contraction argument gives no bound there."""


def _number(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)
    return parse_rational(x)


def potential_weight(b, delta: int) -> Fraction:
    b = _number(b)
    return b * delta / (b**delta + 2)


def blocked_set(sigma: Sequence[int], i: int, d: Decomposition) -> frozenset[int]:
    """Neighbours of ``C_i`` that have some neighbour set to 1 in ``sigma``."""
    if sigma[i]:
        raise ValueError("blocked_set expects the 0-side of the pair (sigma[i] == 0)")
    adj = d.adjacency
    return frozenset(j for j in adj[i] if any(sigma[k] for k in adj[j]))


def phi_adjacent(sigma: Sequence[int], i: int, d: Decomposition, b, convention: str = "intersection") -> Fraction:
    w = potential_weight(b, d.delta_max(convention))
    return d.deltas(convention)[i] - w * len(blocked_set(sigma, i, d))


@dataclass(frozen=True)
class AdjacentPair:
    sigma: Configuration
    i: int

    @property
    def partner(self) -> Configuration:
        return tuple(1 if k == self.i else v for k, v in enumerate(self.sigma))

    def check(self, d: Decomposition) -> "AdjacentPair":
        if self.sigma[self.i]:
            raise ValueError("sigma must have the differing circuit at 0")
        if not (is_valid(self.sigma, d, strict=False) and is_valid(self.partner, d, strict=False)):
            raise ValueError("both states of the pair must be valid")
        return self


def adjacent_pairs(d: Decomposition, states: Sequence[Configuration]) -> list[AdjacentPair]:
    """Every adjacent pair (sigma, i) with both ends among ``states``."""
    known = {to_mask(s) for s in states}
    out = []
    for s in states:
        m = to_mask(s)
        for i in range(d.n):
            if not s[i] and (m | 1 << i) in known:
                out.append(AdjacentPair(tuple(s), i))
    return out


def coupled_step(
    chain: GlauberChain, x: Sequence[int], y: Sequence[int], draw: MoveDraw
) -> tuple[Configuration, Configuration]:
    return chain.step(x, draw), chain.step(y, draw)


def classify(d: Decomposition, i: int) -> tuple[dict[int, str], list[int]]:
    """Role of every circuit relative to ``C_i``: ``C_i``, ``C_j``, ``C_k`` or ``other``.

    Neighbours take priority over neighbours-of-neighbours; the second
    return value lists circuits that qualify for both.
    """
    adj = d.adjacency
    second = set().union(*(adj[j] for j in adj[i])) - {i} if adj[i] else set()
    roles = {}
    for x in range(d.n):
        if x == i:
            roles[x] = "C_i"
        elif x in adj[i]:
            roles[x] = "C_j"
        elif x in second:
            roles[x] = "C_k"
        else:
            roles[x] = "other"
    return roles, sorted(second & adj[i])


@dataclass
class CaseCheck:
    circuit: int
    role: str
    contribution: Fraction
    predicted: Fraction
    relation: str  # "==" or "<="
    ok: bool


@dataclass
class DriftReport:
    sigma: Configuration
    i: int
    n: int
    b: Fraction
    delta: int
    phi: Fraction
    phi_adjacent: Fraction
    contributions: dict[int, Fraction]
    roles: dict[int, str]
    drift: Fraction  # E[delta Phi]
    bound: Fraction  # delta_i (b delta - 1 - b^delta) / (1 + b^delta)
    bound_applicable: bool
    case_checks: list[CaseCheck] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_drift(self) -> Fraction:
        return self.n * self.drift

    @property
    def bound_holds(self) -> bool:
        return self.n_drift <= self.bound

    @property
    def cases_ok(self) -> bool:
        return all(c.ok for c in self.case_checks)

    def to_json(self) -> dict:
        return {
            "sigma": list(self.sigma),
            "i": self.i,
            "phi": str(self.phi),
            "n_drift": str(self.n_drift),
            "bound": str(self.bound),
            "bound_applicable": self.bound_applicable,
            "bound_holds": self.bound_holds,
            "cases_ok": self.cases_ok,
            "contributions": {
                str(x): {"role": self.roles[x], "value": str(v)} for x, v in sorted(self.contributions.items())
            },
            "warnings": self.warnings,
        }


def exact_drift(
    sigma: Sequence[int],
    i: int,
    d: Decomposition,
    b,
    convention: str = "intersection",
    metric=None,
) -> DriftReport:
    """Exact one-step expected change of the potential for the pair (sigma, sigma + C_i)."""
    from .exactness import PhiMetric

    b = parse_rational(b)
    check_convention(convention)
    pair = AdjacentPair(tuple(sigma), i).check(d)
    metric = metric or PhiMetric(d, b, convention)
    n = d.n
    deltas = d.deltas(convention)
    delta = d.delta_max(convention)
    w = potential_weight(b, delta)
    nbr = neighbor_masks(d)
    adj = d.adjacency
    up = [b**k / (1 + b**k) for k in deltas]

    x0, y0 = to_mask(pair.sigma), to_mask(pair.partner)
    phi0 = metric.distance(x0, y0)
    phi4 = phi_adjacent(pair.sigma, i, d, b, convention)
    notes = []
    if phi0 != phi4:
        notes.append(f"shortest-path potential {phi0} differs from the adjacent-pair value {phi4}")
    if any(not a for a in adj):
        notes.append("instance has isolated circuits (zero potential between distinct states)")
    roles, overlap = classify(d, i)
    if overlap:
        notes.append(f"circuits {overlap} are both neighbours and neighbours-of-neighbours of C_{i}")

    def move(mask: int, x: int, to_one: bool) -> int:
        if to_one:
            return mask if mask & nbr[x] else mask | (1 << x)
        return mask & ~(1 << x)

    contributions: dict[int, Fraction] = {}
    for x in range(n):
        total = Fraction(0)
        for to_one, p in ((True, up[x]), (False, 1 - up[x])):
            if not p:
                continue
            after = metric.distance(move(x0, x, to_one), move(y0, x, to_one))
            total += p * (after - phi0)
        contributions[x] = total
    drift = sum(contributions.values(), Fraction(0)) / n

    blocked = blocked_set(pair.sigma, i, d)
    s = pair.sigma
    checks = []
    for x in range(n):
        role = roles[x]
        got = contributions[x]
        if role == "C_i":
            checks.append(CaseCheck(x, role, got, -phi4, "==", got == -phi4))
        elif role == "C_j":
            if x in blocked:
                checks.append(CaseCheck(x, role, got, Fraction(0), "==", got == 0))
            else:
                pred = up[x] * (deltas[x] - w * len(blocked_set(s, x, d)))
                checks.append(CaseCheck(x, role, got, pred, "<=", got <= pred))
        elif role == "C_k":
            shared = adj[i] & adj[x]
            if s[x]:
                alpha = [j for j in shared if j in blocked and all(k == x or not s[k] for k in adj[j])]
                pred = len(alpha) * w / (1 + b ** deltas[x])
            elif not any(s[k] for k in adj[x]):
                beta = [j for j in shared if j not in blocked]
                pred = -(b ** deltas[x]) * len(beta) * w / (1 + b ** deltas[x])
            else:
                pred = Fraction(0)
            checks.append(CaseCheck(x, role, got, pred, "==", got == pred))
        else:
            checks.append(CaseCheck(x, role, got, Fraction(0), "==", got == 0))

    bd = b**delta
    bound = deltas[i] * (b * delta - 1 - bd) / (1 + bd)
    applicable = d.two_by_two_free and b * delta <= 1
    if not d.two_by_two_free:
        msg = "instance is not two-by-two-intersection free; drift bound not asserted"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    return DriftReport(
        sigma=pair.sigma,
        i=i,
        n=n,
        b=b,
        delta=delta,
        phi=phi0,
        phi_adjacent=phi4,
        contributions=contributions,
        roles=roles,
        drift=drift,
        bound=bound,
        bound_applicable=applicable,
        case_checks=checks,
        warnings=notes,
    )


# -- closed-form bounds --------------------------------------------------------


def _check_region(delta: int, b: Fraction) -> None:
    if delta < 1:
        raise ValueError("delta must be at least 1")
    if b < 0:
        raise ValueError("b must be non-negative")
    if b * delta > 1:
        raise OutsideProvenRegion(f"outside proven region: b*delta = {b * delta} > 1")


def theoretical_beta(n: int, delta: int, b) -> float:
    """Contraction factor ``1 + (b delta - 1 - b^delta) / (n (1 + b^delta))``."""
    b = _number(b)
    _check_region(delta, b)
    bd = b**delta
    return float(1 + (b * delta - 1 - bd) / (n * (1 + bd)))


def mixing_bound(n: int, delta: int, b, eps: float) -> float:
    """``n (1 + b^delta) / (b^delta + 1 - b delta) * ln(n delta / eps)``."""
    b = _number(b)
    _check_region(delta, b)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    bd = b**delta
    return float(n * (1 + bd) / (bd + 1 - b * delta)) * math.log(n * delta / eps)


# -- coalescence experiments -----------------------------------------------------


def distant_pair(d: Decomposition) -> tuple[Configuration, Configuration]:
    """Two greedy maximal valid states that overlap as little as possible."""
    nbr = neighbor_masks(d)

    def greedy(order: Sequence[int], forbid: int = 0) -> int:
        mask = 0
        for x in order:
            if not mask & nbr[x] and not forbid >> x & 1:
                mask |= 1 << x
        for x in order:  # make it maximal
            if not mask & nbr[x]:
                mask |= 1 << x
        return mask

    x = greedy(range(d.n))
    y = greedy(range(d.n), forbid=x)
    return from_mask(x, d.n), from_mask(y, d.n)


@dataclass
class CoalescenceStats:
    times: np.ndarray  # -1 where the pair had not met by max_steps
    start: tuple[Configuration, Configuration]

    @property
    def censored(self) -> int:
        return int((self.times < 0).sum())

    def quantile(self, q: float) -> float:
        t = np.where(self.times < 0, np.inf, self.times).astype(float)
        return float(np.quantile(t, q))

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    @property
    def p95(self) -> float:
        return self.quantile(0.95)

    def to_json(self) -> dict:
        return {
            "trials": int(len(self.times)),
            "median": self.median,
            "p95": self.p95,
            "censored": self.censored,
            "start": [list(self.start[0]), list(self.start[1])],
        }


def coalescence_experiment(
    d,
    b,
    trials: int,
    seed=None,
    convention: str = "intersection",
    start: Optional[tuple[Sequence[int], Sequence[int]]] = None,
    max_steps: int = 1_000_000,
) -> CoalescenceStats:
    """Run ``trials`` coupled pairs until they meet; return the meeting times.

    ``d`` may be a decomposition or a graph (which is decomposed first).
    """
    if not isinstance(d, Decomposition):
        d = decompose(d)
    b = parse_rational(b)
    if b <= 0:
        raise ValueError("coalescence needs b > 0")
    chain = GlauberChain(d, b, convention)
    x0, y0 = start if start is not None else distant_pair(d)
    x = np.full(trials, to_mask(x0), dtype=np.uint64)
    y = np.full(trials, to_mask(y0), dtype=np.uint64)
    times = np.full(trials, -1, dtype=np.int64)
    times[x == y] = 0
    rng = np.random.default_rng(seed)
    active = np.flatnonzero(times < 0)
    t = 0
    while active.size and t < max_steps:
        t += 1
        i = rng.integers(0, d.n, size=active.size)
        u = rng.random(active.size)
        x[active] = chain.vector_step(x[active], i, u)
        y[active] = chain.vector_step(y[active], i, u)
        met = x[active] == y[active]
        times[active[met]] = t
        active = active[~met]
    return CoalescenceStats(times, (tuple(x0), tuple(y0)))


def fit_growth_exponent(ks: Sequence[int], medians: Sequence[float]) -> float:
    """Slope of ``log(median)`` against ``log(k log k)``."""
    xs = np.log([k * math.log(k) for k in ks])
    ys = np.log(np.asarray(medians, dtype=float))
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)
