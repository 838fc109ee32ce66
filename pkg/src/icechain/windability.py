"""Exact windability decision for constraint functions of arity at most 4.

A function ``f`` is windable when there are values ``B(x, y, M) >= 0``, one
for every pair of inputs ``x, y`` and every partition ``M`` of the support
of ``x ^ y`` into pairs and at most one singleton, such that

* ``f(x) f(y) = sum_M B(x, y, M)`` for all ``x, y``, and
* ``B(x, y, M) = B(x ^ S, y ^ S, M)`` for every block ``S`` of ``M``.

The symmetry is handled by merging triples into orbit classes. Both the
equations and the symmetry preserve ``x ^ y``, so the system splits into
one independent block per difference pattern; each block is tiny and is
solved with a phase-one simplex over the rationals.

An infeasible block yields a Farkas certificate: weights ``c`` on the
equations such that the combined left-hand side has only non-negative
coefficients while the combined right-hand side is negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .constraint import ConstraintFunction4, bits_to_string

Bits = tuple[int, ...]
Pairing = tuple[tuple[int, ...], ...]  # sorted blocks of 0-based positions


def enumerate_pairings(support: Sequence[int]) -> list[Pairing]:
    """Partitions of ``support`` into pairs and at most one singleton."""
    items = sorted(support)
    if len(items) > 4:
        raise ValueError("only supports of size at most 4 are handled")
    out: list[Pairing] = []

    def build(rest: list[int], blocks: list[tuple[int, ...]], singleton_used: bool) -> None:
        if not rest:
            out.append(tuple(sorted(blocks)))
            return
        first, others = rest[0], rest[1:]
        if not singleton_used:
            build(others, blocks + [(first,)], True)
        for k, partner in enumerate(others):
            build(others[:k] + others[k + 1:], blocks + [(first, partner)], singleton_used)

    build(items, [], False)
    return sorted(set(out))


def _flip(x: Bits, block: Sequence[int]) -> Bits:
    y = list(x)
    for pos in block:
        y[pos] ^= 1
    return tuple(y)


@dataclass
class WindabilitySystem:
    """Equations over symmetry classes of ``(x, y, M)`` triples."""

    arity: int
    values: dict[Bits, Fraction]
    classes: list[tuple[Bits, Bits, Pairing]]  # canonical representative per class
    members: list[list[tuple[Bits, Bits, Pairing]]]
    class_of: dict[tuple[Bits, Bits, Pairing], int]
    equations: list[tuple[Bits, Bits, list[int]]]  # (x, y, class ids)

    def rhs(self, k: int) -> Fraction:
        x, y, _ = self.equations[k]
        return self.values[x] * self.values[y]

    def blocks(self) -> dict[Bits, list[int]]:
        """Equation indices grouped by ``x ^ y``."""
        out: dict[Bits, list[int]] = {}
        for k, (x, y, _) in enumerate(self.equations):
            out.setdefault(tuple(a ^ b for a, b in zip(x, y)), []).append(k)
        return out


def build_system(f) -> WindabilitySystem:
    """Assemble the windability equations for ``f``.

    ``f`` is a :class:`ConstraintFunction4` or a mapping from bit tuples to
    rationals covering ``{0,1}^k`` for some ``k <= 4``.
    """
    values = _values(f)
    arity = len(next(iter(values)))
    inputs = list(product((0, 1), repeat=arity))
    pairings_of = {
        d: enumerate_pairings([p for p in range(arity) if d[p]]) for d in inputs
    }

    class_of: dict[tuple[Bits, Bits, Pairing], int] = {}
    classes, members = [], []
    for x in inputs:
        for y in inputs:
            d = tuple(a ^ b for a, b in zip(x, y))
            for M in pairings_of[d]:
                key = (x, y, M)
                if key in class_of:
                    continue
                orbit = {key}
                frontier = [key]
                while frontier:
                    cx, cy, _ = frontier.pop()
                    for S in M:
                        nxt = (_flip(cx, S), _flip(cy, S), M)
                        if nxt not in orbit:
                            orbit.add(nxt)
                            frontier.append(nxt)
                ordered = sorted(orbit)
                cid = len(classes)
                classes.append(ordered[0])
                members.append(ordered)
                for item in ordered:
                    class_of[item] = cid
    equations = [
        (x, y, [class_of[(x, y, M)] for M in pairings_of[tuple(a ^ b for a, b in zip(x, y))]])
        for x in inputs
        for y in inputs
    ]
    return WindabilitySystem(arity, values, classes, members, class_of, equations)


def _values(f) -> dict[Bits, Fraction]:
    if isinstance(f, ConstraintFunction4):
        return {x: f.table[k] for k, x in enumerate(product((0, 1), repeat=4))}
    values = {tuple(k): Fraction(v) for k, v in dict(f).items()}
    arity = len(next(iter(values)))
    if arity > 4 or set(values) != set(product((0, 1), repeat=arity)):
        raise ValueError("need a complete table over {0,1}^k with k <= 4")
    if any(v < 0 for v in values.values()):
        raise ValueError("windability is defined for non-negative functions")
    return values


# -- exact phase-one simplex ---------------------------------------------------


def _phase_one(A: list[list[Fraction]], r: list[Fraction]) -> tuple[Optional[list[Fraction]], Optional[list[Fraction]]]:
    """Feasibility of ``A x = r, x >= 0`` with ``r >= 0``.

    Returns ``(x, None)`` if feasible, else ``(None, y)`` with ``A^T y <= 0``
    and ``r . y > 0``. Bland's rule, so it terminates.
    """
    m = len(A)
    nv = len(A[0]) if m else 0
    width = nv + m
    # tableau rows: [coefficients | rhs]; artificials occupy columns nv..nv+m-1
    T = [A[k][:] + [Fraction(int(k == j)) for j in range(m)] + [r[k]] for k in range(m)]
    basis = [nv + k for k in range(m)]
    # objective: minimise the sum of artificials; reduced costs c_j - sum_rows
    cost = [Fraction(0)] * nv + [Fraction(1)] * m
    red = [cost[j] - sum((T[k][j] for k in range(m)), Fraction(0)) for j in range(width)]
    obj = -sum((T[k][-1] for k in range(m)), Fraction(0))

    while True:
        entering = next((j for j in range(width) if red[j] < 0), None)
        if entering is None:
            break
        best = None
        for k in range(m):
            a = T[k][entering]
            if a > 0:
                ratio = T[k][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[k] < basis[best[1]]):
                    best = (ratio, k)
        if best is None:  # cannot happen: phase one is bounded below by 0
            raise ArithmeticError("unbounded phase-one problem")
        k = best[1]
        piv = T[k][entering]
        T[k] = [v / piv for v in T[k]]
        for kk in range(m):
            if kk != k and T[kk][entering]:
                factor = T[kk][entering]
                T[kk] = [a - factor * c for a, c in zip(T[kk], T[k])]
        factor = red[entering]
        red = [a - factor * c for a, c in zip(red, T[k][:-1])]
        obj -= factor * T[k][-1]
        basis[k] = entering

    if obj == 0:
        x = [Fraction(0)] * nv
        for k, j in enumerate(basis):
            if j < nv:
                x[j] = T[k][-1]
        return x, None
    # duals from the artificial columns: red_art_k = 1 - y_k
    y = [1 - red[nv + k] for k in range(m)]
    return None, y


@dataclass
class Verdict:
    windable: bool
    witness: Optional[dict[tuple[Bits, Bits, Pairing], Fraction]] = None
    certificate: Optional[dict[tuple[Bits, Bits], Fraction]] = None
    zero_forced: list[tuple[Bits, Bits, Pairing]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "windable" if self.windable else "unwindable"

    def to_json(self) -> dict:
        def key(t):
            x, y, M = t
            return f"{bits_to_string(x)},{bits_to_string(y)},{_pairing_str(M)}"

        out: dict = {"verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = {key(t): str(v) for t, v in sorted(self.witness.items()) if v}
        if self.certificate is not None:
            out["certificate"] = {
                "combination": {
                    f"{bits_to_string(x)},{bits_to_string(y)}": str(c)
                    for (x, y), c in sorted(self.certificate.items())
                },
                "explanation": "non-negative left-hand side, negative right-hand side",
            }
            out["forced_zero_classes"] = [key(t) for t in self.zero_forced]
        return out


def _pairing_str(M: Pairing) -> str:
    return "{" + " ".join("(" + ",".join(f"x{p + 1}" for p in S) + ")" for S in M) + "}"


def is_windable(f) -> Verdict:
    """Decide windability of ``f`` exactly, with a witness or a certificate."""
    system = build_system(f)
    witness_class = [Fraction(0)] * len(system.classes)
    for d, eqs in system.blocks().items():
        cols = sorted({c for k in eqs for c in system.equations[k][2]})
        pos = {c: j for j, c in enumerate(cols)}
        A = []
        for k in eqs:
            row = [Fraction(0)] * len(cols)
            for c in system.equations[k][2]:
                row[pos[c]] += 1
            A.append(row)
        r = [system.rhs(k) for k in eqs]
        x, y = _phase_one(A, r)
        if x is None:
            cert = {system.equations[k][:2]: -yk for k, yk in zip(eqs, y) if yk}
            forced = _forced_zero(system, eqs)
            return Verdict(False, certificate=cert, zero_forced=forced)
        for c, v in zip(cols, x):
            witness_class[c] = v
    witness = {t: witness_class[c] for t, c in system.class_of.items()}
    return Verdict(True, witness=witness)


def _forced_zero(system: WindabilitySystem, eqs: list[int]) -> list[tuple[Bits, Bits, Pairing]]:
    """Class representatives pinned to 0 by a zero right-hand side."""
    zero = set()
    for k in eqs:
        if system.rhs(k) == 0:
            zero.update(system.equations[k][2])
    return [system.classes[c] for c in sorted(zero)]


def verify_witness(f, witness: dict[tuple[Bits, Bits, Pairing], Fraction]) -> bool:
    """Check both windability conditions for a full ``B`` assignment."""
    system = build_system(f)
    if set(witness) != set(system.class_of):
        return False
    if any(v < 0 for v in witness.values()):
        return False
    for x, y, M in witness:
        for S in M:
            if witness[(_flip(x, S), _flip(y, S), M)] != witness[(x, y, M)]:
                return False
    for x, y, cids in system.equations:
        d = tuple(a ^ b for a, b in zip(x, y))
        Ms = enumerate_pairings([p for p in range(system.arity) if d[p]])
        if sum((witness[(x, y, M)] for M in Ms), Fraction(0)) != system.values[x] * system.values[y]:
            return False
    return True


def verify_certificate(f, certificate: dict[tuple[Bits, Bits], Fraction]) -> bool:
    """Combined equation must have coefficients >= 0 on every class and rhs < 0."""
    system = build_system(f)
    index = {(x, y): k for k, (x, y, _) in enumerate(system.equations)}
    coeff = [Fraction(0)] * len(system.classes)
    rhs = Fraction(0)
    for xy, c in certificate.items():
        k = index[xy]
        for cid in system.equations[k][2]:
            coeff[cid] += c
        rhs += c * system.rhs(k)
    return all(v >= 0 for v in coeff) and rhs < 0
