"""Four-ary constraint functions with exact rational weights.

Entries are indexed by the bit tuple ``(x1, x2, x3, x4)``; the flat table
index is big-endian, ``8*x1 + 4*x2 + 2*x3 + x4``, which matches the usual
matrix layout with rows ``x1x2`` and columns ``x3x4``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Union

RationalLike = Union[int, str, Fraction]

ARITY = 4
ALL_INPUTS: tuple[tuple[int, ...], ...] = tuple(product((0, 1), repeat=ARITY))


def parse_rational(value: RationalLike) -> Fraction:
    """Parse ``value`` as an exact rational.

    Accepts ints, Fractions and strings such as ``"1/2"`` or ``"0.25"``.
    Floats are refused: they carry binary rounding that would leak into the
    exact checks downstream.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a string like '1/2'")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def bits_to_index(bits: Iterable[int]) -> int:
    idx = 0
    for bit in bits:
        if bit not in (0, 1):
            raise ValueError(f"input bits must be 0/1, got {bit!r}")
        idx = 2 * idx + bit
    return idx


def bits_from_string(key: str) -> tuple[int, ...]:
    if len(key) != ARITY or any(ch not in "01" for ch in key):
        raise ValueError(f"bad input key {key!r}; expected 4 characters of 0/1")
    return tuple(int(ch) for ch in key)


def bits_to_string(bits: Iterable[int]) -> str:
    return "".join(str(b) for b in bits)


@dataclass(frozen=True)
class ConstraintFunction4:
    """A non-negative rational function on ``{0,1}^4``."""

    table: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.table) != 2**ARITY:
            raise ValueError(f"table must have 16 entries, got {len(self.table)}")
        table = tuple(parse_rational(v) for v in self.table)
        if any(v < 0 for v in table):
            raise ValueError("constraint weights must be non-negative")
        object.__setattr__(self, "table", table)

    @property
    def arity(self) -> int:
        return ARITY

    @classmethod
    def from_mapping(cls, entries: Mapping[object, RationalLike]) -> "ConstraintFunction4":
        """Build from ``{"0110": "1/2", (1, 0, 0, 1): 3, ...}``; missing keys are 0."""
        table = [Fraction(0)] * 16
        for key, value in entries.items():
            bits = bits_from_string(key) if isinstance(key, str) else tuple(key)
            if len(bits) != ARITY:
                raise ValueError(f"bad input key {key!r}")
            table[bits_to_index(bits)] = parse_rational(value)
        return cls(tuple(table))

    def __call__(self, bits: Iterable[int]) -> Fraction:
        return evaluate(self, bits)

    def support(self) -> list[tuple[int, ...]]:
        return [x for x in ALL_INPUTS if self.table[bits_to_index(x)] != 0]

    def scaled(self, factor: RationalLike) -> "ConstraintFunction4":
        c = parse_rational(factor)
        return ConstraintFunction4(tuple(c * v for v in self.table))

    def is_arrow_reversal_symmetric(self) -> bool:
        """True iff ``f(x) == f(1-x)`` for every input."""
        return all(
            self.table[bits_to_index(x)] == self.table[bits_to_index(tuple(1 - b for b in x))]
            for x in ALL_INPUTS
        )

    def to_json(self) -> dict:
        return {
            "arity": ARITY,
            "table": {bits_to_string(x): str(self.table[bits_to_index(x)]) for x in ALL_INPUTS},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ConstraintFunction4":
        if data.get("arity", ARITY) != ARITY:
            raise ValueError(f"only arity 4 is supported, got {data.get('arity')!r}")
        if "table" not in data:
            raise ValueError("missing 'table'")
        return cls.from_mapping(data["table"])

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ConstraintFunction4":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SixVertexParams:
    w1: Fraction
    w2: Fraction
    w3: Fraction
    w4: Fraction
    w5: Fraction
    w6: Fraction

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3", "w4", "w5", "w6"):
            value = parse_rational(getattr(self, name))
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, value)

    def to_function(self) -> ConstraintFunction4:
        # weight positions of the six ice-rule inputs
        return ConstraintFunction4.from_mapping(
            {
                "0011": self.w1,
                "0101": self.w2,
                "0110": self.w3,
                "1001": self.w4,
                "1010": self.w5,
                "1100": self.w6,
            }
        )


def make_fstar(b: RationalLike) -> ConstraintFunction4:
    """The unwindable function: f(0011)=1, f(0110)=f(1001)=b, zero elsewhere."""
    b = parse_rational(b)
    if b < 0:
        raise ValueError(f"b must be non-negative, got {b}")
    return SixVertexParams(1, 0, b, b, 0, 0).to_function()


def make_six_vertex(a: RationalLike, b: RationalLike, c: RationalLike) -> ConstraintFunction4:
    """Arrow-reversal symmetric six-vertex function with w1=w6=a, w3=w4=b, w2=w5=c."""
    a, b, c = (parse_rational(v) for v in (a, b, c))
    if min(a, b, c) < 0:
        raise ValueError("six-vertex weights must be non-negative")
    return SixVertexParams(a, c, b, b, c, a).to_function()


def evaluate(f: ConstraintFunction4, x: Iterable[int]) -> Fraction:
    bits = tuple(x)
    if len(bits) != ARITY:
        raise ValueError(f"expected 4 input bits, got {len(bits)}")
    return f.table[bits_to_index(bits)]
