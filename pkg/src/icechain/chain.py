"""Single-circuit Glauber dynamics on valid circuit configurations.

Each step draws a circuit ``i`` uniformly and a uniform ``u``; the proposed
value of ``i`` is 1 if ``u < b**d_i / (1 + b**d_i)`` and 0 otherwise. The
proposal is taken iff the result is still valid, i.e. no neighbour of ``i``
is 1. The same ``(i, u)`` pair drives both copies in a coupling.

States are carried internally as integer bitmasks (bit ``i`` = circuit
``i``); the vectorised sampler stores them in ``uint64`` arrays, one entry
per independent chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .configuration import (
    Configuration,
    from_mask,
    is_valid,
    neighbor_masks,
    require_chain_instance,
    to_mask,
)
from .constraint import parse_rational
from .decomposition import Decomposition, check_convention

_CHUNK = 65_536
_ONE = np.uint64(1)


def proposal_prob_one_exact(delta: int, b) -> Fraction:
    b = parse_rational(b)
    if b < 0:
        raise ValueError("b must be non-negative")
    w = b**delta
    return w / (1 + w)


def proposal_prob_one(delta: int, b) -> float:
    return float(proposal_prob_one_exact(delta, b))


@dataclass(frozen=True)
class MoveDraw:
    circuit: int
    u: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.u < 1.0:
            raise ValueError(f"u must lie in [0, 1), got {self.u}")


@dataclass
class ChainState:
    sigma: Configuration
    step_count: int = 0
    rng: Optional[np.random.Generator] = field(default=None, repr=False, compare=False)


def draw_stream(n: int, rng: np.random.Generator, chunk: int = _CHUNK) -> Iterator[tuple[int, float]]:
    """Endless stream of (circuit, u) pairs from ``rng``."""
    while True:
        circuits = rng.integers(0, n, size=chunk).tolist()
        us = rng.random(chunk).tolist()
        yield from zip(circuits, us)


class GlauberChain:
    """The circuit-update chain for one instance, ``b`` and delta convention."""

    def __init__(self, d: Decomposition, b, convention: str = "intersection", strict: bool = True):
        if strict:
            require_chain_instance(d)
        self.d = d
        self.b = parse_rational(b)
        if self.b < 0:
            raise ValueError("b must be non-negative")
        self.convention = check_convention(convention)
        self.n = d.n
        self.deltas = d.deltas(convention)
        self.p_one_exact = tuple(proposal_prob_one_exact(k, self.b) for k in self.deltas)
        self.p_one = tuple(float(p) for p in self.p_one_exact)
        self.nbr_masks = neighbor_masks(d)
        self._p_arr = np.array(self.p_one, dtype=float)
        self._nbr_arr = np.array(self.nbr_masks, dtype=np.uint64) if self.n <= 64 else None

    # -- single chain ---------------------------------------------------------

    def step_mask(self, mask: int, i: int, u: float) -> int:
        bit = 1 << i
        if u < self.p_one[i]:
            if mask & self.nbr_masks[i]:
                return mask
            return mask | bit
        return mask & ~bit

    def step(self, sigma: Sequence[int], draw: MoveDraw) -> Configuration:
        if not 0 <= draw.circuit < self.n:
            raise ValueError(f"circuit {draw.circuit} out of range")
        return from_mask(self.step_mask(to_mask(sigma), draw.circuit, draw.u), self.n)

    def _start(self, sigma0: Optional[Sequence[int]]) -> int:
        if sigma0 is None:
            return 0
        if not is_valid(sigma0, self.d, strict=False):
            raise ValueError(f"start state {tuple(sigma0)} is not valid")
        return to_mask(sigma0)

    def run(
        self,
        sigma0: Optional[Sequence[int]] = None,
        steps: int = 0,
        seed=None,
        trajectory: Optional[list] = None,
    ) -> ChainState:
        """Apply ``steps`` updates from ``sigma0`` (default all-zero).

        If ``trajectory`` is a list, the state after every step is appended.
        """
        rng = np.random.default_rng(seed)
        mask = self._start(sigma0)
        if steps > 0:
            stream = draw_stream(self.n, rng, chunk=min(_CHUNK, steps))
            for _ in range(steps):
                i, u = next(stream)
                mask = self.step_mask(mask, i, u)
                if trajectory is not None:
                    trajectory.append(from_mask(mask, self.n))
        return ChainState(from_mask(mask, self.n), steps, rng)

    # -- batches -------------------------------------------------------------

    def sample_masks(
        self,
        count: int,
        burn_in: int,
        thinning: int = 1,
        seed=None,
        start: Optional[Sequence[int]] = None,
        chains: int = 1,
    ) -> np.ndarray:
        """Bitmask samples from ``chains`` independent copies.

        Each copy runs ``burn_in`` steps from ``start`` and then records its
        state every ``thinning`` steps; the copies share the work of
        ``count`` samples. Returns a ``uint64`` array of length ``count``.
        """
        if count < 0 or burn_in < 0 or thinning < 1 or chains < 1:
            raise ValueError("need count >= 0, burn_in >= 0, thinning >= 1, chains >= 1")
        rng = np.random.default_rng(seed)
        if count == 0:
            return np.zeros(0, dtype=np.uint64)
        chains = min(chains, count)
        if chains == 1:
            return self._sample_single(count, burn_in, thinning, rng, self._start(start))
        if self._nbr_arr is None:
            raise ValueError("vectorised sampling supports at most 64 circuits")
        per_chain = -(-count // chains)
        states = np.full(chains, self._start(start), dtype=np.uint64)
        states = self.advance(states, burn_in, rng)
        out = np.empty((per_chain, chains), dtype=np.uint64)
        for k in range(per_chain):
            states = self.advance(states, thinning, rng) if k else states
            out[k] = states
        return out.reshape(-1)[:count]

    def _sample_single(self, count: int, burn_in: int, thinning: int, rng, mask: int) -> np.ndarray:
        stream = draw_stream(self.n, rng)
        step = self.step_mask
        for _ in range(burn_in):
            i, u = next(stream)
            mask = step(mask, i, u)
        out = []
        for k in range(count):
            if k:
                for _ in range(thinning):
                    i, u = next(stream)
                    mask = step(mask, i, u)
            out.append(mask)
        return np.array(out, dtype=np.uint64)

    def advance(self, states: np.ndarray, steps: int, rng: np.random.Generator) -> np.ndarray:
        """Run every chain in ``states`` (uint64 masks) forward ``steps`` steps."""
        if self._nbr_arr is None:
            raise ValueError("vectorised sampling supports at most 64 circuits")
        states = np.asarray(states, dtype=np.uint64).copy()
        m = states.shape[0]
        for _ in range(steps):
            i = rng.integers(0, self.n, size=m)
            u = rng.random(m)
            states = self.vector_step(states, i, u)
        return states

    def vector_step(self, states: np.ndarray, i: np.ndarray, u: np.ndarray) -> np.ndarray:
        bit = _ONE << i.astype(np.uint64)
        want_one = u < self._p_arr[i]
        free = (states & self._nbr_arr[i]) == 0
        return np.where(want_one, np.where(free, states | bit, states), states & ~bit)

    def sample_batch(
        self,
        count: int,
        burn_in: int,
        thinning: int = 1,
        seed=None,
        start: Optional[Sequence[int]] = None,
        chains: int = 1,
    ) -> list[Configuration]:
        masks = self.sample_masks(count, burn_in, thinning, seed, start, chains)
        return [from_mask(int(m), self.n) for m in masks]


def empirical_distribution(masks: np.ndarray, states: Sequence[int]) -> np.ndarray:
    """Frequencies of each mask in ``states`` among ``masks`` (order of ``states``)."""
    index = {int(s): k for k, s in enumerate(states)}
    values, counts = np.unique(np.asarray(masks, dtype=np.uint64), return_counts=True)
    freq = np.zeros(len(states))
    for v, c in zip(values.tolist(), counts.tolist()):
        if v not in index:
            raise ValueError(f"sample {v:#x} is not a known state")
        freq[index[v]] = c
    total = freq.sum()
    return freq / total if total else freq
