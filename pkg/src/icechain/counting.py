"""Partition-function estimation by telescoping ratios along a schedule in b.

``Z(b) = sum over valid sigma of prod_{i: sigma_i = 1} b**delta_i``. Circuits
with ``delta_i = 0`` have no neighbours, so each contributes an exact factor
of 2 and is kept out of the sampled part. For the rest, a small starting
value ``b_0`` is picked where ``Z`` is pinned between two closed-form
brackets, and

    Z(b_m) = Z(b_0) * prod_k Z(b_{k+1}) / Z(b_k),

where each ratio is the mean of ``(b_{k+1}/b_k) ** sum_i delta_i sigma_i``
over samples drawn from the chain at ``b_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Optional, Sequence, Union

import numpy as np

from .chain import GlauberChain
from .configuration import require_chain_instance
from .constraint import parse_rational
from .coupling import mixing_bound
from .decomposition import Decomposition, check_convention, decompose
from .graph import LabeledGraph

PILOT_SAMPLES = 1000


def _bracket(deltas: Sequence[int], b: Fraction) -> tuple[Fraction, Fraction]:
    """Lower and upper bounds on ``Z`` over circuits with positive delta.

    The lower bound counts the empty set and the singletons, the upper bound
    counts every subset.
    """
    low, high = Fraction(1), Fraction(1)
    for k in deltas:
        low += b**k
        high *= 1 + b**k
    return low, high


@dataclass(frozen=True)
class Schedule:
    b_values: tuple[Fraction, ...]
    burn_ins: tuple[int, ...]  # one per stage, i.e. len(b_values) - 1
    base_value: Fraction  # lower bracket of Z(b_0), including the factor for delta = 0 circuits
    base_upper: Fraction
    free_circuits: int
    heuristic: tuple[bool, ...]

    @property
    def stages(self) -> int:
        return len(self.b_values) - 1

    def max_log_ratio(self, total_delta: int) -> float:
        """``max_k total_delta * ln(b_{k+1} / b_k)``; at most 1 by construction."""
        return max(
            (total_delta * math.log(hi / lo) for lo, hi in zip(self.b_values, self.b_values[1:])),
            default=0.0,
        )


def _as_decomposition(g: Union[LabeledGraph, Decomposition]) -> Decomposition:
    return g if isinstance(g, Decomposition) else decompose(g)


def make_schedule(
    g: Union[LabeledGraph, Decomposition], b_target, eps: float, convention: str = "intersection"
) -> Schedule:
    """Geometric schedule ending exactly at ``b_target``.

    Steps are ``b_{k+1} = b_k (1 + 1/(n delta))`` walked down from
    ``b_target`` until the bracket at ``b_0`` is within a relative ``eps/8``.
    """
    d = _as_decomposition(g)
    b_target = parse_rational(b_target)
    if b_target < 0:
        raise ValueError("b must be non-negative")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    check_convention(convention)
    deltas = d.deltas(convention)
    active = [k for k in deltas if k > 0]
    free = len(deltas) - len(active)
    factor = Fraction(2) ** free
    n = d.n
    delta = max(deltas, default=0)

    if b_target == 0 or not active:
        return Schedule((b_target,), (), factor, factor, free, ())

    step = Fraction(n * delta + 1, n * delta)
    tolerance = Fraction(eps).limit_denominator(10**12) / 8
    b_values = [b_target]
    while True:
        low, high = _bracket(active, b_values[-1])
        if (high - low) <= tolerance * low:
            break
        b_values.append(b_values[-1] / step)
    b_values.reverse()
    m = len(b_values) - 1
    burn_ins, heuristic = [], []
    for b in b_values[:-1]:
        burn, guessed = stage_burn_in(d, b, eps / (10 * max(m, 1)), convention)
        burn_ins.append(burn)
        heuristic.append(guessed)
    low, high = _bracket(active, b_values[0])
    return Schedule(tuple(b_values), tuple(burn_ins), factor * low, factor * high, free, tuple(heuristic))


def hamming_influence(d: Decomposition, b: Fraction, convention: str = "intersection") -> Fraction:
    """``max_i sum_{j in Gamma(i)} b^delta_j / (1 + b^delta_j)``."""
    up = [b**k / (1 + b**k) for k in d.deltas(convention)]
    return max((sum((up[j] for j in nbrs), Fraction(0)) for nbrs in d.adjacency), default=Fraction(0))


def stage_burn_in(d: Decomposition, b: Fraction, eps: float, convention: str = "intersection") -> tuple[int, bool]:
    """Burn-in for the chain at ``b`` and whether it is only heuristic.

    Inside ``b delta <= 1`` this is the proven contraction bound. Outside it
    falls back to Hamming-distance path coupling, ``n / (1 - a) ln(n / eps)``
    with ``a`` from :func:`hamming_influence`, when ``a < 1``, and otherwise
    to the proven bound at ``b = 1/delta``.
    """
    n, delta = d.n, d.delta_max(convention)
    if b * delta <= 1:
        return math.ceil(mixing_bound(n, delta, b, eps)), False
    a = hamming_influence(d, b, convention)
    if a < 1:
        return math.ceil(n / float(1 - a) * math.log(n / eps)), True
    return math.ceil(mixing_bound(n, delta, Fraction(1, delta), eps)), True


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    variance: float  # sample variance of the per-sample terms
    count: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.inf

    @property
    def relative_variance(self) -> float:
        return self.variance / (self.ratio * self.ratio) if self.ratio else math.inf


def exponents(masks: np.ndarray, deltas: Sequence[int]) -> np.ndarray:
    """``sum_i delta_i sigma_i`` for each bitmask."""
    masks = np.asarray(masks, dtype=np.uint64)
    out = np.zeros(masks.shape, dtype=np.int64)
    for i, k in enumerate(deltas):
        if k:
            out += ((masks >> np.uint64(i)) & np.uint64(1)).astype(np.int64) * k
    return out


def estimate_ratio(b_low, b_high, masks: np.ndarray, deltas: Sequence[int]) -> RatioEstimate:
    """Estimate ``Z(b_high) / Z(b_low)`` from samples of the chain at ``b_low``."""
    b_low, b_high = parse_rational(b_low), parse_rational(b_high)
    if b_low <= 0:
        raise ValueError("b_low must be positive")
    count = len(masks)
    if count == 0:
        raise ValueError("need at least one sample")
    if b_high == b_low:
        return RatioEstimate(1.0, 0.0, count)
    terms = float(b_high / b_low) ** exponents(masks, deltas).astype(float)
    variance = float(terms.var(ddof=1)) if count > 1 else 0.0
    return RatioEstimate(float(terms.mean()), variance, count)


@dataclass
class StageResult:
    b_low: Fraction
    b_high: Fraction
    estimate: RatioEstimate
    burn_in: int
    heuristic: bool


@dataclass
class Estimate:
    value: float
    eps: float
    confidence: float
    base_value: Fraction
    stages: list[StageResult] = field(default_factory=list)
    total_samples: int = 0
    seed: Optional[int] = None
    b: Fraction = Fraction(0)
    convention: str = "intersection"

    @property
    def heuristic_burn_in(self) -> bool:
        return any(s.heuristic for s in self.stages)

    def to_json(self) -> dict:
        return {
            "estimate": self.value,
            "b": str(self.b),
            "eps": self.eps,
            "confidence": self.confidence,
            "convention": self.convention,
            "seed": self.seed,
            "base_value": str(self.base_value),
            "total_samples": self.total_samples,
            "burn_in": "heuristic" if self.heuristic_burn_in else "proven",
            "stages": [
                {
                    "b_low": str(s.b_low),
                    "b_high": str(s.b_high),
                    "ratio": s.estimate.ratio,
                    "variance": s.estimate.variance,
                    "samples": s.estimate.count,
                    "burn_in": s.burn_in,
                }
                for s in self.stages
            ],
        }


def estimate_Z(
    g: Union[LabeledGraph, Decomposition],
    b,
    eps: float = 0.05,
    confidence: float = 0.95,
    seed: Optional[int] = None,
    convention: str = "intersection",
    pilot: int = PILOT_SAMPLES,
) -> Estimate:
    """Estimate ``Z(b)`` to relative error ``eps`` with probability ``confidence``.

    Half the error budget goes to sampling noise, an eighth to the base
    bracket and the rest is headroom for residual mixing bias. Every stage
    draws a pilot batch from independent chains to estimate its variance,
    then tops up so that the summed relative variance of the product is
    at most ``(eps / (2 z))**2``.
    """
    d = _as_decomposition(g)
    require_chain_instance(d)
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    b = parse_rational(b)
    schedule = make_schedule(d, b, eps, convention)
    result = Estimate(float(schedule.base_value), eps, confidence, schedule.base_value,
                      seed=seed, b=b, convention=convention)
    if schedule.stages == 0:
        return result

    deltas = d.deltas(convention)
    z = NormalDist().inv_cdf((1 + confidence) / 2)
    target = (eps / 2 / z) ** 2
    m = schedule.stages
    streams = np.random.SeedSequence(seed).spawn(m)
    starts = np.zeros(1, dtype=np.uint64)
    log_value = math.log(float(schedule.base_value))
    for k in range(m):
        lo, hi = schedule.b_values[k], schedule.b_values[k + 1]
        rng = np.random.default_rng(streams[k])
        chain = GlauberChain(d, lo, convention)
        burn = schedule.burn_ins[k]
        masks = chain.advance(rng.choice(starts, size=pilot), burn, rng)
        est = estimate_ratio(lo, hi, masks, deltas)
        needed = math.ceil(est.relative_variance * m / target)
        if needed > pilot:
            extra = chain.advance(rng.choice(starts, size=needed - pilot), burn, rng)
            masks = np.concatenate([masks, extra])
            est = estimate_ratio(lo, hi, masks, deltas)
        result.stages.append(StageResult(lo, hi, est, burn, schedule.heuristic[k]))
        result.total_samples += len(masks)
        log_value += math.log(est.ratio)
        starts = masks
    result.value = math.exp(log_value)
    return result
