import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icechain.chain import GlauberChain, MoveDraw
from icechain.coupling import (
    AdjacentPair,
    OutsideProvenRegion,
    adjacent_pairs,
    blocked_set,
    classify,
    coalescence_experiment,
    coupled_step,
    exact_drift,
    fit_growth_exponent,
    mixing_bound,
    phi_adjacent,
    potential_weight,
    theoretical_beta,
)
from icechain.decomposition import decompose
from icechain.exactness import PhiMetric, enumerate_omega
from icechain.graph import gen_chain, gen_cycle, gen_torus

from helpers import named_fixtures

TORUS = decompose(gen_torus(2, 2))  # rows 0, 1; cols 2, 3
CHAIN3 = decompose(gen_chain(3))


def test_blocked_set_examples():
    assert blocked_set((0, 0, 0, 0), 0, TORUS) == frozenset()
    assert blocked_set((0, 1, 0, 0), 0, TORUS) == {2, 3}
    assert blocked_set((0, 0, 0), 1, CHAIN3) == frozenset()


def test_potential_examples():
    assert potential_weight("1/2", 2) == Fraction(4, 9)
    assert phi_adjacent((0, 0, 0, 0), 0, TORUS, "1/2") == 2
    assert phi_adjacent((0, 1, 0, 0), 0, TORUS, "1/2") == Fraction(10, 9)
    assert phi_adjacent((0,), 0, decompose(gen_chain(1)), 1) == 0


def test_pair_checks():
    with pytest.raises(ValueError):
        AdjacentPair((1, 0, 0, 0), 0).check(TORUS)
    with pytest.raises(ValueError):
        AdjacentPair((0, 0, 1, 0), 0).check(TORUS)


def test_coupled_step_examples():
    chain = GlauberChain(TORUS, "1/2")
    x, y = (0, 0, 0, 0), (1, 0, 0, 0)
    for u in (0.1, 0.9):
        a, b = coupled_step(chain, x, y, MoveDraw(0, u))
        assert a == b
    a, b = coupled_step(chain, x, y, MoveDraw(2, 0.1))  # unblocked neighbour proposes 1
    assert a == (0, 0, 1, 0) and b == y
    a, b = coupled_step(chain, (0, 0, 0, 0), (0, 0, 0, 0), MoveDraw(3, 0.05))
    assert a == b


def test_drift_examples():
    r = exact_drift((0, 0, 0), 1, CHAIN3, "1/3")
    assert r.bound == Fraction(-4, 5)
    assert r.n_drift <= r.bound and r.cases_ok
    r = exact_drift((0, 0, 0, 0), 0, TORUS, "1/2")
    assert r.bound == Fraction(-2, 5)
    assert r.n_drift == Fraction(-62, 45)
    ci = next(c for c in r.case_checks if c.role == "C_i")
    assert ci.contribution == -r.phi


def fixtures_for_drift():
    out = []
    for name, (_, d) in named_fixtures().items():
        if name in ("chain1", "theta") or not d.two_by_two_free:
            continue
        for conv in ("intersection", "neighbor"):
            delta = d.delta_max(conv)
            if delta < 2:
                continue
            for b in sorted({Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(1, delta)}):
                if b * delta <= 1:
                    out.append((name, conv, b))
    return out


@pytest.mark.parametrize("name,conv,b", fixtures_for_drift())
def test_drift_bound_and_cases(name, conv, b):
    d = named_fixtures()[name][1]
    space = enumerate_omega(d)
    metric = PhiMetric(d, b, conv, space)
    for pair in adjacent_pairs(d, space.states):
        r = exact_drift(pair.sigma, pair.i, d, b, conv, metric)
        assert r.cases_ok, [c for c in r.case_checks if not c.ok]
        assert r.n_drift <= r.bound < 0
        others = [r.contributions[x] for x, role in r.roles.items() if role == "other"]
        assert all(v == 0 for v in others)


def test_drift_warns_without_two_by_two_freedom():
    d = decompose(gen_cycle(3))
    with pytest.warns(UserWarning, match="two-by-two"):
        r = exact_drift((0, 0, 0), 0, d, "1/2")
    assert not r.bound_applicable


def test_classify_overlap_recorded():
    d = decompose(gen_cycle(3))
    roles, overlap = classify(d, 0)
    assert roles == {0: "C_i", 1: "C_j", 2: "C_j"}
    assert overlap == [1, 2]


def test_mixing_bound_example():
    assert mixing_bound(4, 2, "1/2", 0.01) == pytest.approx(20 * math.log(800))
    assert mixing_bound(4, 2, "1/2", 0.01) == pytest.approx(133.69, abs=0.01)
    # b = 1/delta: denominator reduces to b^delta
    assert mixing_bound(3, 3, "1/3", 0.1) == pytest.approx(3 * (1 + 1 / 27) / (1 / 27) * math.log(90))
    with pytest.raises(OutsideProvenRegion):
        mixing_bound(4, 2, "3/5", 0.1)
    with pytest.raises(OutsideProvenRegion):
        theoretical_beta(4, 2, 1)


@pytest.mark.parametrize("delta", range(2, 9))
def test_beta_below_one_in_region(delta):
    for k in range(1, 21):
        b = Fraction(k, 20 * delta)
        assert theoretical_beta(5, delta, b) < 1


def test_coalescence_identical_start():
    stats = coalescence_experiment(TORUS, "1/2", 10, seed=1, start=((1, 1, 0, 0), (1, 1, 0, 0)))
    assert list(stats.times) == [0] * 10


def test_coalescence_reproducible():
    a = coalescence_experiment(gen_chain(6), "1/3", 50, seed=5)
    b = coalescence_experiment(gen_chain(6), "1/3", 50, seed=5)
    assert np.array_equal(a.times, b.times)


def test_coalescence_within_bound_torus():
    stats = coalescence_experiment(TORUS, "1/2", 500, seed=2)
    assert stats.censored == 0
    assert stats.p95 <= mixing_bound(4, 2, "1/2", 0.05)


def test_growth_exponent_fit():
    ks = [4, 8, 16, 32]
    assert fit_growth_exponent(ks, [3 * k * math.log(k) for k in ks]) == pytest.approx(1.0)
    assert fit_growth_exponent(ks, [(k * math.log(k)) ** 2 for k in ks]) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["torus22", "chain7", "cycle6"]))
def test_coupling_preserves_equality(seed, name):
    d = named_fixtures()[name][1]
    chain = GlauberChain(d, "1/2")
    rng = np.random.default_rng(seed)
    masks = enumerate_omega(d).masks
    s = masks[int(rng.integers(len(masks)))]
    x = y = tuple((s >> i) & 1 for i in range(d.n))
    for _ in range(50):
        x, y = coupled_step(chain, x, y, MoveDraw(int(rng.integers(d.n)), float(rng.random())))
        assert x == y
