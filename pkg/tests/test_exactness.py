from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from icechain.coupling import mixing_bound, phi_adjacent
from icechain.decomposition import decompose
from icechain.exactness import (
    PhiMetric,
    StateSpaceTooLarge,
    TransitionMatrix,
    check_detailed_balance,
    check_irreducible_aperiodic,
    enumerate_omega,
    exact_mu,
    exact_partition,
    mixing_time,
    phi_metric,
    stationarity_residual,
    transition_matrix,
    tv_curve,
    tv_error_bound,
)
from icechain.graph import gen_chain, gen_fig2, gen_torus

from helpers import brute_omega, brute_partition, fibonacci, named_fixtures, random_fixtures

TORUS = decompose(gen_torus(2, 2))
FIG2 = decompose(gen_fig2())


def test_omega_sizes():
    assert len(enumerate_omega(FIG2)) == 3
    assert len(enumerate_omega(TORUS)) == 7
    assert len(enumerate_omega(decompose(gen_chain(5)))) == 13


@pytest.mark.parametrize("k", range(1, 11))
def test_chain_omega_is_fibonacci(k):
    assert len(enumerate_omega(decompose(gen_chain(k)))) == fibonacci(k + 2)


def test_omega_matches_brute_force():
    for _, _, d in random_fixtures():
        masks = enumerate_omega(d).masks
        brute = sorted(sum(bit << i for i, bit in enumerate(s)) for s in brute_omega(d))
        assert list(masks) == brute


def test_partition_examples():
    assert exact_partition(TORUS, "1/2") == Fraction(17, 8)
    assert exact_partition(TORUS, 0) == 1
    assert exact_partition(FIG2, 3, "neighbor") == 7
    assert exact_partition(FIG2, 3, "intersection") == 19


@pytest.mark.parametrize("convention", ["intersection", "neighbor"])
def test_partition_matches_brute_force(convention):
    for name, (_, d) in named_fixtures().items():
        for b in (Fraction(1, 3), Fraction(2)):
            assert exact_partition(d, b, convention) == brute_partition(d, b, d.deltas(convention)), name


def test_mu_examples():
    assert exact_mu(FIG2, 1, "neighbor") == [Fraction(1, 3)] * 3
    space = enumerate_omega(TORUS)
    mu = exact_mu(TORUS, "1/2", space=space)
    assert mu[space.index[0]] == Fraction(8, 17)
    assert sum(mu) == 1
    point = exact_mu(TORUS, 0)
    assert point[0] == 1 and sum(point) == 1


def test_transition_examples():
    space = enumerate_omega(FIG2)
    P = transition_matrix(FIG2, 1, "neighbor", space)
    assert all(s == 1 for s in P.row_sums())
    assert P[space.index[0], space.index[0b01]] == Fraction(1, 4)
    mu = exact_mu(FIG2, 1, "neighbor", space)
    assert stationarity_residual(P, mu) == 0


def test_transition_locality():
    d = named_fixtures()["torus33"][1]
    space = enumerate_omega(d)
    P = transition_matrix(d, "1/3", space=space)
    for i, row in enumerate(P.rows):
        for j in row:
            assert bin(space.masks[i] ^ space.masks[j]).count("1") <= 1


def test_detailed_balance_examples_and_negative_control():
    for d, b in ((FIG2, "1/2"), (TORUS, "1/3")):
        space = enumerate_omega(d)
        P = transition_matrix(d, b, space=space)
        mu = exact_mu(d, b, space=space)
        assert check_detailed_balance(P, mu) == 0
    space = enumerate_omega(TORUS)
    P = transition_matrix(TORUS, "1/3", space=space)
    mu = exact_mu(TORUS, "1/3", space=space)
    rows = [dict(r) for r in P.rows]
    j = next(k for k in rows[0] if k != 0)
    rows[0][j] += Fraction(1, 100)
    rows[0][0] -= Fraction(1, 100)
    assert check_detailed_balance(TransitionMatrix(rows), mu) > 0


def test_irreducibility():
    for name, (_, d) in named_fixtures().items():
        assert check_irreducible_aperiodic(transition_matrix(d, "1/2")), name
    assert not check_irreducible_aperiodic(transition_matrix(TORUS, 0))
    assert check_irreducible_aperiodic(transition_matrix(decompose(gen_chain(1)), 1))


def test_tv_curve_properties():
    for d, b in ((FIG2, 1), (TORUS, Fraction(1, 2))):
        space = enumerate_omega(d)
        P = transition_matrix(d, b, space=space)
        mu = exact_mu(d, b, space=space)
        curve = tv_curve(P, mu, 200)
        assert curve[0] == pytest.approx(1 - float(min(mu)), abs=1e-15)
        assert all(curve[t + 1] <= curve[t] + tv_error_bound(len(space), t) for t in range(200))
        assert curve[-1] < 1e-6


def test_tv_at_bound_torus():
    space = enumerate_omega(TORUS)
    P = transition_matrix(TORUS, "1/2", space=space)
    mu = exact_mu(TORUS, "1/2", space=space)
    tau = int(np.ceil(mixing_bound(4, 2, "1/2", 0.1)))
    assert tv_curve(P, mu, tau)[tau] <= 0.1


def test_mixing_time_helper():
    assert mixing_time([1.0, 0.5, 0.2, 0.05], 0.1) == 3
    assert mixing_time([1.0, 0.5], 0.1) is None
    assert mixing_time([0.01], 0.1) == 0


def test_state_space_cap():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_omega(decompose(gen_chain(21)))
    with pytest.raises(StateSpaceTooLarge):
        enumerate_omega(decompose(gen_chain(20)), max_states=100)


@pytest.mark.parametrize("name", ["torus22", "chain5", "cycle6", "torus23", "fig2"])
def test_phi_metric_axioms(name):
    d = named_fixtures()[name][1]
    b = Fraction(1, d.delta_max())
    metric = PhiMetric(d, b)
    masks = metric.space.masks
    for s in masks:
        assert metric.distance(s, s) == 0
        for t in masks:
            dst = metric.distance(s, t)
            assert dst == metric.distance(t, s)
            if s != t:
                assert dst > 0
            for u in masks:
                assert dst <= metric.distance(s, u) + metric.distance(u, t)


def test_phi_metric_adjacent_value():
    assert phi_metric((0, 0, 0, 0), (1, 0, 0, 0), TORUS, "1/2") == 2
    assert phi_metric((0, 1, 0, 0), (1, 1, 0, 0), TORUS, "1/2") == phi_adjacent((0, 1, 0, 0), 0, TORUS, "1/2")
    assert phi_adjacent((0, 1, 0, 0), 0, TORUS, "1/2") == Fraction(10, 9)
