import itertools
import math

import numpy as np
import pytest

from zngauge.lattice_complex import DomainError
from zngauge.zn_model import (
    G0,
    Representation,
    S_beta,
    S_beta_gap,
    beta0_admissible,
    constants_bundle,
    lambda_,
    minimal_admissible_beta0,
    one_minus_theta,
    plaquettes_near_edge,
    plaquettes_near_edge_bruteforce,
    predicted_wilson,
    star_condition_residual,
    theta,
    vortex_constant,
    xi,
)


def test_character_values():
    assert Representation(2).rho(1) == pytest.approx(-1)
    assert Representation(2).phi(1, 0.7) == pytest.approx(math.exp(-0.7))
    assert Representation(4).rho(1) == pytest.approx(1j)
    assert Representation(4).phi(1, 0.7) == pytest.approx(1.0)


@pytest.mark.parametrize("n", range(2, 13))
def test_phi_is_even(n):
    rep = Representation(n)
    g = np.arange(n)
    assert np.array_equal(rep.phi(g, 0.8), rep.phi((n - g) % n, 0.8))


def test_representation_needs_a_unit():
    with pytest.raises(DomainError):
        Representation(4, 2)


def test_theta_closed_forms():
    assert theta(0.0, 5) == 0.0
    assert theta(0.1, 2) == pytest.approx(math.tanh(1.2), abs=1e-15)
    assert theta(50.0, 3) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_theta_monotone_and_bounded(n):
    vals = [theta(b, n) for b in np.linspace(0, 3, 61)]
    assert all(0 <= v <= 1 for v in vals)
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_theta_large_beta_asymptotics(n):
    x = xi(n)
    ratio = one_minus_theta(3.0, n) / ((1 + (n >= 3)) * x * math.exp(-12 * 3.0 * x))
    assert abs(ratio - 1) < 0.01


def test_lambda_values():
    assert lambda_(0.7, 2) == pytest.approx(math.exp(-1.4))
    assert lambda_(0.7, 4) == pytest.approx(math.exp(-0.7))


def test_s_beta_matches_theta_at_zero_tuple():
    assert S_beta([0] * 6, 0.4, 3).real == pytest.approx(theta(0.4, 3), abs=1e-14)


def test_g0_examples():
    assert G0([0] * 6, 5) == frozenset({0})
    assert G0([0, 0, 0, 1, 1, 1], 2) == frozenset({0, 1})


@pytest.mark.parametrize("n", [2, 3, 5])
def test_s_beta_translation_invariance(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        gs = rng.integers(0, n, 6)
        shift = int(rng.integers(0, n))
        a = abs(S_beta(gs, 0.9, n))
        assert a <= 1 + 1e-15
        assert abs(abs(S_beta((gs + shift) % n, 0.9, n)) - a) < 1e-14


def test_s_beta_gap_agrees_with_direct_difference():
    for gs in itertools.product(range(3), repeat=3):
        direct = 1 - abs(S_beta(gs, 0.3, 3))
        assert S_beta_gap(gs, 0.3, 3) == pytest.approx(direct, rel=1e-10, abs=1e-15)


def test_admissibility_examples():
    ok = beta0_admissible(1.0, 2)
    assert ok.conditions[0].holds and ok.conditions[0].value == pytest.approx(5 * math.exp(-4))
    bad = beta0_admissible(0.3, 2)
    assert not bad.conditions[0].holds
    assert bad.conditions[0].value == pytest.approx(5 * math.exp(-1.2))


def test_star_condition_at_admissible_beta0():
    b0 = minimal_admissible_beta0(2)
    residual, randomized = star_condition_residual(b0, 2)
    assert not randomized and residual < xi(2) / 8


def test_inadmissible_constants_are_refused():
    with pytest.raises(DomainError, match="vortex-series"):
        constants_bundle(2, 1, 0.3)


def test_constants_invariants():
    c = constants_bundle(2, 1, 1.0)
    assert c.K_lower == 0.5
    assert constants_bundle(6, 1, 4.0).K_lower == pytest.approx(0.125)
    assert 0 < c.K_dblprime < 1 and c.K_prime >= 2 * math.sqrt(2)
    assert 0 <= c.theta <= 1 and 0 < c.lambda_ <= 1
    assert c.K_star_sup >= c.K_star_limit


def test_vortex_constant_example():
    # 5^6 / (1 - 5 e^-4) at n = 2, beta = 1
    assert vortex_constant(6, 1.0, 2) == pytest.approx(5 ** 6 / (1 - 5 * math.exp(-4)))
    assert vortex_constant(6, 1.0, 2) == pytest.approx(17200.16, abs=0.01)


@pytest.mark.parametrize("dist", [0, 1, 2])
def test_plaquette_count_matches_bruteforce(dist):
    assert plaquettes_near_edge(dist) == plaquettes_near_edge_bruteforce(dist)


def test_predicted_wilson_trivial():
    assert predicted_wilson(0, 1.0, 2) == 1.0
    assert predicted_wilson(10, 0.5, 2) == pytest.approx(math.exp(-10 * (1 - math.tanh(6))))
