import math

import numpy as np
import pytest

from zngauge.gibbs_sampler import (
    BoxLattice,
    ConfigError,
    SamplerConfig,
    SpinConfiguration,
    action,
    batch_means,
    heat_bath_sweep,
    local_conditional,
    make_rng,
    plaquette_field,
    run_chain,
    wilson_loop,
)
from zngauge.chains_forms import is_closed
from zngauge.lattice_complex import Box, DomainError, OrientedCell, boundary

SQUARE = Box((0, 0), (1, 1))
PLAQ = OrientedCell((0, 0), (1, 2))


def test_action_of_single_plaquette():
    lat = BoxLattice(SQUARE)
    sigma = SpinConfiguration.zeros(lat, 2)
    assert action(sigma) == -2
    sigma.values[0] = 1
    assert action(sigma) == 2


def test_action_translation_invariance():
    lat = BoxLattice(Box((0, 0, 0), (5, 5, 5)))
    a = SpinConfiguration.zeros(lat, 3)
    b = SpinConfiguration.zeros(lat, 3)
    for base in [(1, 2, 1), (2, 2, 2)]:
        e = OrientedCell(base, (2,))
        a.values[lat.edge_id(e)[0]] = 1
        shifted = OrientedCell(tuple(x + 1 for x in base), (2,))
        b.values[lat.edge_id(shifted)[0]] = 1
    assert action(a) == pytest.approx(action(b))


def test_color_classes_are_independent_sets():
    lat = BoxLattice(Box((0, 0, 0), (2, 2, 2)))
    seen = np.concatenate(lat.color_classes)
    assert sorted(seen.tolist()) == list(range(lat.n_edges))
    for edges in lat.color_classes:
        members = set(edges.tolist())
        for row in lat.plaq_edges:
            assert len(members & set(row.tolist())) <= 1


def test_local_conditional_examples():
    beta = 0.3
    lat = BoxLattice(Box((-1,) * 4, (1,) * 4))
    sigma = SpinConfiguration.zeros(lat, 2)
    p = local_conditional(sigma, OrientedCell((0, 0, 0, 0), (1,)), beta)
    assert p[0] == pytest.approx(1 / (1 + math.exp(-24 * beta)))
    cube = BoxLattice(Box((0, 0, 0), (1, 1, 1)))
    p = local_conditional(SpinConfiguration.zeros(cube, 2), OrientedCell((0, 0, 0), (1,)), beta)
    assert p[0] == pytest.approx(1 / (1 + math.exp(-8 * beta)))
    p = local_conditional(SpinConfiguration.zeros(cube, 5), 0, 0.0)
    assert np.allclose(p, 0.2)


def test_wilson_loop_properties():
    lat = BoxLattice(Box((0, 0, 0), (2, 2, 2)))
    rng = np.random.default_rng(0)
    sigma = SpinConfiguration(lat, 4, rng.integers(0, 4, lat.n_edges))
    gamma = boundary(OrientedCell((0, 0, 0), (1, 2))) + boundary(OrientedCell((1, 0, 0), (1, 2)))
    assert wilson_loop(SpinConfiguration.zeros(lat, 4), gamma) == 1
    w = wilson_loop(sigma, gamma)
    assert abs(abs(w) - 1) < 1e-15
    # a gauge transformation leaves the loop invariant
    h = {tuple(int(v) for v in x): int(rng.integers(0, 4)) for x in lat.points}
    shifted = sigma.copy()
    for eid in range(lat.n_edges):
        e = lat.edge_cell(eid)
        head = tuple(x + (i + 1 == e.axes[0]) for i, x in enumerate(e.base))
        shifted.values[eid] += h[head] - h[e.base]
    shifted = SpinConfiguration(lat, 4, shifted.values)
    assert wilson_loop(shifted, gamma) == pytest.approx(w)
    p = OrientedCell((1, 1, 0), (2, 3))
    assert wilson_loop(sigma, boundary(p)) == pytest.approx(np.exp(2j * np.pi * plaquette_field(sigma)(p) / 4))
    assert is_closed(plaquette_field(sigma), lat.box)


def test_loop_outside_box_is_refused():
    lat = BoxLattice(SQUARE)
    with pytest.raises(DomainError):
        wilson_loop(SpinConfiguration.zeros(lat, 2), boundary(OrientedCell((1, 1), (1, 2))))


def test_config_errors():
    with pytest.raises(ConfigError):
        SamplerConfig(measurements=0)
    with pytest.raises(ConfigError):
        SamplerConfig(stride=0)
    with pytest.raises(ConfigError):
        SamplerConfig(schedule="random")


@pytest.mark.parametrize("schedule", ["colored", "sequential"])
def test_fixed_seed_is_deterministic(schedule):
    lat = BoxLattice(Box((0, 0, 0), (2, 2, 2)))

    def trajectory():
        sigma = SpinConfiguration.zeros(lat, 3)
        rng = make_rng(42)
        return [heat_bath_sweep(sigma, 0.5, rng, schedule).values.copy() for _ in range(5)]

    assert all(np.array_equal(a, b) for a, b in zip(trajectory(), trajectory()))


@pytest.mark.parametrize("beta", [0.0, 0.4])
def test_single_plaquette_chain(beta):
    lat = BoxLattice(SQUARE)
    obs = {"w": lambda s: wilson_loop(s, boundary(PLAQ)).real}
    run = run_chain(SamplerConfig(seed=5, thermalization=10, measurements=4000), lat, beta, obs)
    est = run.estimates["w"]
    assert est.batch_count >= 20
    assert abs(est.mean - math.tanh(2 * beta)) < 4 * est.std_error


def test_batch_means_on_iid_samples():
    rng = np.random.default_rng(3)
    x = rng.normal(size=4000)
    est = batch_means(x)
    assert est.batch_count >= 20
    assert est.std_error == pytest.approx(1 / math.sqrt(4000), rel=0.3)
    with pytest.raises(ConfigError):
        batch_means(x[:5])
