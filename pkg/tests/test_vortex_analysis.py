import numpy as np
import pytest

from zngauge.chains_forms import Form, PreconditionError, exterior_derivative
from zngauge.gibbs_sampler import BoxLattice, SpinConfiguration
from zngauge.lattice_complex import Box, DomainError, OrientedCell, boundary_terms
from zngauge.loops_surfaces import build_surface, internal_edges, rectangle_loop
from zngauge.vortex_analysis import (
    IrreducibilityUnchecked,
    WilsonPrimeContext,
    classify_minimal,
    decompose,
    enumerate_irreducible,
    far_vortex_vanishes,
    gamma_prime,
    irreducibility_witness,
    is_irreducible,
    minimal_vortex,
    vortex_census,
    vortex_pairing,
    wilson_prime,
)
from zngauge.zn_model import Representation

ORIGIN = (0, 0, 0, 0)


def _edge(base, axis):
    return OrientedCell(tuple(base), (axis,))


def test_decompose_zero_form():
    assert decompose(Form(2, 3)) == []


def test_decompose_single_minimal_vortex():
    nu = minimal_vortex(_edge(ORIGIN, 2), 1, 3).form
    parts = decompose(nu)
    assert len(parts) == 1 and parts[0].form == nu
    assert parts[0].certificate == "checked"


def test_decompose_two_distant_vortices():
    a = minimal_vortex(_edge(ORIGIN, 1), 1, 3).form
    b = minimal_vortex(_edge((3, 3, 0, 0), 4), 2, 3).form
    parts = decompose(a + b)
    assert {classify_minimal(p) for p in parts} == {(_edge(ORIGIN, 1), 1), (_edge((3, 3, 0, 0), 4), 2)}
    assert not set(parts[0].plaquettes()) & set(parts[1].plaquettes())
    assert parts[0].form + parts[1].form == a + b


def test_decompose_refuses_open_forms():
    with pytest.raises(PreconditionError):
        decompose(Form(2, 2, {OrientedCell(ORIGIN, (1, 2)): 1}))


def test_irreducibility_cases():
    nu = minimal_vortex(_edge(ORIGIN, 3), 1, 2).form
    assert is_irreducible(nu)
    far = minimal_vortex(_edge((5, 0, 0, 0), 3), 1, 2).form
    assert not is_irreducible(nu + far)
    assert irreducibility_witness(nu + far) is not None
    assert not is_irreducible(Form(2, 2))


def test_irreducibility_budget():
    big = sum((minimal_vortex(_edge((4 * i, 0, 0, 0), 2), 1, 2).form for i in range(5)), Form(2, 2))
    with pytest.raises(IrreducibilityUnchecked):
        irreducibility_witness(big)


@pytest.mark.parametrize("axis", [1, 2, 3, 4])
@pytest.mark.parametrize("g", [1, 2, 3])
def test_classify_round_trip(axis, g):
    e = _edge((1, -2, 0, 3), axis)
    v = minimal_vortex(e, g, 4)
    assert v.support_size == 12
    assert classify_minimal(v) == (e, g)


def test_classify_rejects_larger_form():
    # two perpendicular edges whose shared plaquette does not cancel (3D, n = 3)
    sigma = Form(1, 3, {_edge((0, 0, 0), 1): 1, _edge((0, 0, 0), 2): 2})
    nu = exterior_derivative(sigma)
    assert nu.support_size() == 14
    assert classify_minimal(nu) is None


def test_minimal_vortex_refuses_clipped_coboundary():
    with pytest.raises(DomainError):
        minimal_vortex(_edge(ORIGIN, 1), 1, 2, Box(ORIGIN, (1, 1, 1, 1)))
    with pytest.raises(DomainError):
        minimal_vortex(_edge(ORIGIN, 1), 3, 3)


def _loop_setup(n):
    box = Box((-1, -1, -1, -1), (5, 3, 1, 1))
    lat = BoxLattice(box)
    gamma = rectangle_loop((1, 2), 4, 2, ORIGIN)
    return lat, gamma, WilsonPrimeContext(gamma, lat)


def test_wilson_prime_trivial_configuration():
    lat, gamma, ctx = _loop_setup(3)
    sigma = SpinConfiguration.zeros(lat, 3)
    assert gamma_prime(sigma, ctx).is_zero()
    assert wilson_prime(sigma, ctx) == 1


def test_wilson_prime_single_straight_edge():
    lat, gamma, ctx = _loop_setup(3)
    e = _edge((2, 0, 0, 0), 1)
    assert e in ctx.edges
    sigma = SpinConfiguration.zeros(lat, 3)
    sigma.values[lat.edge_id(e)[0]] = 2
    vals = ctx.normalized_values(sigma.plaquette_values(), 3)[ctx.edges.index(e)]
    assert np.all(vals == 2)
    assert gamma_prime(sigma, ctx).is_zero()
    assert wilson_prime(sigma, ctx) == pytest.approx(Representation(3).rho(2))


def test_pairing_with_loop_edge():
    gamma = rectangle_loop((1, 2), 3, 3, ORIGIN)
    q = build_surface(gamma)
    e = _edge((1, 0, 0, 0), 1)
    assert gamma.chain[e] == 1
    assert vortex_pairing(minimal_vortex(e, 2, 5), q) == 2


def test_pairing_vanishes_at_internal_edge():
    gamma = rectangle_loop((1, 2), 3, 3, ORIGIN)
    q = build_surface(gamma)
    e = internal_edges(q.chain)[0]
    assert vortex_pairing(minimal_vortex(e, 1, 5), q) == 0


def test_far_vortex_vanishes():
    gamma = rectangle_loop((1, 2), 2, 2, ORIGIN)
    q = build_surface(gamma)
    nu = minimal_vortex(_edge((40, 0, 0, 0), 1), 1, 2)
    assert far_vortex_vanishes(nu, q, gamma) is True
    near = minimal_vortex(_edge((0, 0, 0, 0), 1), 1, 2)
    assert far_vortex_vanishes(near, q, gamma) is None


def test_enumeration_small_sizes_are_empty():
    p0 = OrientedCell(ORIGIN, (1, 2))
    for M in range(1, 6):
        assert enumerate_irreducible(p0, M, 2) == []


def test_enumeration_of_minimal_vortices():
    p0 = OrientedCell(ORIGIN, (1, 2))
    found = enumerate_irreducible(p0, 6, 2)
    assert len(found) == 4
    edges = {e for e, _ in boundary_terms(p0)}
    assert {classify_minimal(f)[0] for f in found} == {e.positive() for e in edges}
    assert len(found) <= 5 ** 5


def test_enumeration_budget():
    with pytest.raises(DomainError):
        enumerate_irreducible(OrientedCell(ORIGIN, (1, 2)), 8, 2)


def test_census_invariants():
    lat = BoxLattice(Box((0,) * 4, (5,) * 4))
    sigma = SpinConfiguration.zeros(lat, 2)
    for base in [(1, 1, 1, 1), (4, 1, 1, 1)]:
        sigma.values[lat.edge_id(_edge(base, 2))[0]] = 1
    census = vortex_census(sigma, loop_edges=[_edge((1, 1, 1, 1), 2)])
    assert census.invariants_hold
    assert census.n_components == 2 and census.n_minimal == 2 and census.n_minimal_on_loop == 1


def test_census_fuses_vortices_sharing_a_plaquette():
    lat = BoxLattice(Box((0,) * 4, (3,) * 4))
    sigma = SpinConfiguration.zeros(lat, 2)
    for base in [(1, 1, 1, 1), (2, 1, 1, 1)]:
        sigma.values[lat.edge_id(_edge(base, 2))[0]] = 1
    census = vortex_census(sigma)
    assert census.invariants_hold
    assert census.sizes == (20,) and census.n_minimal == 0
