import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zngauge.lattice_complex import Box, Chain, DomainError, OrientedCell, boundary, boundary_terms
from zngauge.loops_surfaces import (
    LoopValidationError,
    build_surface,
    corner_edges,
    corner_restriction,
    internal_edges,
    internal_plaquettes,
    load_loop_description,
    parse_loop_description,
    random_loop,
    rectangle_loop,
    straight_part,
    validate_loop,
)


def _boundary(q: Chain) -> Chain:
    out = Chain(1)
    for c, v in q.items():
        for f, s in boundary_terms(c):
            out.add_term(f, v * s)
    return out


def test_unit_plaquette_loop():
    gamma = validate_loop(boundary(OrientedCell((0, 0, 0), (1, 2))))
    assert gamma.length == 4 and gamma.corner_count == 4
    assert corner_restriction(gamma) == gamma.chain
    assert straight_part(gamma).is_zero()


def test_single_edge_is_rejected_with_witness():
    with pytest.raises(LoopValidationError) as info:
        validate_loop(Chain(1, [(OrientedCell((0, 0), (1,)), 1)]))
    assert info.value.witness is not None


def test_coefficient_two_is_rejected():
    gamma = boundary(OrientedCell((0, 0), (1, 2)))
    with pytest.raises(LoopValidationError):
        validate_loop(2 * gamma)


@pytest.mark.parametrize("R,T", [(2, 2), (2, 5), (3, 4), (4, 4), (6, 3)])
def test_rectangle_length_and_corners(R, T):
    gamma = rectangle_loop((1, 2), R, T, (0, 0))
    assert gamma.length == 2 * R + 2 * T
    assert gamma.corner_count == 8


def test_corner_parts_partition_loop():
    gamma = rectangle_loop((2, 3), 4, 3, (1, 0, 2))
    gc, g1 = corner_restriction(gamma), straight_part(gamma)
    assert gc + g1 == gamma.chain
    assert not set(gc.support()) & set(g1.support())
    assert len(gc.support()) == 8


def test_corner_predicate_is_local_for_disjoint_unions():
    a = rectangle_loop((1, 2), 3, 3, (0, 0, 0))
    b = rectangle_loop((1, 3), 2, 4, (10, 10, 10))
    union = validate_loop(a.chain + b.chain)
    assert union.corner_count == a.corner_count + b.corner_count


def test_corner_predicate_is_translation_invariant():
    gamma = rectangle_loop((1, 2), 3, 2, (0, 0))
    shifted = rectangle_loop((1, 2), 3, 2, (5, -7))
    moved = {OrientedCell((e.base[0] + 5, e.base[1] - 7), e.axes) for e in corner_edges(gamma.chain)}
    assert moved == set(corner_edges(shifted.chain))


def test_unit_surface_is_the_plaquette():
    p = OrientedCell((0, 0, 0), (1, 3))
    q = build_surface(validate_loop(boundary(p)))
    assert q.chain == Chain(2, [(p, 1)])
    assert internal_plaquettes(q.chain, boundary(p)) == []


@pytest.mark.parametrize("R,T", [(1, 3), (2, 2), (3, 4)])
def test_planar_rectangle_surface(R, T):
    gamma = rectangle_loop((1, 2), R, T, (0, 0, 0))
    q = build_surface(gamma)
    assert _boundary(q.chain) == gamma.chain
    assert len(q.chain.support()) == R * T
    assert all(v == 1 for _, v in q.chain.items())


def test_bent_loop_surface():
    # a loop over three coordinate planes
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1), (0, 1, 1), (0, 0, 1), (0, 0, 0)]
    gamma = Chain(1)
    for a, b in zip(pts, pts[1:]):
        axis = next(i for i in range(3) if a[i] != b[i])
        if b[axis] > a[axis]:
            gamma.add_term(OrientedCell(a, (axis + 1,)), 1)
        else:
            gamma.add_term(OrientedCell(b, (axis + 1,)), -1)
    loop = validate_loop(gamma)
    q = build_surface(loop)
    assert _boundary(q.chain) == gamma


def test_three_by_three_has_one_internal_plaquette():
    gamma = rectangle_loop((1, 2), 3, 3, (0, 0))
    q = build_surface(gamma)
    assert internal_plaquettes(q.chain, gamma.chain) == [OrientedCell((1, 1), (1, 2))]


def test_two_by_two_internal_edges():
    gamma = rectangle_loop((1, 2), 2, 2, (0, 0))
    q = build_surface(gamma)
    expected = {OrientedCell((0, 1), (1,)), OrientedCell((1, 1), (1,)),
                OrientedCell((1, 0), (2,)), OrientedCell((1, 1), (2,))}
    assert set(internal_edges(q.chain)) == expected


def test_surface_box_must_contain_loop():
    gamma = rectangle_loop((1, 2), 2, 2, (0, 0))
    with pytest.raises(DomainError):
        build_surface(gamma, Box((0, 0), (1, 1)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["rectangle", "union", "walk", "plaquette-set"]))
def test_random_loops_have_exact_surfaces(seed, kind):
    rng = np.random.default_rng(seed)
    box = Box.symmetric(3, 4)
    gamma = random_loop(rng, box, kind)
    q = build_surface(gamma)
    assert _boundary(q.chain) == gamma.chain
    assert all(q.box.contains_cell(p) for p in q.chain.support())


def test_loop_description_formats(tmp_path):
    desc = [{"plane": [1, 2], "R": 2, "T": 1, "corner": [0, 0]},
            [[0, 0], 1, -1], [[0, 1], 1, 1], [[0, 0], 2, 1], [[1, 0], 2, -1]]
    gamma = parse_loop_description(desc[:1])
    assert gamma.length == 6
    # the extra square cancels the shared edge of the first rectangle cell
    combined = parse_loop_description(desc)
    assert combined.length == 4
    path = tmp_path / "loop.json"
    path.write_text(json.dumps(desc[:1]))
    assert load_loop_description(str(path)).chain == gamma.chain


def test_loop_description_error_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('[\n  {"plane": [1, 2],\n  "R": }\n]')
    with pytest.raises(DomainError, match=":3"):
        load_loop_description(str(path))
