import itertools

import pytest

from zngauge.lattice_complex import (
    Box,
    Chain,
    DomainError,
    OrientedCell,
    boundary,
    boundary_terms,
    cell_from_key,
    cell_key,
    coboundary_terms,
    dual_box,
    hodge_star_cell,
    permutation_sign,
)


def test_permutation_sign_small_cases():
    assert permutation_sign((1, 2, 3)) == 1
    assert permutation_sign((2, 1, 3)) == -1
    assert permutation_sign((3, 1, 2)) == 1


def test_cell_rejects_unsorted_axes():
    with pytest.raises(DomainError):
        OrientedCell((0, 0, 0), (2, 1))


def test_key_round_trip():
    for c in Box((-2, -1, 0), (1, 1, 2)).cells(2, "both"):
        assert cell_from_key(cell_key(c), 3) == c


def test_edge_count_unit_cube():
    assert Box((0, 0, 0), (1, 1, 1)).count_cells(1) == 12
    assert len(list(Box((0, 0, 0), (1, 1, 1)).cells(1))) == 12


def test_plaquette_boundary_signs():
    p = OrientedCell((0, 0), (1, 2))
    terms = dict(boundary_terms(p))
    assert terms[OrientedCell((0, 0), (1,))] == 1
    assert terms[OrientedCell((1, 0), (2,))] == 1
    assert terms[OrientedCell((0, 1), (1,))] == -1
    assert terms[OrientedCell((0, 0), (2,))] == -1


@pytest.mark.parametrize("m", [2, 3, 4])
def test_boundary_of_boundary_vanishes(m):
    box = Box((0,) * m, (1,) * m)
    for k in range(2, m + 1):
        for c in box.cells(k):
            bb = Chain(k - 2)
            for face, s in boundary_terms(c):
                for f2, s2 in boundary_terms(face):
                    bb.add_term(f2, s * s2)
            assert bb.is_zero()


def test_coboundary_transposes_boundary():
    box = Box((0, 0, 0), (2, 2, 2))
    for k in range(3):
        for c in box.cells(k):
            for cc, s in coboundary_terms(c):
                assert dict(boundary_terms(cc))[c] == s
            for cc in box.fattened(1).cells(k + 1):
                coef = dict(boundary_terms(cc)).get(c, 0)
                if coef:
                    assert (cc, coef) in coboundary_terms(c)


def test_coboundary_is_box_aware():
    box = Box((0, 0, 0), (1, 1, 1))
    e = OrientedCell((0, 0, 0), (1,))
    assert len(coboundary_terms(e)) == 4
    assert len(coboundary_terms(e, box)) == 2


@pytest.mark.parametrize("m", [2, 3, 4])
def test_star_star_sign(m):
    box = Box((0,) * m, (1,) * m)
    for k in range(m + 1):
        for c in box.cells(k, "both"):
            ss = hodge_star_cell(hodge_star_cell(c))
            expected = c if (k * (m - k)) % 2 == 0 else -c
            assert ss == expected


def test_star_of_top_cell_is_positive_dual_point():
    c = OrientedCell((0, 0, 0), (1, 2, 3))
    s = hodge_star_cell(c)
    assert s.dual and s.degree == 0 and s.sign == 1


def test_dual_box_of_four_points_has_nine_points():
    # primal box of 2x2 points: its dual box has 3x3 points
    db = dual_box(Box((0, 0), (1, 1)))
    assert len(list(db.points())) == 9


def test_dual_of_dual_strictly_contains_box():
    box = Box((0, 0), (1, 1))
    dd = dual_box(dual_box(box))
    assert set(box.points()) < set(dd.points())
    assert len(list(dd.points())) == 16


def test_boundary_cell_duality_exhaustive():
    box = Box((0, 0, 0), (2, 2, 2))
    dbox = dual_box(box)
    for k in range(4):
        for c in box.fattened(2).cells(k, "both"):
            sc = hodge_star_cell(c)
            outside = not box.contains_cell(c)
            assert outside == ((not dbox.contains_cell(sc)) or dbox.is_boundary_cell(sc))


def test_enumeration_order_is_lexicographic():
    cells = list(Box((0, 0), (1, 1)).cells(1))
    keys = [(c.base, c.axes) for c in cells]
    assert keys == sorted(keys)
    assert [c.key for c in cells] == sorted(c.key for c in cells)


def test_boundary_chain_of_square_is_closed():
    p = OrientedCell((3, -2), (1, 2))
    gamma = boundary(p)
    total = Chain(0)
    for e, v in gamma.items():
        for f, s in boundary_terms(e):
            total.add_term(f, v * s)
    assert total.is_zero()


def test_symmetric_box():
    box = Box.symmetric(2, 3)
    assert box.lower == (-2, -2, -2) and box.upper == (2, 2, 2)
    assert len(list(box.points())) == 125
    assert all(box.contains_point(p) for p in itertools.product(range(-2, 3), repeat=3))
