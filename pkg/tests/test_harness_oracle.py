import json
import math

import numpy as np
import pytest

from zngauge.chains_forms import exterior_derivative, Form
from zngauge.harness_oracle import (
    AgreementIndicator,
    BudgetExceeded,
    ManifestError,
    OracleSpec,
    RunManifest,
    WilsonObservable,
    _stat_check,
    dumps17,
    exact_expectation,
    exact_expectations,
    parse_manifest,
    suite_oracle_closed_form,
)
from zngauge.lattice_complex import Box, DomainError, OrientedCell, boundary
from zngauge.loops_surfaces import rectangle_loop


def _wilson(spec, gamma):
    return WilsonObservable(spec.lattice, gamma, spec.rep)


@pytest.mark.parametrize("beta", [0.0, 0.35, 1.0])
def test_single_plaquette_closed_form(beta):
    spec = OracleSpec(Box((0, 0), (1, 1)), 2, beta)
    w = exact_expectation(spec, _wilson(spec, boundary(OrientedCell((0, 0), (1, 2)))))
    assert w.real == pytest.approx(math.tanh(2 * beta), abs=1e-14)
    assert abs(w.imag) < 1e-15


def test_gauge_fixing_matches_full_enumeration_on_cube():
    box = Box((0, 0, 0), (1, 1, 1))
    fixed = OracleSpec(box, 2, 0.45)
    full = OracleSpec(box, 2, 0.45, gauge_fixing=False)
    assert fixed.state_count == 2 ** 5 and full.state_count == 2 ** 12
    gamma = boundary(OrientedCell((0, 0, 0), (1, 2)))
    a = exact_expectation(fixed, _wilson(fixed, gamma))
    b = exact_expectation(full, _wilson(full, gamma), fast_path=False)
    assert a == pytest.approx(b, abs=1e-13)


def test_gauge_fixing_with_three_states():
    box = Box((0, 0), (2, 1))
    gamma = rectangle_loop((1, 2), 2, 1, (0, 0))
    fixed = OracleSpec(box, 3, 0.7)
    full = OracleSpec(box, 3, 0.7, gauge_fixing=False)
    a = exact_expectation(fixed, _wilson(fixed, gamma), fast_path=False)
    b = exact_expectation(full, _wilson(full, gamma), fast_path=False)
    assert a == pytest.approx(b, abs=1e-13)


def test_planar_fast_path_matches_edge_enumeration():
    spec = OracleSpec(Box((0, 0), (3, 2)), 3, 0.6)
    obs = [_wilson(spec, rectangle_loop((1, 2), 2, 2, (0, 0))),
           _wilson(spec, rectangle_loop((1, 2), 3, 1, (0, 1)))]
    fast = exact_expectations(spec, obs)
    slow = exact_expectations(spec, obs, fast_path=False)
    assert np.allclose(fast, slow, atol=1e-13)
    # independent plaquettes in the plane: the loop value factorizes
    single = exact_expectation(spec, _wilson(spec, boundary(OrientedCell((0, 0), (1, 2)))))
    assert fast[0] == pytest.approx(single ** 4, abs=1e-13)


def test_zero_coupling_gives_zero():
    spec = OracleSpec(Box((0, 0, 0), (1, 1, 1)), 2, 0.0)
    gamma = boundary(OrientedCell((0, 0, 0), (2, 3)))
    assert abs(exact_expectation(spec, _wilson(spec, gamma))) < 1e-15


def test_agreement_indicator_is_a_probability():
    box = Box((0, 0, 0), (1, 1, 1))
    spec = OracleSpec(box, 2, 0.5)
    nu = exterior_derivative(Form(1, 2, {OrientedCell((0, 0, 0), (1,)): 1}), box)
    p = exact_expectation(spec, AgreementIndicator(spec.lattice, nu))
    assert 0 < p.real < 1 and abs(p.imag) < 1e-15


def test_budget_refusal():
    spec = OracleSpec(Box((0, 0, 0), (2, 2, 2)), 5, 0.5)
    with pytest.raises(BudgetExceeded):
        spec.check_budget()
    small = OracleSpec(Box((0, 0, 0), (1, 1, 1)), 2, 0.5, budget=16)
    gamma = boundary(OrientedCell((0, 0, 0), (1, 2)))
    with pytest.raises(BudgetExceeded):
        exact_expectation(small, _wilson(small, gamma), fast_path=False)


def test_non_gauge_invariant_observable_is_refused():
    spec = OracleSpec(Box((0, 0, 0), (1, 1, 1)), 3, 0.5)
    with pytest.raises(DomainError):
        exact_expectation(spec, lambda spins: spins[:, 0].astype(float))


def test_manifest_round_trip_and_errors():
    m = RunManifest(N=2, loops=((2, 2), (3, 1)))
    assert parse_manifest(json.dumps(m.to_dict())) == m
    text = '{\n  "n": 3,\n  "beta": "high"\n}'
    with pytest.raises(ManifestError, match=r"run.json:3: field 'beta'"):
        parse_manifest(text, "run.json")
    with pytest.raises(ManifestError, match=r"run.json:2: unknown field"):
        parse_manifest('{\n  "colour": 1\n}', "run.json")
    with pytest.raises(ManifestError, match=r"run.json:2: invalid JSON"):
        parse_manifest('{\n  "n": ,\n}', "run.json")
    with pytest.raises(ManifestError, match="measurement"):
        parse_manifest('{"measurements": 0}', "run.json")


def test_dumps17_round_trips_floats():
    values = {"a": 0.1, "b": [1.0 / 3.0, 2, True], "c": complex(0.5, -1e-300), "d": {}}
    text = dumps17(values)
    back = json.loads(text)
    assert back["a"] == 0.1 and back["b"][0] == 1.0 / 3.0
    assert back["c"] == [0.5, -1e-300]
    assert "0.10000000000000001" in text


def test_stat_check_allowance():
    assert _stat_check("x", 1.0, 1.0 + 3e-3, 1e-3).passed
    assert not _stat_check("x", 1.0, 1.0 + 5e-3, 1e-3).passed
    # an exactly reproduced value with zero spread still passes
    assert _stat_check("x", 1e-17, 0.0, 0.0).passed


def test_closed_form_suite():
    assert suite_oracle_closed_form().passed


def test_plaquette_map_fibers_are_uniform():
    # every reachable plaquette configuration has n^(points - 1) preimages
    spec = OracleSpec(Box((0, 0, 0), (1, 1, 1)), 2, 0.5, gauge_fixing=False)
    lat = spec.lattice
    states = (np.arange(2 ** lat.n_edges)[:, None] >> np.arange(lat.n_edges)) & 1
    pv = (states[:, lat.plaq_edges] @ lat.PLAQ_SIGNS) % 2
    _, counts = np.unique(pv, axis=0, return_counts=True)
    assert set(counts.tolist()) == {2 ** (len(lat.points) - 1)}
    assert len(counts) == OracleSpec(Box((0, 0, 0), (1, 1, 1)), 2, 0.5).state_count
