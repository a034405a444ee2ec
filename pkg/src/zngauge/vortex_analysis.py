"""Vortex decomposition of plaquette configurations, minimal vortices and the W' observable.

Support sizes follow the oriented convention: a plaquette and its negative
both count, so a minimal vortex has support size 12 (six unoriented
plaquettes) and every threshold ``2M`` means ``M`` unoriented plaquettes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .chains_forms import Form, PreconditionError, exterior_derivative
from .gibbs_sampler import BoxLattice, LoopIndex, SpinConfiguration
from .lattice_complex import (
    Box,
    Chain,
    DomainError,
    OrientedCell,
    boundary_terms,
    coboundary_terms,
)
from .loops_surfaces import GeneralizedLoop, corner_restriction, validate_loop
from .zn_model import WIDTH_BOUND_B, Representation

__all__ = [
    "IRREDUCIBILITY_BUDGET",
    "IrreducibilityUnchecked",
    "Vortex",
    "decompose",
    "irreducibility_witness",
    "is_irreducible",
    "minimal_vortex",
    "classify_minimal",
    "WilsonPrimeContext",
    "gamma_prime",
    "wilson_prime",
    "vortex_pairing",
    "far_vortex_vanishes",
    "enumerate_irreducible",
    "VortexCensus",
    "vortex_census",
]

# oriented plaquettes; 24 unoriented plaquettes
IRREDUCIBILITY_BUDGET = 48


class IrreducibilityUnchecked(DomainError):
    """The support exceeds the exhaustive-check budget; no verdict was reached."""


@dataclass(frozen=True)
class Vortex:
    """A nontrivial closed 2-form that is irreducible.

    Attributes:
        form: the 2-form.
        certificate: "checked" when irreducibility was verified exhaustively,
            "assumed-by-construction" when the support exceeded the budget.
    """

    form: Form
    certificate: str

    @property
    def support_size(self) -> int:
        """Oriented support size."""
        return self.form.support_size()

    def plaquettes(self) -> list[OrientedCell]:
        return self.form.positive_support()


def _violations(values: dict, box: Optional[Box], modulus: int) -> dict:
    """Nonzero values of ``d`` of a plaquette dict, keyed by positive 3-cells."""
    out: dict = {}
    for p, v in values.items():
        for c, s in coboundary_terms(p, box):
            out[c] = (out.get(c, 0) + s * v) % modulus
    return {c: v for c, v in out.items() if v}


def _first_violation(values: dict, box: Optional[Box], modulus: int) -> Optional[OrientedCell]:
    viol = _violations(values, box, modulus)
    return min(viol, key=lambda c: c.key) if viol else None


def irreducibility_witness(nu: Form, box: Optional[Box] = None,
                           budget: int = IRREDUCIBILITY_BUDGET) -> Optional[frozenset]:
    """A proper nonempty set of positive plaquettes on which ``nu`` restricts to a closed form.

    Returns None when ``nu`` is irreducible.  The search is exact: a closed
    subset either contains the least support plaquette or its complement
    does, and every closed superset of a non-closed set must contain one of
    the support plaquettes in the boundary of its first violated 3-cell.

    Raises:
        IrreducibilityUnchecked: oriented support larger than ``budget``.
    """
    if nu.support_size() > budget:
        raise IrreducibilityUnchecked(
            f"support of {nu.support_size()} oriented plaquettes exceeds the budget {budget}")
    values = dict(nu.items())
    support = frozenset(values)
    if not support:
        return None
    n = nu.modulus
    seen: set = set()
    start = frozenset([min(support, key=lambda c: c.key)])
    stack = [start]
    while stack:
        S = stack.pop()
        if S in seen:
            continue
        seen.add(S)
        c = _first_violation({p: values[p] for p in S}, box, n)
        if c is None:
            if S != support:
                return S
            continue
        for face, _ in boundary_terms(c):
            if face in support and face not in S:
                stack.append(S | {face})
    return None


def is_irreducible(nu: Form, box: Optional[Box] = None, budget: int = IRREDUCIBILITY_BUDGET) -> bool:
    """True for nontrivial closed forms with no closed proper restriction."""
    if nu.is_zero():
        return False
    if _first_violation(dict(nu.items()), box, nu.modulus) is not None:
        return False
    return irreducibility_witness(nu, box, budget) is None


def _restrict(values: dict, cells, modulus: int) -> Form:
    return Form(2, modulus, {p: values[p] for p in cells})


def decompose(omega: Form, box: Optional[Box] = None,
              budget: int = IRREDUCIBILITY_BUDGET) -> list[Vortex]:
    """Split a closed 2-form into irreducible closed pieces with disjoint supports.

    Each piece grows from the least unclaimed support plaquette: while the
    partial form is not closed, take the least 3-cell where its ``d`` is
    nonzero and add the least missing support plaquette of that 3-cell's
    boundary.  Pieces within the budget are then refined until irreducible.

    Args:
        box: ambient box in which ``omega`` is closed (whole lattice if None).

    Raises:
        PreconditionError: ``omega`` is not closed.
    """
    if omega.degree != 2:
        raise DomainError("decompose expects a 2-form")
    n = omega.modulus
    d = exterior_derivative(omega, box)
    if not d.is_zero():
        raise PreconditionError("plaquette configuration is not closed", d.positive_support()[0])
    values = dict(omega.items())
    remaining = set(values)
    out: list[Vortex] = []
    while remaining:
        seed = min(remaining, key=lambda c: c.key)
        part = {seed: values[seed]}
        while True:
            c = _first_violation(part, box, n)
            if c is None:
                break
            missing = [f for f, _ in boundary_terms(c) if f in remaining and f not in part]
            if not missing:
                raise PreconditionError("growth stalled: configuration is not closed", c)
            p = min(missing, key=lambda f: f.key)
            part[p] = values[p]
        piece = set(part)
        certificate = "checked"
        while True:
            if 2 * len(piece) > budget:
                certificate = "assumed-by-construction"
                break
            witness = irreducibility_witness(_restrict(values, piece, n), box, budget)
            if witness is None:
                break
            piece = set(witness) if seed in witness else piece - witness
        out.append(Vortex(_restrict(values, piece, n), certificate))
        remaining -= piece
    return out


def _coboundary_in_box(e: OrientedCell, box: Optional[Box]) -> list:
    full = coboundary_terms(e)
    if box is not None:
        inside = [(p, s) for p, s in full if box.contains_cell(p)]
        if len(inside) != len(full):
            raise DomainError(f"coboundary of {e} is clipped by the box")
    return full


def minimal_vortex(e: OrientedCell, g: int, n: int, box: Optional[Box] = None) -> Vortex:
    """``d(g dx_e)``: the minimal vortex around edge ``e`` (12 oriented plaquettes)."""
    if g % n == 0:
        raise DomainError("a minimal vortex needs g != 0")
    _coboundary_in_box(e, box)
    nu = exterior_derivative(Form(1, n, {e: g}))
    return Vortex(nu, "checked" if is_irreducible(nu, box) else "assumed-by-construction")


def classify_minimal(nu) -> Optional[tuple[OrientedCell, int]]:
    """``(e, g)`` with ``nu = d(g dx_e)`` and ``e`` positive, or None."""
    form = nu.form if isinstance(nu, Vortex) else nu
    if form.degree != 2 or form.support_size() != 12:
        return None
    m = None
    for p, v in form.items():
        m = p.dim
        for e, s in boundary_terms(p):
            g = (v * s) % form.modulus
            if exterior_derivative(Form(1, form.modulus, {e: g})) == form:
                return e, g
        break
    return None


class WilsonPrimeContext:
    """Loop data for W'.

    For each edge of ``gamma`` the plaquette ``p_e`` is the first plaquette of
    the coboundary (canonical order) with coefficient +1.  The coboundary of
    every straight edge must lie inside the box.
    """

    def __init__(self, gamma, lattice: BoxLattice):
        loop = gamma if isinstance(gamma, GeneralizedLoop) else validate_loop(gamma)
        self.loop = loop
        self.lattice = lattice
        self.gamma_c = corner_restriction(loop)
        self.gamma_1 = loop.chain - self.gamma_c
        self.p_e: dict = {}
        edges, coefs, plaq, signs = [], [], [], []
        for e, v in self.gamma_1.items():
            terms = _coboundary_in_box(e, lattice.box)
            self.p_e[e] = next(p for p, s in terms if s == 1)
            edges.append(e)
            coefs.append(v)
            ids = [lattice.plaquette_id(p)[0] for p, _ in terms]
            plaq.append(ids)
            signs.append([s for _, s in terms])
        for e, _ in self.gamma_c.items():
            self.p_e[e] = next(p for p, s in coboundary_terms(e) if s == 1)
        self.edges = edges
        self.coefs = np.array(coefs, dtype=np.int64)
        width = 2 * (lattice.dim - 1)
        self.plaq = np.array(plaq, dtype=np.int64).reshape(-1, width)
        self.signs = np.array(signs, dtype=np.int64).reshape(-1, width)
        self.p_e_index = np.array(
            [lattice.plaquette_id(self.p_e[e])[0] for e in edges], dtype=np.int64)

    @property
    def straight_length(self) -> int:
        return len(self.edges)

    def normalized_values(self, plaquette_values: np.ndarray, n: int) -> np.ndarray:
        """Coboundary plaquette values at each straight edge, oriented so ``boundary p[e] = +1``."""
        return (self.signs * plaquette_values[self.plaq]) % n

    def evaluate(self, plaquette_values: np.ndarray, n: int) -> tuple[np.ndarray, int]:
        """(disagreement mask over straight edges, Z_n exponent of W')."""
        vals = self.normalized_values(plaquette_values, n)
        disagree = np.any(vals != vals[:, :1], axis=1)
        pe = plaquette_values[self.p_e_index]
        exponent = int(np.sum(np.where(disagree, 0, self.coefs * pe))) % n
        return disagree, exponent


def gamma_prime(sigma: SpinConfiguration, ctx: WilsonPrimeContext) -> Chain:
    """``gamma'[e] = gamma_1[e]`` where the coboundary plaquette values of ``d sigma`` disagree."""
    disagree, _ = ctx.evaluate(sigma.plaquette_values(), sigma.n)
    return Chain(1, [(e, int(c)) for e, c, dis in zip(ctx.edges, ctx.coefs, disagree) if dis])


def wilson_prime(sigma: SpinConfiguration, ctx: WilsonPrimeContext,
                 rep: Optional[Representation] = None) -> complex:
    """``rho(sum over e in gamma_1 - gamma' of d sigma(p_e))``."""
    rep = rep or Representation(sigma.n)
    _, exponent = ctx.evaluate(sigma.plaquette_values(), sigma.n)
    return rep.rho(exponent)


def vortex_pairing(nu, q) -> int:
    """``nu(q)`` for a closed 2-form and a surface chain."""
    form = nu.form if isinstance(nu, Vortex) else nu
    chain = q.chain if hasattr(q, "chain") else q
    return int(sum(v * form(p) for p, v in chain.items()) % form.modulus)


def _linf_distance(a: OrientedCell, b: OrientedCell) -> int:
    d = 0
    for i in range(a.dim):
        alo, ahi = a.base[i], a.base[i] + ((i + 1) in a.axes)
        blo, bhi = b.base[i], b.base[i] + ((i + 1) in b.axes)
        d = max(d, blo - ahi, alo - bhi)
    return d


def far_vortex_vanishes(nu, q, gamma, ambient: Optional[Box] = None,
                        b: int = WIDTH_BOUND_B) -> Optional[bool]:
    """Check that a vortex far from the loop pairs to zero with its surface.

    The hypothesis is taken in its checkable form: the vortex lies farther
    than ``b + 2`` (L-infinity) from the loop, or every surface plaquette
    within distance 2 of the vortex's bounding box is internal.

    Returns:
        None when the hypothesis fails; otherwise whether ``nu(q) = 0``.
    """
    from .loops_surfaces import internal_plaquettes

    form = nu.form if isinstance(nu, Vortex) else nu
    chain = q.chain if hasattr(q, "chain") else q
    loop_chain = gamma.chain if hasattr(gamma, "chain") else gamma
    vortex_cells = form.positive_support()
    if not vortex_cells:
        return True
    far = all(_linf_distance(p, e) > b + 2 for p in vortex_cells for e in loop_chain.support())
    if not far:
        internal = set(internal_plaquettes(chain, loop_chain))
        near = [p for p in chain.support()
                if min(_linf_distance(p, v) for v in vortex_cells) <= 2]
        if any(p not in internal for p in near):
            return None
    if ambient is not None and not all(ambient.contains_cell(p) for p in vortex_cells):
        return None
    return vortex_pairing(form, chain) == 0


# ---------------------------------------------------------------------------
# Exhaustive enumeration over the growth construction tree
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _plaquette_cobdry(p: tuple) -> tuple:
    base, axes = p
    return tuple(((c.base, c.axes), s) for c, s in coboundary_terms(OrientedCell(base, axes)))


@lru_cache(maxsize=None)
def _cube_faces(c: tuple) -> tuple:
    base, axes = c
    return tuple(((f.base, f.axes), s) for f, s in boundary_terms(OrientedCell(base, axes)))


def _cell_order(c: tuple) -> tuple:
    return c


def enumerate_irreducible(p0: OrientedCell, M: int, n: int, max_M: int = 7) -> list[Form]:
    """All irreducible closed 2-forms on Z^m with M positive plaquettes containing ``p0``.

    Depth-first search over the construction tree: start from ``p0`` with any
    nonzero value; at each step find the first 3-cell (canonical order) where
    ``d`` of the partial form is nonzero and add one of the at most five
    missing plaquettes of its boundary with any nonzero value.

    Args:
        M: number of positive plaquettes (oriented support 2M).
    """
    if not 1 <= M <= max_M:
        raise DomainError(f"M={M} is outside the enumeration budget 1..{max_M}")
    if p0.degree != 2 or p0.dual:
        raise DomainError("p0 must be a primal plaquette")
    start = (p0.positive().base, p0.positive().axes)
    found: set = set()

    def first_violation(viol: dict):
        return min(viol) if viol else None

    def search(part: dict, viol: dict):
        c = first_violation(viol)
        if c is None:
            if len(part) == M:
                found.add(frozenset(part.items()))
            return
        if len(part) == M:
            return
        for f, _ in _cube_faces(c):
            if f in part:
                continue
            for h in range(1, n):
                part[f] = h
                changed = []
                for cc, s in _plaquette_cobdry(f):
                    old = viol.get(cc, 0)
                    new = (old + s * h) % n
                    changed.append((cc, old))
                    if new:
                        viol[cc] = new
                    else:
                        viol.pop(cc, None)
                search(part, viol)
                for cc, old in reversed(changed):
                    if old:
                        viol[cc] = old
                    else:
                        viol.pop(cc, None)
                del part[f]

    # the canonical order on positive cells of one dimension is lexicographic in (base, axes)
    for g in range(1, n):
        viol: dict = {}
        for cc, s in _plaquette_cobdry(start):
            v = (s * g) % n
            if v:
                viol[cc] = v
        search({start: g}, viol)

    out = []
    for items in found:
        form = Form(2, n, {OrientedCell(b, a): v for (b, a), v in items})
        if is_irreducible(form):
            out.append(form)
    out.sort(key=lambda f: [(c.key, v) for c, v in f.items()])
    return out


# ---------------------------------------------------------------------------
# Census of a sampled configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VortexCensus:
    """Summary of the decomposition of ``d sigma`` for one configuration."""

    n_components: int
    n_minimal: int
    n_minimal_on_loop: int
    sizes: tuple
    interior_sizes: tuple
    all_closed: bool
    disjoint: bool
    sum_exact: bool
    interior_min_ok: bool
    size12_classified: bool
    large_plaquettes: frozenset

    @property
    def invariants_hold(self) -> bool:
        return (self.all_closed and self.disjoint and self.sum_exact
                and self.interior_min_ok and self.size12_classified)


def vortex_census(sigma: SpinConfiguration, loop_edges=(), threshold: int = 12,
                  budget: int = IRREDUCIBILITY_BUDGET) -> VortexCensus:
    """Decompose ``d sigma`` and check the decomposition invariants.

    A component is interior when none of its plaquettes is a boundary cell
    of the box.  ``large_plaquettes`` collects the positive plaquettes of
    components with oriented support at least ``threshold``.
    """
    from .gibbs_sampler import plaquette_field

    box = sigma.lattice.box
    omega = plaquette_field(sigma)
    parts = decompose(omega, box, budget)
    total = Form(2, sigma.n)
    seen: set = set()
    disjoint = True
    all_closed = True
    interior_min_ok = True
    classified_ok = True
    n_minimal = 0
    n_on_loop = 0
    sizes, interior_sizes = [], []
    large = set()
    loop_edges = {e.positive() for e in loop_edges}
    for v in parts:
        cells = set(v.plaquettes())
        if cells & seen:
            disjoint = False
        seen |= cells
        total = total + v.form
        if not exterior_derivative(v.form, box).is_zero():
            all_closed = False
        size = v.support_size
        sizes.append(size)
        interior = not any(box.is_boundary_cell(p) for p in cells)
        if interior:
            interior_sizes.append(size)
            if size < 12:
                interior_min_ok = False
            if size == 12:
                cls = classify_minimal(v)
                if cls is None:
                    classified_ok = False
                else:
                    n_minimal += 1
                    if cls[0] in loop_edges:
                        n_on_loop += 1
        if size >= threshold:
            large |= cells
    return VortexCensus(
        n_components=len(parts), n_minimal=n_minimal, n_minimal_on_loop=n_on_loop,
        sizes=tuple(sizes), interior_sizes=tuple(interior_sizes),
        all_closed=all_closed, disjoint=disjoint, sum_exact=(total == omega),
        interior_min_ok=interior_min_ok, size12_classified=classified_ok,
        large_plaquettes=frozenset(large),
    )
