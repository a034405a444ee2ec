"""Generalized loops, corner edges and oriented surfaces bounded by loops."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chains_forms import Form, copoincare_potential
from .lattice_complex import (
    Box,
    Chain,
    DomainError,
    OrientedCell,
    boundary,
    boundary_terms,
    bounding_box,
    coboundary_terms,
)

__all__ = [
    "LoopValidationError",
    "GeneralizedLoop",
    "OrientedSurface",
    "validate_loop",
    "corner_edges",
    "corner_restriction",
    "straight_part",
    "build_surface",
    "internal_plaquettes",
    "internal_edges",
    "rectangle_loop",
    "random_closed_walk_loop",
    "random_loop",
    "load_loop_description",
    "parse_loop_description",
]


class LoopValidationError(DomainError):
    """A chain is not a generalized loop; ``witness`` is the offending cell."""

    def __init__(self, message: str, witness: Optional[OrientedCell] = None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class GeneralizedLoop:
    """A 1-chain with coefficients in {-1, 0, 1} and empty boundary.

    Attributes:
        chain: the underlying 1-chain.
        length: number of (unoriented) edges in the support.
        corner_count: number of corner edges.
    """

    chain: Chain
    length: int
    corner_count: int
    corners: frozenset = field(repr=False, default=frozenset())

    @property
    def dim(self) -> int:
        items = self.chain.items()
        return items[0][0].dim if items else 0

    def edges(self) -> list[OrientedCell]:
        """Positively oriented support edges in canonical order."""
        return self.chain.support()

    def __getitem__(self, e: OrientedCell) -> int:
        return self.chain[e]


@dataclass(frozen=True)
class OrientedSurface:
    """A 2-chain ``q`` with ``boundary(q)`` equal to the loop it was built for."""

    chain: Chain
    box: Box

    def plaquettes(self) -> list[OrientedCell]:
        return self.chain.support()


def corner_edges(gamma: Chain) -> frozenset:
    """Support edges sharing a plaquette with a different support edge."""
    support = set(gamma.support())
    out = set()
    for e in support:
        for p, _ in coboundary_terms(e):
            if any(f != e and f in support for f, _ in boundary_terms(p)):
                out.add(e)
                break
    return frozenset(out)


def validate_loop(chain: Chain) -> GeneralizedLoop:
    """Check that ``chain`` is a generalized loop and compute its length data.

    Raises:
        LoopValidationError: a coefficient outside {-1, 0, 1} (witness: the
            edge) or a nonzero boundary (witness: the first 0-cell).
    """
    if chain.degree != 1 or chain.dual:
        raise LoopValidationError("a generalized loop is a primal 1-chain")
    for e, v in chain.items():
        if v not in (-1, 1):
            raise LoopValidationError(f"coefficient {v} on {e} is outside {{-1, 0, 1}}", e)
    bd = boundary(chain)
    if not bd.is_zero():
        pt = bd.support()[0]
        raise LoopValidationError(f"boundary is nonzero at {pt}", pt)
    corners = corner_edges(chain)
    return GeneralizedLoop(chain, len(chain), len(corners), corners)


def _as_chain(gamma) -> Chain:
    return gamma.chain if isinstance(gamma, GeneralizedLoop) else gamma


def corner_restriction(gamma) -> Chain:
    """``gamma_c``: the loop restricted to its corner edges."""
    loop = gamma if isinstance(gamma, GeneralizedLoop) else validate_loop(gamma)
    return Chain(1, [(e, loop.chain[e]) for e in loop.corners])


def straight_part(gamma) -> Chain:
    """``gamma_1 = gamma - gamma_c``."""
    chain = _as_chain(gamma)
    return chain - corner_restriction(gamma)


def build_surface(gamma, box: Optional[Box] = None) -> OrientedSurface:
    """An integer 2-chain ``q`` inside ``box`` with ``boundary(q) = gamma``.

    The 1-form ``sigma_gamma(e) = gamma[e]`` is co-closed, so a copoincare
    potential ``omega_q`` exists inside the box; ``q[p] = omega_q(p)``.

    Args:
        gamma: a generalized loop or a 1-chain.
        box: defaults to the tight bounding box of the loop, so planar loops
            get planar surfaces.
    """
    loop = gamma if isinstance(gamma, GeneralizedLoop) else validate_loop(gamma)
    chain = loop.chain
    if chain.is_zero():
        if box is None:
            raise DomainError("the empty loop needs an explicit box")
        return OrientedSurface(Chain(2), box)
    if box is None:
        box = bounding_box(chain.support())
    for e in chain.support():
        if not box.contains_cell(e):
            raise DomainError(f"loop edge {e} lies outside the box")
    if box.dim < 2:
        raise DomainError("surfaces need dimension at least 2")
    sigma = Form(1, None, chain.items())
    omega_q = copoincare_potential(sigma, box)
    q = Chain(2, omega_q.items())
    if boundary(q) != chain:
        raise AssertionError("surface construction failed to reproduce the loop")
    return OrientedSurface(q, box)


def internal_plaquettes(q, gamma) -> list[OrientedCell]:
    """Plaquettes of ``supp q`` none of whose boundary edges carry ``gamma``."""
    q = q.chain if isinstance(q, OrientedSurface) else q
    chain = _as_chain(gamma)
    return [
        p for p in q.support()
        if all(chain[e] == 0 for e, _ in boundary_terms(p))
    ]


def internal_edges(q) -> list[OrientedCell]:
    """Edges touched by ``supp q`` with zero coefficient in ``boundary(q)``."""
    q = q.chain if isinstance(q, OrientedSurface) else q
    bd = boundary(q)
    touched = {e for p in q.support() for e, _ in boundary_terms(p)}
    return sorted((e for e in touched if bd[e] == 0), key=lambda c: c.key)


# ---------------------------------------------------------------------------
# Loop generators and the loop description format
# ---------------------------------------------------------------------------

def rectangle_loop(plane: Sequence[int], R: int, T: int, corner: Sequence[int]) -> GeneralizedLoop:
    """Boundary of the R x T rectangle spanned by axes ``plane = (i, j)`` at ``corner``."""
    i, j = sorted(plane)
    if i == j:
        raise DomainError("rectangle plane needs two distinct axes")
    if R < 1 or T < 1:
        raise DomainError("rectangle sides must be positive")
    corner = tuple(int(x) for x in corner)
    q = Chain(2)
    for r in range(R):
        for t in range(T):
            base = list(corner)
            base[i - 1] += r
            base[j - 1] += t
            q.add_term(OrientedCell(tuple(base), (i, j)), 1)
    return validate_loop(boundary(q))


def _walk_chain(points: list[tuple]) -> Chain:
    gamma = Chain(1)
    for a, b in zip(points, points[1:]):
        diff = [y - x for x, y in zip(a, b)]
        axis = next(i for i, d in enumerate(diff) if d)
        if diff[axis] == 1:
            gamma.add_term(OrientedCell(a, (axis + 1,)), 1)
        else:
            gamma.add_term(OrientedCell(b, (axis + 1,)), -1)
    return gamma


def random_closed_walk_loop(rng: np.random.Generator, box: Box, steps: int = 12,
                            max_tries: int = 1000) -> GeneralizedLoop:
    """A closed lattice walk inside ``box``, retried until it is a generalized loop.

    The walk takes ``steps`` random nearest-neighbor steps and then returns to
    its start along the axes in a random order; edges traversed in opposite
    directions cancel.
    """
    m = box.dim
    for _ in range(max_tries):
        start = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in zip(box.lower, box.upper))
        pts = [start]
        cur = list(start)
        for _ in range(steps):
            axis = int(rng.integers(m))
            step = 1 if rng.random() < 0.5 else -1
            if not box.lower[axis] <= cur[axis] + step <= box.upper[axis]:
                step = -step
            if not box.lower[axis] <= cur[axis] + step <= box.upper[axis]:
                continue
            cur[axis] += step
            pts.append(tuple(cur))
        for axis in rng.permutation(m):
            while cur[axis] != start[axis]:
                cur[axis] += 1 if cur[axis] < start[axis] else -1
                pts.append(tuple(cur))
        gamma = _walk_chain(pts)
        if gamma.is_zero():
            continue
        try:
            return validate_loop(gamma)
        except LoopValidationError:
            continue
    raise DomainError("could not generate a closed walk loop")


def random_loop(rng: np.random.Generator, box: Box, kind: Optional[str] = None) -> GeneralizedLoop:
    """A random generalized loop inside ``box``.

    Args:
        kind: "rectangle", "union", "walk" or "plaquette-set"; chosen at
            random when omitted.
    """
    kinds = ("rectangle", "union", "walk", "plaquette-set")
    if kind is None:
        kind = kinds[int(rng.integers(len(kinds)))]
    m = box.dim
    if kind == "rectangle":
        i, j = sorted(int(x) + 1 for x in rng.choice(m, 2, replace=False))
        R = int(rng.integers(1, box.widths[i - 1] + 1))
        T = int(rng.integers(1, box.widths[j - 1] + 1))
        corner = [int(rng.integers(lo, hi + 1)) for lo, hi in zip(box.lower, box.upper)]
        corner[i - 1] = int(rng.integers(box.lower[i - 1], box.upper[i - 1] - R + 1))
        corner[j - 1] = int(rng.integers(box.lower[j - 1], box.upper[j - 1] - T + 1))
        return rectangle_loop((i, j), R, T, corner)
    if kind == "union":
        for _ in range(100):
            total = Chain(1)
            for _ in range(int(rng.integers(2, 4))):
                total = total + random_loop(rng, box, "rectangle").chain
            if total.is_zero():
                continue
            try:
                return validate_loop(total)
            except LoopValidationError:
                continue
        raise DomainError("could not generate a union of rectangles")
    if kind == "walk":
        return random_closed_walk_loop(rng, box, steps=int(rng.integers(4, 20)))
    if kind == "plaquette-set":
        for _ in range(100):
            # a few plaquettes near a random center, each with a random sign
            center = [int(rng.integers(lo, hi)) for lo, hi in zip(box.lower, box.upper)]
            q = Chain(2)
            for _ in range(int(rng.integers(1, 8))):
                i, j = sorted(int(x) + 1 for x in rng.choice(m, 2, replace=False))
                base = [c + int(rng.integers(-1, 2)) for c in center]
                for ax in (i, j):
                    base[ax - 1] = min(max(base[ax - 1], box.lower[ax - 1]), box.upper[ax - 1] - 1)
                for ax in range(m):
                    base[ax] = min(max(base[ax], box.lower[ax]), box.upper[ax])
                q.add_term(OrientedCell(tuple(base), (i, j)), 1 if rng.random() < 0.5 else -1)
            gamma = boundary(q)
            if gamma.is_zero():
                continue
            try:
                return validate_loop(gamma)
            except LoopValidationError:
                continue
        raise DomainError("could not generate a plaquette-set loop")
    raise DomainError(f"unknown loop kind {kind!r}")


def parse_loop_description(data) -> GeneralizedLoop:
    """Build a loop from a parsed description.

    The description is a list of items; each item is either an edge triple
    ``[base_point, axis, coefficient]`` or a rectangle
    ``{"plane": [i, j], "R": R, "T": T, "corner": [...]}``.  Items are summed.
    """
    if isinstance(data, dict):
        data = [data]
    total = Chain(1)
    for pos, item in enumerate(data):
        if isinstance(item, dict):
            try:
                rect = rectangle_loop(item["plane"], int(item["R"]), int(item["T"]), item["corner"])
            except KeyError as exc:
                raise DomainError(f"item {pos}: rectangle missing field {exc}") from None
            total = total + rect.chain
        else:
            try:
                base, axis, coef = item
            except (TypeError, ValueError):
                raise DomainError(f"item {pos}: expected [base_point, axis, coefficient]") from None
            total.add_term(OrientedCell(tuple(base), (int(axis),)), int(coef))
    return validate_loop(total)


def load_loop_description(path: str) -> GeneralizedLoop:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return parse_loop_description(data)
