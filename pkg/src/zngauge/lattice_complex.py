"""Cells of the hypercubic lattice Z^m and of its dual lattice.

Conventions
-----------
* Axes are numbered 1..m.  A primal k-cell ``(a; j1 < ... < jk)`` is the unit
  cube spanned by ``e_j1, ..., e_jk`` at the base point ``a``.
* Dual points sit at ``a + (1/2, ..., 1/2)``.  A dual cell stores the integer
  *anchor* ``a`` instead of the half-integer point.  Dual axis ``i`` points in
  the direction ``-e_i``, so the dual cell ``(a; i1 < ... < ik)`` has corners
  ``a - sum(e_i for i in S)`` for every subset ``S`` of its axes.
* Boxes use closed intervals ``[lower_i, upper_i]``.  Dual boxes are stored in
  anchor coordinates.

Integer keys
------------
Every oriented cell is packed into a Python integer.  Reading from the most
significant end::

    [coord_1 + 2^15 : 16 bits] ... [coord_m + 2^15 : 16 bits]
    [complemented axis mask : m bits, axis 1 is the most significant bit]
    [dual flag : 1 bit]
    [sign bit : 1 bit, set for negative orientation]

For cells of one degree and one lattice, integer order of the keys equals the
lexicographic order on ``(base, axes)``.  This is the canonical total order
used throughout the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

COORD_BITS = 16
COORD_OFFSET = 1 << (COORD_BITS - 1)
COORD_MASK = (1 << COORD_BITS) - 1


class DomainError(ValueError):
    """Raised when an operation is applied outside its domain."""


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    items = list(seq)
    if len(set(items)) != len(items):
        return 0
    sign = 1
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class LatticeGeometry:
    """The lattice Z^dim together with its dual."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"lattice dimension must be an integer >= 2, got {self.dim}")

    def cell(self, base, axes, sign: int = 1, dual: bool = False) -> Optional["OrientedCell"]:
        if len(base) != self.dim:
            raise DomainError(f"base {tuple(base)} does not have {self.dim} coordinates")
        return canonicalize(base, axes, sign, dual=dual, dim=self.dim)

    def point(self, base, dual: bool = False) -> "OrientedCell":
        return self.cell(base, (), 1, dual)


@dataclass(frozen=True, eq=False)
class OrientedCell:
    """An oriented k-cell of the primal lattice or of the dual lattice.

    Args:
        base: base point (primal) or anchor (dual), a tuple of m integers.
        axes: strictly increasing axis indices in 1..m.
        sign: +1 for positive orientation, -1 for negative.
        dual: True for a cell of the dual lattice.
    """

    base: tuple
    axes: tuple = ()
    sign: int = 1
    dual: bool = False
    key: int = field(init=False, repr=False)

    def __post_init__(self):
        base = tuple(int(x) for x in self.base)
        axes = tuple(int(j) for j in self.axes)
        m = len(base)
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign}")
        for prev, nxt in zip(axes, axes[1:]):
            if prev >= nxt:
                raise DomainError(f"axes {axes} are not strictly increasing")
        if axes and (axes[0] < 1 or axes[-1] > m):
            raise DomainError(f"axes {axes} out of range 1..{m}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "dual", bool(self.dual))
        object.__setattr__(self, "key", _pack(base, axes, self.sign, self.dual))

    @property
    def dim(self) -> int:
        return len(self.base)

    @property
    def degree(self) -> int:
        return len(self.axes)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        if not isinstance(other, OrientedCell):
            return NotImplemented
        return self.key == other.key and len(self.base) == len(other.base)

    def __lt__(self, other: "OrientedCell"):
        return self.key < other.key

    def __le__(self, other: "OrientedCell"):
        return self.key <= other.key

    def __neg__(self) -> "OrientedCell":
        return OrientedCell(self.base, self.axes, -self.sign, self.dual)

    def positive(self) -> "OrientedCell":
        return self if self.sign == 1 else -self

    def corners(self) -> list[tuple]:
        """Lattice points (or dual anchors) at the corners of the cell."""
        step = -1 if self.dual else 1
        out = []
        for subset in itertools.product((0, 1), repeat=len(self.axes)):
            pt = list(self.base)
            for use, j in zip(subset, self.axes):
                pt[j - 1] += step * use
            out.append(tuple(pt))
        return out

    def __str__(self):
        kind = "dual" if self.dual else "cell"
        sgn = "+" if self.sign == 1 else "-"
        return f"{sgn}{kind}{self.base}{list(self.axes)}"


def _pack(base: tuple, axes: tuple, sign: int, dual: bool) -> int:
    packed = 0
    for x in base:
        shifted = x + COORD_OFFSET
        if not 0 <= shifted <= COORD_MASK:
            raise DomainError(f"coordinate {x} does not fit in {COORD_BITS} bits")
        packed = (packed << COORD_BITS) | shifted
    m = len(base)
    mask = 0
    for j in axes:
        mask |= 1 << (m - j)
    inverted = ((1 << m) - 1) ^ mask
    return (((packed << m) | inverted) << 2) | (int(dual) << 1) | int(sign < 0)


def cell_key(c: OrientedCell) -> int:
    return c.key


def cell_from_key(key: int, dim: int) -> OrientedCell:
    """Invert :func:`cell_key` for a lattice of dimension ``dim``."""
    negative = key & 1
    dual = (key >> 1) & 1
    rest = key >> 2
    inverted = rest & ((1 << dim) - 1)
    mask = ((1 << dim) - 1) ^ inverted
    axes = tuple(j for j in range(1, dim + 1) if mask & (1 << (dim - j)))
    packed = rest >> dim
    base = []
    for _ in range(dim):
        base.append((packed & COORD_MASK) - COORD_OFFSET)
        packed >>= COORD_BITS
    return OrientedCell(tuple(reversed(base)), axes, -1 if negative else 1, bool(dual))


def canonicalize(base, axes, sign: int = 1, dual: bool = False, dim: Optional[int] = None) -> Optional[OrientedCell]:
    """Sort ``axes`` and fold the permutation sign into the orientation.

    Returns None (the zero marker) when an axis repeats.
    """
    base = tuple(base)
    m = len(base) if dim is None else dim
    for j in axes:
        if not 1 <= j <= m:
            raise DomainError(f"axis {j} out of range 1..{m}")
    s = permutation_sign(axes)
    if s == 0:
        return None
    return OrientedCell(base, tuple(sorted(axes)), sign * s, dual)


class Chain:
    """A finitely supported integer combination of k-cells.

    Coefficients are stored on positively oriented cells; ``q[-c] == -q[c]``.
    """

    __slots__ = ("degree", "dual", "_coeffs")

    def __init__(self, degree: int, terms=None, dual: bool = False):
        self.degree = degree
        self.dual = dual
        self._coeffs: dict[OrientedCell, int] = {}
        if terms is None:
            return
        items = terms.items() if isinstance(terms, dict) else terms
        for c, v in items:
            self.add_term(c, v)

    def add_term(self, c: OrientedCell, v: int) -> None:
        if c.degree != self.degree or c.dual != self.dual:
            raise DomainError(f"cell {c} does not belong to this chain (degree {self.degree})")
        if c.sign < 0:
            c, v = -c, -v
        total = self._coeffs.get(c, 0) + int(v)
        if total:
            self._coeffs[c] = total
        else:
            self._coeffs.pop(c, None)

    def __getitem__(self, c: OrientedCell) -> int:
        if c.sign < 0:
            return -self._coeffs.get(-c, 0)
        return self._coeffs.get(c, 0)

    def items(self) -> list[tuple[OrientedCell, int]]:
        """Positively oriented cells with nonzero coefficients, in canonical order."""
        return sorted(self._coeffs.items(), key=lambda kv: kv[0].key)

    def support(self) -> list[OrientedCell]:
        return [c for c, _ in self.items()]

    def __len__(self):
        return len(self._coeffs)

    def __iter__(self):
        return iter(self.support())

    def is_zero(self) -> bool:
        return not self._coeffs

    def copy(self) -> "Chain":
        out = Chain(self.degree, dual=self.dual)
        out._coeffs = dict(self._coeffs)
        return out

    def _combine(self, other: "Chain", factor: int) -> "Chain":
        if other.degree != self.degree or other.dual != self.dual:
            raise DomainError("chains of different degree or lattice cannot be added")
        out = self.copy()
        for c, v in other._coeffs.items():
            out.add_term(c, factor * v)
        return out

    def __add__(self, other: "Chain") -> "Chain":
        return self._combine(other, 1)

    def __sub__(self, other: "Chain") -> "Chain":
        return self._combine(other, -1)

    def __neg__(self) -> "Chain":
        return Chain(self.degree, {c: -v for c, v in self._coeffs.items()}, self.dual)

    def __rmul__(self, k: int) -> "Chain":
        return Chain(self.degree, {c: k * v for c, v in self._coeffs.items()}, self.dual)

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return self.degree == other.degree and self.dual == other.dual and self._coeffs == other._coeffs

    def __repr__(self):
        body = ", ".join(f"{v:+d}*{c}" for c, v in self.items())
        return f"Chain(degree={self.degree}, [{body}])"


def boundary_terms(c: OrientedCell) -> list[tuple[OrientedCell, int]]:
    """Faces of ``c`` with their coefficients in the boundary chain."""
    k = c.degree
    if k == 0:
        raise DomainError("a 0-cell has no boundary")
    step = -1 if c.dual else 1
    a = c.base
    if k == 1:
        j = c.axes[0]
        shifted = list(a)
        shifted[j - 1] += step
        return [
            (OrientedCell(tuple(shifted), (), 1, c.dual), c.sign),
            (OrientedCell(a, (), 1, c.dual), -c.sign),
        ]
    out = []
    for pos, j in enumerate(c.axes, start=1):
        rest = c.axes[: pos - 1] + c.axes[pos:]
        shifted = list(a)
        shifted[j - 1] += step
        sgn = -1 if pos % 2 else 1
        out.append((OrientedCell(a, rest, 1, c.dual), c.sign * sgn))
        out.append((OrientedCell(tuple(shifted), rest, 1, c.dual), -c.sign * sgn))
    return out


def boundary(c) -> Chain:
    """Boundary chain of an oriented cell or of a chain."""
    if isinstance(c, Chain):
        if c.degree == 0:
            raise DomainError("a 0-chain has no boundary")
        out = Chain(c.degree - 1, dual=c.dual)
        for cell, v in c.items():
            for face, s in boundary_terms(cell):
                out.add_term(face, s * v)
        return out
    return Chain(c.degree - 1, boundary_terms(c), c.dual)


def coboundary_terms(c: OrientedCell, box: Optional["Box"] = None) -> list[tuple[OrientedCell, int]]:
    """(k+1)-cells ``c'`` with ``boundary(c')[c] != 0``, with that coefficient.

    When ``box`` is given only cells inside it are returned.
    """
    m = c.dim
    if c.degree >= m:
        raise DomainError(f"a {m}-cell has no coboundary in dimension {m}")
    step = -1 if c.dual else 1
    pos_c = c.positive()
    out = []
    for i in range(1, m + 1):
        if i in c.axes:
            continue
        axes = tuple(sorted(c.axes + (i,)))
        for shift in (0, 1):
            base = list(c.base)
            base[i - 1] -= step * shift
            cand = OrientedCell(tuple(base), axes, 1, c.dual)
            if box is not None and not box.contains_cell(cand):
                continue
            for face, s in boundary_terms(cand):
                if face == pos_c:
                    out.append((cand, s * c.sign))
                    break
    out.sort(key=lambda t: t[0].key)
    return out


def coboundary(c: OrientedCell, box: Optional["Box"] = None) -> Chain:
    return Chain(c.degree + 1, coboundary_terms(c, box), c.dual)


def complement_axes(axes: Sequence[int], m: int) -> tuple:
    return tuple(i for i in range(1, m + 1) if i not in axes)


def hodge_star_cell(c: OrientedCell) -> OrientedCell:
    """Hodge star: primal k-cells to dual (m-k)-cells and back.

    Primal ``(a; J)`` maps to ``sgn(J, I) * (dual anchor a; I)`` where ``I`` is
    the complement of ``J``; dual ``(a; I)`` maps to ``sgn(I, J) * (a; J)``.
    """
    comp = complement_axes(c.axes, c.dim)
    sgn = permutation_sign(c.axes + comp)
    return OrientedCell(c.base, comp, c.sign * sgn, not c.dual)


@dataclass(frozen=True)
class Box:
    """A box ``[lower_1, upper_1] x ... x [lower_m, upper_m]`` of lattice points.

    For a dual box the bounds are anchor coordinates.
    """

    lower: tuple
    upper: tuple
    dual: bool = False

    def __post_init__(self):
        lower = tuple(int(x) for x in self.lower)
        upper = tuple(int(x) for x in self.upper)
        if len(lower) != len(upper) or not lower:
            raise DomainError("box bounds must have equal positive length")
        if any(lo > hi for lo, hi in zip(lower, upper)):
            raise DomainError(f"empty box {lower}..{upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, N: int, dim: int) -> "Box":
        """The box B_N = [-N, N]^dim."""
        return cls((-N,) * dim, (N,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> tuple:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    def contains_point(self, pt) -> bool:
        return all(lo <= x <= hi for lo, x, hi in zip(self.lower, pt, self.upper))

    def contains_cell(self, c: OrientedCell) -> bool:
        """True when every corner of ``c`` lies in the box."""
        if c.dual != self.dual:
            return False
        a = c.base
        for i in range(self.dim):
            lo, hi = self.lower[i], self.upper[i]
            if (i + 1) in c.axes:
                if self.dual:
                    lo += 1
                else:
                    hi -= 1
            if not lo <= a[i] <= hi:
                return False
        return True

    def is_boundary_cell(self, c: OrientedCell) -> bool:
        """True when the closed cell lies inside the geometric boundary of the box."""
        if not self.contains_cell(c):
            return False
        for i in range(self.dim):
            if (i + 1) in c.axes:
                continue
            if c.base[i] == self.lower[i] or c.base[i] == self.upper[i]:
                return True
        return False

    def points(self) -> Iterator[tuple]:
        return itertools.product(*(range(lo, hi + 1) for lo, hi in zip(self.lower, self.upper)))

    def cells(self, k: int, orientation: str = "positive") -> Iterator[OrientedCell]:
        """Cells of degree ``k`` in the box, in canonical order.

        Args:
            orientation: "positive", "negative" or "both" (each positive cell
                followed by its negative).
        """
        if orientation not in ("positive", "negative", "both"):
            raise DomainError(f"unknown orientation filter {orientation!r}")
        if not 0 <= k <= self.dim:
            raise DomainError(f"degree {k} out of range 0..{self.dim}")
        combos = list(itertools.combinations(range(1, self.dim + 1), k))
        for a in self.points():
            for axes in combos:
                c = OrientedCell(a, axes, 1, self.dual)
                if not self.contains_cell(c):
                    continue
                if orientation in ("positive", "both"):
                    yield c
                if orientation in ("negative", "both"):
                    yield -c

    def count_cells(self, k: int) -> int:
        """Number of positively oriented k-cells in the box."""
        total = 0
        w = self.widths
        for axes in itertools.combinations(range(self.dim), k):
            prod = 1
            for i in range(self.dim):
                prod *= w[i] if i in axes else w[i] + 1
            total += prod
        return total

    def fattened(self, r: int = 1) -> "Box":
        return Box(tuple(x - r for x in self.lower), tuple(x + r for x in self.upper), self.dual)


def cells_in_box(box: Box, k: int, orientation: str = "positive") -> Iterator[OrientedCell]:
    return box.cells(k, orientation)


def is_boundary_cell(c: OrientedCell, box: Box) -> bool:
    return box.is_boundary_cell(c)


def dual_box(box: Box) -> Box:
    """The set of corners of the stars of the points of ``box``.

    For a primal box ``[L, U]`` this is the dual box with anchors ``[L-1, U]``;
    applying it twice gives the primal box ``[L-1, U+1]``.
    """
    if box.dual:
        return Box(box.lower, tuple(x + 1 for x in box.upper), dual=False)
    return Box(tuple(x - 1 for x in box.lower), box.upper, dual=True)


def bounding_box(cells: Iterable[OrientedCell]) -> Box:
    """Smallest box containing every corner of ``cells`` (all on one lattice)."""
    cells = list(cells)
    pts = [pt for c in cells for pt in c.corners()]
    if not pts:
        raise DomainError("cannot bound an empty set of cells")
    m = len(pts[0])
    lower = tuple(min(p[i] for p in pts) for i in range(m))
    upper = tuple(max(p[i] for p in pts) for i in range(m))
    return Box(lower, upper, dual=cells[0].dual)
