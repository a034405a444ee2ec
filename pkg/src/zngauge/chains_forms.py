"""Z_n-valued (or integer-valued) k-forms and the operators d, delta and star.

A :class:`Form` stores its values on positively oriented cells; the value on
the negatively oriented copy is the negative.  ``modulus=None`` gives
integer-valued forms, which the surface construction needs.

Operators accept an optional ambient :class:`Box`.  Without one they act on the
whole (infinite) lattice, which is possible because every form is finitely
supported.
"""

from __future__ import annotations

import io
import itertools
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .lattice_complex import (
    Box,
    Chain,
    DomainError,
    OrientedCell,
    boundary,
    boundary_terms,
    cell_from_key,
    coboundary_terms,
    dual_box,
    hodge_star_cell,
)

__all__ = [
    "Chain",
    "Form",
    "PreconditionError",
    "evaluate",
    "exterior_derivative",
    "coderivative",
    "hodge_dual",
    "restrict",
    "closedness_witness",
    "is_closed",
    "poincare_potential",
    "copoincare_potential",
    "OperatorMatrices",
]


class PreconditionError(DomainError):
    """An input violates a documented precondition; ``witness`` names a cell."""

    def __init__(self, message: str, witness: Optional[OrientedCell] = None):
        super().__init__(message)
        self.witness = witness


class Form:
    """A k-form on the primal or dual lattice.

    Args:
        degree: k.
        modulus: n for Z_n values, None for integer values.
        values: mapping (or iterable of pairs) from oriented cells to values.
        dual: True for a form on the dual lattice.
    """

    __slots__ = ("degree", "modulus", "dual", "_values")

    def __init__(self, degree: int, modulus: Optional[int], values=None, dual: bool = False):
        if modulus is not None and modulus < 1:
            raise DomainError(f"modulus must be positive, got {modulus}")
        self.degree = degree
        self.modulus = modulus
        self.dual = dual
        self._values: dict[OrientedCell, int] = {}
        if values is None:
            return
        items = values.items() if isinstance(values, dict) else values
        for c, v in items:
            self.add(c, v)

    def _reduce(self, v: int) -> int:
        return v % self.modulus if self.modulus else v

    def add(self, c: OrientedCell, v: int) -> None:
        """Add ``v`` to the value on ``c`` (and ``-v`` on ``-c``)."""
        if c.degree != self.degree or c.dual != self.dual:
            raise DomainError(f"cell {c} does not match a degree-{self.degree} form")
        if c.sign < 0:
            c, v = -c, -v
        total = self._reduce(self._values.get(c, 0) + int(v))
        if total:
            self._values[c] = total
        else:
            self._values.pop(c, None)

    def __call__(self, c: OrientedCell) -> int:
        if c.sign < 0:
            return self._reduce(-self._values.get(-c, 0))
        return self._values.get(c, 0)

    def items(self) -> list[tuple[OrientedCell, int]]:
        """Positively oriented cells with nonzero value, in canonical order."""
        return sorted(self._values.items(), key=lambda kv: kv[0].key)

    def positive_support(self) -> list[OrientedCell]:
        return [c for c, _ in self.items()]

    def support(self) -> list[OrientedCell]:
        """All oriented cells with nonzero value; always of even size."""
        out = []
        for c in self.positive_support():
            out.extend((c, -c))
        return out

    def support_size(self) -> int:
        """Oriented support size (twice the number of positive cells)."""
        return 2 * len(self._values)

    def is_zero(self) -> bool:
        return not self._values

    def copy(self) -> "Form":
        out = Form(self.degree, self.modulus, dual=self.dual)
        out._values = dict(self._values)
        return out

    def _check_compatible(self, other: "Form") -> None:
        if (other.degree, other.modulus, other.dual) != (self.degree, self.modulus, self.dual):
            raise DomainError("forms differ in degree, modulus or lattice")

    def __add__(self, other: "Form") -> "Form":
        self._check_compatible(other)
        out = self.copy()
        for c, v in other._values.items():
            out.add(c, v)
        return out

    def __sub__(self, other: "Form") -> "Form":
        self._check_compatible(other)
        out = self.copy()
        for c, v in other._values.items():
            out.add(c, -v)
        return out

    def __neg__(self) -> "Form":
        return Form(self.degree, self.modulus, {c: -v for c, v in self._values.items()}, self.dual)

    def __rmul__(self, k: int) -> "Form":
        return Form(self.degree, self.modulus, {c: k * v for c, v in self._values.items()}, self.dual)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (
            (self.degree, self.modulus, self.dual) == (other.degree, other.modulus, other.dual)
            and self._values == other._values
        )

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        body = ", ".join(f"{c}: {v}" for c, v in self.items()[:8])
        more = " ..." if len(self._values) > 8 else ""
        return f"Form(degree={self.degree}, modulus={self.modulus}, {{{body}{more}}})"

    def to_text(self) -> str:
        """Line-based serialization: a header, then ``<cell key> <value>`` lines."""
        dim = next(iter(self._values)).dim if self._values else 0
        mod = "Z" if self.modulus is None else str(self.modulus)
        lines = [f"# form degree={self.degree} modulus={mod} dim={dim} dual={int(self.dual)}"]
        lines += [f"{c.key} {v}" for c, v in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Form":
        stream = io.StringIO(text)
        header = stream.readline().split()
        if len(header) < 2 or header[1] != "form":
            raise DomainError("missing '# form' header line")
        fields = dict(item.split("=", 1) for item in header[2:])
        mod = None if fields["modulus"] == "Z" else int(fields["modulus"])
        out = cls(int(fields["degree"]), mod, dual=bool(int(fields["dual"])))
        dim = int(fields["dim"])
        for lineno, line in enumerate(stream, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DomainError(f"line {lineno}: expected '<key> <value>'")
            out.add(cell_from_key(int(parts[0]), dim), int(parts[1]))
        return out


def chain_to_text(q: Chain) -> str:
    items = q.items()
    dim = items[0][0].dim if items else 0
    lines = [f"# chain degree={q.degree} dim={dim} dual={int(q.dual)}"]
    lines += [f"{c.key} {v}" for c, v in items]
    return "\n".join(lines) + "\n"


def chain_from_text(text: str) -> Chain:
    stream = io.StringIO(text)
    header = stream.readline().split()
    if len(header) < 2 or header[1] != "chain":
        raise DomainError("missing '# chain' header line")
    fields = dict(item.split("=", 1) for item in header[2:])
    q = Chain(int(fields["degree"]), dual=bool(int(fields["dual"])))
    dim = int(fields["dim"])
    for lineno, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected '<key> <value>'")
        q.add_term(cell_from_key(int(parts[0]), dim), int(parts[1]))
    return q


def evaluate(omega: Form, q) -> int:
    """Pair a form with a chain (or a single oriented cell)."""
    if isinstance(q, OrientedCell):
        q = Chain(q.degree, [(q, 1)], q.dual)
    if q.degree != omega.degree or q.dual != omega.dual:
        raise DomainError(f"cannot pair a degree-{omega.degree} form with a degree-{q.degree} chain")
    total = sum(v * omega(c) for c, v in q.items())
    return omega._reduce(total)


def exterior_derivative(omega: Form, box: Optional[Box] = None) -> Form:
    """``d omega``.

    On the primal lattice ``d omega(c) = omega(boundary c)``.  On the dual
    lattice d is built from backward differences ``h(b) - h(b - e_i)``, which
    is ``-omega(boundary c)`` because dual edges point along ``-e_i``.
    """
    if omega.is_zero():
        if omega.degree >= (box.dim if box else omega.degree + 1):
            raise DomainError("exterior derivative of a top-degree form")
        return Form(omega.degree + 1, omega.modulus, dual=omega.dual)
    out = Form(omega.degree + 1, omega.modulus, dual=omega.dual)
    orientation = -1 if omega.dual else 1
    for c, v in omega._values.items():
        for cc, s in coboundary_terms(c, box):
            out.add(cc, orientation * s * v)
    return out


def coderivative(omega: Form, box: Optional[Box] = None) -> Form:
    """``delta omega``, with ``delta omega(c) = omega(coboundary c)``.

    With a box, only cells of the box carry values of ``omega``.
    """
    if omega.degree == 0:
        raise DomainError("coderivative of a 0-form")
    out = Form(omega.degree - 1, omega.modulus, dual=omega.dual)
    for c, v in omega._values.items():
        if box is not None and not box.contains_cell(c):
            continue
        for face, s in boundary_terms(c):
            out.add(face, s * v)
    return out


def hodge_dual(omega: Form, dim: Optional[int] = None) -> Form:
    """``*omega`` on the other lattice, defined by ``(*omega)(*c) = omega(c)``.

    ``dim`` is only needed when ``omega`` is zero.
    """
    if dim is None:
        if omega.is_zero():
            raise DomainError("hodge_dual of a zero form needs the dimension")
        dim = next(iter(omega._values)).dim
    out = Form(dim - omega.degree, omega.modulus, dual=not omega.dual)
    for c, v in omega._values.items():
        out.add(hodge_star_cell(c), v)
    return out


def restrict(omega: Form, cells: Iterable[OrientedCell]) -> Form:
    """``omega`` restricted to a set of oriented cells closed under negation."""
    cells = set(cells)
    for c in cells:
        if -c not in cells:
            raise DomainError(f"cell set is not symmetric: {c} present without its negative")
    out = Form(omega.degree, omega.modulus, dual=omega.dual)
    for c, v in omega._values.items():
        if c in cells:
            out._values[c] = v
    return out


def closedness_witness(omega: Form, box: Optional[Box] = None) -> Optional[OrientedCell]:
    """First (k+1)-cell, in canonical order, where ``d omega`` is nonzero."""
    if box is not None and omega.degree >= box.dim:
        return None
    d = exterior_derivative(omega, box)
    items = d.items()
    return items[0][0] if items else None


def is_closed(omega: Form, box: Optional[Box] = None) -> bool:
    return closedness_witness(omega, box) is None


# ---------------------------------------------------------------------------
# Poincare potentials by a coordinate sweep
# ---------------------------------------------------------------------------

def _with(base: tuple, i: int, value: int) -> tuple:
    return base[:i] + (value,) + base[i + 1:]


def _sweep(values: dict, k: int, lower: tuple, upper: tuple, t: int, modulus) -> dict:
    """Cone operator along axis index ``t`` (0-based) toward ``lower[t]``.

    Returns the (k-1)-form ``c -> (-1)^(k-1) * sum_h omega(c at height h, spanning t)``
    over heights ``lower[t] <= h < c[t]``.
    """
    sgn = -1 if (k - 1) % 2 else 1
    axis = t + 1
    columns: dict[tuple, dict[int, int]] = {}
    for (base, axes), v in values.items():
        if axis not in axes:
            continue
        rest = tuple(j for j in axes if j != axis)
        col = columns.setdefault((_with(base, t, lower[t]), rest), {})
        col[base[t]] = col.get(base[t], 0) + v
    out: dict[tuple, int] = {}
    for (base, rest), col in columns.items():
        acc = 0
        for h in range(lower[t], upper[t] + 1):
            if acc:
                key = (_with(base, t, h), rest)
                out[key] = out.get(key, 0) + sgn * acc
            acc += col.get(h, 0)
    return out


def _reduce_dict(d: dict, modulus) -> dict:
    out = {}
    for key, v in d.items():
        v = v % modulus if modulus else v
        if v:
            out[key] = v
    return out


def _nondegenerate(lower: tuple, upper: tuple) -> list[int]:
    return [i for i in range(len(lower)) if lower[i] < upper[i]]


def _potential(values: dict, k: int, lower: tuple, upper: tuple, modulus) -> dict:
    values = _reduce_dict(values, modulus)
    if not values:
        return {}
    axes_left = _nondegenerate(lower, upper)
    if not axes_left:
        raise DomainError("nonzero form of positive degree on a single point")
    t = axes_left[-1]
    out = _sweep(values, k, lower, upper, t, modulus)
    bottom = {
        (b, ax): v for (b, ax), v in values.items() if b[t] == lower[t] and (t + 1) not in ax
    }
    eta = _potential(bottom, k, lower, _with(upper, t, lower[t]), modulus)
    for (b, ax), v in eta.items():
        for h in range(lower[t], upper[t] + 1):
            key = (_with(b, t, h), ax)
            out[key] = out.get(key, 0) + v
    return _reduce_dict(out, modulus)


def _d_dict(values: dict, lower: tuple, upper: tuple, modulus) -> dict:
    """Exterior derivative of a dict form inside the (possibly flat) box."""
    box = Box(lower, upper)
    out: dict[tuple, int] = {}
    for (b, ax), v in values.items():
        for cc, s in coboundary_terms(OrientedCell(b, ax), box):
            key = (cc.base, cc.axes)
            out[key] = out.get(key, 0) + s * v
    return _reduce_dict(out, modulus)


def _vanishing_potential(values: dict, k: int, lower: tuple, upper: tuple, modulus) -> dict:
    """Potential that vanishes on the boundary, for forms that vanish there.

    The boundary is taken relative to the non-degenerate axes of the box.
    """
    values = _reduce_dict(values, modulus)
    if not values:
        return {}
    axes_left = _nondegenerate(lower, upper)
    t = axes_left[-1]
    axis = t + 1
    face_upper = _with(upper, t, lower[t])
    phi: dict[tuple, int] = {}
    for (b, ax), v in values.items():
        if axis in ax:
            key = (_with(b, t, lower[t]), tuple(j for j in ax if j != axis))
            phi[key] = phi.get(key, 0) + v
    phi = _reduce_dict(phi, modulus)
    lift: dict[tuple, int] = {}
    if phi:
        if k == 1:
            raise PreconditionError("form does not vanish on the box boundary or is not closed")
        psi = _vanishing_potential(phi, k - 1, lower, face_upper, modulus)
        for (b, ax), v in psi.items():
            lift[(b, tuple(sorted(ax + (axis,))))] = v
    omega1 = dict(values)
    for key, v in _d_dict(lift, lower, upper, modulus).items():
        omega1[key] = omega1.get(key, 0) - v
    out = _sweep(_reduce_dict(omega1, modulus), k, lower, upper, t, modulus)
    for key, v in lift.items():
        out[key] = out.get(key, 0) + v
    return _reduce_dict(out, modulus)


def _primal_frame(omega: Form, box: Box):
    """Map a form and a box to primal coordinates (dual lattices are mirrored)."""
    if box.dual != omega.dual:
        raise DomainError("form and box live on different lattices")
    if not omega.dual:
        vals = {(c.base, c.axes): v for c, v in omega._values.items()}
        return vals, box.lower, box.upper
    vals = {(tuple(-x for x in c.base), c.axes): v for c, v in omega._values.items()}
    return vals, tuple(-x for x in box.upper), tuple(-x for x in box.lower)


def _from_primal_frame(values: dict, degree: int, modulus, dual: bool) -> Form:
    out = Form(degree, modulus, dual=dual)
    for (b, ax), v in values.items():
        base = tuple(-x for x in b) if dual else b
        out.add(OrientedCell(base, ax, 1, dual), v)
    return out


def poincare_potential(omega: Form, box: Box, vanish_on_boundary: bool = False) -> Form:
    """A (k-1)-form ``w`` on ``box`` with ``d w = omega`` on the box.

    With ``vanish_on_boundary`` (allowed for k <= m-1 when ``omega`` vanishes
    on the boundary cells of the box) the potential vanishes there as well.

    Raises:
        PreconditionError: ``omega`` is not closed (the witness is a
            (k+1)-cell) or does not vanish on the boundary when required.
    """
    k = omega.degree
    m = box.dim
    if not 1 <= k <= m:
        raise DomainError(f"degree {k} out of range 1..{m}")
    for c in omega.positive_support():
        if not box.contains_cell(c):
            raise DomainError(f"cell {c} of the form lies outside the box")
    witness = closedness_witness(omega, box)
    if witness is not None:
        raise PreconditionError("form is not closed on the box", witness)
    vals, lower, upper = _primal_frame(omega, box)
    if vanish_on_boundary:
        if k > m - 1:
            raise DomainError("the boundary-vanishing potential needs k <= m-1")
        for c in omega.positive_support():
            if box.is_boundary_cell(c):
                raise PreconditionError("form does not vanish on the box boundary", c)
        pot = _vanishing_potential(vals, k, lower, upper, omega.modulus)
    else:
        pot = _potential(vals, k, lower, upper, omega.modulus)
    result = _from_primal_frame(pot, k - 1, omega.modulus, omega.dual)
    # the mirrored construction solves the boundary pairing; dual d carries a minus sign
    return -result if omega.dual else result


def copoincare_potential(omega: Form, box: Box) -> Form:
    """A (k+1)-form ``w`` vanishing outside ``box`` with ``delta w = omega``.

    Built as a signed Hodge dual of a boundary-vanishing Poincare potential of
    ``*omega`` on the dual box.
    """
    k = omega.degree
    m = box.dim
    if not 1 <= k <= m - 1:
        raise DomainError(f"degree {k} out of range 1..{m - 1}")
    if box.dual != omega.dual:
        raise DomainError("form and box live on different lattices")
    for c in omega.positive_support():
        if not box.contains_cell(c):
            raise DomainError(f"cell {c} of the form lies outside the box")
    delta = coderivative(omega)
    if not delta.is_zero():
        raise PreconditionError("form is not co-closed", delta.positive_support()[0])
    if omega.is_zero():
        return Form(k + 1, omega.modulus, dual=omega.dual)
    star = hodge_dual(omega)
    dbox = dual_box(box)
    eta = poincare_potential(star, dbox, vanish_on_boundary=True)
    # delta(*eta)(c) = (-1)^(k+1) d(**eta)(*c) and **eta = (-1)^((m-k-1)(k+1)) eta
    sign = (-1) ** (((k + 1) * (m - k)) % 2)
    result = hodge_dual(eta, m)
    return result if sign == 1 else -result


# ---------------------------------------------------------------------------
# Sparse operator matrices for bulk computations on a box
# ---------------------------------------------------------------------------

class OperatorMatrices:
    """Cell indices and sparse incidence matrices of a box.

    Vectors of form values are indexed by the positive cells of the box in
    canonical order.
    """

    def __init__(self, box: Box):
        self.box = box
        self.dim = box.dim
        self.cells = [list(box.cells(k)) for k in range(self.dim + 1)]
        self.index = [{c: i for i, c in enumerate(cs)} for cs in self.cells]
        self._boundary: dict[int, sp.csr_matrix] = {}

    def boundary_matrix(self, k: int) -> sp.csr_matrix:
        """Matrix with entry ``boundary(c)[c']`` for k-cells c and (k-1)-cells c'."""
        if k not in self._boundary:
            rows, cols, vals = [], [], []
            idx = self.index[k - 1]
            for r, c in enumerate(self.cells[k]):
                for face, s in boundary_terms(c):
                    rows.append(r)
                    cols.append(idx[face])
                    vals.append(s)
            shape = (len(self.cells[k]), len(self.cells[k - 1]))
            self._boundary[k] = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)
        return self._boundary[k]

    def d(self, k: int) -> sp.csr_matrix:
        """Exterior derivative on k-forms (negated on the dual lattice, as for ``Form``)."""
        mat = self.boundary_matrix(k + 1)
        return -mat if self.box.dual else mat

    def delta(self, k: int) -> sp.csr_matrix:
        """Coderivative on k-forms (box-aware)."""
        return self.boundary_matrix(k).T.tocsr()

    def form_to_vector(self, omega: Form) -> np.ndarray:
        vec = np.zeros(len(self.cells[omega.degree]), dtype=np.int64)
        for c, v in omega._values.items():
            vec[self.index[omega.degree][c]] = v
        return vec

    def vector_to_form(self, vec: np.ndarray, k: int, modulus) -> Form:
        out = Form(k, modulus, dual=self.box.dual)
        for i in np.flatnonzero(vec):
            out.add(self.cells[k][i], int(vec[i]))
        return out


def hodge_matrix(primal: OperatorMatrices, dual: OperatorMatrices, k: int) -> sp.csr_matrix:
    """Matrix of ``omega -> *omega`` from k-forms on one lattice to the other."""
    m = primal.dim
    rows, cols, vals = [], [], []
    target = dual.index[m - k]
    for col, c in enumerate(primal.cells[k]):
        sc = hodge_star_cell(c)
        row = target.get(sc.positive())
        if row is None:
            continue
        rows.append(row)
        cols.append(col)
        vals.append(sc.sign)
    shape = (len(dual.cells[m - k]), len(primal.cells[k]))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)


def random_form(rng: np.random.Generator, box: Box, k: int, modulus: int, density: float = 0.5) -> Form:
    """A random k-form on ``box`` (used by tests and suites)."""
    out = Form(k, modulus, dual=box.dual)
    for c in box.cells(k):
        if rng.random() < density:
            out.add(c, int(rng.integers(0, modulus)))
    return out
