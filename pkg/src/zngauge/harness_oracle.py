"""Exact enumeration oracles, verification suites and run manifests.

The oracle sums over every spin configuration of a small box, optionally
after fixing a spanning tree of edges to zero.  The suites compare the
sampler, the vortex analysis and the theory constants against exact values
or against the stated bounds, and produce reproducible reports.
"""

from __future__ import annotations

import itertools
import json
import math
import re
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .chains_forms import (
    Form,
    OperatorMatrices,
    coderivative,
    evaluate,
    exterior_derivative,
    hodge_dual,
    hodge_matrix,
    random_form,
)
from .gibbs_sampler import (
    BoxLattice,
    ConfigError,
    EstimatorResult,
    SamplerConfig,
    SpinConfiguration,
    batch_means,
    heat_bath_sweep,
    make_rng,
    action as wilson_action,
)
from .lattice_complex import (
    Box,
    Chain,
    DomainError,
    OrientedCell,
    boundary,
    dual_box,
    hodge_star_cell,
)
from .loops_surfaces import (
    GeneralizedLoop,
    build_surface,
    parse_loop_description,
    random_loop,
    rectangle_loop,
    validate_loop,
)
from .vortex_analysis import WilsonPrimeContext, vortex_census
from .zn_model import (
    Representation,
    S_beta,
    S_beta_gaps_all,
    beta0_admissible,
    constants_bundle,
    lambda_,
    minimal_admissible_beta0,
    predicted_wilson,
    theta,
    vortex_constant,
    xi,
    _g0_mask,
)

__all__ = [
    "ENUMERATION_BUDGET",
    "SIGMA_THRESHOLD",
    "BudgetExceeded",
    "ManifestError",
    "OracleSpec",
    "WilsonObservable",
    "AgreementIndicator",
    "exact_expectation",
    "exact_expectations",
    "Check",
    "VerificationReport",
    "RunManifest",
    "load_manifest",
    "parse_manifest",
    "LoopFamily",
    "MeasuredRun",
    "measure_run",
    "verify_monotonicity",
    "verify_theorem_envelope",
    "verify_resampling",
    "verify_agreement_bound",
    "verify_vortex_probability",
    "SUITES",
    "run_suite",
    "dumps17",
]

ENUMERATION_BUDGET = 2 ** 28
SIGMA_THRESHOLD = 4.0
CHUNK = 2 ** 15


class BudgetExceeded(DomainError):
    """The enumeration would visit more states than the budget allows."""


class ManifestError(DomainError):
    """Malformed run manifest; the message names the offending line."""


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    return format(x, ".17g")


def dumps17(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, complex):
        return dumps17([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps17(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dumps17(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def build_description() -> str:
    """``git describe`` of the source tree, or "unknown"."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


# ---------------------------------------------------------------------------
# Exact enumeration oracle
# ---------------------------------------------------------------------------

def _comb_tree(lattice: BoxLattice) -> np.ndarray:
    """Spanning tree of the box: edges along axis j whose later coordinates are all minimal."""
    pts = lattice.points[lattice.edge_point]
    mask = np.zeros(lattice.n_edges, dtype=bool)
    lower = np.asarray(lattice.box.lower)
    for j in range(lattice.dim):
        sel = lattice.edge_axis == j
        later = np.all(pts[:, j + 1:] == lower[j + 1:], axis=1)
        mask |= sel & later
    return mask


@dataclass
class OracleSpec:
    """An exactly enumerable system.

    Attributes:
        box: primal box.
        n, m_rep: group order and representation index.
        beta: coupling.
        gauge_fixing: fix the comb spanning tree to zero.
        observables: optional list of observables evaluated together.
    """

    box: Box
    n: int
    beta: float
    m_rep: int = 1
    gauge_fixing: bool = True
    observables: list = field(default_factory=list)
    budget: int = ENUMERATION_BUDGET

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        self.lattice = BoxLattice(self.box)
        self.rep = Representation(self.n, self.m_rep)
        tree = _comb_tree(self.lattice) if self.gauge_fixing else np.zeros(self.lattice.n_edges, bool)
        self.free_edges = np.flatnonzero(~tree)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def state_count(self) -> int:
        return self.n ** len(self.free_edges)

    def check_budget(self, count: Optional[int] = None) -> None:
        count = self.state_count if count is None else count
        if count > self.budget:
            raise BudgetExceeded(
                f"enumeration needs {count} states, more than the budget {self.budget}")


class WilsonObservable:
    """``W_gamma = rho(sigma(gamma))`` evaluated on batches of configurations."""

    gauge_invariant = True

    def __init__(self, lattice: BoxLattice, gamma, rep: Representation, real_part: bool = False):
        loop = gamma if isinstance(gamma, GeneralizedLoop) else validate_loop(gamma)
        self.loop = loop
        self.rep = rep
        self.real_part = real_part
        ids, signs = [], []
        for e, v in loop.chain.items():
            eid, s = lattice.edge_id(e)
            ids.append(eid)
            signs.append(v * s)
        self.edges = np.array(ids, dtype=np.int64)
        self.coefs = np.array(signs, dtype=np.int64)
        self._lattice = lattice
        self._surface = None

    def __call__(self, spins: np.ndarray) -> np.ndarray:
        hol = (spins[:, self.edges] @ self.coefs) % self.rep.n
        val = self.rep.rho(hol)
        return np.real(val) if self.real_part else val

    def plaquette_dependence(self):
        """(plaquette ids, coefficients) of a surface with boundary ``gamma``."""
        if self._surface is None:
            q = build_surface(self.loop, self._lattice.box)
            ids, coefs = [], []
            for p, v in q.chain.items():
                pid, s = self._lattice.plaquette_id(p)
                ids.append(pid)
                coefs.append(v * s)
            self._surface = (np.array(ids, np.int64), np.array(coefs, np.int64))
        return self._surface

    def on_plaquettes(self, pv: np.ndarray) -> np.ndarray:
        """Evaluate from all plaquette values via Stokes: ``sigma(gamma) = d sigma(q)``."""
        ids, _ = self.plaquette_dependence()
        return self.from_plaquette_values(pv[:, ids])

    def from_plaquette_values(self, values: np.ndarray) -> np.ndarray:
        _, coefs = self.plaquette_dependence()
        val = self.rep.rho((values @ coefs) % self.rep.n)
        return np.real(val) if self.real_part else val


class AgreementIndicator:
    """Indicator that ``d sigma`` agrees with a closed 2-form ``nu`` on its support."""

    gauge_invariant = True

    def __init__(self, lattice: BoxLattice, nu: Form):
        ids, vals = [], []
        for p, v in nu.items():
            pid, s = lattice.plaquette_id(p)
            ids.append(pid)
            vals.append((s * v) % nu.modulus)
        self.plaquettes = np.array(ids, np.int64)
        self.values = np.array(vals, np.int64)
        self._lattice = lattice
        self.n = nu.modulus

    def on_plaquettes(self, pv: np.ndarray) -> np.ndarray:
        return np.all(pv[:, self.plaquettes] == self.values, axis=1).astype(float)

    def __call__(self, spins: np.ndarray) -> np.ndarray:
        lat = self._lattice
        edges = lat.plaq_edges[self.plaquettes]
        pv = np.einsum("bpk,k->bp", spins[:, edges], lat.PLAQ_SIGNS) % self.n
        return np.all(pv == self.values, axis=1).astype(float)


def _gauge_probe(spec: OracleSpec, f, rng: np.random.Generator, trials: int = 8) -> None:
    """Refuse observables that change under ``sigma -> sigma + dh``."""
    lat = spec.lattice
    npts = len(lat.points)
    spins = rng.integers(0, spec.n, size=(trials, lat.n_edges))
    h = rng.integers(0, spec.n, size=(trials, npts))
    # (dh)(x_j@a) = h(a + e_j) - h(a)
    head = lat.edge_point + lat.strides[lat.edge_axis]
    shifted = (spins + h[:, head] - h[:, lat.edge_point]) % spec.n
    a, b = np.asarray(f(spins)), np.asarray(f(shifted))
    if not np.allclose(a, b, atol=1e-12, rtol=0):
        raise DomainError("observable is not gauge invariant; gauge fixing refused")


def _plaquette_weights(spec: OracleSpec) -> np.ndarray:
    """Single-plaquette log weights ``2 beta (Re rho(g) - 1)`` (both orientations)."""
    g = spec.rep.elements()
    return 2.0 * spec.beta * (spec.rep.re_rho(g) - 1.0)


def _digits(count: int, width: int, n: int) -> np.ndarray:
    idx = np.arange(count, dtype=np.int64)
    powers = n ** np.arange(width, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % n


def _enumerate(spec: OracleSpec, observables: Sequence) -> np.ndarray:
    """Sum over all free-edge states in blocks: an inner block of states is
    tabulated once and shifted by each outer state."""
    lat = spec.lattice
    n = spec.n
    free = spec.free_edges
    F = len(free)
    spec.check_budget()
    # plaquette values are linear in the free edge spins
    A = np.zeros((lat.n_plaquettes, F), dtype=np.int64)
    col = -np.ones(lat.n_edges, dtype=np.int64)
    col[free] = np.arange(F)
    for k in range(4):
        e = lat.plaq_edges[:, k]
        ok = col[e] >= 0
        np.add.at(A, (np.flatnonzero(ok), col[e[ok]]), lat.PLAQ_SIGNS[k])
    logw_table = _plaquette_weights(spec)
    k_in = min(F, max(0, int(math.floor(math.log(CHUNK) / math.log(n)))))
    inner = _digits(n ** k_in, k_in, n)
    pv_in = inner @ A[:, :k_in].T
    n_out = n ** (F - k_in)
    by_plaquettes = [hasattr(f, "on_plaquettes") for f in observables]
    spins = None
    if not all(by_plaquettes):
        spins = np.zeros((len(inner), lat.n_edges), dtype=np.int64)
        spins[:, free[:k_in]] = inner
    Z = 0.0
    acc = np.zeros(len(observables), dtype=complex)
    powers = n ** np.arange(F - k_in, dtype=np.int64)
    for o in range(n_out):
        outer = (o // powers) % n
        pv = (pv_in + A[:, k_in:] @ outer) % n
        w = np.exp(logw_table[pv].sum(axis=1))
        Z += w.sum()
        if spins is not None:
            spins[:, free[k_in:]] = outer
        for i, f in enumerate(observables):
            vals = f.on_plaquettes(pv) if by_plaquettes[i] else f(spins)
            acc[i] += np.sum(np.asarray(vals) * w)
    return acc / Z


def _plaquette_fast_path(spec: OracleSpec, observables: Sequence) -> Optional[np.ndarray]:
    """2D boxes: plaquette values are independent, so only the surface plaquettes matter."""
    if spec.dim != 2 or not spec.gauge_fixing:
        return None
    if not all(hasattr(f, "plaquette_dependence") for f in observables):
        return None
    logw = _plaquette_weights(spec)
    p1 = np.exp(logw - logw.max())
    p1 /= p1.sum()
    out = np.zeros(len(observables), dtype=complex)
    for i, f in enumerate(observables):
        ids, _ = f.plaquette_dependence()
        k = len(ids)
        spec.check_budget(spec.n ** k)
        total = spec.n ** k
        powers = spec.n ** np.arange(k, dtype=np.int64)
        s = 0.0 + 0.0j
        for start in range(0, total, CHUNK):
            idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
            vals = (idx[:, None] // powers[None, :]) % spec.n
            prob = np.prod(p1[vals], axis=1)
            s += np.sum(f.from_plaquette_values(vals) * prob)
        out[i] = s
    return out


def exact_expectations(spec: OracleSpec, observables: Optional[Sequence] = None,
                       seed: int = 0, fast_path: bool = True) -> np.ndarray:
    """Exact expectations of several batch observables under the Wilson measure.

    Observables take an int array of spins with shape (batch, edges) and
    return one value per row.

    Raises:
        BudgetExceeded: more than ``spec.budget`` states.
        DomainError: an observable is not gauge invariant while gauge fixing is on.
    """
    obs = list(observables if observables is not None else spec.observables)
    if spec.gauge_fixing:
        rng = np.random.default_rng(seed)
        for f in obs:
            _gauge_probe(spec, f, rng)
    if fast_path:
        out = _plaquette_fast_path(spec, obs)
        if out is not None:
            return out
    return _enumerate(spec, obs)


def exact_expectation(spec: OracleSpec, f, **kwargs) -> complex:
    """``sum f e^{-beta S} / sum e^{-beta S}`` over the (gauge-fixed) configurations."""
    return complex(exact_expectations(spec, [f], **kwargs)[0])


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class Check:
    """One comparison inside a report.

    ``margin`` is positive when the check passes with room to spare.
    """

    name: str
    passed: bool
    measured: object
    target: object
    margin: float
    provenance: str
    std_error: Optional[float] = None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("measured", "target"):
            v = d[k]
            if isinstance(v, complex):
                d[k] = [v.real, v.imag]
        return d


@dataclass
class VerificationReport:
    """Result of a suite; reproducible given seeds."""

    suite: str
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "build": build_description(),
            "passed": self.passed,
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.name)],
            "info": self.info,
        }

    def to_json(self) -> str:
        return dumps17(self.to_dict())

    def table(self) -> str:
        rows = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'}"]
        for c in sorted(self.checks, key=lambda c: c.name):
            err = "" if c.std_error is None else f" se={c.std_error:.3g}"
            rows.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: measured={_short(c.measured)} "
                        f"target={_short(c.target)} margin={c.margin:.4g}{err} ({c.provenance})")
        return "\n".join(rows)


def _short(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.6g}{v.imag:+.3g}i"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _exact_check(name, measured, target, tol=1e-12, note="") -> Check:
    diff = abs(complex(measured) - complex(target))
    return Check(name, diff <= tol, measured, target, tol - diff, "exact", note=note)


def _stat_check(name, measured, target, se, slack: float = 0.0, note="") -> Check:
    # the 1e-12 floor covers series that are identically equal up to rounding
    diff = abs(complex(measured) - complex(target))
    allowed = slack + max(SIGMA_THRESHOLD * se, 1e-12)
    return Check(name, diff <= allowed, measured, target, allowed - diff, "statistical", se, note)


def _bool_check(name, ok: bool, measured, target, provenance="exact", note="") -> Check:
    return Check(name, bool(ok), measured, target, 0.0 if ok else -1.0, provenance, note=note)


# ---------------------------------------------------------------------------
# Run manifests and shared measurement runs
# ---------------------------------------------------------------------------

_MANIFEST_FIELDS = {
    "dim": int, "N": int, "n": int, "m_rep": int, "beta": float, "beta0": (float, type(None)),
    "seed": int, "thermalization": int, "measurements": int, "stride": int,
    "schedule": str, "loops": list, "census": bool,
}


@dataclass(frozen=True)
class RunManifest:
    """Parameters of a Monte Carlo run on the symmetric box ``[-N, N]^dim``.

    ``loops`` holds rectangle shapes ``(R, T)``; measurements average each
    shape over every plane and every translate that fits the box.
    """

    dim: int = 4
    N: int = 5
    n: int = 2
    m_rep: int = 1
    beta: float = 0.6
    beta0: Optional[float] = None
    seed: int = 1
    thermalization: int = 100
    measurements: int = 1000
    stride: int = 1
    schedule: str = "colored"
    loops: tuple = ((2, 2),)
    census: bool = True

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(self.seed, self.thermalization, self.measurements, self.stride, self.schedule)

    @property
    def box(self) -> Box:
        return Box.symmetric(self.N, self.dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loops"] = [{"R": r, "T": t} for r, t in self.loops]
        return d

    def admissibility(self):
        """Admissibility at ``beta0`` (defaults to ``beta``)."""
        return beta0_admissible(self.beta if self.beta0 is None else self.beta0, self.n, self.m_rep)


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), 1):
        if re.search(r'"%s"\s*:' % re.escape(key), line):
            return i
    return 1


def parse_manifest(text: str, source: str = "<manifest>") -> RunManifest:
    """Parse manifest JSON text; errors name ``source:line``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ManifestError(f"{source}:1: manifest must be a JSON object")
    kwargs = {}
    for key, value in data.items():
        line = _line_of(text, key)
        if key not in _MANIFEST_FIELDS:
            raise ManifestError(f"{source}:{line}: unknown field {key!r}")
        want = _MANIFEST_FIELDS[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(want, tuple) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want) or (want is int and isinstance(value, bool)):
            raise ManifestError(f"{source}:{line}: field {key!r} has the wrong type")
        if key == "loops":
            shapes = []
            for item in value:
                if not (isinstance(item, dict) and set(item) == {"R", "T"}
                        and all(isinstance(item[k], int) and item[k] >= 1 for k in ("R", "T"))):
                    raise ManifestError(f"{source}:{line}: loops must be objects {{\"R\": int, \"T\": int}}")
                shapes.append((item["R"], item["T"]))
            value = tuple(shapes)
        kwargs[key] = value
    try:
        manifest = RunManifest(**kwargs)
        manifest.sampler_config()
        Representation(manifest.n, manifest.m_rep)
        if manifest.beta < 0 or manifest.N < 1 or manifest.dim < 2:
            raise ConfigError("beta must be >= 0, N >= 1 and dim >= 2")
    except DomainError as exc:
        raise ManifestError(f"{source}:1: {exc}") from None
    return manifest


def load_manifest(path) -> RunManifest:
    return parse_manifest(Path(path).read_text(), str(path))


class LoopFamily:
    """Every plane and translate of an ``R x T`` rectangle inside a box.

    With ``straight_coboundary`` the placements are restricted to those where
    the coboundary of every straight edge lies in the box, and the data for
    W' are prepared.
    """

    def __init__(self, lattice: BoxLattice, R: int, T: int, straight_coboundary: bool = False):
        self.lattice = lattice
        self.R, self.T = R, T
        m = lattice.dim
        lower = np.asarray(lattice.box.lower)
        margin = 1 if straight_coboundary else 0
        self.groups = []
        for plane in itertools.combinations(range(1, m + 1), 2):
            corner = tuple(int(x) for x in lower + margin)
            loop = rectangle_loop(plane, R, T, corner)
            self.loop = loop
            wil_ids = np.array([lattice.edge_id(e)[0] for e, _ in loop.chain.items()], np.int64)
            wil_coef = np.array([v for _, v in loop.chain.items()], np.int64)
            edge_cells = [lattice.edge_id(e)[0] for e, _ in loop.chain.items()]
            plaq_cells: list = []
            ctx = None
            if straight_coboundary:
                ctx = WilsonPrimeContext(loop, lattice)
                plaq_cells = list(ctx.plaq.ravel())
            lo, hi = self._extent(edge_cells, plaq_cells)
            ranges = [range(int(lower[i] - lo[i]), int(lattice.box.upper[i] - hi[i]) + 1) for i in range(m)]
            shifts = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, m)
            off = shifts @ lattice.strides
            group = {
                "plane": plane,
                "wilson_ids": self._shift_edges(wil_ids, off),
                "wilson_coefs": wil_coef,
                "count": len(off),
            }
            if ctx is not None:
                group["coefs"] = ctx.coefs
                group["plaq"] = self._shift_plaquettes(ctx.plaq, off)
                group["signs"] = ctx.signs
                group["p_e"] = self._shift_plaquettes(ctx.p_e_index, off)
                group["straight"] = ctx.straight_length
            self.groups.append(group)
        self.length = len(self.loop.chain.items())
        self.corner_count = self.loop.corner_count
        self.placements = sum(g["count"] for g in self.groups)
        if self.placements == 0:
            raise DomainError(f"no {R}x{T} placement fits the box")

    def _extent(self, edge_ids, plaq_ids):
        lat = self.lattice
        pts, highs = [], []
        for eid in edge_ids:
            p = lat.points[lat.edge_point[eid]]
            pts.append(p)
            h = p.copy()
            h[lat.edge_axis[eid]] += 1
            highs.append(h)
        for pid in plaq_ids:
            p = lat.points[lat.plaq_point[pid]]
            j, k = lat.planes[lat.plaq_plane[pid]]
            pts.append(p)
            h = p.copy()
            h[j] += 1
            h[k] += 1
            highs.append(h)
        return np.min(pts, axis=0), np.max(highs, axis=0)

    def _shift_edges(self, ids: np.ndarray, off: np.ndarray) -> np.ndarray:
        lat = self.lattice
        pts = lat.edge_point[ids][None, :] + off[:, None]
        return lat.edge_index[lat.edge_axis[ids][None, :], pts]

    def _shift_plaquettes(self, ids: np.ndarray, off: np.ndarray) -> np.ndarray:
        lat = self.lattice
        flat = np.asarray(ids).ravel()
        pts = lat.plaq_point[flat][None, :] + off[:, None]
        out = np.empty_like(pts)
        for t, (j, k) in enumerate(lat.planes):
            sel = lat.plaq_plane[flat] == t
            if sel.any():
                out[:, sel] = lat.plaq_index[(j, k)][pts[:, sel]]
        return out.reshape((len(off),) + np.shape(ids))

    def wilson_mean(self, spins: np.ndarray, rep: Representation) -> complex:
        """Average of ``W_gamma`` over all placements."""
        total = 0.0 + 0.0j
        chars = rep.rho(rep.elements())
        for g in self.groups:
            hol = (spins[g["wilson_ids"]] @ g["wilson_coefs"]) % rep.n
            total += np.bincount(hol, minlength=rep.n) @ chars
        return complex(total / self.placements)

    def resampling_terms(self, plaquette_values: np.ndarray, rep: Representation,
                         theta_value: float) -> tuple[complex, float, float]:
        """Placement averages of ``W'``, of ``theta^(|gamma_1| - |gamma'|)`` and of ``|gamma'|``."""
        n = rep.n
        lhs = 0.0 + 0.0j
        rhs = 0.0
        gp = 0.0
        for g in self.groups:
            vals = (g["signs"][None] * plaquette_values[g["plaq"]]) % n
            disagree = np.any(vals != vals[..., :1], axis=2)
            pe = plaquette_values[g["p_e"]]
            expo = np.sum(np.where(disagree, 0, g["coefs"][None] * pe), axis=1) % n
            count = disagree.sum(axis=1)
            lhs += np.bincount(expo, minlength=n) @ rep.rho(rep.elements())
            rhs += np.sum(theta_value ** (g["straight"] - count))
            gp += count.sum()
        k = self.placements
        return complex(lhs / k), float(rhs / k), float(gp / k)


def _interior_plaquette_mask(lattice: BoxLattice) -> np.ndarray:
    pts = lattice.points[lattice.plaq_point]
    lower = np.asarray(lattice.box.lower)
    upper = np.asarray(lattice.box.upper)
    on_face = (pts == lower) | (pts == upper)
    for t, (j, k) in enumerate(lattice.planes):
        sel = lattice.plaq_plane == t
        on_face[np.ix_(sel, [j, k])] = False
    return ~np.any(on_face, axis=1)


@dataclass
class MeasuredRun:
    """Per-measurement series of a manifest run."""

    manifest: RunManifest
    sweeps: np.ndarray
    action: np.ndarray
    wilson: dict
    prime_lhs: dict
    prime_rhs: dict
    gamma_prime_size: dict
    n_components: np.ndarray
    n_minimal: np.ndarray
    vortex_fraction: np.ndarray
    census_ok: np.ndarray
    census_failures: list
    loop_geometry: dict
    final: Optional[np.ndarray] = None
    snapshots: list = field(default_factory=list)
    snapshot_sweeps: list = field(default_factory=list)

    def estimate(self, series) -> EstimatorResult:
        return batch_means(series)

    def sample_rows(self) -> list[list]:
        first = self.manifest.loops[0]
        w = self.wilson[first]
        return [[int(s), float(x.real), float(x.imag), float(a), int(c), int(k)]
                for s, x, a, c, k in zip(self.sweeps, w, self.action, self.n_components, self.n_minimal)]


SAMPLE_CSV_HEADER = "# zngauge sample csv v1"
SAMPLE_COLUMNS = ["sweep", "re_w", "im_w", "action", "n_components", "n_minimal"]


def write_sample_csv(run: MeasuredRun, stream) -> None:
    stream.write(SAMPLE_CSV_HEADER + "\n")
    stream.write(",".join(SAMPLE_COLUMNS) + "\n")
    for row in run.sample_rows():
        stream.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


CENSUS_CSV_HEADER = "# zngauge vortex census csv v1"
CENSUS_COLUMNS = ["sample", "sweep", "n_components", "size_histogram", "n_minimal_on_loop",
                  "n_minimal_off_loop", "invariants_ok"]


def write_census_csv(lattice: BoxLattice, n: int, snapshots: Sequence[np.ndarray], stream,
                     sweeps: Optional[Sequence[int]] = None, loop=None) -> bool:
    """Decompose ``d sigma`` of each snapshot and write one CSV row per sample.

    Returns:
        True when every sample satisfies the decomposition invariants.
    """
    loop_edges = loop.chain.support() if loop is not None else ()
    stream.write(CENSUS_CSV_HEADER + "\n")
    stream.write(",".join(CENSUS_COLUMNS) + "\n")
    all_ok = True
    for i, values in enumerate(snapshots):
        census = vortex_census(SpinConfiguration(lattice, n, values), loop_edges)
        sizes: dict = {}
        for size in census.sizes:
            sizes[size] = sizes.get(size, 0) + 1
        hist = ";".join(f"{k}:{v}" for k, v in sorted(sizes.items()))
        sweep = sweeps[i] if sweeps is not None else i
        all_ok &= census.invariants_hold
        stream.write(f"{i},{sweep},{census.n_components},{hist},{census.n_minimal_on_loop},"
                     f"{census.n_minimal - census.n_minimal_on_loop},{int(census.invariants_hold)}\n")
    return all_ok


_RUN_CACHE: dict = {}


def measure_run(manifest: RunManifest, use_cache: bool = True, snapshot_every: int = 0) -> MeasuredRun:
    """Run the chain of a manifest and record every series the suites need.

    Results are cached per manifest so several suites share one chain.

    Args:
        snapshot_every: keep the spins of every k-th measurement (disables the cache).
    """
    if snapshot_every:
        use_cache = False
    if use_cache and manifest in _RUN_CACHE:
        return _RUN_CACHE[manifest]
    lattice = BoxLattice(manifest.box)
    rep = Representation(manifest.n, manifest.m_rep)
    th = theta(manifest.beta, rep)
    families = {shape: LoopFamily(lattice, *shape) for shape in manifest.loops}
    prime_families = {}
    for shape in manifest.loops:
        try:
            prime_families[shape] = LoopFamily(lattice, *shape, straight_coboundary=True)
        except DomainError:
            pass
    interior = _interior_plaquette_mask(lattice)
    n_interior = int(interior.sum())
    config = manifest.sampler_config()
    rng = make_rng(config.seed)
    sigma = SpinConfiguration.zeros(lattice, manifest.n)
    for _ in range(config.thermalization):
        heat_bath_sweep(sigma, manifest.beta, rng, config.schedule, rep)
    M = config.measurements
    sweeps = np.zeros(M, np.int64)
    act = np.zeros(M)
    wil = {s: np.zeros(M, complex) for s in families}
    plhs = {s: np.zeros(M, complex) for s in prime_families}
    prhs = {s: np.zeros(M) for s in prime_families}
    gps = {s: np.zeros(M) for s in prime_families}
    ncomp = np.zeros(M, np.int64)
    nmin = np.zeros(M, np.int64)
    frac = np.zeros(M)
    ok = np.ones(M, bool)
    failures = []
    snapshots, snapshot_sweeps = [], []
    sweep = config.thermalization
    for t in range(M):
        for _ in range(config.stride):
            heat_bath_sweep(sigma, manifest.beta, rng, config.schedule, rep)
            sweep += 1
        sweeps[t] = sweep
        if snapshot_every and t % snapshot_every == 0:
            snapshots.append(sigma.values.copy())
            snapshot_sweeps.append(sweep)
        act[t] = wilson_action(sigma, rep)
        pv = sigma.plaquette_values()
        for s, fam in families.items():
            wil[s][t] = fam.wilson_mean(sigma.values, rep)
        for s, fam in prime_families.items():
            plhs[s][t], prhs[s][t], gps[s][t] = fam.resampling_terms(pv, rep, th)
        if manifest.census and pv.any():
            census = vortex_census(sigma)
            ncomp[t] = census.n_components
            nmin[t] = census.n_minimal
            if not census.invariants_hold:
                ok[t] = False
                failures.append(int(sweep))
            if census.large_plaquettes:
                ids = [lattice.plaquette_id(p)[0] for p in census.large_plaquettes]
                frac[t] = interior[ids].sum() / n_interior
    geometry = {s: {"length": f.length, "corner_count": f.corner_count, "placements": f.placements}
                for s, f in families.items()}
    for s, f in prime_families.items():
        geometry[s]["prime_placements"] = f.placements
        geometry[s]["straight_length"] = f.groups[0]["straight"]
    run = MeasuredRun(manifest, sweeps, act, wil, plhs, prhs, gps, ncomp, nmin, frac, ok,
                      failures, geometry, sigma.values.copy(), snapshots, snapshot_sweeps)
    if use_cache:
        _RUN_CACHE[manifest] = run
    return run


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------

def verify_monotonicity(boxes: Sequence[Box], gamma, beta: float, n: int = 2,
                        m_rep: int = 1) -> VerificationReport:
    """Exact ``E[Re W_gamma]`` along a nested sequence of boxes must not decrease."""
    report = VerificationReport("monotonicity", info={"beta": beta, "n": n})
    for a, b in zip(boxes, boxes[1:]):
        if not all(lo2 <= lo1 and hi1 <= hi2 for lo1, lo2, hi1, hi2 in zip(a.lower, b.lower, a.upper, b.upper)):
            raise DomainError(f"boxes {a} and {b} are not nested")
    values = []
    for box in boxes:
        spec = OracleSpec(box, n, beta, m_rep)
        spec.check_budget()
        f = WilsonObservable(spec.lattice, gamma, spec.rep, real_part=True)
        values.append(exact_expectation(spec, f).real)
    report.info["values"] = values
    for i in range(len(values) - 1):
        diff = values[i + 1] - values[i]
        report.add(Check(f"box{i}->box{i + 1}", diff >= -1e-12, values[i + 1], values[i],
                         diff + 1e-12, "exact"))
    return report


def verify_theorem_envelope(manifest: RunManifest, run: Optional[MeasuredRun] = None,
                            sanity_tolerance: float = 0.05) -> VerificationReport:
    """``|E_MC W - exp(-l(1 - theta))| <= min(2, K'[sqrt(l_c/l) + lambda^2]^K'') + 4 sigma``."""
    adm = manifest.admissibility()
    if not adm.admissible:
        raise DomainError(f"beta0 is not admissible: failed {', '.join(adm.failed)}")
    beta0 = manifest.beta if manifest.beta0 is None else manifest.beta0
    consts = constants_bundle(manifest.n, manifest.m_rep, beta0)
    run = run or measure_run(manifest)
    rep = Representation(manifest.n, manifest.m_rep)
    report = VerificationReport("envelope", info={"K_prime": consts.K_prime,
                                                  "K_dblprime": consts.K_dblprime})
    for shape in manifest.loops:
        geo = run.loop_geometry[shape]
        ell, ell_c = geo["length"], geo["corner_count"]
        est = batch_means(run.wilson[shape])
        target = predicted_wilson(ell, manifest.beta, rep)
        raw = consts.error_envelope(ell, ell_c, manifest.beta)
        env = min(2.0, raw)
        name = f"{shape[0]}x{shape[1]}"
        report.add(_stat_check(f"envelope {name}", est.mean, target, est.std_error, env,
                               note=f"raw envelope {raw:.6g}"))
        diff = abs(est.mean - 1.0)
        report.add(Check(f"sanity {name}", diff <= sanity_tolerance, est.mean, 1.0,
                         sanity_tolerance - diff, "statistical", est.std_error))
        if ell * lambda_(manifest.beta, rep) ** 12 < 1:
            report.info[f"remark bound {name}"] = consts.remark_bound(ell, ell_c, manifest.beta)
        report.info[f"batches {name}"] = est.batch_count
    return report


def verify_resampling(manifest: RunManifest, run: Optional[MeasuredRun] = None) -> VerificationReport:
    """Paired check of ``E[W'] = theta^|gamma_1| E[theta^-|gamma'|]`` on one sample stream.

    The identity holds for every ``beta >= 0`` once the coboundary of the
    straight edges lies in the box, so admissibility is reported, not required.
    """
    run = run or measure_run(manifest)
    report = VerificationReport("resampling", info={"admissible": manifest.admissibility().admissible})
    for shape in manifest.loops:
        if shape not in run.prime_lhs:
            raise DomainError(f"{shape} loops do not fit with their coboundary")
        lhs = batch_means(run.prime_lhs[shape])
        rhs = batch_means(run.prime_rhs[shape])
        diff = batch_means(run.prime_lhs[shape] - run.prime_rhs[shape])
        name = f"{shape[0]}x{shape[1]}"
        report.add(_stat_check(f"identity {name}", diff.mean, 0.0, diff.std_error,
                               note=f"lhs={lhs.mean:.12g} rhs={rhs.mean:.12g}"))
        report.info[f"lhs {name}"] = lhs.mean
        report.info[f"rhs {name}"] = rhs.mean
        report.info[f"mean |gamma'| {name}"] = float(np.mean(run.gamma_prime_size[shape]))
        report.info[f"straight edges {name}"] = run.loop_geometry[shape]["straight_length"]
    return report


def random_closed_plaquette_forms(rng: np.random.Generator, box: Box, n: int, count: int) -> list[Form]:
    """Nonzero closed 2-forms ``d tau`` for random sparse 1-forms ``tau``."""
    out = []
    while len(out) < count:
        density = rng.uniform(0.05, 0.6)
        tau = random_form(rng, box, 1, n, density)
        nu = exterior_derivative(tau, box)
        if not nu.is_zero():
            out.append(nu)
    return out


def verify_agreement_bound(box: Box = Box((0, 0, 0), (1, 1, 1)), n: int = 2,
                           betas: Sequence[float] = (0.5, 1.0), count: int = 50,
                           seed: int = 7) -> VerificationReport:
    """Exact ``P(d sigma = nu on supp nu) <= prod phi(nu(p)) / phi(0)`` over oriented support."""
    report = VerificationReport("agreement", info={"n": n, "count": count})
    rng = np.random.default_rng(seed)
    forms = random_closed_plaquette_forms(rng, box, n, count)
    rep = Representation(n)
    for beta in betas:
        spec = OracleSpec(box, n, beta)
        probs = exact_expectations(spec, [AgreementIndicator(spec.lattice, nu) for nu in forms]).real
        worst = math.inf
        for i, (nu, p) in enumerate(zip(forms, probs)):
            vals = np.array([v for _, v in nu.items()])
            bound = float(np.prod(rep.phi(vals, beta) / rep.phi(0, beta)) ** 2)
            worst = min(worst, bound - p)
            report.add(Check(f"beta={beta} nu#{i:02d}", p <= bound + 1e-12, float(p), bound,
                             bound - p, "exact"))
        report.info[f"min margin beta={beta}"] = worst
    return report


def verify_vortex_probability(manifests: Sequence[RunManifest], M: int = 6,
                              runs: Optional[Sequence[MeasuredRun]] = None) -> VerificationReport:
    """Frequency that an interior plaquette lies in a component of oriented size >= 2M.

    Requires ``5(n-1) lambda^2 < 1`` so that the vortex constant is finite.
    The frequency is averaged over all interior plaquettes.
    """
    report = VerificationReport("vortex-probability", info={"M": M})
    results = []
    for i, man in enumerate(manifests):
        rep = Representation(man.n, man.m_rep)
        if 5 * (man.n - 1) * lambda_(man.beta, rep) ** 2 >= 1:
            raise DomainError(f"beta={man.beta} fails the vortex-series condition")
        run = runs[i] if runs is not None else measure_run(man)
        est = batch_means(run.vortex_fraction)
        p_hat = est.mean.real
        n_int = int(_interior_plaquette_mask(BoxLattice(man.box)).sum())
        binom = math.sqrt(max(p_hat, 1.0 / (len(run.vortex_fraction) * n_int))
                          * (1 - p_hat) / len(run.vortex_fraction))
        se = max(est.std_error, binom)
        raw = vortex_constant(M, man.beta, rep) * lambda_(man.beta, rep) ** (2 * M)
        bound = min(1.0, raw)
        allowed = bound + SIGMA_THRESHOLD * se
        report.add(Check(f"beta={man.beta} frequency", p_hat <= allowed, p_hat, bound,
                         allowed - p_hat, "statistical", se, note=f"raw bound {raw:.6g}"))
        results.append((man.beta, p_hat, se))
    results.sort()
    for (b1, p1, s1), (b2, p2, s2) in zip(results, results[1:]):
        allowed = SIGMA_THRESHOLD * math.hypot(s1, s2)
        report.add(Check(f"nonincreasing {b1}->{b2}", p2 <= p1 + allowed, p2, p1,
                         p1 + allowed - p2, "statistical", math.hypot(s1, s2)))
    return report


# ---------------------------------------------------------------------------
# Acceptance suites
# ---------------------------------------------------------------------------

def suite_operator_algebra(seed: int = 11, forms_per_degree: int = 1000,
                           form_route_count: int = 25) -> VerificationReport:
    """Identities of d, delta, the Hodge star and Stokes on boxes up to [0,2]^4.

    The bulk runs through sparse integer matrices; a subset of forms also runs
    through the cell-by-cell ``Form`` operators, which are built independently.
    """
    report = VerificationReport("operators")
    rng = np.random.default_rng(seed)
    n = 7
    for m in (2, 3, 4):
        box = Box((0,) * m, (2,) * m)
        dbox = dual_box(box)
        P, D = OperatorMatrices(box), OperatorMatrices(dbox)
        for k in range(m + 1):
            N_k = len(P.cells[k])
            vecs = rng.integers(0, n, size=(N_k, forms_per_degree))
            fails = {}
            if k + 2 <= m:
                fails["dd=0"] = np.count_nonzero((P.d(k + 1) @ (P.d(k) @ vecs)) % n)
            if k >= 2:
                fails["deltadelta=0"] = np.count_nonzero((P.delta(k - 1) @ (P.delta(k) @ vecs)) % n)
            H = hodge_matrix(P, D, k)
            Hback = hodge_matrix(D, P, m - k)
            star2 = (Hback @ (H @ vecs) - (-1) ** (k * (m - k)) * vecs) % n
            fails["starstar"] = np.count_nonzero(star2)
            if k + 1 <= m:
                chains = rng.integers(-2, 3, size=(len(P.cells[k + 1]), forms_per_degree))
                lhs = np.einsum("ij,ij->j", chains, P.d(k) @ vecs)
                rhs = np.einsum("ij,ij->j", P.boundary_matrix(k + 1).T @ chains, vecs)
                fails["stokes"] = np.count_nonzero((lhs - rhs) % n)
            if k == 1 and m >= 3:
                fails["bianchi"] = np.count_nonzero((P.d(2) @ (P.d(1) @ vecs)) % n)
            if k >= 1:
                # delta w = (-1)^(m(k+1)+1) * (d * w), evaluated on cells of the box
                Hd = hodge_matrix(D, P, m - k + 1)
                rhs = (-1) ** (m * (k + 1) + 1) * (Hd @ (D.d(m - k) @ (H @ vecs)))
                fails["coderivative-star"] = np.count_nonzero((P.delta(k) @ vecs - rhs) % n)
            for name, bad in fails.items():
                report.add(Check(f"matrix m={m} k={k} {name}", bad == 0, int(bad), 0, -float(bad), "exact"))
            # cell-by-cell route on a subset
            bad = 0
            for _ in range(form_route_count):
                w = random_form(rng, box, k, n, 0.4)
                if k + 2 <= m and not exterior_derivative(exterior_derivative(w, box), box).is_zero():
                    bad += 1
                if k >= 2 and not coderivative(coderivative(w, box), box).is_zero():
                    bad += 1
                if hodge_dual(hodge_dual(w, m), m) != (-1) ** (k * (m - k)) * w:
                    bad += 1
                if k + 1 <= m:
                    cells = list(box.cells(k + 1))
                    q = Chain(k + 1)
                    for c in rng.choice(len(cells), size=min(4, len(cells)), replace=False):
                        q.add_term(cells[int(c)], int(rng.integers(-2, 3)))
                    if evaluate(exterior_derivative(w, box), q) != evaluate(w, boundary(q)):
                        bad += 1
                if k >= 1:
                    lhs = coderivative(w, box)
                    rhs = hodge_dual(exterior_derivative(hodge_dual(w, m), dbox), m)
                    s = (-1) ** (m * (k + 1) + 1)
                    if any((lhs(c) - s * rhs(c)) % n for c in box.cells(k - 1)):
                        bad += 1
                vec = P.form_to_vector(w)
                if k + 1 <= m and P.vector_to_form((P.d(k) @ vec) % n, k + 1, n) != exterior_derivative(w, box):
                    bad += 1
            report.add(Check(f"form route m={m} k={k}", bad == 0, bad, 0, -float(bad), "exact"))
    # boundary-cell duality, exhaustive
    box = Box((0, 0, 0), (2, 2, 2))
    dbox = dual_box(box)
    bad = total = 0
    for k in range(4):
        for c in box.fattened(2).cells(k, "both"):
            sc = hodge_star_cell(c)
            outside = not box.contains_cell(c)
            if outside != ((not dbox.contains_cell(sc)) or dbox.is_boundary_cell(sc)):
                bad += 1
            if outside and k >= 1 and any(box.contains_cell(f) for f, _ in boundary(c).items()):
                if not dbox.is_boundary_cell(sc):
                    bad += 1
            total += 1
    report.add(Check("boundary-cell duality [0,2]^3", bad == 0, bad, 0, -float(bad), "exact",
                     note=f"{total} cells"))
    return report


def suite_surfaces(seed: int = 5, count: int = 200, N: int = 6) -> VerificationReport:
    """``boundary(build_surface(gamma)) = gamma`` for random loops in ``[-N, N]^4``."""
    report = VerificationReport("surfaces")
    rng = np.random.default_rng(seed)
    box = Box.symmetric(N, 4)
    bad_boundary = bad_support = 0
    for _ in range(count):
        gamma = random_loop(rng, box)
        q = build_surface(gamma)
        if boundary_of(q.chain) != gamma.chain:
            bad_boundary += 1
        if not all(q.box.contains_cell(p) for p in q.chain.support()):
            bad_support += 1
    report.add(Check("boundary equals loop", bad_boundary == 0, bad_boundary, 0, -float(bad_boundary), "exact"))
    report.add(Check("support inside declared box", bad_support == 0, bad_support, 0, -float(bad_support), "exact"))
    return report


def boundary_of(q: Chain) -> Chain:
    out = Chain(q.degree - 1)
    for c, v in q.items():
        for face, s in boundary(c).items():
            out.add_term(face, v * s)
    return out


def suite_oracle_closed_form(betas: Sequence[float] = (0.0, 0.3, 1.0)) -> VerificationReport:
    """Single plaquette in two dimensions, n = 2: ``E[W] = tanh(2 beta)``."""
    report = VerificationReport("oracle-closed-form")
    box = Box((0, 0), (1, 1))
    p = OrientedCell((0, 0), (1, 2))
    gamma = validate_loop(boundary(p))
    for beta in betas:
        spec = OracleSpec(box, 2, beta, gauge_fixing=False)
        val = exact_expectation(spec, WilsonObservable(spec.lattice, gamma, spec.rep))
        report.add(_exact_check(f"beta={beta}", val, math.tanh(2 * beta)))
    return report


def suite_sampler_oracle(seed: int = 3, measurements: int = 4000) -> VerificationReport:
    """Heat-bath estimates of ``E[W]`` against exact values on small boxes."""
    report = VerificationReport("sampler-oracle")
    cases = []
    box2 = Box((0, 0), (4, 4))
    loops2 = {
        "1x1": rectangle_loop((1, 2), 1, 1, (1, 1)),
        "2x2": rectangle_loop((1, 2), 2, 2, (1, 1)),
        "2x3": rectangle_loop((1, 2), 2, 3, (0, 1)),
    }
    for n in (2, 3):
        cases.append((box2, n, loops2))
    box3 = Box((0, 0, 0), (1, 1, 1))
    loops3 = {
        "face12": rectangle_loop((1, 2), 1, 1, (0, 0, 0)),
        "face13": rectangle_loop((1, 3), 1, 1, (0, 1, 0)),
    }
    cases.append((box3, 2, loops3))
    for box, n, loops in cases:
        lattice = BoxLattice(box)
        rep = Representation(n)
        for beta in (0.3, 0.6):
            spec = OracleSpec(box, n, beta)
            obs = [WilsonObservable(spec.lattice, g, spec.rep) for g in loops.values()]
            exact = exact_expectations(spec, obs)
            for schedule in ("colored", "sequential"):
                rng = make_rng(seed + 1000 * n + int(100 * beta) + (7 if schedule == "sequential" else 0))
                sigma = SpinConfiguration.zeros(lattice, n)
                for _ in range(200):
                    heat_bath_sweep(sigma, beta, rng, schedule, rep)
                count = measurements if schedule == "colored" else measurements // 4
                series = np.zeros((len(obs), count), complex)
                for t in range(count):
                    heat_bath_sweep(sigma, beta, rng, schedule, rep)
                    spins = sigma.values[None, :]
                    for i, f in enumerate(obs):
                        series[i, t] = f(spins)[0]
                for i, name in enumerate(loops):
                    est = batch_means(series[i])
                    label = f"m={box.dim} n={n} beta={beta} {name} {schedule}"
                    chk = _stat_check(label, est.mean, exact[i], est.std_error,
                                      note=f"batches={est.batch_count}")
                    if est.batch_count < 20:
                        chk.passed = False
                        chk.note += " (fewer than 20 batches)"
                    report.add(chk)
    return report


def suite_census(manifest: Optional[RunManifest] = None, samples: int = 500) -> VerificationReport:
    """Decomposition invariants on Monte Carlo samples."""
    manifest = manifest or default_manifest(measurements=max(samples, DEFAULT_MEASUREMENTS))
    run = measure_run(manifest)
    report = VerificationReport("census", info={"samples": samples})
    ok = run.census_ok[:samples]
    bad = int((~ok).sum())
    report.add(Check("decomposition invariants", bad == 0, bad, 0, -float(bad), "exact",
                     note=f"failing sweeps {run.census_failures[:5]}"))
    report.info["total components"] = int(run.n_components[:samples].sum())
    report.info["minimal vortices"] = int(run.n_minimal[:samples].sum())
    return report


def suite_counting(p0: OrientedCell = OrientedCell((0, 0, 0, 0), (1, 2)),
                   groups: Sequence[int] = (2, 3)) -> VerificationReport:
    """Census of irreducible closed forms containing ``p0``."""
    from .vortex_analysis import classify_minimal, enumerate_irreducible

    report = VerificationReport("counting")
    for n in groups:
        six = enumerate_irreducible(p0, 6, n)
        report.add(Check(f"n={n} M=6 count", len(six) == 4 * (n - 1), len(six), 4 * (n - 1),
                         0.0 if len(six) == 4 * (n - 1) else -1.0, "exact"))
        bad = sum(classify_minimal(f) is None for f in six)
        report.add(Check(f"n={n} M=6 minimal", bad == 0, bad, 0, -float(bad), "exact"))
        for M in (6, 7):
            cnt = len(six) if M == 6 else len(enumerate_irreducible(p0, 7, n))
            bound = 5 ** (M - 1) * (n - 1) ** M
            report.add(Check(f"n={n} M={M} bound", cnt <= bound, cnt, bound, bound - cnt, "exact"))
    return report


def suite_s_beta(groups: Sequence[int] = (2, 3, 4, 5, 6), symmetry_samples: int = 200,
                 seed: int = 13) -> VerificationReport:
    """Exhaustive ``1 - |S_beta| >= K_* lambda^12`` with symmetry and crude-estimate checks."""
    report = VerificationReport("s-beta")
    rng = np.random.default_rng(seed)
    for n in groups:
        rep = Representation(n)
        b0 = minimal_admissible_beta0(n, tol=1e-4)
        k_lower = xi(n) / 4
        report.info[f"beta0 n={n}"] = b0
        tuples = np.array(list(itertools.product(range(n), repeat=6)), dtype=np.int64)
        g = rep.elements()
        sums = rep.rho(tuples).sum(axis=1)
        only_zero = _g0_mask(sums, rep)
        only_zero = only_zero[:, 0] & (only_zero.sum(axis=1) == 1)
        for beta in (b0, b0 + 0.5, 2 * b0):
            abs_s, gaps = S_beta_gaps_all(beta, rep)
            bound = k_lower * lambda_(beta, rep) ** 12
            ratio = float(np.min(gaps / bound))
            report.add(Check(f"n={n} beta={beta:.6g} gap", ratio >= 1.0, float(np.min(gaps)), bound,
                             ratio - 1.0, "exact", note="1-|S| computed without cancellation"))
            expo = 2.0 * beta * rep.re_rho(g[None, :, None] + tuples[:, None, :]).sum(axis=2)
            ratio0 = 1.0 / np.exp(expo - expo[:, :1]).sum(axis=1)
            sel = ratio0[only_zero]
            ok = bool(np.all((sel >= 0.5 - 1e-15) & (sel <= 1 + 1e-15)))
            report.add(Check(f"n={n} beta={beta:.6g} crude", ok, float(sel.min()), 0.5,
                             float(sel.min()) - 0.5, "exact"))
            worst = 0.0
            for _ in range(symmetry_samples):
                gs = rng.integers(0, n, size=6)
                shift = int(rng.integers(0, n))
                worst = max(worst, abs(abs(S_beta(gs + shift, beta, rep)) - abs(S_beta(gs, beta, rep))))
            report.add(Check(f"n={n} beta={beta:.6g} symmetry", worst <= 1e-14, worst, 1e-14,
                             1e-14 - worst, "exact"))
    return report


def suite_theta(groups: Sequence[int] = (2, 3, 4, 5, 6)) -> VerificationReport:
    """Large-beta asymptotics of ``1 - theta``, ``theta(0) = 0`` and monotonicity."""
    from .zn_model import one_minus_theta

    report = VerificationReport("theta")
    grid = np.linspace(0.0, 4.0, 81)
    for n in groups:
        x = xi(n)
        pref = (2 if n >= 3 else 1) * x * math.exp(-12 * 3.0 * x)
        r = one_minus_theta(3.0, n) / pref
        report.add(Check(f"n={n} ratio at beta=3", 0.99 <= r <= 1.01, r, 1.0, 0.01 - abs(r - 1), "exact"))
        t0 = theta(0.0, n)
        report.add(Check(f"n={n} theta(0)", t0 == 0.0, t0, 0.0, -abs(t0), "exact"))
        vals = np.array([theta(b, n) for b in grid])
        steps = np.diff(vals)
        report.add(Check(f"n={n} monotone", bool(np.all(steps >= 0)), float(steps.min()), 0.0,
                         float(steps.min()), "exact"))
    return report


def suite_monotonicity(beta: float = 0.4, groups: Sequence[int] = (2, 3)) -> VerificationReport:
    boxes = [Box((0, 0, 0), (1, 1, 1)), Box((0, 0, 0), (2, 1, 1)), Box((0, 0, 0), (2, 2, 1))]
    gamma = rectangle_loop((1, 2), 1, 1, (0, 0, 0))
    report = VerificationReport("monotonicity")
    for n in groups:
        sub = verify_monotonicity(boxes, gamma, beta, n)
        for c in sub.checks:
            c.name = f"n={n} {c.name}"
            report.add(c)
        report.info[f"values n={n}"] = sub.info["values"]
    for n in groups:
        zero = verify_monotonicity(boxes, gamma, 0.0, n)
        vals = zero.info["values"]
        report.add(_bool_check(f"n={n} beta=0 all zero", max(abs(v) for v in vals) <= 1e-12,
                               max(abs(v) for v in vals), 0.0))
    return report


DEFAULT_MEASUREMENTS = 1500


def default_manifest(n: int = 2, beta: float = 0.6, measurements: int = DEFAULT_MEASUREMENTS,
                     loops=((2, 2), (3, 3), (4, 4)), seed: int = 2024, census: bool = True) -> RunManifest:
    """The shared 4D run on ``[-5, 5]^4``."""
    return RunManifest(dim=4, N=5, n=n, beta=beta, seed=seed, thermalization=100,
                       measurements=measurements, loops=tuple(loops), census=census)


def suite_resampling() -> VerificationReport:
    report = VerificationReport("resampling")
    for n in (2, 3):
        man = default_manifest(n=n) if n == 2 else default_manifest(n=n, loops=((2, 2), (3, 3)), census=False)
        sub = verify_resampling(man)
        for c in sub.checks:
            c.name = f"n={n} {c.name}"
            report.add(c)
        report.info.update({f"n={n} {k}": v for k, v in sub.info.items()})
    return report


def suite_envelope() -> VerificationReport:
    return verify_theorem_envelope(default_manifest())


def suite_vortex_probability() -> VerificationReport:
    return verify_vortex_probability([default_manifest(), default_manifest(beta=0.9, loops=((2, 2),))])


def suite_agreement() -> VerificationReport:
    return verify_agreement_bound()


SUITES: dict[str, Callable[[], VerificationReport]] = {
    "operators": suite_operator_algebra,
    "surfaces": suite_surfaces,
    "oracle": suite_oracle_closed_form,
    "sampler": suite_sampler_oracle,
    "resampling": suite_resampling,
    "census": suite_census,
    "counting": suite_counting,
    "agreement": suite_agreement,
    "s-beta": suite_s_beta,
    "theta": suite_theta,
    "monotonicity": suite_monotonicity,
    "envelope": suite_envelope,
    "vortex-probability": suite_vortex_probability,
}


def run_suite(name: str) -> VerificationReport:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name]()
