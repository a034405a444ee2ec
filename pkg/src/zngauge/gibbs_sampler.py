"""Heat-bath sampling of the Wilson-action measure on spin configurations of a box.

Spins live on the positively oriented edges of a box with free boundary:
only plaquettes whose four edges lie in the box contribute.  The measure is
proportional to ``exp(2 beta sum_{p > 0} Re rho(d sigma(p)))``, that is
``exp(-beta S)`` with both plaquette orientations counted in ``S``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .chains_forms import Form
from .lattice_complex import Box, Chain, DomainError, OrientedCell
from .zn_model import Representation

__all__ = [
    "BoxLattice",
    "SpinConfiguration",
    "SamplerConfig",
    "EstimatorResult",
    "ConfigError",
    "action",
    "local_conditional",
    "heat_bath_sweep",
    "run_chain",
    "ChainRun",
    "wilson_loop",
    "LoopIndex",
    "plaquette_field",
    "batch_means",
    "make_rng",
]


class ConfigError(DomainError):
    """Invalid sampler configuration."""


class BoxLattice:
    """Dense indexing of the edges and plaquettes of a box.

    Edges and plaquettes are numbered in canonical cell order.  ``plaq_edges``
    lists, for plaquette ``(a; j, k)``, the edges ``x_j@a``, ``x_k@(a+e_j)``,
    ``x_j@(a+e_k)``, ``x_k@a`` whose signs in the boundary are ``+, +, -, -``.
    """

    PLAQ_SIGNS = np.array([1, 1, -1, -1], dtype=np.int64)

    def __init__(self, box: Box):
        if box.dual:
            raise DomainError("the sampler runs on primal boxes")
        self.box = box
        self.dim = m = box.dim
        lower = np.array(box.lower)
        self.lower = lower
        self.shape = tuple(int(w) + 1 for w in box.widths)
        pts = np.array(list(np.ndindex(*self.shape)), dtype=np.int64).reshape(-1, m)
        self.points = pts + lower
        npts = len(pts)
        shape = np.array(self.shape)

        # edges: for each point in lex order, axes ascending
        edge_point, edge_axis = [], []
        for j in range(m):
            ok = pts[:, j] < shape[j] - 1
            edge_point.append(np.flatnonzero(ok))
            edge_axis.append(np.full(ok.sum(), j))
        edge_point = np.concatenate(edge_point)
        edge_axis = np.concatenate(edge_axis)
        order = np.lexsort((edge_axis, edge_point))
        self.edge_point = edge_point[order]
        self.edge_axis = edge_axis[order]
        self.n_edges = len(self.edge_point)
        self.edge_index = -np.ones((m, npts), dtype=np.int64)
        self.edge_index[self.edge_axis, self.edge_point] = np.arange(self.n_edges)

        strides = np.array([int(np.prod(self.shape[i + 1:])) for i in range(m)], dtype=np.int64)
        self.strides = strides

        planes = list(itertools.combinations(range(m), 2))
        plaq_point, plaq_plane = [], []
        for t, (j, k) in enumerate(planes):
            ok = (pts[:, j] < shape[j] - 1) & (pts[:, k] < shape[k] - 1)
            plaq_point.append(np.flatnonzero(ok))
            plaq_plane.append(np.full(ok.sum(), t))
        plaq_point = np.concatenate(plaq_point) if planes else np.zeros(0, np.int64)
        plaq_plane = np.concatenate(plaq_plane) if planes else np.zeros(0, np.int64)
        order = np.lexsort((plaq_plane, plaq_point))
        self.plaq_point = plaq_point[order]
        self.plaq_plane = plaq_plane[order]
        self.planes = planes
        self.n_plaquettes = len(self.plaq_point)
        pj = np.array([planes[t][0] for t in self.plaq_plane], dtype=np.int64)
        pk = np.array([planes[t][1] for t in self.plaq_plane], dtype=np.int64)
        a = self.plaq_point
        self.plaq_edges = np.stack([
            self.edge_index[pj, a],
            self.edge_index[pk, a + strides[pj]],
            self.edge_index[pj, a + strides[pk]],
            self.edge_index[pk, a],
        ], axis=1) if self.n_plaquettes else np.zeros((0, 4), np.int64)
        self.plaq_index = {}
        for t, (j, k) in enumerate(planes):
            arr = -np.ones(npts, dtype=np.int64)
            sel = self.plaq_plane == t
            arr[self.plaq_point[sel]] = np.flatnonzero(sel)
            self.plaq_index[(j, k)] = arr

        # plaquettes around each edge, padded with -1
        width = 2 * (m - 1)
        self.edge_plaq = -np.ones((self.n_edges, width), dtype=np.int64)
        self.edge_plaq_sign = np.zeros((self.n_edges, width), dtype=np.int64)
        ee = self.plaq_edges.T.ravel()
        pp = np.tile(np.arange(self.n_plaquettes), 4)
        ss = np.repeat(self.PLAQ_SIGNS, self.n_plaquettes)
        order = np.lexsort((pp, ee))
        ee, pp, ss = ee[order], pp[order], ss[order]
        starts = np.searchsorted(ee, ee, side="left")
        col = np.arange(len(ee)) - starts
        self.edge_plaq[ee, col] = pp
        self.edge_plaq_sign[ee, col] = ss

        # colors: (axis, parity of coordinate sum); same-color edges share no plaquette
        parity = self.points[self.edge_point].sum(axis=1) % 2
        self.edge_color = 2 * self.edge_axis + parity
        self.color_classes = [np.flatnonzero(self.edge_color == c) for c in range(2 * m)]

    def point_index(self, pt) -> int:
        off = np.asarray(pt) - self.lower
        if np.any(off < 0) or np.any(off >= np.array(self.shape)):
            return -1
        return int(off @ self.strides)

    def edge_id(self, e: OrientedCell) -> tuple[int, int]:
        """(edge index, orientation sign) of an oriented edge; raises outside the box."""
        if e.degree != 1 or e.dual:
            raise DomainError(f"{e} is not a primal edge")
        idx = self.point_index(e.base)
        eid = self.edge_index[e.axes[0] - 1, idx] if idx >= 0 else -1
        if eid < 0:
            raise DomainError(f"edge {e} lies outside the box")
        return int(eid), e.sign

    def plaquette_id(self, p: OrientedCell) -> tuple[int, int]:
        if p.degree != 2 or p.dual:
            raise DomainError(f"{p} is not a primal plaquette")
        idx = self.point_index(p.base)
        pid = self.plaq_index[(p.axes[0] - 1, p.axes[1] - 1)][idx] if idx >= 0 else -1
        if pid < 0:
            raise DomainError(f"plaquette {p} lies outside the box")
        return int(pid), p.sign

    def edge_cell(self, eid: int) -> OrientedCell:
        return OrientedCell(tuple(self.points[self.edge_point[eid]]), (int(self.edge_axis[eid]) + 1,))

    def plaquette_cell(self, pid: int) -> OrientedCell:
        j, k = self.planes[self.plaq_plane[pid]]
        return OrientedCell(tuple(self.points[self.plaq_point[pid]]), (j + 1, k + 1))

    def is_proper_coloring(self) -> bool:
        """True when no plaquette contains two edges of the same color."""
        colors = self.edge_color[self.plaq_edges]
        return bool(np.all(np.sort(colors, axis=1)[:, 1:] != np.sort(colors, axis=1)[:, :-1]))


@dataclass
class SpinConfiguration:
    """A Z_n-valued 1-form on the edges of a box (dense, canonical edge order)."""

    lattice: BoxLattice
    n: int
    values: np.ndarray

    @classmethod
    def zeros(cls, lattice: BoxLattice, n: int) -> "SpinConfiguration":
        return cls(lattice, n, np.zeros(lattice.n_edges, dtype=np.int64))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64) % self.n
        if self.values.shape != (self.lattice.n_edges,):
            raise DomainError("spin array does not match the number of edges")

    def __call__(self, e: OrientedCell) -> int:
        eid, sign = self.lattice.edge_id(e)
        return int(sign * self.values[eid]) % self.n

    def copy(self) -> "SpinConfiguration":
        return SpinConfiguration(self.lattice, self.n, self.values.copy())

    def to_form(self) -> Form:
        out = Form(1, self.n)
        for eid in np.flatnonzero(self.values):
            out.add(self.lattice.edge_cell(int(eid)), int(self.values[eid]))
        return out

    @classmethod
    def from_form(cls, lattice: BoxLattice, sigma: Form) -> "SpinConfiguration":
        vals = np.zeros(lattice.n_edges, dtype=np.int64)
        for e, v in sigma.items():
            vals[lattice.edge_id(e)[0]] = v
        return cls(lattice, sigma.modulus, vals)

    def plaquette_values(self) -> np.ndarray:
        """``d sigma`` on positive plaquettes, reduced mod n."""
        lat = self.lattice
        return (self.values[lat.plaq_edges] @ lat.PLAQ_SIGNS) % self.n


@dataclass(frozen=True)
class SamplerConfig:
    """Chain parameters.

    Attributes:
        seed: 64-bit seed of the counter-based generator.
        thermalization: sweeps discarded before measuring.
        measurements: number of measurements.
        stride: sweeps between measurements.
        schedule: "colored" (vectorized by color class) or "sequential".
    """

    seed: int = 0
    thermalization: int = 100
    measurements: int = 1000
    stride: int = 1
    schedule: str = "colored"

    def __post_init__(self):
        if self.thermalization < 0:
            raise ConfigError("thermalization sweeps must be nonnegative")
        if self.measurements <= 0:
            raise ConfigError("measurement sweeps must be positive")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1")
        if self.schedule not in ("colored", "sequential"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class EstimatorResult:
    """Batch-means estimate of an expectation."""

    mean: complex
    std_error: float
    batch_count: int
    sample_count: int
    batch_size: int = 1
    lag1_autocorrelation: float = 0.0


def make_rng(seed: int) -> np.random.Generator:
    """One counter-based stream per chain."""
    return np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))


def action(sigma: SpinConfiguration, rep: Optional[Representation] = None) -> float:
    """Wilson action ``-sum_p Re rho(d sigma(p))`` over both plaquette orientations."""
    rep = rep or Representation(sigma.n)
    return float(-2.0 * np.sum(rep.re_rho(sigma.plaquette_values())))


def _stencil(lat: BoxLattice, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edges of the plaquettes around each edge, their signs and a validity mask."""
    plaq = lat.edge_plaq[edges]
    valid = plaq >= 0
    return lat.plaq_edges[np.where(valid, plaq, 0)], lat.edge_plaq_sign[edges], valid


def _partials(sigma: SpinConfiguration, edges: np.ndarray,
              stencil: Optional[tuple] = None) -> tuple[np.ndarray, np.ndarray]:
    """Partial plaquette sums ``sigma_p^e`` around each edge and a validity mask.

    With ``d sigma(p) = s sigma(e) + rest`` the weight of ``sigma(e) = g`` is a
    function of ``g + s rest``; ``s rest = s d sigma(p) - sigma(e)``.
    """
    pe, sign, valid = stencil if stencil is not None else _stencil(sigma.lattice, edges)
    v = sigma.values[pe]
    dsig = v[..., 0] + v[..., 1] - v[..., 2] - v[..., 3]
    partial = (sign * dsig - sigma.values[edges][:, None]) % sigma.n
    return partial, valid


@lru_cache(maxsize=None)
def _cos_table(n: int, m_rep: int) -> np.ndarray:
    # row r holds Re rho(r + g); the extra row n (padding) is zero
    rep = Representation(n, m_rep)
    g = np.arange(n)
    table = np.zeros((n + 1, n))
    table[:n] = rep.re_rho(g[:, None] + g[None, :])
    return table


def _log_weights(partial: np.ndarray, valid: np.ndarray, beta: float, rep: Representation) -> np.ndarray:
    table = _cos_table(rep.n, rep.m_rep)
    idx = np.where(valid, partial, rep.n)
    return 2.0 * beta * table[idx].sum(axis=-2)


def local_conditional(sigma: SpinConfiguration, e, beta: float,
                      rep: Optional[Representation] = None) -> np.ndarray:
    """Conditional law of ``sigma(e)`` given every other spin.

    Args:
        e: an oriented edge or an edge index.
    """
    rep = rep or Representation(sigma.n)
    eid = e if isinstance(e, (int, np.integer)) else sigma.lattice.edge_id(e)[0]
    partial, valid = _partials(sigma, np.array([eid]))
    logw = _log_weights(partial, valid, beta, rep)[0]
    w = np.exp(logw - logw.max())
    return w / w.sum()


def _draw(logw: np.ndarray, u: np.ndarray) -> np.ndarray:
    w = np.exp(logw - logw.max(axis=1, keepdims=True))
    cdf = np.cumsum(w, axis=1)
    target = u * cdf[:, -1]
    return np.minimum((cdf <= target[:, None]).sum(axis=1), logw.shape[1] - 1)


def heat_bath_sweep(sigma: SpinConfiguration, beta: float, rng: np.random.Generator,
                    schedule: str = "colored", rep: Optional[Representation] = None) -> SpinConfiguration:
    """Resample every edge once from its conditional law (in place)."""
    rep = rep or Representation(sigma.n)
    lat = sigma.lattice
    if schedule == "colored":
        if getattr(lat, "_class_stencils", None) is None:
            lat._class_stencils = [_stencil(lat, edges) for edges in lat.color_classes]
        for edges, stencil in zip(lat.color_classes, lat._class_stencils):
            if len(edges) == 0:
                continue
            partial, valid = _partials(sigma, edges, stencil)
            logw = _log_weights(partial, valid, beta, rep)
            sigma.values[edges] = _draw(logw, rng.random(len(edges)))
    elif schedule == "sequential":
        u = rng.random(lat.n_edges)
        for eid in range(lat.n_edges):
            edges = np.array([eid])
            partial, valid = _partials(sigma, edges)
            logw = _log_weights(partial, valid, beta, rep)
            sigma.values[eid] = _draw(logw, u[eid:eid + 1])[0]
    else:
        raise ConfigError(f"unknown schedule {schedule!r}")
    return sigma


class LoopIndex:
    """Edge indices and coefficients of a loop inside a box, for fast evaluation."""

    def __init__(self, lattice: BoxLattice, gamma):
        chain = gamma.chain if hasattr(gamma, "chain") else gamma
        ids, coefs = [], []
        for e, v in chain.items():
            eid, _ = lattice.edge_id(e)
            ids.append(eid)
            coefs.append(v)
        self.edges = np.array(ids, dtype=np.int64)
        self.coefs = np.array(coefs, dtype=np.int64)

    def holonomy(self, values: np.ndarray, n: int) -> int:
        """``sigma(gamma)`` as an element of Z_n."""
        return int(values[self.edges] @ self.coefs) % n


def wilson_loop(sigma: SpinConfiguration, gamma, rep: Optional[Representation] = None) -> complex:
    """``rho(sigma(gamma))``: the Z_n sum is formed first, the character applied once."""
    rep = rep or Representation(sigma.n)
    idx = gamma if isinstance(gamma, LoopIndex) else LoopIndex(sigma.lattice, gamma)
    return rep.rho(idx.holonomy(sigma.values, sigma.n))


def plaquette_field(sigma: SpinConfiguration) -> Form:
    """``d sigma`` as a closed 2-form."""
    vals = sigma.plaquette_values()
    out = Form(2, sigma.n)
    lat = sigma.lattice
    for pid in np.flatnonzero(vals):
        out.add(lat.plaquette_cell(int(pid)), int(vals[pid]))
    return out


def _lag1(y: np.ndarray) -> float:
    d = y - y.mean()
    denom = float(np.sum(np.abs(d) ** 2))
    if denom == 0.0:
        return 0.0
    return float(np.real(np.sum(d[:-1] * np.conj(d[1:])))) / denom


def batch_means(samples, min_batches: int = 20, max_lag1: float = 0.1) -> EstimatorResult:
    """Batch-means estimate, doubling the batch size until lag-1 correlation < ``max_lag1``.

    The error combines the real and imaginary parts:
    ``sqrt(se_re^2 + se_im^2)``.
    """
    x = np.asarray(samples, dtype=complex)
    count = len(x)
    if count < min_batches:
        raise ConfigError(f"need at least {min_batches} samples, got {count}")
    size = 1
    while True:
        nb = count // size
        means = x[: nb * size].reshape(nb, size).mean(axis=1)
        r = _lag1(means)
        if r < max_lag1 or count // (2 * size) < min_batches:
            break
        size *= 2
    se = np.sqrt(np.var(means.real, ddof=1) / nb + np.var(means.imag, ddof=1) / nb)
    return EstimatorResult(complex(x.mean()), float(se), int(nb), int(count), int(size), float(r))


@dataclass
class ChainRun:
    """Raw measurements of a chain together with their estimates."""

    config: SamplerConfig
    beta: float
    samples: dict
    estimates: dict = field(default_factory=dict)
    final: Optional[SpinConfiguration] = None
    snapshots: list = field(default_factory=list)


def run_chain(config: SamplerConfig, lattice: BoxLattice, beta: float,
              observables: dict, n: int = 2, m_rep: int = 1,
              initial: Optional[SpinConfiguration] = None,
              snapshot_every: int = 0) -> ChainRun:
    """Run a heat-bath chain and estimate each observable by batch means.

    Args:
        observables: name -> callable(SpinConfiguration) returning a number.
        initial: starting configuration (cold start ``sigma = 0`` by default).
        snapshot_every: keep a copy of every k-th measured configuration.
    """
    rep = Representation(n, m_rep)
    rng = make_rng(config.seed)
    sigma = initial.copy() if initial is not None else SpinConfiguration.zeros(lattice, n)
    for _ in range(config.thermalization):
        heat_bath_sweep(sigma, beta, rng, config.schedule, rep)
    samples = {name: [] for name in observables}
    snapshots = []
    for t in range(config.measurements):
        for _ in range(config.stride):
            heat_bath_sweep(sigma, beta, rng, config.schedule, rep)
        for name, f in observables.items():
            samples[name].append(f(sigma))
        if snapshot_every and t % snapshot_every == 0:
            snapshots.append(sigma.values.copy())
    samples = {k: np.asarray(v) for k, v in samples.items()}
    estimates = {k: batch_means(v) for k, v in samples.items()}
    return ChainRun(config, beta, samples, estimates, sigma, snapshots)
