"""The group Z_n, its faithful character, scalar functions of beta and the bound constants.

Everything here is double precision with the largest exponent shifted out
before exponentiation, so large couplings do not overflow.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lattice_complex import DomainError

__all__ = [
    "Representation",
    "Coupling",
    "AdmissibilityCondition",
    "AdmissibilityReport",
    "TheoryConstants",
    "WIDTH_BOUND_B",
    "xi",
    "theta",
    "one_minus_theta",
    "lambda_",
    "S_beta",
    "S_beta_gap",
    "S_beta_gaps_all",
    "G0",
    "vortex_constant",
    "plaquettes_near_edge",
    "plaquettes_near_edge_bruteforce",
    "K_star_sup",
    "star_condition_residual",
    "beta0_admissible",
    "minimal_admissible_beta0",
    "constants_bundle",
    "predicted_wilson",
    "error_envelope",
    "large_beta_envelope",
    "remark_bound",
]

# width of a box containing any irreducible plaquette configuration with at
# most 48 oriented plaquettes (conservative: one step per added plaquette)
WIDTH_BOUND_B = 24
STAR_EXHAUSTIVE_MAX_N = 8
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Representation:
    """The character ``rho(k) = exp(2 pi i k m_rep / n)`` of Z_n."""

    n: int
    m_rep: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if not 1 <= self.m_rep <= self.n - 1 or math.gcd(self.m_rep, self.n) != 1:
            raise DomainError(f"m_rep={self.m_rep} is not a unit modulo {self.n}")

    @property
    def xi(self) -> float:
        return 1.0 - math.cos(2 * math.pi / self.n)

    def angles(self, g) -> np.ndarray:
        # signed residue in (-n/2, n/2], so that cos is exactly even in g
        r = (self.m_rep * np.asarray(g, dtype=np.int64)) % self.n
        r = np.where(2 * r > self.n, r - self.n, r)
        return 2 * np.pi * r / self.n

    def rho(self, g):
        """Character value; complex scalar or array."""
        out = np.exp(1j * self.angles(g))
        return complex(out) if np.ndim(out) == 0 else out

    def re_rho(self, g):
        out = np.cos(self.angles(g))
        return float(out) if np.ndim(out) == 0 else out

    def phi(self, g, beta: float):
        """``phi_beta(g) = exp(beta Re rho(g))``."""
        out = np.exp(beta * np.cos(self.angles(g)))
        return float(out) if np.ndim(out) == 0 else out

    def elements(self) -> np.ndarray:
        return np.arange(self.n)


@dataclass(frozen=True)
class Coupling:
    """Inverse coupling ``beta`` and the reference threshold ``beta0``."""

    beta: float
    beta0: float

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError(f"beta must be nonnegative, got {self.beta}")
        if self.beta0 <= 0:
            raise DomainError(f"beta0 must be positive, got {self.beta0}")


def _rep(rep_or_n, m_rep: int = 1) -> Representation:
    if isinstance(rep_or_n, Representation):
        return rep_or_n
    return Representation(int(rep_or_n), m_rep)


def xi(n: int) -> float:
    """``1 - cos(2 pi / n)``."""
    return 1.0 - math.cos(2 * math.pi / n)


def _log_weights(rep: Representation, beta: float, mult: float) -> np.ndarray:
    # log of exp(mult * beta * Re rho(g)) shifted by the value at g = 0
    return mult * beta * (rep.re_rho(rep.elements()) - 1.0)


def theta(beta: float, rep=2, m_rep: int = 1) -> float:
    """Expected character under the 12-plaquette single-edge weight.

    The imaginary part cancels by conjugate pairing; it is asserted tiny.
    """
    rep = _rep(rep, m_rep)
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if beta == 0 and rep.m_rep % rep.n != 0:
        # uniform weights: the character sum over the group vanishes
        return 0.0
    w = np.exp(_log_weights(rep, beta, 12.0))
    val = np.sum(rep.rho(rep.elements()) * w) / np.sum(w)
    assert abs(val.imag) < 1e-14, val
    return float(val.real)


def one_minus_theta(beta: float, rep=2, m_rep: int = 1) -> float:
    """``1 - theta(beta)`` without cancellation at large beta."""
    rep = _rep(rep, m_rep)
    g = rep.elements()
    w = np.exp(_log_weights(rep, beta, 12.0))
    return float(np.sum((1.0 - rep.re_rho(g)) * w) / np.sum(w))


def lambda_(beta: float, rep=2, m_rep: int = 1) -> float:
    """``lambda(beta) = exp(-beta xi)``."""
    rep = _rep(rep, m_rep)
    return math.exp(-beta * rep.xi)


def _gap_ratio(beta: float, rep: Representation) -> float:
    # (1 - theta) * lambda^-12, every exponent below is <= 0
    c = rep.re_rho(rep.elements())
    num = np.sum((1.0 - c) * np.exp(12.0 * beta * (c - 1.0 + rep.xi)))
    den = np.sum(np.exp(12.0 * beta * (c - 1.0)))
    return float(num / den)


def S_beta(gs: Sequence[int], beta: float, rep=2, m_rep: int = 1) -> complex:
    """``sum_g rho(g) prod_k phi(g+g_k)^2 / sum_g prod_k phi(g+g_k)^2``."""
    rep = _rep(rep, m_rep)
    gs = np.asarray(gs, dtype=np.int64)
    if gs.size == 0:
        raise DomainError("S_beta needs at least one index")
    g = rep.elements()
    expo = 2.0 * beta * rep.re_rho(g[:, None] + gs[None, :]).sum(axis=1)
    w = np.exp(expo - expo.max())
    return complex(np.sum(rep.rho(g) * w) / np.sum(w))


def S_beta_gap(gs: Sequence[int], beta: float, rep=2, m_rep: int = 1) -> float:
    """``1 - |S_beta|`` computed without cancellation.

    ``1 - |S|^2 = sum_{g,h} w_g w_h (1 - cos(angle_g - angle_h)) / (sum w)^2`` has
    only nonnegative terms, so tiny gaps keep full relative precision.
    """
    rep = _rep(rep, m_rep)
    gs = np.asarray(gs, dtype=np.int64)
    g = rep.elements()
    expo = 2.0 * beta * rep.re_rho(g[:, None] + gs[None, :]).sum(axis=1)
    w = np.exp(expo - expo.max())
    ang = rep.angles(g)
    one_minus_cos = 2.0 * np.sin(0.5 * (ang[:, None] - ang[None, :])) ** 2
    gap_sq = float(w @ one_minus_cos @ w) / float(w.sum()) ** 2
    abs_s = abs(S_beta(gs, beta, rep))
    return gap_sq / (1.0 + abs_s)


def S_beta_gaps_all(beta: float, rep=2, m_rep: int = 1, K: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """``(|S_beta|, 1 - |S_beta|)`` for every tuple in ``G^K`` (canonical product order)."""
    rep = _rep(rep, m_rep)
    g = rep.elements()
    tuples = np.array(list(itertools.product(range(rep.n), repeat=K)), dtype=np.int64)
    expo = 2.0 * beta * rep.re_rho(g[None, :, None] + tuples[:, None, :]).sum(axis=2)
    w = np.exp(expo - expo.max(axis=1, keepdims=True))
    tot = w.sum(axis=1)
    abs_s = np.abs((rep.rho(g)[None, :] * w).sum(axis=1)) / tot
    ang = rep.angles(g)
    one_minus_cos = 2.0 * np.sin(0.5 * (ang[:, None] - ang[None, :])) ** 2
    gap_sq = np.einsum("tg,gh,th->t", w, one_minus_cos, w) / tot ** 2
    return abs_s, gap_sq / (1.0 + abs_s)


def _g0_mask(sums: np.ndarray, rep: Representation) -> np.ndarray:
    """G0 membership for character sums ``sum_k rho(g_k)`` (any leading shape)."""
    sums = np.asarray(sums)
    mag = np.abs(sums)
    g = rep.elements()
    unit = np.where(mag < TIE_TOLERANCE, 0.0, sums / np.where(mag == 0, 1.0, mag))
    score = np.real(rep.rho(g) * unit[..., None])
    best = score.max(axis=-1, keepdims=True)
    mask = score >= best - TIE_TOLERANCE
    mask[mag < TIE_TOLERANCE] = True
    return mask


def G0(gs: Sequence[int], rep=2, m_rep: int = 1) -> frozenset:
    """Maximizers of ``prod_k phi(g + g_k)``; independent of beta.

    ``sum_k Re rho(g + g_k) = Re(rho(g) sum_k rho(g_k))``, so ties are decided
    on the normalized character sum with a fixed absolute tolerance.
    """
    rep = _rep(rep, m_rep)
    total = complex(np.sum(rep.rho(np.asarray(gs))))
    mask = _g0_mask(np.array(total), rep)
    return frozenset(int(g) for g in np.flatnonzero(mask))


def vortex_constant(M: int, beta: float, rep=2, m_rep: int = 1) -> float:
    """``K_0^(M) = 5^M (n-1)^M / (1 - 5(n-1) lambda(beta)^2)``."""
    rep = _rep(rep, m_rep)
    denom = 1.0 - 5 * (rep.n - 1) * lambda_(beta, rep) ** 2
    if denom <= 0:
        raise DomainError("5(n-1) lambda^2 >= 1: the vortex constant is undefined")
    return (5.0 * (rep.n - 1)) ** M / denom


def _axis_positions(lo: int, hi: int, spanned: bool, dist: int) -> int:
    """Number of positions of a unit (or point) interval within ``dist`` of [lo, hi]."""
    return (hi - lo) + 2 * dist + (2 if spanned else 1)


def plaquettes_near_edge(dist: int, dim: int = 4) -> int:
    """Positively oriented plaquettes within L-infinity distance ``dist`` of a unit edge.

    Distances are between closed cells; the count factorizes over axes.
    """
    total = 0
    for plane in itertools.combinations(range(dim), 2):
        count = 1
        for i in range(dim):
            lo, hi = (0, 1) if i == 0 else (0, 0)
            count *= _axis_positions(lo, hi, i in plane, dist)
        total += count
    return total


def plaquettes_near_edge_bruteforce(dist: int, dim: int = 4) -> int:
    """Direct enumeration version of :func:`plaquettes_near_edge` (small ``dist``)."""
    total = 0
    rng = range(-dist - 2, dist + 3)
    for plane in itertools.combinations(range(dim), 2):
        for a in itertools.product(rng, repeat=dim):
            d = 0
            for i in range(dim):
                plo, phi = a[i], a[i] + (1 if i in plane else 0)
                elo, ehi = (0, 1) if i == 0 else (0, 0)
                d = max(d, plo - ehi, elo - phi, 0)
            total += d <= dist
    return total


def K_star_sup(beta0: float, rep=2, m_rep: int = 1, span: float = 20.0,
               step: float = 0.01) -> tuple[float, float, float]:
    """``sup_{beta >= beta0} (1 - theta) lambda^-12``.

    Returns:
        (value, grid_value, limit) where value is the max of the refined grid
        maximum and the analytic large-beta limit ``(1 + [n >= 3]) xi``.
    """
    rep = _rep(rep, m_rep)
    grid = beta0 + step * np.arange(int(round(span / step)) + 1)
    vals = np.array([_gap_ratio(b, rep) for b in grid])
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        phi_ratio = (math.sqrt(5) - 1) / 2
        a, b = lo, hi
        c, d = b - phi_ratio * (b - a), a + phi_ratio * (b - a)
        fc, fd = _gap_ratio(c, rep), _gap_ratio(d, rep)
        for _ in range(60):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - phi_ratio * (b - a)
                fc = _gap_ratio(c, rep)
            else:
                a, c, fc = c, d, fd
                d = a + phi_ratio * (b - a)
                fd = _gap_ratio(d, rep)
        best = max(best, fc, fd)
    limit = (2.0 if rep.n >= 3 else 1.0) * rep.xi
    return max(best, limit), best, limit


def _star_residuals(tuples: np.ndarray, beta: float, rep: Representation) -> np.ndarray:
    """Left side of the key assumption for each row of ``tuples`` (shape (T, K))."""
    g = rep.elements()
    rho_k = rep.rho(tuples)
    sums = rho_k.sum(axis=1)
    mask = _g0_mask(sums, rep)
    # sum_k Re rho(g + g_k) = Re(rho(g) * sum_k rho(g_k))
    score = np.real(rep.rho(g)[None, :] * sums[:, None])
    best = np.where(mask, score, -np.inf).max(axis=1, keepdims=True)
    ratio = np.exp(2.0 * beta * (score - best))
    return np.where(mask, 0.0, ratio).sum(axis=1)


def star_condition_residual(beta: float, rep=2, m_rep: int = 1, K: int = 6,
                            rng: Optional[np.random.Generator] = None,
                            samples: int = 200_000) -> tuple[float, bool]:
    """Max over tuples of the key-assumption left side.

    Exhaustive over all ``n^K`` tuples for ``n <= 8``; otherwise a random
    search (the second return value is then True, flagging the fallback).
    """
    rep = _rep(rep, m_rep)
    if rep.n <= STAR_EXHAUSTIVE_MAX_N:
        best = 0.0
        first = np.array(list(itertools.product(range(rep.n), repeat=K - 1)), dtype=np.int64)
        # by the shift symmetry the maximum is attained with g_1 = 0; still scan all for rigor
        for g1 in range(rep.n):
            tuples = np.concatenate([np.full((len(first), 1), g1), first], axis=1)
            best = max(best, float(_star_residuals(tuples, beta, rep).max()))
        return best, False
    warnings.warn(f"n={rep.n}: key assumption checked by random search only", RuntimeWarning)
    rng = rng or np.random.default_rng(0)
    tuples = rng.integers(0, rep.n, size=(samples, K))
    return float(_star_residuals(tuples, beta, rep).max()), True


@dataclass(frozen=True)
class AdmissibilityCondition:
    name: str
    holds: bool
    value: float
    threshold: float
    margin: float


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the three threshold conditions on ``beta0``."""

    beta0: float
    n: int
    m_rep: int
    conditions: tuple
    randomized_star_search: bool = False

    @property
    def admissible(self) -> bool:
        return all(c.holds for c in self.conditions)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.holds]

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0, "n": self.n, "m_rep": self.m_rep,
            "admissible": self.admissible,
            "randomized_star_search": self.randomized_star_search,
            "conditions": [asdict(c) for c in self.conditions],
        }


def beta0_admissible(beta0: float, n=2, m_rep: int = 1) -> AdmissibilityReport:
    """Check ``5(n-1) lambda^2 < 1``, the key assumption with |K| = 6, and ``2 lambda^12 <= 1``.

    All three left sides decrease in beta, so checking at ``beta0`` covers
    every ``beta >= beta0``.
    """
    if beta0 <= 0:
        raise DomainError("beta0 must be positive")
    rep = _rep(n, m_rep)
    lam = lambda_(beta0, rep)
    v1 = 5 * (rep.n - 1) * lam ** 2
    v2, randomized = star_condition_residual(beta0, rep)
    t2 = rep.xi / 8
    v3 = 2 * lam ** 12
    conds = (
        AdmissibilityCondition("vortex-series", v1 < 1, v1, 1.0, 1.0 - v1),
        AdmissibilityCondition("key-assumption", v2 <= t2, v2, t2, t2 - v2),
        AdmissibilityCondition("lambda12", v3 <= 1, v3, 1.0, 1.0 - v3),
    )
    return AdmissibilityReport(beta0, rep.n, rep.m_rep, conds, randomized)


def minimal_admissible_beta0(n=2, m_rep: int = 1, tol: float = 1e-6) -> float:
    """Smallest admissible ``beta0`` found by bisection (conditions are monotone)."""
    lo, hi = 1e-6, 1.0
    while not beta0_admissible(hi, n, m_rep).admissible:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if beta0_admissible(mid, n, m_rep).admissible:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class TheoryConstants:
    """Constants of the Wilson loop bounds for a given ``(n, m_rep, beta0)``.

    Vortex constants are evaluated at ``beta0``, where they are largest.
    """

    n: int
    m_rep: int
    beta0: float
    theta: float
    lambda_: float
    xi: float
    K_star_sup: float
    K_star_grid: float
    K_star_limit: float
    K_lower: float
    K0: dict
    K1: int
    b: int
    C_A: float
    K_prime: float
    K_dblprime: float
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = asdict(self)
        data["K0"] = {str(k): v for k, v in self.K0.items()}
        return json.dumps(data, indent=2, default=float)

    @property
    def rep(self) -> Representation:
        return Representation(self.n, self.m_rep)

    def predicted_wilson(self, ell: int, beta: float) -> float:
        return predicted_wilson(ell, beta, self.rep)

    def error_envelope(self, ell: int, ell_c: int, beta: float) -> float:
        self._check_beta(beta)
        lam = lambda_(beta, self.rep)
        return self.K_prime * (math.sqrt(ell_c / ell) + lam ** 2) ** self.K_dblprime

    def large_beta_envelope(self, ell: int, ell_c: int, beta: float) -> float:
        self._check_beta(beta)
        return large_beta_envelope(ell, ell_c, beta, self.rep)

    def remark_bound(self, ell: int, ell_c: int, beta: float) -> float:
        """Bound on ``|E W - theta^ell|``, valid when ``ell lambda^12 < 1``."""
        self._check_beta(beta)
        lam = lambda_(beta, self.rep)
        K0 = self.K0
        ks = self.K_star_sup
        pref = (K0[6] + 2 * ks) * math.exp(ks) + 4 * self.K1 * K0[7] + 2 * K0[6] + 2 * K0[25]
        return pref * (math.sqrt(ell_c / ell) + lam ** 2) * ell * lam ** 12

    def _check_beta(self, beta: float) -> None:
        if beta < self.beta0:
            raise DomainError(f"beta={beta} is below beta0={self.beta0}")


def constants_bundle(n=2, m_rep: int = 1, beta0: float = 1.0, require_admissible: bool = True) -> TheoryConstants:
    """Evaluate every constant of the bounds at ``beta0``.

    Raises:
        DomainError: ``beta0`` is inadmissible (the message names the failed
            conditions) unless ``require_admissible`` is False.
    """
    rep = _rep(n, m_rep)
    report = beta0_admissible(beta0, rep)
    if require_admissible and not report.admissible:
        raise DomainError(f"beta0={beta0} is inadmissible: failed {', '.join(report.failed())}")
    ks, grid, limit = K_star_sup(beta0, rep)
    k_lower = rep.xi / 4
    if report.conditions[0].holds:
        K0 = {M: vortex_constant(M, beta0, rep) for M in (6, 7, 25)}
    else:
        # the vortex series diverges; only reachable without the admissibility requirement
        K0 = {M: math.inf for M in (6, 7, 25)}
    b = WIDTH_BOUND_B
    K1 = plaquettes_near_edge(b + 2)
    C_A = 7 * K0[6] / (2 * ks) + 2 * K1 * K0[7] / ks + 5 * K0[25] / (8 * ks ** 4) + 4.5
    ratio = 4 * ks / k_lower
    k_dbl = 1.0 / (1.0 + ratio)
    # K' = sqrt(2) (C_A 2^ratio)^(1/(1+ratio)), in logs to avoid overflow
    k_prime = math.sqrt(2) * math.exp((math.log(C_A) + ratio * math.log(2)) * k_dbl)
    provenance = {
        "theta": "formula", "lambda_": "formula", "xi": "formula",
        "K_star_sup": "numerically-maximized (grid + golden section) joined with the analytic limit",
        "K_star_grid": "numerically-maximized", "K_star_limit": "formula",
        "K_lower": "formula", "K0": "formula at beta0",
        "K1": "conservative-bound (exact plaquette count within distance b+2 of an edge)",
        "b": "conservative-bound", "C_A": "formula", "K_prime": "formula", "K_dblprime": "formula",
    }
    return TheoryConstants(
        n=rep.n, m_rep=rep.m_rep, beta0=beta0,
        theta=theta(beta0, rep), lambda_=lambda_(beta0, rep), xi=rep.xi,
        K_star_sup=ks, K_star_grid=grid, K_star_limit=limit, K_lower=k_lower,
        K0=K0, K1=K1, b=b, C_A=C_A, K_prime=k_prime, K_dblprime=k_dbl,
        provenance=provenance,
    )


def predicted_wilson(ell: int, beta: float, rep=2, m_rep: int = 1) -> float:
    """``exp(-ell (1 - theta(beta)))``."""
    return math.exp(-ell * one_minus_theta(beta, _rep(rep, m_rep)))


def error_envelope(ell: int, ell_c: int, beta: float, constants: TheoryConstants) -> float:
    """``K' [sqrt(ell_c/ell) + lambda^2]^K''``."""
    return constants.error_envelope(ell, ell_c, beta)


def large_beta_envelope(ell: int, ell_c: int, beta: float, rep=2, m_rep: int = 1) -> float:
    """``exp(-K_* (ell - ell_c) lambda^12)``."""
    rep = _rep(rep, m_rep)
    return math.exp(-(rep.xi / 4) * (ell - ell_c) * lambda_(beta, rep) ** 12)


def remark_bound(ell: int, ell_c: int, beta: float, constants: TheoryConstants) -> float:
    return constants.remark_bound(ell, ell_c, beta)
