"""Two-weight embedding constants on the line.

Two constants are estimated from below as suprema over finite families:

* ``K`` in ``mu(s_d(x))**(1/r) <= K (tau**((1-p)/p) + nu(s_{d+tau}(x))**(1/s))``
  over a grid of centred intervals, and its general form with conductor
  capacitances over pairs of open sets ``(g, G)``;
* ``A`` in ``||f||_{L^{r,m}(mu)} <= A (||f'||_{L^{p,q}} + ||f||_{L^{s,m}(nu)})``
  with ``m = max(p, q)`` over a corpus of piecewise-linear functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cap1d import ConductorUnion1D, StructureError, cap_union
from .conductor import PLFunction, gradient_stepfunction
from .lorentz import LorentzIndex, quasinorm
from .stepfn import StepFunction

__all__ = [
    "Measure1D",
    "ExponentTuple",
    "SamplingSpec",
    "measure_interval",
    "interval_grid",
    "criterion_K",
    "general_criterion_K",
    "interval_reduction",
    "measure_stepfunction",
    "inequality_A",
    "consistency_envelope",
]

MASS_RESOLUTION = 1e-4
GRID_MARGIN = 1e-9


@dataclass(frozen=True)
class Measure1D:
    """Finite atoms plus a piecewise-constant density (zero outside its breakpoints)."""

    atoms: tuple[tuple[float, float], ...] = ()
    breakpoints: tuple[float, ...] = ()
    density: tuple[float, ...] = ()

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        if any(m <= 0 for _, m in atoms):
            raise ValueError("atom masses must be positive")
        bx = tuple(float(x) for x in self.breakpoints)
        dv = tuple(float(v) for v in self.density)
        if bx or dv:
            if len(bx) != len(dv) + 1:
                raise ValueError("density needs one value per piece (len(breakpoints) - 1)")
            if any(x1 <= x0 for x0, x1 in zip(bx, bx[1:])):
                raise ValueError("density breakpoints must be strictly increasing")
            if any(v < 0 for v in dv):
                raise ValueError("density must be nonnegative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "breakpoints", bx)
        object.__setattr__(self, "density", dv)

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> "Measure1D":
        return cls(atoms=((x, mass),))

    @classmethod
    def lebesgue(cls, lo: float, hi: float, rate: float = 1.0) -> "Measure1D":
        return cls(breakpoints=(lo, hi), density=(rate,))

    def scale(self, lam: float) -> "Measure1D":
        if lam <= 0:
            raise ValueError("scale must be positive")
        return Measure1D(
            tuple((x, lam * m) for x, m in self.atoms),
            self.breakpoints,
            tuple(lam * v for v in self.density),
        )

    def _cumulative(self, x):
        if not self.density:
            return np.zeros_like(x)
        bx = np.array(self.breakpoints)
        cum = np.r_[0.0, np.cumsum(np.diff(bx) * np.array(self.density))]
        return np.interp(x, bx, cum)

    def open_mass(self, lo, hi):
        """Mass of the open intervals ``(lo, hi)``; vectorised over arrays."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        total = self._cumulative(hi) - self._cumulative(lo)
        for x, m in self.atoms:
            total = total + m * ((lo < x) & (x < hi))
        return np.maximum(total, 0.0)

    def to_json(self) -> dict:
        out: dict = {"atoms": [list(a) for a in self.atoms]}
        if self.density:
            out["density"] = {"breakpoints": list(self.breakpoints), "values": list(self.density)}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Measure1D":
        dens = obj.get("density") or {}
        return cls(
            tuple(map(tuple, obj.get("atoms", []))),
            tuple(dens.get("breakpoints", [])),
            tuple(dens.get("values", [])),
        )


@dataclass(frozen=True)
class ExponentTuple:
    """``1 < p < inf``, ``1 <= q < inf`` and ``1 < s <= max(p, q) <= r < inf``."""

    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        p, q, r, s = (float(v) for v in (self.p, self.q, self.r, self.s))
        if not (1 < p < math.inf):
            raise ValueError("p must lie in (1, inf)")
        if not (1 <= q < math.inf):
            raise ValueError("q must lie in [1, inf)")
        if not (1 < s <= max(p, q) <= r < math.inf):
            raise ValueError(f"need 1 < s <= max(p, q) <= r < inf, got s={s}, max={max(p, q)}, r={r}")
        for name, v in zip("pqrs", (p, q, r, s)):
            object.__setattr__(self, name, v)

    @property
    def m(self) -> float:
        return max(self.p, self.q)

    @property
    def gradient_index(self) -> LorentzIndex:
        return LorentzIndex(self.p, self.q)


@dataclass(frozen=True)
class SamplingSpec:
    """``nx`` uniform centres, ``nd`` and ``ntau`` log-spaced radii and gaps."""

    nx: int = 50
    nd: int = 50
    ntau: int = 50
    min_fraction: float = 1e-3


def measure_interval(m: Measure1D, interval: Sequence[float]) -> float:
    lo, hi = interval
    if not lo < hi:
        raise ValueError("interval must have lo < hi")
    return float(m.open_mass(lo, hi))


def interval_grid(omega: Sequence[float], spec: SamplingSpec) -> np.ndarray:
    """Rows ``(x, d, tau)`` with ``[x-d-tau, x+d+tau]`` inside ``omega`` (margin ``1e-9``)."""
    lo, hi = omega
    width = hi - lo
    xs = lo + (np.arange(spec.nx) + 0.5) * width / spec.nx
    ds = np.geomspace(width * spec.min_fraction, width / 2, spec.nd)
    taus = np.geomspace(width * spec.min_fraction, width / 2, spec.ntau)
    X, D, T = np.meshgrid(xs, ds, taus, indexing="ij")
    X, D, T = X.ravel(), D.ravel(), T.ravel()
    ok = (X - D - T >= lo + GRID_MARGIN) & (X + D + T <= hi - GRID_MARGIN)
    return np.column_stack([X[ok], D[ok], T[ok]])


def _interval_ratios(mu, nu, pts, ex):
    x, d, tau = pts[:, 0], pts[:, 1], pts[:, 2]
    num = mu.open_mass(x - d, x + d) ** (1.0 / ex.r)
    den = tau ** ((1.0 - ex.p) / ex.p) + nu.open_mass(x - d - tau, x + d + tau) ** (1.0 / ex.s)
    return num / den


def criterion_K(
    mu: Measure1D,
    nu: Measure1D,
    omega: Sequence[float],
    ex: ExponentTuple,
    grid: SamplingSpec | np.ndarray | Sequence[Sequence[float]] = SamplingSpec(),
) -> float:
    """Largest ratio ``mu(s_d(x))**(1/r) / (tau**((1-p)/p) + nu(s_{d+tau}(x))**(1/s))`` on the grid.

    Explicit points may touch the boundary of ``omega`` but not leave it.
    """
    if isinstance(grid, SamplingSpec):
        pts = interval_grid(omega, grid)
    else:
        pts = np.atleast_2d(np.asarray(grid, dtype=float))
        if pts.size and pts.shape[1] != 3:
            raise ValueError("explicit grid rows must be (x, d, tau)")
        if pts.size:
            reach = pts[:, 1] + pts[:, 2]
            if np.any(pts[:, 1] <= 0) or np.any(pts[:, 2] <= 0):
                raise ValueError("d and tau must be positive")
            if np.any(pts[:, 0] - reach < omega[0]) or np.any(pts[:, 0] + reach > omega[1]):
                raise ValueError("sample interval leaves omega")
    if pts.size == 0:
        raise ValueError("empty sampling grid")
    return float(np.max(_interval_ratios(mu, nu, pts, ex)))


def _open_mass_union(m: Measure1D, intervals) -> float:
    return math.fsum(float(m.open_mass(l, r)) for l, r in intervals)


def general_criterion_K(
    mu: Measure1D,
    nu: Measure1D,
    conductors: Iterable[ConductorUnion1D],
    ex: ExponentTuple,
    idx: LorentzIndex | None = None,
    omega: Sequence[float] | None = None,
) -> float:
    """Largest ratio ``mu(g)**(1/r) / (cap(closure g, G)**(1/p) + nu(G)**(1/s))``.

    Each pair is a :class:`ConductorUnion1D` whose closed intervals are the
    closure of ``g`` and whose open components form ``G``.  The capacitance
    enters through the upper end of :func:`cap_union`, which keeps the ratio
    a lower bound for the best constant.
    """
    idx = idx or ex.gradient_index
    best = 0.0
    for u in conductors:
        if omega is not None and any(l < omega[0] or r > omega[1] for l, r in u.omega):
            raise StructureError("G must lie inside omega")
        if u.is_empty:
            continue
        mu_g = _open_mass_union(mu, u.K)
        if mu_g == 0:
            continue
        cap = cap_union(u, idx)[1]
        den = cap ** (1.0 / idx.p) + _open_mass_union(nu, u.omega) ** (1.0 / ex.s)
        best = max(best, mu_g ** (1.0 / ex.r) / den)
    return best


def interval_reduction(u: ConductorUnion1D) -> list[tuple[tuple[float, float], float, tuple[float, float]]]:
    """Per component ``G_i``: hull ``h_i`` of ``g`` inside it, gap ``tau_i`` to the outside, and ``H_i``.

    ``H_i`` is the open interval concentric with ``h_i`` at distance ``tau_i``.
    """
    out = []
    for A, B, hull in u.components():
        if hull is None:
            continue
        tau = min(hull[0] - A, B - hull[1])
        out.append((hull, tau, (hull[0] - tau, hull[1] + tau)))
    return out


def measure_stepfunction(f: PLFunction, m: Measure1D, resolution: float = MASS_RESOLUTION) -> StepFunction:
    """``|f|`` under ``m`` as a step function.

    Atoms contribute point values.  On each piece where ``|f|`` is affine and
    the density is constant, the mass is cut into equal cells no larger than
    ``resolution`` times the density mass over the support of ``f``; every
    cell carries the midpoint value of ``|f|``.
    """
    vals: list[np.ndarray] = []
    wts: list[np.ndarray] = []
    if m.atoms:
        ax = np.array([x for x, _ in m.atoms])
        am = np.array([w for _, w in m.atoms])
        vals.append(np.abs(f(ax)))
        wts.append(am)
    if m.density:
        xs, ys = f.abs_pieces
        cuts = np.array(sorted(set(xs) | {b for b in m.breakpoints if xs[0] < b < xs[-1]}))
        lo, hi = cuts[:-1], cuts[1:]
        mass = m._cumulative(hi) - m._cumulative(lo)
        total = float(np.sum(mass))
        if total > 0:
            cell = resolution * total
            for l, h, w in zip(lo, hi, mass):
                if w <= 0:
                    continue
                n = max(1, int(math.ceil(w / cell)))
                mid = l + (np.arange(n) + 0.5) * (h - l) / n
                vals.append(np.abs(f(mid)))
                wts.append(np.full(n, w / n))
    if not vals:
        return StepFunction.zero()
    return StepFunction(np.concatenate(vals), np.concatenate(wts))


def inequality_A(
    mu: Measure1D,
    nu: Measure1D,
    omega: Sequence[float],
    ex: ExponentTuple,
    corpus: Iterable[PLFunction],
) -> float:
    """Largest ratio ``||f||_{L^{r,m}(mu)} / (||f'||_{L^{p,q}} + ||f||_{L^{s,m}(nu)})`` over the corpus."""
    best = 0.0
    mu_idx = LorentzIndex(ex.r, ex.m)
    nu_idx = LorentzIndex(ex.s, ex.m)
    for f in corpus:
        if f.breakpoints[0] < omega[0] or f.breakpoints[-1] > omega[1]:
            raise ValueError("corpus function is not supported in omega")
        den = quasinorm(gradient_stepfunction(f), ex.gradient_index) + quasinorm(
            measure_stepfunction(f, nu), nu_idx
        )
        if den == 0:
            continue
        best = max(best, quasinorm(measure_stepfunction(f, mu), mu_idx) / den)
    return best


def consistency_envelope(
    mu: Measure1D,
    nu: Measure1D,
    omega: Sequence[float],
    ex: ExponentTuple,
    corpus: Sequence[PLFunction],
    lambdas: Sequence[float],
    grid: SamplingSpec = SamplingSpec(),
) -> list[dict]:
    """``K_est`` and ``A_est`` along ``lam * mu``; the ratio is reported, not asserted."""
    rows = []
    for lam in lambdas:
        scaled = mu.scale(lam)
        K = criterion_K(scaled, nu, omega, ex, grid)
        A = inequality_A(scaled, nu, omega, ex, corpus)
        rows.append({"lambda": lam, "K": K, "A": A, "ratio": A / K if K > 0 else math.nan})
    return rows
