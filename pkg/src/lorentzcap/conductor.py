"""Level-set conductors of piecewise-linear functions and the conductor inequality.

For ``f`` piecewise linear with compact support, ``M_t = {|f| > t}`` is a
finite union of open intervals whose endpoints solve affine equations.  The
pair ``(closure(M_{at}), M_t)`` is a conductor on the line, and the check in
:func:`verify_conductor` compares

    int_0^inf Phi(t**p cap(t)) dt/t        (q <= p)
    int_0^inf Phi(t**q cap(t)**(q/p)) dt/t (p < q < inf)

against ``log(a) * Phi((a-1)**-p ||f'||_{p,q}**p)`` (resp. the ``q`` analogue),
using capacitance upper bounds in the integrand.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .cap1d import ConductorUnion1D, cap_union, union_gaps
from .lorentz import LorentzIndex, quasinorm, quasinorm_rows
from .stepfn import StepFunction

__all__ = [
    "PLFunction",
    "ConvexPhi",
    "TGrid",
    "ConductorReport",
    "superlevel",
    "conductor_at",
    "truncation",
    "gradient_stepfunction",
    "verify_conductor",
    "power_measure_form",
    "frullani_check",
    "log_integral",
    "random_pl_function",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PLFunction:
    """Continuous piecewise-linear function, zero at and outside its first and last breakpoint.

    ``omega`` is the open interval the function lives on; the support
    ``[breakpoints[0], breakpoints[-1]]`` must lie in its closure.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    omega: tuple[float, float]
    _abs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = tuple(float(x) for x in self.breakpoints)
        ys = tuple(float(y) for y in self.values)
        om = tuple(float(w) for w in self.omega)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need at least two breakpoints and one value per breakpoint")
        if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if ys[0] != 0.0 or ys[-1] != 0.0:
            raise ValueError("values must vanish at the first and last breakpoint")
        if not all(math.isfinite(v) for v in xs + ys):
            raise ValueError("breakpoints and values must be finite")
        if len(om) != 2 or not (om[0] <= xs[0] and xs[-1] <= om[1] and om[0] < om[1]):
            raise ValueError("support must lie in the closure of omega")
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "values", ys)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "_abs", _abs_pieces(xs, ys))

    @classmethod
    def tent(cls, center: float, half_width: float, height: float = 1.0, omega=None) -> "PLFunction":
        xs = (center - half_width, center, center + half_width)
        omega = omega if omega is not None else (xs[0], xs[2])
        return cls(xs, (0.0, height, 0.0), omega)

    def __call__(self, x):
        return np.interp(x, self.breakpoints, self.values, left=0.0, right=0.0)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        xs = sorted(set(self.breakpoints) | set(other.breakpoints))
        ys = self(np.array(xs)) + other(np.array(xs))
        om = (min(self.omega[0], other.omega[0]), max(self.omega[1], other.omega[1]))
        return PLFunction(tuple(xs), tuple(ys.tolist()), om)

    def scale(self, c: float) -> "PLFunction":
        return PLFunction(self.breakpoints, tuple(c * v for v in self.values), self.omega)

    @property
    def abs_pieces(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Breakpoints and values of ``|f|``, with sign changes added as breakpoints."""
        return self._abs

    @property
    def max_abs(self) -> float:
        return max(abs(v) for v in self.values)

    def slopes(self) -> np.ndarray:
        x = np.array(self.breakpoints)
        y = np.array(self.values)
        return np.diff(y) / np.diff(x)

    def to_json(self) -> dict:
        return {
            "omega": list(self.omega),
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PLFunction":
        try:
            return cls(tuple(obj["breakpoints"]), tuple(obj["values"]), tuple(obj["omega"]))
        except KeyError as exc:
            raise ValueError(f"PL function JSON is missing key {exc}") from None


def _abs_pieces(xs, ys):
    """Breakpoints and values of ``|f|`` with sign changes inserted as breakpoints."""
    ox, oy = [xs[0]], [abs(ys[0])]
    for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:]):
        if (y0 < 0 < y1) or (y1 < 0 < y0):
            z = x0 + (x1 - x0) * (-y0) / (y1 - y0)
            if x0 < z < x1:
                ox.append(z)
                oy.append(0.0)
        ox.append(x1)
        oy.append(abs(y1))
    return tuple(ox), tuple(oy)


def gradient_stepfunction(f: PLFunction) -> StepFunction:
    """``|f'|`` as a step function weighted by segment lengths."""
    x = np.array(f.breakpoints)
    return StepFunction(np.abs(f.slopes()), np.diff(x))


def superlevel(f: PLFunction, t: float) -> tuple[tuple[float, float], ...]:
    """Components of ``{|f| > t}`` as open intervals, left to right."""
    if t <= 0:
        raise ValueError("superlevel sets are taken at t > 0")
    xs, ys = f.abs_pieces
    out = []
    start = None
    for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:]):
        if y0 <= t < y1:
            start = x0 + (t - y0) / (y1 - y0) * (x1 - x0)
        elif y1 <= t < y0 and start is not None:
            end = x0 + (y0 - t) / (y0 - y1) * (x1 - x0)
            if end > start:
                out.append((start, end))
            start = None
    return tuple(out)


def conductor_at(f: PLFunction, t: float, a: float) -> ConductorUnion1D:
    """``(closure(M_{at}), M_t)``.  An empty ``M_{at}`` gives an empty compact part."""
    if a <= 1:
        raise ValueError("a must exceed 1")
    outer = superlevel(f, t)
    inner = superlevel(f, a * t)
    return ConductorUnion1D(outer, inner)


def truncation(f: PLFunction, t: float, a: float) -> PLFunction:
    """``min((|f| - t)_+, (a-1) t) / ((a-1) t)`` as a piecewise-linear function."""
    if t <= 0 or a <= 1:
        raise ValueError("need t > 0 and a > 1")
    xs, ys = f.abs_pieces
    top = a * t
    # crossing points carry their exact level value; interpolation would leave 1 - eps
    pts = {x: min(max((y - t) / ((a - 1.0) * t), 0.0), 1.0) for x, y in zip(xs, ys)}
    for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:]):
        for lev, val in ((t, 0.0), (top, 1.0)):
            if min(y0, y1) < lev < max(y0, y1):
                x = x0 + (lev - y0) / (y1 - y0) * (x1 - x0)
                if x0 < x < x1:
                    pts[x] = val
    bx = sorted(pts)
    return PLFunction(tuple(bx), tuple(pts[x] for x in bx), f.omega)


@dataclass(frozen=True)
class ConvexPhi:
    """Increasing convex ``Phi`` on ``[0, inf)`` with ``Phi(0) = 0``.

    Either ``Phi(y) = y**beta`` (``beta >= 1``) or piecewise linear through
    the origin and the given knots, extended with the last slope.
    """

    kind: str
    beta: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "power":
            if not self.beta >= 1:
                raise ValueError("power Phi needs beta >= 1")
        elif self.kind == "pl":
            knots = tuple((float(x), float(y)) for x, y in self.knots)
            if not knots:
                raise ValueError("piecewise-linear Phi needs at least one knot")
            xs = [0.0] + [k[0] for k in knots]
            ys = [0.0] + [k[1] for k in knots]
            if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
                raise ValueError("Phi knots must be strictly increasing in x")
            slopes = [(y1 - y0) / (x1 - x0) for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:])]
            if slopes[0] <= 0 or any(s1 < s0 for s0, s1 in zip(slopes, slopes[1:])):
                raise ValueError("Phi must be increasing and convex (nondecreasing slopes)")
            object.__setattr__(self, "knots", knots)
        else:
            raise ValueError(f"unknown Phi kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "ConvexPhi":
        return cls("power", 1.0)

    @classmethod
    def parse(cls, spec: str) -> "ConvexPhi":
        """``id``, ``square``, ``power:<beta>`` or ``pl:<x>/<y>,<x>/<y>,...``."""
        spec = spec.strip()
        if spec == "id":
            return cls.identity()
        if spec == "square":
            return cls("power", 2.0)
        kind, _, rest = spec.partition(":")
        if kind == "power":
            return cls("power", float(rest))
        if kind == "pl":
            knots = tuple(tuple(float(v) for v in k.split("/")) for k in rest.split(","))
            return cls("pl", knots=knots)
        raise ValueError(f"cannot parse Phi spec {spec!r}")

    def spec(self) -> str:
        if self.kind == "power":
            return "id" if self.beta == 1 else f"power:{self.beta:g}"
        return "pl:" + ",".join(f"{x:g}/{y:g}" for x, y in self.knots)

    def _arrays(self):
        xs = np.array([0.0] + [k[0] for k in self.knots])
        ys = np.array([0.0] + [k[1] for k in self.knots])
        return xs, ys

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "power":
            return y**self.beta
        xs, ys = self._arrays()
        last = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return np.where(y <= xs[-1], np.interp(y, xs, ys), ys[-1] + last * (y - xs[-1]))

    def integral_over_y(self, ymax: float) -> float:
        """``int_0^ymax Phi(y)/y dy`` in closed form."""
        if ymax <= 0:
            return 0.0
        if self.kind == "power":
            return ymax**self.beta / self.beta
        xs, ys = self._arrays()
        slopes = np.diff(ys) / np.diff(xs)
        lows = xs
        highs = np.r_[xs[1:], math.inf]
        slopes = np.r_[slopes, slopes[-1]]
        total = 0.0
        for lo, hi, s, y_lo in zip(lows, highs, slopes, ys):
            if lo >= ymax:
                break
            top = min(hi, ymax)
            b = y_lo - s * lo  # Phi(y) = s*y + b on this piece
            total += s * (top - lo)
            if b != 0.0:
                total += b * math.log(top / lo)
        return total


@dataclass(frozen=True)
class TGrid:
    """Geometric level grid: ``per_decade`` points per decade over ``decades`` decades below ``max|f|``."""

    per_decade: int = 256
    decades: float = 6.0


def log_integral(ts: np.ndarray, vals: np.ndarray) -> float:
    """``int vals dt/t`` by Simpson's rule in ``log t``."""
    if ts.size < 2:
        return 0.0
    return float(simpson(vals, x=np.log(ts)))


def _critical_levels(f: PLFunction, a: float) -> list[float]:
    ys = [y for y in f.abs_pieces[1] if y > 0]
    return sorted(set(ys) | {y / a for y in ys})


_EDGE = 1e-12


@functools.lru_cache(maxsize=64)
def _level_profile(f: PLFunction, a: float, tgrid: TGrid):
    """Level nodes and padded gap arrays for every node; shared by all ``(p, q, Phi)``.

    Nodes are grouped by the smooth stretches between critical levels; each
    stretch is sampled strictly inside so that jumps at critical levels are
    never straddled by a quadrature panel.
    """
    m = f.max_abs
    crit = _critical_levels(f, a)
    t_hi = m / a
    t_lo = min(m * 10.0 ** (-tgrid.decades), crit[0] / a) * 0.5
    cuts = [t_lo] + [c for c in crit if t_lo < c < t_hi] + [t_hi]
    dlog = math.log(10.0) / tgrid.per_decade
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        n = max(3, int(math.ceil(math.log(hi / lo) / dlog)) + 1)
        if n % 2 == 0:
            n += 1
        ts = np.geomspace(lo, hi, n)
        ts[0] = lo * (1 + _EDGE)
        ts[-1] = hi * (1 - _EDGE)
        pieces.append(ts)
    ts_all = np.concatenate(pieces)
    gaps = [union_gaps(conductor_at(f, float(t), a)) for t in ts_all]
    width = max(1, max(len(g) for g in gaps))
    sig = np.zeros((ts_all.size, width))
    for i, g in enumerate(gaps):
        sig[i, : len(g)] = g
    return t_lo, tuple(pieces), sig


def _upper_profile(sig: np.ndarray, idx: LorentzIndex) -> np.ndarray:
    """``cap_union`` upper bounds from padded gap rows (0 marks padding)."""
    mask = sig > 0
    vals = np.where(mask, 1.0 / np.where(mask, sig, 1.0), 0.0)
    out = np.zeros(sig.shape[0])
    nz = mask.any(axis=1)
    if nz.any():
        out[nz] = quasinorm_rows(vals[nz], sig[nz], idx) ** idx.p
    return out


def _phi_argument(ts, caps, idx):
    p, q = idx.p, idx.q
    if q <= p:
        return ts**p * caps
    return (ts**p * caps) ** (q / p)


@dataclass
class ConductorReport:
    lhs: float
    rhs: float
    holds: bool
    margin: float
    refined: str | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "margin": self.margin}
        if self.refined:
            out["refined"] = self.refined
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def _lambda_caps(f, ts, a, idx):
    """``||Lambda_t(f)'||_{p,q}**p`` at each level: the truncation is admissible for the level conductor."""
    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        out[i] = quasinorm(gradient_stepfunction(truncation(f, float(t), a)), idx) ** idx.p
    return out


def _solver_caps(f, ts, a, idx, nodes, warnings):
    from .varsolve import GridProblem, solve_cap

    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        cond = conductor_at(f, float(t), a)
        if cond.is_empty:
            out[i] = 0.0
            continue
        res = solve_cap(GridProblem(cond, nodes, idx))
        if not res.converged:
            warnings.append(f"capacitance solve at t={t:.6g} did not converge")
        out[i] = res.value
    return out


def verify_conductor(
    f: PLFunction,
    a: float,
    idx: LorentzIndex,
    phi: ConvexPhi | None = None,
    tgrid: TGrid = TGrid(),
    rtol: float = 1e-9,
    solver_nodes: int = 201,
) -> ConductorReport:
    """Check the conductor inequality for ``f`` with capacitance upper bounds.

    A failure with the ramp upper bounds is re-checked with the pointwise
    minimum of the ramp bound and the truncation ``Lambda_t(f)`` (always
    admissible), and then with the grid solver, before being reported.
    """
    if a <= 1:
        raise ValueError("a must exceed 1")
    if idx.q_is_inf:
        raise ValueError("the conductor inequality needs q < inf")
    phi = phi or ConvexPhi.identity()
    p, q = idx.p, idx.q
    grad_norm = quasinorm(gradient_stepfunction(f), idx)
    expo = p if q <= p else q
    rhs = math.log(a) * float(phi((a - 1.0) ** (-expo) * grad_norm**expo))
    if f.max_abs == 0:
        return ConductorReport(0.0, rhs, True, rhs)

    t_lo, pieces, sig = _level_profile(f, a, tgrid)
    ts = np.concatenate(pieces)
    caps = _upper_profile(sig, idx)
    gamma = 1.0 if q <= p else q / p

    def lhs_from(caps):
        y = _phi_argument(ts, caps, idx)
        vals = phi(y)
        total, start = 0.0, 0
        for piece in pieces:
            stop = start + piece.size
            total += log_integral(piece, vals[start:stop])
            start = stop
        total += phi.integral_over_y(float(y[0])) / gamma
        return total

    lhs = lhs_from(caps)
    warnings: list[str] = []
    refined = None
    if lhs > rhs * (1 + rtol):
        refined = "truncation"
        caps = np.minimum(caps, _lambda_caps(f, ts, a, idx))
        lhs = lhs_from(caps)
        if lhs > rhs * (1 + rtol) and q > p:
            refined = "solver"
            caps = np.minimum(caps, _solver_caps(f, ts, a, idx, solver_nodes, warnings))
            lhs = lhs_from(caps)
    holds = lhs <= rhs * (1 + rtol)
    for w in warnings:
        log.warning(w)
    return ConductorReport(lhs, rhs, holds, rhs - lhs, refined, warnings)


def power_measure_form(report: ConductorReport, idx: LorentzIndex) -> tuple[float, float]:
    """Both sides in the ``d(t**p)`` form (``Phi = id``): multiply by the exponent."""
    expo = idx.p if idx.q <= idx.p else idx.q
    return expo * report.lhs, expo * report.rhs


def frullani_check(
    gamma: Callable[[np.ndarray], np.ndarray],
    a: float,
    gamma0: float | None = None,
    gamma_inf: float | None = None,
    t_min: float = 1e-12,
    t_max: float = 1e12,
    per_decade: int = 64,
) -> tuple[float, float]:
    """``int_0^inf (gamma(t) - gamma(a t)) dt/t`` on a log grid, against ``(gamma(0) - gamma(inf)) log a``."""
    if a <= 1:
        raise ValueError("a must exceed 1")
    g0 = float(gamma(np.array(0.0))) if gamma0 is None else gamma0
    ginf = float(gamma(np.array(np.inf))) if gamma_inf is None else gamma_inf
    n = int(round(math.log10(t_max / t_min) * per_decade)) + 1
    ts = np.geomspace(t_min, t_max, n)
    vals = np.asarray(gamma(ts), dtype=float) - np.asarray(gamma(a * ts), dtype=float)
    return log_integral(ts, vals), (g0 - ginf) * math.log(a)


def random_pl_function(rng: np.random.Generator, max_tents: int = 5, signed: bool = False) -> PLFunction:
    """Sum of 1 to ``max_tents`` random tents on ``(0, 1)``."""
    k = int(rng.integers(1, max_tents + 1))
    f = None
    for _ in range(k):
        hw = float(rng.uniform(0.02, 0.2))
        c = float(rng.uniform(0.05 + hw, 0.95 - hw)) if hw < 0.45 else 0.5
        h = float(rng.uniform(0.2, 2.0))
        if signed and rng.random() < 0.3:
            h = -h
        tent = PLFunction.tent(c, hw, h, omega=(0.0, 1.0))
        f = tent if f is None else f + tent
    return f
