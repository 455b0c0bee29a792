"""Grid minimisation of ``||u'||_{p,q}**p`` over admissible profiles.

The admissible class is discretised as piecewise-linear functions on a grid
that contains every endpoint of the conductor, with ``u = 1`` on the compact
part and ``u = 0`` at the ends of each open component.  The objective is a
symmetric norm of the edge slopes, so it is minimised by projected subgradient
descent with step ``c / sqrt(k)``; the subgradient is the chain rule through
the sort that produces the rearrangement.

For ``q > p`` the quasinorm is not convex and the solver minimises the
``L^{(p,q)}`` norm instead.  The reported ``value`` is always the true
``||u'||_{p,q}**p`` of the best iterate, which is an upper bound for the
capacitance because every iterate is admissible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cap1d import Conductor1D, ConductorUnion1D, cap_union
from .lorentz import LorentzIndex, norm_starstar, quasinorm
from .stepfn import StepFunction

__all__ = ["GridProblem", "SolveResult", "objective", "solve_cap", "ConstraintError"]

log = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


class ConstraintError(ValueError):
    """Nodal values that violate the boundary or obstacle constraints."""


@dataclass(frozen=True, eq=False)
class GridProblem:
    conductor: ConductorUnion1D
    nodes: int
    idx: LorentzIndex
    tol: float = 1e-6
    max_iters: int = 2000
    seed: int = 0
    # the default step schedule is deterministic; ``seed`` is kept for reproducible runs
    step_scale: float = 0.5
    window: int = 100

    x: np.ndarray = field(init=False, repr=False)
    fixed: np.ndarray = field(init=False, repr=False)
    fixed_values: np.ndarray = field(init=False, repr=False)
    left: np.ndarray = field(init=False, repr=False)
    right: np.ndarray = field(init=False, repr=False)
    h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.conductor, Conductor1D):
            object.__setattr__(self, "conductor", ConductorUnion1D.single(self.conductor))
        if self.idx.q_is_inf:
            raise ValueError("the variational solver does not handle q = inf")
        if self.nodes < 3:
            raise ValueError("need at least 3 nodes per component")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        self._build()

    def _build(self):
        xs, fixed, vals, left, right = [], [], [], [], []
        for A, B, _ in self.conductor.components():
            ks = [k for k in self.conductor.K if A < k[0] and k[1] < B]
            cx, cfix, cval = _component_grid(A, B, ks, self.nodes)
            off = len(xs)
            n = len(cx)
            left.extend(range(off, off + n - 1))
            right.extend(range(off + 1, off + n))
            xs.extend(cx)
            fixed.extend(cfix)
            vals.extend(cval)
        x = np.array(xs)
        left = np.array(left, dtype=int)
        right = np.array(right, dtype=int)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "fixed", np.array(fixed, dtype=bool))
        object.__setattr__(self, "fixed_values", np.array(vals))
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "h", x[right] - x[left])

    def initial(self) -> np.ndarray:
        """Linear interpolation of the constraint values inside each gap."""
        u = np.zeros_like(self.x)
        fx = np.flatnonzero(self.fixed)
        u[fx] = self.fixed_values[fx]
        for lo, hi in zip(fx[:-1], fx[1:]):
            if hi - lo > 1 and self.x[hi] > self.x[lo]:
                t = (self.x[lo + 1 : hi] - self.x[lo]) / (self.x[hi] - self.x[lo])
                u[lo + 1 : hi] = u[lo] + t * (u[hi] - u[lo])
        return u

    def slopes(self, u: np.ndarray) -> np.ndarray:
        return np.abs(u[self.right] - u[self.left]) / self.h

    def check(self, u: np.ndarray) -> None:
        u = np.asarray(u, dtype=float)
        if u.shape != self.x.shape:
            raise ConstraintError(f"expected {self.x.size} nodal values, got {u.size}")
        bad = self.fixed & (u != self.fixed_values)
        if np.any(bad):
            raise ConstraintError(f"constraint violated at nodes {np.flatnonzero(bad)[:5].tolist()}")


def _allocate(lengths: list[float], minimum: list[int], total: int) -> list[int]:
    """Largest-remainder split of ``total`` edges proportional to ``lengths``."""
    span = sum(lengths)
    raw = [total * l / span for l in lengths]
    out = [max(m, int(math.floor(r))) for r, m in zip(raw, minimum)]
    order = sorted(range(len(raw)), key=lambda i: -(raw[i] - math.floor(raw[i])))
    i = 0
    while sum(out) < total and order:
        out[order[i % len(order)]] += 1
        i += 1
    return out


def _component_grid(A, B, ks, nodes):
    pts = [A]
    kinds = []
    for kl, kr in ks:
        pts.append(kl)
        kinds.append("gap")
        if kr > kl:
            pts.append(kr)
            kinds.append("K")
    pts.append(B)
    kinds.append("gap")
    lengths = [b - a for a, b in zip(pts, pts[1:])]
    minimum = [2 if k == "gap" else 1 for k in kinds]
    edges = _allocate(lengths, minimum, max(nodes - 1, sum(minimum)))

    x = [A]
    for a, b, m in zip(pts, pts[1:], edges):
        seg = np.linspace(a, b, m + 1)
        seg[-1] = b
        x.extend(seg[1:].tolist())
    x = np.array(x)
    fixed = np.zeros(x.size, dtype=bool)
    vals = np.zeros(x.size)
    fixed[0] = fixed[-1] = True
    for kl, kr in ks:
        inside = (x >= kl) & (x <= kr)
        fixed[inside] = True
        vals[inside] = 1.0
    return x.tolist(), fixed.tolist(), vals.tolist()


def _qn_value_grad(g, h, p, q):
    """``||g||_{p,q}**p`` and a subgradient in ``g`` (ties: lowest edge first)."""
    order = np.argsort(-g, kind="stable")
    c = g[order]
    b = np.cumsum(h[order])
    a = b - h[order]
    r = q / p
    dB = b**r - a**r
    F = float(np.sum(c**q * dB)) * (p / q)
    if F <= 0:
        return 0.0, np.zeros_like(g)
    val = F ** (p / q)
    dF = q * c ** (q - 1.0) * dB * (p / q)
    grad = np.empty_like(g)
    grad[order] = (p / q) * F ** (p / q - 1.0) * dF
    return val, grad


def _ss_value_grad(g, h, p, q):
    """``||g||_{(p,q)}**p`` and its gradient for ``p < q < inf``.

    On piece ``k`` of ``f*``, ``f**(t) = (I_{k-1} + c_k (t - B_{k-1})) / t``;
    pieces after the first are integrated with Gauss-Legendre in ``log t``.
    """
    order = np.argsort(-g, kind="stable")
    c = g[order]
    w = h[order]
    b = np.cumsum(w)
    a = b - w
    run = np.cumsum(c * w)
    before = run - c * w
    r = q / p
    if run[-1] <= 0:
        return 0.0, np.zeros_like(g)

    # piece integrals: V_k = int t^{r-1} f**^q, J_k = int t^{r-2} f**^{q-1}, P_k = int t^{r-2} f**^{q-1} (t - a_k)
    V = np.empty_like(c)
    J = np.empty_like(c)
    P = np.empty_like(c)
    c0, b0 = c[0], b[0]
    V[0] = c0**q * b0**r / r
    J[0] = c0 ** (q - 1.0) * b0 ** (r - 1.0) / (r - 1.0)
    P[0] = c0 ** (q - 1.0) * b0**r / r
    if c.size > 1:
        la = np.log(a[1:])[:, None]
        lb = np.log(b[1:])[:, None]
        s = 0.5 * (lb + la) + 0.5 * (lb - la) * _GL_NODES[None, :]
        t = np.exp(s)
        jac = 0.5 * (lb - la) * t  # dt = t ds
        ff = (before[1:, None] + c[1:, None] * (t - a[1:, None])) / t
        base = t ** (r - 2.0) * ff ** (q - 1.0) * jac
        V[1:] = (t * ff * base) @ _GL_WEIGHTS
        J[1:] = base @ _GL_WEIGHTS
        P[1:] = (base * (t - a[1:, None])) @ _GL_WEIGHTS
    M, I = b[-1], run[-1]
    tail_v = I**q * M ** (r - q) / (q - r)
    tail_j = I ** (q - 1.0) * M ** (r - q) / (q - r)
    F = float(np.sum(V)) + tail_v
    after = np.r_[np.cumsum(J[::-1])[::-1][1:], 0.0] + tail_j
    dF = q * (w * after + P)
    grad = np.empty_like(g)
    grad[order] = (p / q) * F ** (p / q - 1.0) * dF
    return F ** (p / q), grad


def objective(u, g: GridProblem) -> float:
    """``||u'||^p`` with the quasinorm for ``q <= p`` and the ``f**`` norm for ``q > p``."""
    u = np.asarray(u, dtype=float)
    g.check(u)
    grad = StepFunction(g.slopes(u), g.h)
    if g.idx.q <= g.idx.p:
        return quasinorm(grad, g.idx) ** g.idx.p
    return norm_starstar(grad, g.idx) ** g.idx.p


def true_value(u, g: GridProblem) -> float:
    """``||u'||_{p,q}**p`` regardless of the regime."""
    return quasinorm(StepFunction(g.slopes(np.asarray(u, dtype=float)), g.h), g.idx) ** g.idx.p


@dataclass
class SolveResult:
    value: float
    u: np.ndarray
    x: np.ndarray
    bracket: tuple[float, float]
    converged: bool
    iterations: int
    history: np.ndarray
    surrogate: float | None = None

    def to_json(self) -> dict:
        out = {
            "value": self.value,
            "bracket": list(self.bracket),
            "converged": self.converged,
            "iterations": self.iterations,
        }
        if self.surrogate is not None:
            out["surrogate"] = self.surrogate
        return out


def solve_cap(g: GridProblem) -> SolveResult:
    """Projected subgradient descent for the grid capacitance problem."""
    p, q = g.idx.p, g.idx.q
    convex_true = q <= p
    value_grad = _qn_value_grad if convex_true else _ss_value_grad
    free = ~g.fixed

    def fval_grad(u):
        sl = np.abs(u[g.right] - u[g.left])
        val, dg = value_grad(sl / g.h, g.h, p, q)
        s = np.sign(u[g.right] - u[g.left]) * dg / g.h
        du = np.zeros_like(u)
        np.add.at(du, g.right, s)
        np.add.at(du, g.left, -s)
        du[~free] = 0.0
        return val, du

    def tval(u):
        if convex_true:
            return None
        return _qn_value_grad(g.slopes(u), g.h, p, q)[0]

    u = g.initial()
    f0, d0 = fval_grad(u)
    best_u, best_f = u.copy(), f0
    best_t = f0 if convex_true else tval(u)
    best_t_u = u.copy()
    norm0 = float(np.linalg.norm(d0))
    history = [best_f]
    converged = False
    k = 0
    if norm0 == 0.0 or f0 == 0.0:
        converged = True
    else:
        c = g.step_scale * f0 / norm0
        fk, dk = f0, d0
        for k in range(1, g.max_iters + 1):
            nrm = float(np.linalg.norm(dk))
            if nrm == 0.0:
                converged = True
                break
            u = u - (c / math.sqrt(k)) * dk / nrm
            np.clip(u, 0.0, 1.0, out=u)
            u[g.fixed] = g.fixed_values[g.fixed]
            fk, dk = fval_grad(u)
            if fk < best_f:
                best_f, best_u = fk, u.copy()
            if not convex_true:
                tv = tval(u)
                if tv < best_t:
                    best_t, best_t_u = tv, u.copy()
            history.append(best_f)
            if k >= g.window and history[-1 - g.window] - best_f <= g.tol * best_f:
                converged = True
                break
        if not converged:
            log.warning("solver hit max_iters=%d without meeting tol=%g", g.max_iters, g.tol)

    lower_union, _ = cap_union(g.conductor, g.idx)
    if convex_true:
        value = true_value(best_u, g)
        bracket = (lower_union, value)
        return SolveResult(value, best_u, g.x, bracket, converged, k, np.array(history))
    surrogate = objective(best_u, g)
    value = true_value(best_t_u, g)
    bracket = (surrogate / g.idx.conj**p, surrogate)
    return SolveResult(value, best_t_u, g.x, bracket, converged, k, np.array(history), surrogate)
