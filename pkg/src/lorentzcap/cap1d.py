"""Two-sided capacitance estimates for conductors on the line.

For a single interval conductor ``([a, b], (A, B))`` with gaps
``s1 = a - A`` and ``s2 = B - b``:

* ``q == p``: the capacitance is ``s1**(1-p) + s2**(1-p)`` (linear ramps are
  the minimiser of the Euler-Lagrange problem on each gap).
* upper bound: the ``L^{p,q}`` quasinorm (to the power ``p``) of the ramp
  gradient, a two-cell step function ``[(1/s1, s1), (1/s2, s2)]``.
* lower bound: any admissible ``v`` has ``int |v'| >= 1`` over each gap, which
  gives ``||v'||_{p,inf} >= (1/p') * s**(-1/p')`` per gap; for finite ``q`` the
  weak-type comparison ``||g||_{p,inf} <= (q/p)**(1/q) ||g||_{p,q}`` carries
  the bound over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .lorentz import LorentzIndex, quasinorm
from .stepfn import StepFunction

__all__ = [
    "StructureError",
    "Conductor1D",
    "ConductorUnion1D",
    "exact_p_cap",
    "ramp_gradient",
    "cap_upper",
    "cap_lower",
    "coarse_upper",
    "cap_union",
    "union_gaps",
]


class StructureError(ValueError):
    """A conductor whose compact part is not nested in its open part."""


@dataclass(frozen=True)
class Conductor1D:
    """Compact interval ``[a, b]`` inside the open interval ``(A, B)``."""

    A: float
    a: float
    b: float
    B: float

    def __post_init__(self):
        for name in ("A", "a", "b", "B"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.A < self.a <= self.b < self.B):
            raise StructureError(
                f"need A < a <= b < B, got ({self.A}, {self.a}, {self.b}, {self.B})"
            )

    @property
    def sigma1(self) -> float:
        return self.a - self.A

    @property
    def sigma2(self) -> float:
        return self.B - self.b

    def to_json(self) -> dict:
        return {"A": self.A, "a": self.a, "b": self.b, "B": self.B}

    @classmethod
    def from_json(cls, obj: dict) -> "Conductor1D":
        try:
            return cls(obj["A"], obj["a"], obj["b"], obj["B"])
        except KeyError as exc:
            raise ValueError(f"conductor JSON is missing key {exc}") from None


def _merge_closed(intervals: Iterable[Sequence[float]]) -> tuple[tuple[float, float], ...]:
    ivs = sorted((float(l), float(r)) for l, r in intervals)
    out: list[list[float]] = []
    for l, r in ivs:
        if r < l:
            raise StructureError(f"closed interval [{l}, {r}] is reversed")
        if out and l <= out[-1][1]:
            out[-1][1] = max(out[-1][1], r)
        else:
            out.append([l, r])
    return tuple((l, r) for l, r in out)


@dataclass(frozen=True)
class ConductorUnion1D:
    """Finite union of closed intervals ``K`` inside a finite union of open intervals.

    Touching or overlapping closed intervals are merged on construction.
    """

    omega: tuple[tuple[float, float], ...]
    K: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        omega = tuple(sorted((float(l), float(r)) for l, r in self.omega))
        for l, r in omega:
            if not l < r:
                raise StructureError(f"open interval ({l}, {r}) is empty")
        for (_, r0), (l1, _) in zip(omega, omega[1:]):
            if l1 < r0:
                raise StructureError("open components overlap")
        K = _merge_closed(self.K)
        for kl, kr in K:
            if not any(l < kl and kr < r for l, r in omega):
                raise StructureError(
                    f"compact interval [{kl}, {kr}] is not inside any open component"
                )
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "K", K)

    @property
    def is_empty(self) -> bool:
        return not self.K

    def components(self) -> list[tuple[float, float, tuple[float, float] | None]]:
        """``(A, B, hull)`` per open component; ``hull`` is ``None`` when no compact part lies inside."""
        out = []
        for l, r in self.omega:
            inside = [(kl, kr) for kl, kr in self.K if l < kl and kr < r]
            hull = (min(k[0] for k in inside), max(k[1] for k in inside)) if inside else None
            out.append((l, r, hull))
        return out

    def hull_conductors(self) -> list[Conductor1D]:
        return [Conductor1D(l, h[0], h[1], r) for l, r, h in self.components() if h is not None]

    def to_json(self) -> dict:
        return {"omega": [list(c) for c in self.omega], "K": [list(k) for k in self.K]}

    @classmethod
    def from_json(cls, obj: dict) -> "ConductorUnion1D":
        if "omega" not in obj:
            raise ValueError("union JSON needs an 'omega' key")
        return cls(tuple(map(tuple, obj["omega"])), tuple(map(tuple, obj.get("K", []))))

    @classmethod
    def single(cls, c: Conductor1D) -> "ConductorUnion1D":
        return cls(((c.A, c.B),), ((c.a, c.b),))


def exact_p_cap(c: Conductor1D, p: float) -> float:
    """``cap_{p,p}([a,b], (A,B)) = s1**(1-p) + s2**(1-p)``."""
    if not 1.0 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    return c.sigma1 ** (1.0 - p) + c.sigma2 ** (1.0 - p)


def ramp_gradient(c: Conductor1D) -> StepFunction:
    """``|u'|`` of the piecewise-linear test function: 1 on ``[a,b]``, linear to 0 at ``A`` and ``B``."""
    return StepFunction([1.0 / c.sigma1, 1.0 / c.sigma2], [c.sigma1, c.sigma2])


def cap_upper(c: Conductor1D, idx: LorentzIndex) -> float:
    return quasinorm(ramp_gradient(c), idx) ** idx.p


def coarse_upper(c: Conductor1D, p: float) -> float:
    """Triangle-inequality bound ``[p (s1**(-1/p') + s2**(-1/p'))]**p`` on ``||u'||_{p,1}**p``."""
    e = -(p - 1.0) / p
    return (p * (c.sigma1**e + c.sigma2**e)) ** p


def _weak_lower(sigmas: Iterable[float], idx: LorentzIndex) -> float:
    pc = idx.conj
    base = max(s ** (-1.0 / pc) for s in sigmas) / pc
    out = base**idx.p
    if not idx.q_is_inf:
        out *= (idx.p / idx.q) ** (idx.p / idx.q)
    return out


def cap_lower(c: Conductor1D, idx: LorentzIndex) -> float:
    return _weak_lower((c.sigma1, c.sigma2), idx)


def union_gaps(u: ConductorUnion1D) -> list[float]:
    """Gap lengths of the hull conductors, two per component carrying a compact part."""
    gaps: list[float] = []
    for c in u.hull_conductors():
        gaps.extend((c.sigma1, c.sigma2))
    return gaps


def cap_union(u: ConductorUnion1D, idx: LorentzIndex) -> tuple[float, float]:
    """``(lower, upper)`` bracket for the capacitance of a union conductor.

    Each component's compact part is replaced by its hull.  Lower bounds are
    combined with the superadditivity exponents (sum for ``q <= p``, sum of
    ``q/p`` powers for ``p < q < inf``, max for ``q = inf``).  The upper bound
    is the exact quasinorm of all ramp gradients taken together.  For
    ``q == p`` both ends equal the exact sum.
    """
    parts = u.hull_conductors()
    if not parts:
        return 0.0, 0.0
    p, q = idx.p, idx.q
    if q == p:
        exact = math.fsum(exact_p_cap(c, p) for c in parts)
        return exact, exact
    lows = [cap_lower(c, idx) for c in parts]
    if q < p:
        lower = math.fsum(lows)
    elif math.isinf(q):
        lower = max(lows)
    else:
        lower = math.fsum(x ** (q / p) for x in lows) ** (p / q)
    grad = StepFunction.zero()
    for c in parts:
        grad = grad.concat(ramp_gradient(c))
    upper = quasinorm(grad, idx) ** p
    return lower, upper
