import math

import numpy as np
import pytest

from lorentzcap.cap1d import Conductor1D, ConductorUnion1D, cap_lower, cap_upper, exact_p_cap
from lorentzcap.lorentz import LorentzIndex
from lorentzcap.varsolve import (
    ConstraintError,
    GridProblem,
    _qn_value_grad,
    _ss_value_grad,
    objective,
    solve_cap,
)

STD = Conductor1D(0.0, 0.4, 0.6, 1.0)


def test_grid_contains_endpoints():
    g = GridProblem(STD, 101, LorentzIndex(2, 2))
    for x in (0.0, 0.4, 0.6, 1.0):
        assert np.any(g.x == x)
    assert np.all(np.diff(g.x) > 0)
    assert np.all(g.fixed_values[(g.x >= 0.4) & (g.x <= 0.6)] == 1.0)


def test_rejections():
    with pytest.raises(ValueError):
        GridProblem(STD, 101, LorentzIndex(2, math.inf))
    with pytest.raises(ValueError):
        GridProblem(STD, 2, LorentzIndex(2, 2))
    g = GridProblem(STD, 101, LorentzIndex(2, 2))
    bad = g.initial()
    bad[0] = 0.1
    with pytest.raises(ConstraintError):
        objective(bad, g)


def test_objective_examples():
    g = GridProblem(STD, 2001, LorentzIndex(2, 2))
    assert objective(g.initial(), g) == pytest.approx(5.0, rel=1e-12)
    coarse = GridProblem(STD, 7, LorentzIndex(2, 2))
    steep = coarse.initial()
    # steepest feasible profile: 1 only on the compact part, 0 at every free node
    steep[~coarse.fixed] = 0.0
    assert objective(steep, coarse) >= 5.0
    empty = GridProblem(ConductorUnion1D(((0.0, 1.0),), ()), 11, LorentzIndex(2, 3))
    assert objective(np.zeros_like(empty.x), empty) == 0.0


@pytest.mark.parametrize("fn,q", [(_qn_value_grad, 1.5), (_qn_value_grad, 3.0), (_ss_value_grad, 3.0), (_ss_value_grad, 5.0)])
def test_gradient_matches_finite_differences(fn, q):
    rng = np.random.default_rng(7)
    g = rng.uniform(0.1, 3.0, 9)
    h = rng.uniform(0.05, 0.5, 9)
    val, grad = fn(g, h, 2.0, q)
    eps = 1e-6
    for i in range(g.size):
        e = np.zeros_like(g)
        e[i] = eps
        fd = (fn(g + e, h, 2.0, q)[0] - fn(g - e, h, 2.0, q)[0]) / (2 * eps)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_oracle_agreement(p):
    res = solve_cap(GridProblem(STD, 2001, LorentzIndex(p, p)))
    assert res.value == pytest.approx(exact_p_cap(STD, p), rel=1e-2)


def test_bracket_p2_q1():
    idx = LorentzIndex(2, 1)
    res = solve_cap(GridProblem(STD, 1001, idx))
    assert 2.5 <= res.value <= 20.0 * (1 + 1e-6)
    assert res.bracket[0] == pytest.approx(cap_lower(STD, idx))


def test_monotone_history_and_feasibility():
    g = GridProblem(Conductor1D(0.0, 0.3, 0.35, 1.0), 401, LorentzIndex(2.0, 4.0), max_iters=300)
    res = solve_cap(g)
    assert np.all(np.diff(res.history) <= 0)
    g.check(res.u)
    assert np.all((res.u >= 0) & (res.u <= 1))
    assert res.value <= cap_upper(g.conductor.hull_conductors()[0], g.idx) * (1 + 1e-6)
    lo, hi = res.bracket
    assert lo <= hi


def test_refinement_stability():
    for c in (STD, Conductor1D(0.0, 0.2, 0.3, 1.0), Conductor1D(-1.0, 0.0, 0.5, 2.0)):
        for p, q in ((2.0, 2.0), (2.0, 1.0), (3.0, 1.5)):
            idx = LorentzIndex(p, q)
            v1 = solve_cap(GridProblem(c, 501, idx)).value
            v2 = solve_cap(GridProblem(c, 1001, idx)).value
            assert v2 == pytest.approx(v1, rel=1e-2)


def test_clamp_never_increases_objective():
    g = GridProblem(Conductor1D(0.0, 0.3, 0.5, 1.0), 201, LorentzIndex(2.0, 1.5), max_iters=200)
    res = solve_cap(g)
    rng = np.random.default_rng(3)
    u = res.u + np.where(g.fixed, 0.0, rng.normal(0, 0.4, res.u.size))
    clamped = np.clip(u, 0.0, 1.0)
    unclamped = _raw_objective(u, g)
    assert _raw_objective(clamped, g) <= unclamped * (1 + 1e-12)
    assert objective(np.clip(res.u, 0, 1), g) == pytest.approx(objective(res.u, g), rel=1e-15)


def _raw_objective(u, g):
    return _qn_value_grad(g.slopes(u), g.h, g.idx.p, g.idx.q)[0]


def test_union_solve_matches_exact():
    u = ConductorUnion1D(((0, 0.5), (0.6, 1)), ((0.1, 0.2), (0.7, 0.8)))
    res = solve_cap(GridProblem(u, 1001, LorentzIndex(2, 2)))
    assert res.value == pytest.approx(85 / 3, rel=1e-2)


def test_deterministic():
    g = GridProblem(STD, 301, LorentzIndex(2.0, 3.0), max_iters=200)
    a, b = solve_cap(g), solve_cap(g)
    assert a.value == b.value and np.array_equal(a.u, b.u)


def test_unconverged_is_flagged():
    g = GridProblem(STD, 301, LorentzIndex(2.0, 3.0), max_iters=3, tol=0.0)
    assert not solve_cap(g).converged
