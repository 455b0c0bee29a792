import math

import pytest
from hypothesis import assume, given, strategies as st

from lorentzcap.cap1d import (
    Conductor1D,
    ConductorUnion1D,
    StructureError,
    cap_lower,
    cap_union,
    cap_upper,
    coarse_upper,
    exact_p_cap,
    union_gaps,
)
from lorentzcap.lorentz import LorentzIndex

INF = math.inf
STD = Conductor1D(0.0, 0.4, 0.6, 1.0)


@st.composite
def conductors(draw):
    A = draw(st.floats(-5, 5))
    s1 = draw(st.floats(0.01, 3))
    w = draw(st.floats(0, 3))
    s2 = draw(st.floats(0.01, 3))
    return Conductor1D(A, A + s1, A + s1 + w, A + s1 + w + s2)


indices = st.builds(
    LorentzIndex, st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, INF])
)


def test_exact_examples():
    assert exact_p_cap(STD, 2) == pytest.approx(5.0, rel=1e-14)
    assert exact_p_cap(STD, 3) == pytest.approx(12.5, rel=1e-14)
    assert exact_p_cap(Conductor1D(0, 1, 1.5, 2.5), 2) == 2.0


def test_upper_examples():
    assert cap_upper(STD, LorentzIndex(2, 1)) == pytest.approx(20.0, rel=1e-13)
    assert cap_upper(STD, LorentzIndex(2, 2)) == pytest.approx(5.0, rel=1e-13)
    assert coarse_upper(STD, 2) == pytest.approx(40.0, rel=1e-13)
    assert cap_upper(STD, LorentzIndex(2, 1)) <= coarse_upper(STD, 2)


def test_lower_examples():
    assert cap_lower(STD, LorentzIndex(2, INF)) == pytest.approx(0.625, rel=1e-13)
    assert cap_lower(STD, LorentzIndex(2, 1)) == pytest.approx(2.5, rel=1e-13)
    assert cap_lower(STD, LorentzIndex(2, 2)) == pytest.approx(0.625, rel=1e-13)
    assert cap_lower(STD, LorentzIndex(2, 2)) <= exact_p_cap(STD, 2)


def test_structure_errors():
    with pytest.raises(StructureError):
        Conductor1D(0, 0, 0.5, 1)
    with pytest.raises(StructureError):
        ConductorUnion1D(((0, 0.5),), ((0.4, 0.6),))
    with pytest.raises(StructureError):
        ConductorUnion1D(((0, 0.5), (0.4, 1)), ())


def test_union_example():
    u = ConductorUnion1D(((0, 0.5), (0.6, 1)), ((0.1, 0.2), (0.7, 0.8)))
    lo, hi = cap_union(u, LorentzIndex(2, 2))
    assert lo == hi == pytest.approx(10 + 10 / 3 + 10 + 5, rel=1e-13)
    assert cap_union(ConductorUnion1D(((0, 1),), ()), LorentzIndex(2, 3)) == (0.0, 0.0)


def test_union_merges_touching_intervals():
    u = ConductorUnion1D(((0, 1),), ((0.2, 0.4), (0.4, 0.6)))
    assert u.K == ((0.2, 0.6),)


@given(conductors(), indices)
def test_single_component_reduction(c, idx):
    assume(idx.q != idx.p)
    lo, hi = cap_union(ConductorUnion1D.single(c), idx)
    assert lo == pytest.approx(cap_lower(c, idx), rel=1e-14)
    assert hi == pytest.approx(cap_upper(c, idx), rel=1e-14)


@given(conductors(), indices)
def test_bracket_validity(c, idx):
    assert cap_lower(c, idx) <= cap_upper(c, idx) * (1 + 1e-12)
    if idx.q == idx.p:
        ex = exact_p_cap(c, idx.p)
        assert cap_lower(c, idx) <= ex <= cap_upper(c, idx) * (1 + 1e-12)


@given(conductors(), indices, st.floats(0, 0.99), st.floats(0, 0.99), st.floats(0, 2), st.floats(0, 2))
def test_monotonicity(c, idx, ga, gb, oa, ob):
    bigger_k = Conductor1D(c.A, c.a - ga * c.sigma1, c.b + gb * c.sigma2, c.B)
    bigger_o = Conductor1D(c.A - oa, c.a, c.b, c.B + ob)
    # the ramp bound is the exact capacitance for q <= p; above p see the counterexample test
    fns = (cap_upper, cap_lower) if idx.q <= idx.p else (cap_lower,)
    for fn in fns:
        assert fn(bigger_k, idx) >= fn(c, idx) * (1 - 1e-12)
        assert fn(bigger_o, idx) <= fn(c, idx) * (1 + 1e-12)
    # bounds of nested conductors stay mutually consistent in every regime
    assert cap_lower(bigger_o, idx) <= cap_upper(c, idx) * (1 + 1e-12)
    assert cap_lower(c, idx) <= cap_upper(bigger_k, idx) * (1 + 1e-12)
    p = idx.p
    assert exact_p_cap(bigger_k, p) >= exact_p_cap(c, p) * (1 - 1e-12)
    assert exact_p_cap(bigger_o, p) <= exact_p_cap(c, p) * (1 + 1e-12)


def test_ramp_bound_not_monotone_above_p():
    # one long gap of slope 1/3 has a larger (1.5, 3) quasinorm than slopes 1/2 and 1/3 on gaps 2 and 3
    idx = LorentzIndex(1.5, 3.0)
    small = Conductor1D(0.0, 2.0, 2.0, 5.0)
    wide = Conductor1D(-1.0, 2.0, 2.0, 5.0)
    assert cap_upper(wide, idx) > cap_upper(small, idx)
    assert cap_upper(small, idx) == pytest.approx(((0.25 + 7 / 18) ** (1 / 3)) ** 1.5, rel=1e-13)
    assert cap_upper(wide, idx) == pytest.approx((2 / 3) ** 0.5, rel=1e-13)


@given(conductors(), indices, st.floats(0.5, 3))
def test_extra_empty_component(c, idx, offset):
    base = ConductorUnion1D.single(c)
    extra = ConductorUnion1D(((c.A, c.B), (c.B + offset, c.B + offset + 1)), ((c.a, c.b),))
    assert cap_union(extra, idx) == cap_union(base, idx)


@given(conductors(), indices, st.floats(0.01, 0.99))
def test_hull_of_subset_with_same_endpoints(c, idx, frac):
    assume(c.b - c.a > 1e-6)
    mid = c.a + frac * (c.b - c.a)
    pieces = ConductorUnion1D(((c.A, c.B),), ((c.a, c.a), (mid, mid), (c.b, c.b)))
    whole = ConductorUnion1D.single(c)
    assert cap_union(pieces, idx) == cap_union(whole, idx)


@given(st.lists(conductors(), min_size=2, max_size=4), indices)
def test_union_lower_superadditive(cs, idx):
    # lay the conductors side by side so their open parts are disjoint
    shifted, x = [], 0.0
    for c in cs:
        shift = x - c.A
        shifted.append(Conductor1D(c.A + shift, c.a + shift, c.b + shift, c.B + shift))
        x = c.B + shift + 0.5
    u = ConductorUnion1D(tuple((c.A, c.B) for c in shifted), tuple((c.a, c.b) for c in shifted))
    lo, hi = cap_union(u, idx)
    p, q = idx.p, idx.q
    singles = [cap_union(ConductorUnion1D.single(c), idx)[0] for c in shifted]
    if q <= p:
        combined = math.fsum(singles)
    elif math.isinf(q):
        combined = max(singles)
    else:
        combined = math.fsum(x ** (q / p) for x in singles) ** (p / q)
    assert lo >= combined * (1 - 1e-12)
    assert lo <= hi * (1 + 1e-12)
    assert len(union_gaps(u)) == 2 * len(cs)


def test_convergence_along_monotone_sequences():
    p = 2.5
    ns = (10, 100, 1000, 10000)
    # decreasing compact parts shrinking to a point
    limit = exact_p_cap(Conductor1D(-1.0, 0.0, 0.0, 1.0), p)
    vals = [exact_p_cap(Conductor1D(-1.0, -1 / n, 1 / n, 1.0), p) for n in ns]
    assert all(v1 < v0 for v0, v1 in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(limit, rel=1e-3)
    # increasing open sets exhausting (-1, 1)
    vals = [exact_p_cap(Conductor1D(-1.0 + 1 / n, 0.0, 0.0, 1.0 - 1 / n), p) for n in ns]
    assert all(v1 < v0 for v0, v1 in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(limit, rel=1e-3)


def test_json_round_trip():
    assert Conductor1D.from_json(STD.to_json()) == STD
    u = ConductorUnion1D(((0, 0.5), (0.6, 1)), ((0.1, 0.2), (0.7, 0.8)))
    assert ConductorUnion1D.from_json(u.to_json()) == u
