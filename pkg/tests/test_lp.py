import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imagestar import DimensionMismatch, LinearConstraints, LPStatus, is_feasible, maximize, minimize
from imagestar import _kernels
from imagestar.lp import feasible_point, lp_call_count

from oracles import random_bounded_lp, vertex_optimum


def test_box_minimum():
    out = minimize([1.0], ([[1.0], [-1.0]], [1.0, 1.0]))
    assert out.status is LPStatus.OPTIMAL
    assert out.value == pytest.approx(-1.0, abs=1e-9)
    assert out.witness == pytest.approx([-1.0], abs=1e-9)


def test_empty_interval_is_infeasible():
    out = minimize([1.0], ([[1.0], [-1.0]], [-1.0, -1.0]))
    assert out.status is LPStatus.INFEASIBLE
    assert not is_feasible(([[1.0], [-1.0]], [-1.0, -1.0]))


def test_triangle_min_and_max():
    cons = ([[-1, 0], [0, -1], [1, 1]], [0, 0, 2])
    lo = minimize([1, 1], cons)
    hi = maximize([1, 2], cons)
    assert lo.value == pytest.approx(0.0, abs=1e-9)
    assert hi.value == pytest.approx(4.0, abs=1e-9)
    assert hi.witness == pytest.approx([0.0, 2.0], abs=1e-9)


def test_unbounded():
    assert minimize([1.0], ([[1.0]], [0.0])).status is LPStatus.UNBOUNDED
    assert maximize([1.0], ([[-1.0]], [0.0])).status is LPStatus.UNBOUNDED


def test_no_constraints_zero_objective():
    out = minimize([0.0, 0.0], (np.zeros((0, 2)), np.zeros(0)))
    assert out.optimal and out.value == 0.0


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        minimize([1.0, 2.0], ([[1.0]], [1.0]))
    with pytest.raises(DimensionMismatch):
        LinearConstraints(np.eye(2), [1.0])


def test_constraints_are_read_only():
    cons = LinearConstraints(np.eye(2), [1, 1])
    with pytest.raises(ValueError):
        cons.C[0, 0] = 5.0


def test_degenerate_redundant_rows():
    # the same facet repeated and a redundant equality pair
    C = [[1, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]]
    d = [1, 1, 0, 1, 0, 1, -1]
    out = maximize([1, 0], (C, d))
    assert out.value == pytest.approx(1.0, abs=1e-9)
    assert LinearConstraints(C, d).satisfied(out.witness)


def test_call_counter_increases():
    before = lp_call_count()
    minimize([1.0], ([[1.0], [-1.0]], [1.0, 1.0]))
    assert lp_call_count() == before + 1


def test_feasible_point():
    C, d = [[1, 1], [-1, 0], [0, -1]], [1, -0.2, -0.3]
    x = feasible_point((C, d))
    assert np.all(np.asarray(C) @ x <= np.asarray(d) + 1e-9)
    assert feasible_point(([[1.0], [-1.0]], [-1.0, -1.0])) is None


def test_vertex_oracle_random_lps(rng):
    for _ in range(60):
        C, d = random_bounded_lp(rng)
        obj = rng.normal(size=C.shape[1])
        ref = vertex_optimum(obj, C, d, "min")
        out = minimize(obj, (C, d))
        if ref is None:
            assert out.status is LPStatus.INFEASIBLE
        else:
            assert out.optimal
            assert out.value == pytest.approx(ref[0], abs=1e-6)


lp_seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=80, deadline=None)
@given(lp_seeds)
def test_witness_is_feasible_and_attains_value(seed):
    r = np.random.default_rng(seed)
    C, d = random_bounded_lp(r)
    obj = r.normal(size=C.shape[1])
    out = maximize(obj, (C, d))
    if out.optimal:
        assert LinearConstraints(C, d).satisfied(out.witness, 1e-7)
        assert obj @ out.witness == pytest.approx(out.value, abs=1e-9)
        assert is_feasible((C, d))


@settings(max_examples=60, deadline=None)
@given(lp_seeds)
def test_tightening_is_monotone(seed):
    r = np.random.default_rng(seed)
    C, d = random_bounded_lp(r, feasible=True)
    obj = r.normal(size=C.shape[1])
    loose = minimize(obj, (C, d))
    row = r.normal(size=(1, C.shape[1]))
    tight = minimize(obj, (np.vstack([C, row]), np.append(d, r.uniform(-2, 2))))
    assert loose.optimal
    if tight.optimal:
        assert tight.value >= loose.value - 1e-7


@settings(max_examples=40, deadline=None)
@given(lp_seeds)
def test_deterministic(seed):
    r = np.random.default_rng(seed)
    C, d = random_bounded_lp(r)
    obj = r.normal(size=C.shape[1])
    a, b = minimize(obj, (C, d)), minimize(obj, (C, d))
    assert a.status is b.status
    if a.optimal:
        assert a.value == b.value
        assert np.array_equal(a.witness, b.witness)


def test_min_max_duality(rng):
    for _ in range(30):
        C, d = random_bounded_lp(rng, feasible=True)
        obj = rng.normal(size=C.shape[1])
        assert maximize(obj, (C, d)).value == pytest.approx(-minimize(-obj, (C, d)).value, abs=1e-9)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_simplex_kernels_agree(rng):
    from imagestar.lp import _phase_one

    for _ in range(30):
        C, d = random_bounded_lp(rng, feasible=True)
        start = _phase_one(C, d)
        T, basis, n_real = start
        m = C.shape[1]
        cost = np.zeros(n_real)
        cost[:m] = rng.normal(size=m)
        cost[m : 2 * m] = -cost[:m]
        T[-1, :n_real] = cost
        T[-1] -= cost[basis] @ T[:-1]
        T1, b1 = T.copy(), basis.copy()
        s1 = _kernels.simplex_numpy(T1, b1, n_real, 1e-9, 1e-9, 10000)
        s2 = _kernels.simplex_numba(T, basis, n_real, 1e-9, 1e-9, 10000)
        assert s1 == s2
        assert np.array_equal(b1, basis)
        assert np.allclose(T1, T, atol=1e-10)
