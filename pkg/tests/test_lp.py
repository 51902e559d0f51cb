import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from pwadc import lp
from pwadc.lp import LinearProgram, Status

from conftest import load_corpus

CORPUS = load_corpus("lp_corpus.json")


def _prog(case):
    bounds = [tuple(b) for b in case["bounds"]]
    return LinearProgram(case["cost"], case["A_ub"], case["b_ub"], case["A_eq"], case["b_eq"], bounds)


@pytest.mark.parametrize("backend", ["simplex", "highs"])
@pytest.mark.parametrize("case", CORPUS, ids=[c["name"] for c in CORPUS])
def test_corpus(case, backend):
    res = lp.solve(_prog(case), backend=backend)
    assert res.status.value == case["expected_status"]
    if res.optimal:
        assert res.objective == pytest.approx(case["expected_objective"], rel=1e-6, abs=1e-9)
        P = _prog(case)
        assert (P.A_ub @ res.x <= P.b_ub + lp.EPS_FEAS).all()
        assert np.abs(P.A_eq @ res.x - P.b_eq).max(initial=0) <= lp.EPS_FEAS
    else:
        assert res.x is None


def test_spec_examples():
    r = lp.solve(LinearProgram([1.0], [[-1.0], [1.0]], [-1.0, 3.0]), backend="simplex")
    assert r.optimal and r.x[0] == pytest.approx(1.0)
    r = lp.solve(LinearProgram([0.0], [[1.0], [-1.0]], [-1.0, -1.0]), backend="simplex")
    assert r.status is Status.INFEASIBLE
    r = lp.solve(LinearProgram([-1.0, -1.0], [[1.0, 1.0]], [1.0], bounds=[(0, None), (0, None)]),
                 backend="simplex")
    assert r.objective == pytest.approx(-1.0)


def _dual_value(P: LinearProgram):
    """Optimal value of the explicit dual, solved by HiGHS.

    Primal ``min c x, G x <= h, A x = b`` with bounds folded into ``G``;
    dual ``min h y + b z, G^T y + A^T z = -c, y >= 0`` has value ``-opt``.
    """
    G, h = [P.A_ub], [P.b_ub]
    for j, (lo, hi) in enumerate(P.bounds):
        e = np.zeros(P.nv)
        if lo is not None:
            e[j] = -1
            G.append(e.copy()[None])
            h.append([-lo])
        if hi is not None:
            e[j] = 1
            G.append(e.copy()[None])
            h.append([hi])
    G = np.vstack(G)
    h = np.concatenate([np.ravel(x) for x in h])
    A, b = P.A_eq, P.b_eq
    Aeq = np.hstack([G.T, A.T])
    cost = np.concatenate([h, b])
    bounds = [(0, None)] * G.shape[0] + [(None, None)] * A.shape[0]
    res = linprog(cost, A_eq=Aeq, b_eq=-P.cost, bounds=bounds, method="highs")
    assert res.status == 0
    return -res.fun


@pytest.mark.parametrize("case", [c for c in CORPUS if c["expected_status"] == "Optimal"],
                         ids=lambda c: c["name"])
def test_duality_spot_check(case):
    P = _prog(case)
    res = lp.solve(P, backend="simplex")
    assert res.objective == pytest.approx(_dual_value(P), rel=1e-6, abs=1e-9)


@st.composite
def bounded_lps(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    r = np.random.default_rng(seed)
    nv = int(r.integers(1, 7))
    m = int(r.integers(0, 9))
    me = int(r.integers(0, min(nv, 3)))
    A = np.round(r.normal(size=(m, nv)), 3)
    x_feas = r.uniform(-1, 1, nv)
    b = A @ x_feas + np.round(r.uniform(0, 1, m), 3) if draw(st.booleans()) else np.round(r.normal(size=m), 3)
    Ae = np.round(r.normal(size=(me, nv)), 3)
    be = Ae @ x_feas
    bounds = [(-5.0, 5.0)] * nv
    return LinearProgram(np.round(r.normal(size=nv), 3), A, b, Ae, be, bounds)


@settings(max_examples=150, deadline=None)
@given(bounded_lps())
def test_simplex_matches_highs(P):
    a = lp.solve(P, backend="simplex")
    b = lp.solve(P, backend="highs")
    assert a.status == b.status
    if a.optimal:
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-7)
        assert (P.A_ub @ a.x <= P.b_ub + lp.EPS_FEAS).all()
        assert np.abs(P.A_eq @ a.x - P.b_eq).max(initial=0) <= lp.EPS_FEAS


@settings(max_examples=60, deadline=None)
@given(bounded_lps(), st.integers(0, 1000))
def test_status_stable_under_row_permutation(P, seed):
    perm = np.random.default_rng(seed).permutation(P.A_ub.shape[0])
    Q = LinearProgram(P.cost, P.A_ub[perm], P.b_ub[perm], P.A_eq, P.b_eq, P.bounds)
    a, b = lp.solve(P, backend="simplex"), lp.solve(Q, backend="simplex")
    assert a.status == b.status
    if a.optimal:
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-7)


def test_warm_point_gives_same_optimum(rng):
    for _ in range(50):
        V = rng.normal(size=(8, 3))
        w = rng.uniform(0.5, 2, 8)
        P = LinearProgram(rng.normal(size=3), V, w, bounds=[(-3, 3)] * 3)
        a = lp.solve(P, backend="simplex")
        b = lp.solve(P, backend="simplex", x0=np.zeros(3))
        assert a.status == b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


def test_iteration_cap_raises():
    P = LinearProgram(-np.ones(4), np.vstack([np.eye(4), np.ones((1, 4))]), [1, 1, 1, 1, 2.5])
    with pytest.raises(lp.NumericalFailure):
        lp.solve(P, backend="simplex", max_iter=1)


def test_malformed_programs_rejected():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([math.nan], [[1.0]], [1.0])


def test_chebyshev_examples():
    c, r = lp.chebyshev([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1])
    assert r == pytest.approx(1.0) and np.allclose(c, 0, atol=1e-9)
    _, r = lp.chebyshev([[1.0], [-1.0]], [0.0, 0.0])
    assert abs(r) < 1e-12
    _, r = lp.chebyshev([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    assert r == pytest.approx(1 / (2 + math.sqrt(2)), rel=1e-9)


def test_chebyshev_scaled_rows_and_unbounded():
    _, r = lp.chebyshev([[-2, 0], [0, -5], [3, 3]], [0, 0, 3])
    assert r == pytest.approx(1 / (2 + math.sqrt(2)), rel=1e-9)
    c, r = lp.chebyshev([[1.0, 0.0]], [0.0])
    assert r == math.inf and c.shape == (2,)
    _, r = lp.chebyshev([[1.0], [-1.0]], [-1.0, -1.0])
    assert r < 0
