import math
import warnings

import cvxopt
import numpy as np
import pytest
import scipy.linalg

from pwadc import empc, geom, pwa
from pwadc.geom import Polyhedron


def _qp_oracle(H, q, G, h):
    """Interior-point QP solve with tight tolerances (independent of the active-set code)."""
    cvxopt.solvers.options.update(show_progress=False, abstol=1e-13, reltol=1e-13, feastol=1e-13,
                                  maxiters=200)
    M = lambda A: cvxopt.matrix(np.asarray(A, dtype=float))
    sol = cvxopt.solvers.qp(M(H), M(q.reshape(-1, 1)), M(G), M(h.reshape(-1, 1)))
    return np.array(sol["x"]).ravel()


def test_dare_golden_ratio():
    P = empc.dare(np.eye(2), np.eye(2), np.eye(2), np.eye(2))
    assert np.allclose(P, (1 + math.sqrt(5)) / 2 * np.eye(2), atol=1e-12)


def test_dare_double_integrator_residual_and_oracle():
    spec = empc.double_integrator(1)
    A, B, Q, R, P = spec.A, spec.B, spec.Q, spec.R, spec.P
    res = P - (A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A) + Q)
    assert np.abs(res).max() <= 1e-10
    assert np.allclose(P, scipy.linalg.solve_discrete_are(A, B, Q, R), rtol=1e-9, atol=1e-9)
    assert np.linalg.eigvalsh(P).min() > 0


def test_dare_zero_cost():
    P = empc.dare(0.5 * np.eye(2), np.eye(2), np.zeros((2, 2)), np.eye(2))
    assert np.abs(P).max() <= 1e-12


def test_dare_no_convergence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(empc.NoConvergence):
            empc.dare(np.array([[2.0]]), np.array([[0.0]]), np.eye(1), np.eye(1), max_iter=200)


def test_invariant_set_examples(rng):
    box = Polyhedron.box([-1, -1], [1, 1])
    T = empc.lqr_invariant_set(0.5 * np.eye(2), np.eye(2), np.zeros((2, 2)), box,
                               Polyhedron.box([-1, -1], [1, 1]))
    assert T.m == 4 and np.allclose(T.bbox()[0], -1) and np.allclose(T.bbox()[1], 1)
    spec = empc.double_integrator(1)
    big = empc.lqr_invariant_set(spec.A, spec.B, spec.lqr_gain, Polyhedron.box([-1e-3] * 2, [1e-3] * 2),
                                 Polyhedron.box([-1e6], [1e6]))
    assert np.allclose(big.bbox()[1], 1e-3) or big.is_bounded()
    T = spec.T
    assert T.is_bounded()
    X = geom.sample_uniform(T, 1000, rng)
    assert spec.X.contains_many(X).all()
    Acl = spec.A + spec.B @ spec.lqr_gain
    assert T.contains_many(X @ Acl.T, tol=1e-9).all()
    assert (np.abs(X @ spec.lqr_gain.T) <= 1 + 1e-9).all()


def test_spec_guards():
    with pytest.raises(ValueError):
        empc.double_integrator(0)
    with pytest.raises(ValueError):
        empc.double_integrator(1, R=np.zeros((1, 1)))
    with pytest.raises(ValueError):
        empc.double_integrator(1, X=Polyhedron.box([1, 1], [2, 2]))


def test_condense_examples():
    spec = empc.double_integrator(1)
    qp = empc.condense(spec)
    assert qp.H.shape == (1, 1)
    assert np.allclose(qp.H, spec.R + spec.B.T @ spec.P @ spec.B)
    qp5 = empc.condense(empc.double_integrator(5))
    assert qp5.H.shape == (5, 5)
    np.linalg.cholesky(qp5.H)


def test_condense_matches_simulated_cost(rng):
    spec = empc.double_integrator(4)
    qp = empc.condense(spec)
    for _ in range(20):
        x0 = rng.uniform(-2, 2, 2)
        u = rng.uniform(-1, 1, 4)
        x, cost = x0.copy(), 0.0
        for k in range(4):
            cost += u[k] * spec.R[0, 0] * u[k] + (x @ spec.Q @ x if k else 0.0)
            x = spec.A @ x + spec.B[:, 0] * u[k]
        cost += x @ spec.P @ x
        # condensed: 1/2 u'Hu + x'F'u + const(x), with the 1/2 absorbed as a factor 2
        quad = u @ qp.H @ u + 2 * x0 @ qp.F.T @ u
        const = cost - quad
        u2 = rng.uniform(-1, 1, 4)
        x, cost2 = x0.copy(), 0.0
        for k in range(4):
            cost2 += u2[k] * spec.R[0, 0] * u2[k] + (x @ spec.Q @ x if k else 0.0)
            x = spec.A @ x + spec.B[:, 0] * u2[k]
        cost2 += x @ spec.P @ x
        assert cost2 == pytest.approx(u2 @ qp.H @ u2 + 2 * x0 @ qp.F.T @ u2 + const, rel=1e-9)


def test_solve_qp_matches_oracle(rng):
    for _ in range(30):
        n, m = 4, 10
        L = rng.normal(size=(n, n))
        H = L @ L.T + 0.5 * np.eye(n)
        q = rng.normal(size=n) * 3
        G = rng.normal(size=(m, n))
        h = rng.uniform(0.2, 1, m)
        u, W, lam = empc.solve_qp(H, q, G, h)
        assert np.allclose(u, _qp_oracle(H, q, G, h), atol=1e-6)
        assert (G @ u <= h + 1e-9).all() and (lam >= -1e-9).all()
    with pytest.raises(empc.QpInfeasible):
        empc.solve_qp(np.eye(1), np.zeros(1), np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))


def test_explore_n1(mpc):
    f = mpc(1)
    assert f.s == 7
    assert pwa.eval(f, [0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    spec = empc.double_integrator(1)
    i = f.locate_many(np.zeros((1, 2)))[0]
    assert np.allclose(f.pieces[i].a, spec.lqr_gain.ravel(), atol=1e-10)


@pytest.mark.parametrize("N", [1, 5])
def test_explicit_law_matches_qp_at_random_parameters(mpc, rng, N):
    f = mpc(N)
    qp = empc.condense(empc.double_integrator(N))
    X = geom.sample_uniform(f.domain, 1000, rng)
    law = f.eval_many(X)
    for x, u0 in zip(X, law):
        u, _, _ = empc.solve_qp(qp.H, qp.F @ x, qp.G, qp.w + qp.S @ x)
        assert abs(u[0] - u0) <= 1e-6
    for x, u0 in zip(X[:100], law[:100]):
        assert abs(_qp_oracle(qp.H, qp.F @ x, qp.G, qp.w + qp.S @ x)[0] - u0) <= 1e-6


@pytest.mark.parametrize("N", [1, 5])
def test_law_properties(mpc, rng, N):
    f = mpc(N)
    assert pwa.validate(f, n_samples=2000).ok
    X = geom.sample_uniform(f.domain, 4000, rng)
    u = f.eval_many(X)
    assert np.abs(u).max() <= 1 + 1e-9
    # convex feasible set: midpoints of feasible pairs are feasible
    mid = (X[:2000] + X[2000:]) / 2
    assert (f.locate_many(mid) >= 0).all()
    # points of the state box outside the domain are infeasible for the QP
    qp = empc.condense(empc.double_integrator(N))
    lo, hi = f.domain.bbox()
    Y = rng.uniform(lo - 1, hi + 1, (300, 2))
    out = Y[~f.domain.contains_many(Y, tol=1e-6) & qp.X.contains_many(Y)]
    for y in out[:50]:
        with pytest.raises(empc.QpInfeasible):
            empc.solve_qp(qp.H, qp.F @ y, qp.G, qp.w + qp.S @ y)


def test_region_for_active_set_singular_returns_none():
    qp = empc.condense(empc.double_integrator(1))
    # the two input-bound rows u <= 1 and -u <= 1 cannot be active together
    assert empc.region_for_active_set(qp, [0, 1]) is None


def test_explosion_cap():
    qp = empc.condense(empc.double_integrator(3))
    with pytest.raises(empc.ExplosionCap):
        empc.explore(qp, cap=3)
