"""Explicit MPC for a linear system with polyhedral constraints.

Pipeline: DARE terminal weight, LQR invariant terminal set, condensed
parametric QP, then critical-region exploration by facet crossing. The
default problem data is the double integrator benchmark
(``double_integrator``).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import geom, lp
from .geom import Polyhedron
from .pwa import AffinePiece, PwaFunction, domain_from_regions, validate

log = logging.getLogger(__name__)


class NoConvergence(RuntimeError):
    pass


class ExplosionCap(RuntimeError):
    pass


class QpInfeasible(RuntimeError):
    pass


class ValidationFailed(RuntimeError):
    pass


@dataclass
class MpcSpec:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: int
    X: Polyhedron
    U: Polyhedron
    P: np.ndarray | None = None
    T: Polyhedron | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.asarray(self.B, dtype=float).reshape(self.A.shape[0], -1)
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.N}")
        self.N = int(self.N)
        if np.linalg.eigvalsh((self.Q + self.Q.T) / 2).min() < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh((self.R + self.R.T) / 2).min() <= 0:
            raise ValueError("R must be positive definite")
        for name in ("X", "U"):
            S = getattr(self, name)
            if not S.is_bounded() or not S.contains(np.zeros(S.n), tol=-1e-9):
                raise ValueError(f"{name} must be bounded with the origin in its interior")
        if self.P is None:
            self.P = dare(self.A, self.B, self.Q, self.R)
        if self.T is None:
            self.T = lqr_invariant_set(self.A, self.B, self.lqr_gain, self.X, self.U)

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    @property
    def lqr_gain(self) -> np.ndarray:
        """``K`` with ``u = K x`` (sign included)."""
        A, B, R, P = self.A, self.B, self.R, self.P
        return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def double_integrator(N: int, **overrides) -> MpcSpec:
    """The benchmark system: x+ = [[1,1],[0,1]] x + [0.5,1] u, |x1|<=25,
    |x2|<=5, |u|<=1, Q = I, R = 1."""
    data = dict(
        A=np.array([[1.0, 1.0], [0.0, 1.0]]),
        B=np.array([[0.5], [1.0]]),
        Q=np.eye(2),
        R=np.eye(1),
        X=Polyhedron.box([-25.0, -5.0], [25.0, 5.0]),
        U=Polyhedron.box([-1.0], [1.0]),
    )
    data.update(overrides)
    return MpcSpec(N=N, **data)


def dare(A, B, Q, R, tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    """Stabilizing DARE solution by fixed-point Riccati iteration from ``P = Q``."""
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        P_new = A.T @ P @ A - (A.T @ P @ B) @ np.linalg.solve(R + BtP @ B, BtP @ A) + Q
        P_new = (P_new + P_new.T) / 2
        if np.abs(P_new - P).max() <= tol:
            return P_new
        P = P_new
    raise NoConvergence(f"Riccati iteration did not converge in {max_iter} steps")


def lqr_invariant_set(A, B, K, X: Polyhedron, U: Polyhedron, max_iter: int = 500) -> Polyhedron:
    """Maximal constraint-admissible invariant set of ``x+ = (A + B K) x``
    under ``x in X`` and ``K x in U``."""
    A = np.atleast_2d(A)
    Acl = A + np.atleast_2d(B) @ np.atleast_2d(K)
    C = np.vstack([X.V, U.V @ K])
    d = np.concatenate([X.w, U.w])
    O = geom.remove_redundant(Polyhedron(C, d))
    Ak = np.eye(A.shape[0])
    for _ in range(max_iter):
        Ak = Acl @ Ak
        J = C @ Ak
        new = [i for i in range(J.shape[0]) if geom.support(O, J[i]) > d[i] + 1e-9]
        if not new:
            return O
        O = geom.remove_redundant(Polyhedron(np.vstack([O.V, J[new]]),
                                             np.concatenate([O.w, d[new]])))
    raise NoConvergence(f"invariant set iteration did not converge in {max_iter} steps")


@dataclass
class CondensedQp:
    """``min_u 1/2 u'Hu + x'F'u  s.t.  G u <= w + S x`` for parameter ``x in X``."""

    H: np.ndarray
    F: np.ndarray
    G: np.ndarray
    w: np.ndarray
    S: np.ndarray
    X: Polyhedron
    nu: int = 1

    @property
    def n_u(self) -> int:
        return self.H.shape[0]


def condense(spec: MpcSpec) -> CondensedQp:
    A, B, N = spec.A, spec.B, spec.N
    nx, nu = spec.nx, spec.nu
    # x_k = Phi_k x + Gam_k u, k = 0..N
    Phi = [np.eye(nx)]
    Gam = [np.zeros((nx, N * nu))]
    for k in range(N):
        Phi.append(A @ Phi[-1])
        g = A @ Gam[-1]
        g[:, k * nu:(k + 1) * nu] += B
        Gam.append(g)
    H = np.kron(np.eye(N), spec.R)
    F = np.zeros((N * nu, nx))
    for k in range(1, N + 1):
        W = spec.P if k == N else spec.Q
        H += Gam[k].T @ W @ Gam[k]
        F += Gam[k].T @ W @ Phi[k]
    H = (H + H.T) / 2

    Gs, ws, Ss = [], [], []
    for k in range(N):
        E = np.zeros((spec.U.m, N * nu))
        E[:, k * nu:(k + 1) * nu] = spec.U.V
        Gs.append(E)
        ws.append(spec.U.w)
        Ss.append(np.zeros((spec.U.m, nx)))
    for k in range(1, N):
        Gs.append(spec.X.V @ Gam[k])
        ws.append(spec.X.w)
        Ss.append(-spec.X.V @ Phi[k])
    Gs.append(spec.T.V @ Gam[N])
    ws.append(spec.T.w)
    Ss.append(-spec.T.V @ Phi[N])
    return CondensedQp(H, F, np.vstack(Gs), np.concatenate(ws), np.vstack(Ss), spec.X, nu)


# -- QP at a fixed parameter ------------------------------------------------

def solve_qp(H, q, G, h, tol: float = 1e-10, max_iter: int = 500):
    """Primal active-set method for ``min 1/2 u'Hu + q'u  s.t.  G u <= h``.

    Returns ``(u, working_set, multipliers)``; the working set is linearly
    independent by construction. Raises :class:`QpInfeasible`.
    """
    n = H.shape[0]
    start = lp.solve(lp.LinearProgram(np.zeros(n), G, h))
    if not start.optimal:
        raise QpInfeasible("no feasible input sequence")
    u = start.x
    # step from the LP vertex toward the unconstrained minimizer while feasible
    W: list[int] = []
    scale = 1.0 + np.abs(h).max()
    for _ in range(max_iter):
        g = H @ u + q
        k = len(W)
        if k:
            GW = G[W]
            K = np.block([[H, GW.T], [GW, np.zeros((k, k))]])
            sol = np.linalg.solve(K, np.concatenate([-g, np.zeros(k)]))
            p, lam = sol[:n], sol[n:]
        else:
            p = np.linalg.solve(H, -g)
            lam = np.zeros(0)
        if np.abs(p).max() <= tol * (1.0 + np.abs(u).max()):
            if k == 0 or lam.min() >= -tol:
                return u, list(W), lam
            W.pop(int(np.argmin(lam)))
            continue
        Gp = G @ p
        slack = h - G @ u
        alpha = 1.0
        block = -1
        mask = Gp > tol
        mask[W] = False
        if mask.any():
            idx = np.flatnonzero(mask)
            ratios = np.maximum(slack[idx], 0.0) / Gp[idx]
            j = int(np.argmin(ratios))
            if ratios[j] < 1.0:
                alpha = ratios[j]
                block = int(idx[j])
        u = u + alpha * p
        if block >= 0:
            W.append(block)
    raise NoConvergence("active-set QP did not converge")


@dataclass
class CriticalRegion:
    active_set: tuple
    region: Polyhedron
    u0_law: AffinePiece
    u_gain: np.ndarray = field(repr=False, default=None)
    u_offset: np.ndarray = field(repr=False, default=None)


def region_for_active_set(qp: CondensedQp, W) -> CriticalRegion | None:
    """Critical region and affine optimizer for working set ``W``
    (``None`` if the KKT block is singular)."""
    W = sorted(W)
    Hinv = np.linalg.inv(qp.H)
    nx = qp.F.shape[1]
    if W:
        GW = qp.G[W]
        M = GW @ Hinv @ GW.T
        if np.linalg.cond(M) > 1e12:
            return None
        Minv = np.linalg.inv(M)
        lam_gain = -Minv @ (qp.S[W] + GW @ Hinv @ qp.F)
        lam_off = -Minv @ qp.w[W]
        u_gain = -Hinv @ (qp.F + GW.T @ lam_gain)
        u_off = -Hinv @ (GW.T @ lam_off)
    else:
        lam_gain = np.zeros((0, nx))
        lam_off = np.zeros(0)
        u_gain = -Hinv @ qp.F
        u_off = np.zeros(qp.n_u)
    inactive = np.setdiff1d(np.arange(qp.G.shape[0]), W)
    Gi = qp.G[inactive]
    rows = [Gi @ u_gain - qp.S[inactive], -lam_gain, qp.X.V]
    rhs = [qp.w[inactive] - Gi @ u_off, lam_off, qp.X.w]
    P = Polyhedron(np.vstack(rows), np.concatenate(rhs))
    law = AffinePiece(u_gain[:qp.nu].ravel(), float(u_off[0])) if qp.nu == 1 else None
    return CriticalRegion(tuple(W), P, law, u_gain, u_off)


def explore(qp: CondensedQp, X0: Polyhedron | None = None, step: float = 1e-6,
            jitter: float = 1e-8, retries: int = 10, cap: int = 100_000,
            seed: int = 0) -> list[CriticalRegion]:
    """Critical regions covering the feasible parameter set, by facet crossing."""
    X0 = qp.X if X0 is None else X0
    rng = np.random.default_rng(seed)
    regions: list[CriticalRegion] = []
    seen: set[tuple] = set()

    def locate(x):
        for cr in regions:
            if cr.region.contains(x, tol=0.0):
                return cr
        return None

    def region_at(x):
        try:
            _, W, _ = solve_qp(qp.H, qp.F @ x, qp.G, qp.w + qp.S @ x)
        except QpInfeasible:
            return None, "infeasible"
        key = tuple(sorted(W))
        if key in seen:
            return None, "seen"
        cr = region_for_active_set(qp, key)
        if cr is None or not geom.is_full_dim(cr.region):
            return None, "degenerate"
        return cr, "ok"

    start = lp.solve(lp.LinearProgram(np.zeros(X0.n), X0.V, X0.w))
    if not start.optimal:
        raise ValueError("empty parameter set")
    seeds = deque([np.zeros(X0.n) if X0.contains(np.zeros(X0.n)) else start.x])
    while seeds:
        x = seeds.popleft()
        if locate(x) is not None:
            continue
        cr, why = region_at(x)
        tries = 0
        while why == "degenerate" and tries < retries:
            tries += 1
            xj = x + jitter * rng.standard_normal(x.size)
            if not X0.contains(xj, tol=0.0):
                continue
            cr, why = region_at(xj)
        if cr is None:
            if why == "degenerate":
                log.warning("skipping degenerate crossing point %s", x)
            continue
        P = geom.remove_redundant(cr.region)
        cr.region = P
        seen.add(cr.active_set)
        regions.append(cr)
        if len(regions) > cap:
            raise ExplosionCap(f"more than {cap} critical regions")
        for r in range(P.m):
            xc, rad = geom.facet_center(P, r)
            if rad < geom.EPS_DIM:
                continue
            xn = xc + step * P.V[r]
            if X0.contains(xn, tol=0.0):
                seeds.append(xn)
    return regions


def make_pwa(regions: list[CriticalRegion], domain: Polyhedron | None = None,
             check: bool = True, n_samples: int = 2000) -> PwaFunction:
    """First-input control law as a :class:`PwaFunction` over the regions.

    The feasible set is convex, so by default the domain is rebuilt from the
    region facets that face no other region. With ``check`` the result must
    pass :func:`pwa.validate` (continuity, disjointness, sampled coverage).
    """
    cells = [cr.region for cr in regions]
    if domain is None:
        domain = domain_from_regions(cells)
    f = PwaFunction([cr.u0_law for cr in regions], cells, domain)
    if check:
        rep = validate(f, n_samples=n_samples)
        if not rep.ok:
            raise ValidationFailed(rep.summary())
    return f


def generate(spec: MpcSpec, **kw) -> PwaFunction:
    qp = condense(spec)
    regions = explore(qp, **kw)
    return make_pwa(regions)
