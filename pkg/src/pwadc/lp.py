"""Dense linear programming kernel.

``solve`` runs a two-phase tableau simplex (Dantzig pricing, switching to
Bland's rule once the objective stalls) on small dense problems. Large or
sparse problems, such as the Farkas systems built by
:mod:`pwadc.decomp_opt`, go to HiGHS through :func:`scipy.optimize.linprog`.
Both backends return the same :class:`LpResult`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .config import EPS_FEAS

# below this pivot magnitude a column entry is treated as zero
_PIV_TOL = 1e-9
# reduced-cost optimality tolerance
_RC_TOL = 1e-10
# consecutive non-improving pivots before falling back to Bland's rule
_STALL_LIMIT = 30


class NumericalFailure(RuntimeError):
    """Iteration cap hit or the solver lost feasibility."""


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgram:
    """min cost @ x  s.t.  A_ub x <= b_ub,  A_eq x == b_eq,  lo <= x <= hi.

    ``bounds`` is a list of ``(lo, hi)`` pairs, ``None`` meaning unbounded;
    when omitted every variable is free. ``A_ub``/``A_eq`` may be scipy
    sparse matrices, in which case only the HiGHS backend is used.
    """

    cost: np.ndarray
    A_ub: np.ndarray | sp.spmatrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | sp.spmatrix | None = None
    b_eq: np.ndarray | None = None
    bounds: list[tuple[float | None, float | None]] | None = None

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float).ravel()
        nv = self.cost.size
        self.A_ub, self.b_ub = _normalize_block(self.A_ub, self.b_ub, nv, "ub")
        self.A_eq, self.b_eq = _normalize_block(self.A_eq, self.b_eq, nv, "eq")
        if self.bounds is None:
            self.bounds = [(None, None)] * nv
        if len(self.bounds) != nv:
            raise ValueError("bounds length does not match the number of variables")
        if np.isnan(self.cost).any() or np.isnan(self.b_ub).any() or np.isnan(self.b_eq).any():
            raise ValueError("NaN in linear program data")

    @property
    def nv(self) -> int:
        return self.cost.size

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.A_ub) or sp.issparse(self.A_eq)


def _normalize_block(A, b, nv, name):
    if A is None:
        return np.zeros((0, nv)), np.zeros(0)
    if not sp.issparse(A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            A = A.reshape(0, nv)
        if np.isnan(A).any():
            raise ValueError(f"NaN in A_{name}")
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != nv or A.shape[0] != b.size:
        raise ValueError(f"A_{name} has shape {A.shape}, expected ({b.size}, {nv})")
    return A, b


@dataclass
class LpResult:
    status: Status
    x: np.ndarray | None = None
    objective: float = math.nan
    iterations: int = 0
    backend: str = "simplex"

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Counter:
    calls: int = 0
    by_backend: dict = field(default_factory=dict)


# process-wide tally, read by the decomposition routines for their stats
counter = _Counter()


def solve(lp: LinearProgram, *, backend: str = "auto", max_iter: int | None = None,
          eps_feas: float = EPS_FEAS, x0=None) -> LpResult:
    """Solve ``lp``; ``backend`` is ``"simplex"``, ``"highs"`` or ``"auto"``.

    ``x0`` is an optional point known to satisfy the constraints. The
    simplex backend solves in coordinates centred on it, so the slack basis
    is feasible and phase 1 is skipped.
    """
    if backend == "auto":
        big = lp.nv + lp.A_ub.shape[0] + lp.A_eq.shape[0] > 400
        backend = "highs" if (lp.is_sparse or big) else "simplex"
    counter.calls += 1
    counter.by_backend[backend] = counter.by_backend.get(backend, 0) + 1
    if backend == "highs":
        return _solve_highs(lp)
    if backend != "simplex":
        raise ValueError(f"unknown backend {backend!r}")
    if lp.is_sparse:
        raise ValueError("the dense simplex backend does not accept sparse matrices")
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        bounds = [(None if lo is None else lo - x0[j], None if hi is None else hi - x0[j])
                  for j, (lo, hi) in enumerate(lp.bounds)]
        shifted = LinearProgram(lp.cost, lp.A_ub, lp.b_ub - lp.A_ub @ x0,
                                lp.A_eq, lp.b_eq - lp.A_eq @ x0, bounds)
        res = _solve_simplex(shifted, max_iter, eps_feas)
        if res.optimal:
            res.x = res.x + x0
            res.objective = float(lp.cost @ res.x)
        return res
    return _solve_simplex(lp, max_iter, eps_feas)


def _solve_highs(lp: LinearProgram) -> LpResult:
    kw = {}
    if lp.A_ub.shape[0]:
        kw.update(A_ub=lp.A_ub, b_ub=lp.b_ub)
    if lp.A_eq.shape[0]:
        kw.update(A_eq=lp.A_eq, b_eq=lp.b_eq)
    res = linprog(lp.cost, bounds=lp.bounds, method="highs", **kw)
    if res.status == 0:
        return LpResult(Status.OPTIMAL, np.asarray(res.x), float(res.fun), res.nit, "highs")
    if res.status == 2:
        return LpResult(Status.INFEASIBLE, backend="highs")
    if res.status == 3:
        return LpResult(Status.UNBOUNDED, backend="highs")
    raise NumericalFailure(f"HiGHS failed: {res.message}")


# -- dense two-phase simplex -------------------------------------------------

def _solve_simplex(lp: LinearProgram, max_iter: int | None, eps_feas: float) -> LpResult:
    nv = lp.nv
    # variable substitution into x >= 0 form: x_j = shift_j + sum(coef * y)
    cols = []          # per original variable: list of (std column, coefficient)
    shift = np.zeros(nv)
    extra_ub = []      # rows y_k <= u for doubly bounded variables
    ny = 0
    for j, (lo, hi) in enumerate(lp.bounds):
        lo = -math.inf if lo is None else float(lo)
        hi = math.inf if hi is None else float(hi)
        if lo > hi:
            return LpResult(Status.INFEASIBLE)
        if math.isfinite(lo):
            shift[j] = lo
            cols.append([(ny, 1.0)])
            if math.isfinite(hi):
                extra_ub.append((ny, hi - lo))
            ny += 1
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append([(ny, -1.0)])
            ny += 1
        else:
            cols.append([(ny, 1.0), (ny + 1, -1.0)])
            ny += 2

    M = np.zeros((nv, ny))
    for j, cj in enumerate(cols):
        for k, coef in cj:
            M[j, k] = coef

    A_ub = lp.A_ub @ M
    b_ub = lp.b_ub - lp.A_ub @ shift
    if extra_ub:
        E = np.zeros((len(extra_ub), ny))
        for r, (k, u) in enumerate(extra_ub):
            E[r, k] = 1.0
        A_ub = np.vstack([A_ub, E])
        b_ub = np.concatenate([b_ub, [u for _, u in extra_ub]])
    A_eq = lp.A_eq @ M
    b_eq = lp.b_eq - lp.A_eq @ shift
    c = lp.cost @ M
    const = float(lp.cost @ shift)

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    if max_iter is None:
        max_iter = 50 * (m + nv) + 50

    # standard form: [A_ub I; A_eq 0] [y; s] = b
    n_std = ny + m_ub
    A = np.zeros((m, n_std))
    A[:m_ub, :ny] = A_ub
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = A_eq
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, np.zeros(m_ub)])

    status, y, obj, it = _two_phase(A, b, cost, m_ub, ny, max_iter, eps_feas)
    if status is not Status.OPTIMAL:
        return LpResult(status, iterations=it)
    x = shift + M @ y[:ny]
    return LpResult(Status.OPTIMAL, x, float(lp.cost @ x), it)


def _two_phase(A, b, cost, m_ub, ny, max_iter, eps_feas):
    m, n = A.shape
    neg = b < 0
    A = A.copy()
    b = b.copy()
    A[neg] *= -1
    b[neg] *= -1
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))

    # slack columns serve as the starting basis where the row was not flipped
    basis = np.full(m, -1)
    for i in range(m_ub):
        if not neg[i]:
            basis[i] = ny + i
    need_art = np.flatnonzero(basis < 0)
    n_art = need_art.size

    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(need_art):
        T[i, n + k] = 1.0
        basis[i] = n + k
    iters = 0

    if n_art:
        # phase 1 objective: sum of artificials, expressed in nonbasic terms
        T[m, :] = 0.0
        T[m, n:n + n_art] = 1.0
        T[m] -= T[need_art].sum(axis=0)
        st, it = _iterate(T, basis, n + n_art, max_iter)
        iters += it
        if st is Status.UNBOUNDED:  # cannot happen for phase 1
            raise NumericalFailure("phase 1 reported unbounded")
        if -T[m, -1] > eps_feas * scale:
            return Status.INFEASIBLE, None, math.nan, iters
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n:
                row = np.abs(T[r, :n])
                j = int(np.argmax(row))
                if row[j] > _PIV_TOL:
                    _pivot(T, basis, r, j)
                else:
                    keep[r] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = basis[keep]
            m = basis.size
        T = np.hstack([T[:, :n], T[:, -1:]])

    # phase 2 objective row
    T[m, :] = 0.0
    T[m, :n] = cost
    for r in range(m):
        j = basis[r]
        if T[m, j] != 0.0:
            T[m] -= T[m, j] * T[r]
    st, it = _iterate(T, basis, n, max_iter - iters)
    iters += it
    if st is Status.UNBOUNDED:
        return st, None, math.nan, iters
    x = np.zeros(n)
    x[basis] = T[:m, -1]
    np.maximum(x, 0.0, out=x)
    return Status.OPTIMAL, x, float(cost @ x), iters


def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    colj = T[:, j].copy()
    colj[r] = 0.0
    T -= np.outer(colj, T[r])
    basis[r] = j


def _iterate(T, basis, n_cols, max_iter):
    m = T.shape[0] - 1
    bland = False
    stall = 0
    last_obj = T[m, -1]
    for it in range(max_iter):
        rc = T[m, :n_cols]
        if bland:
            cand = np.flatnonzero(rc < -_RC_TOL)
            if cand.size == 0:
                return Status.OPTIMAL, it
            j = int(cand[0])
        else:
            j = int(np.argmin(rc))
            if rc[j] >= -_RC_TOL:
                return Status.OPTIMAL, it
        col = T[:m, j]
        pos = col > _PIV_TOL
        if not pos.any():
            return Status.UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        _pivot(T, basis, r, j)
        # keep the basic solution nonnegative against round-off
        np.maximum(T[:m, -1], 0.0, out=T[:m, -1])
        obj = T[m, -1]
        if obj <= last_obj + 1e-13 * (1.0 + abs(last_obj)):
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
        last_obj = obj
    raise NumericalFailure(f"simplex iteration cap ({max_iter}) reached")


# -- Chebyshev ball -----------------------------------------------------------

def chebyshev(V, w, *, backend: str = "auto") -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside ``{x | V x <= w}``.

    A negative radius means the set is empty; a radius of ``inf`` means the
    set contains arbitrarily large balls. Zero rows are checked for
    consistency and dropped.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    w = np.asarray(w, dtype=float).ravel()
    n = V.shape[1]
    if V.shape[0] == 0:
        return np.zeros(n), math.inf
    norms = np.linalg.norm(V, axis=1)
    zero = norms < 1e-14
    if (w[zero] < 0).any():
        return np.full(n, np.nan), -math.inf
    V, w, norms = V[~zero], w[~zero], norms[~zero]
    if V.shape[0] == 0:
        return np.zeros(n), math.inf
    Vn = V / norms[:, None]
    wn = w / norms
    A = np.hstack([Vn, np.ones((Vn.shape[0], 1))])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = solve(LinearProgram(cost, A, wn), backend=backend)
    if res.status is Status.UNBOUNDED:
        res = solve(LinearProgram(cost, A, wn, bounds=[(None, None)] * n + [(None, 1.0)]),
                    backend=backend)
        return res.x[:n], math.inf
    if res.status is Status.INFEASIBLE:  # only possible through round-off
        return np.full(n, np.nan), -math.inf
    return res.x[:n], float(res.x[-1])
