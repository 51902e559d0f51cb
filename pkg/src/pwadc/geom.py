"""Polyhedral geometry on H-representations.

All emptiness and dimension predicates are decided with LPs (Chebyshev balls,
support functions); no vertex enumeration is involved.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import lp
from .config import EPS_DIM, EPS_GEO


class EmptyInput(ValueError):
    pass


class UnboundedDomain(ValueError):
    pass


class CellExplosion(RuntimeError):
    pass


class Polyhedron:
    """The set ``{x | V x <= w}``.

    Rows are scaled to unit norm on construction, which leaves the set
    unchanged and lets every tolerance act as a Euclidean distance.
    Chebyshev center/radius and the bounding box are computed lazily and
    cached; the cache is guarded by a lock so instances can be shared across
    threads.
    """

    __slots__ = ("V", "w", "_cheb", "_bbox", "_lock")

    def __init__(self, V, w):
        V = np.atleast_2d(np.asarray(V, dtype=float))
        w = np.asarray(w, dtype=float).ravel()
        if V.shape[0] != w.size:
            raise ValueError(f"V has {V.shape[0]} rows but w has {w.size} entries")
        if V.shape[0] == 0:
            raise ValueError("a polyhedron needs at least one row")
        if not (np.isfinite(V).all() and np.isfinite(w).all()):
            raise ValueError("non-finite polyhedron data")
        norms = np.linalg.norm(V, axis=1)
        zero = norms < 1e-14
        if zero.any():
            if (w[zero] < 0).any():
                # keep an explicit infeasible row pair so the set stays empty
                n = V.shape[1]
                V = np.vstack([np.eye(1, n), -np.eye(1, n)])
                w = np.array([-1.0, -1.0])
                norms = np.ones(2)
            else:
                keep = ~zero
                if not keep.any():
                    raise ValueError("all rows are zero")
                V, w, norms = V[keep], w[keep], norms[keep]
        # rows already unit to rounding are kept bit-for-bit (stable JSON round trips)
        norms = np.where(np.abs(norms - 1.0) <= 1e-15, 1.0, norms)
        self.V = V / norms[:, None]
        self.w = w / norms
        self.V.flags.writeable = False
        self.w.flags.writeable = False
        self._cheb = None
        self._bbox = None
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.V.shape[1]

    @property
    def m(self) -> int:
        return self.V.shape[0]

    def __repr__(self):
        return f"Polyhedron(n={self.n}, m={self.m})"

    @classmethod
    def box(cls, lo, hi) -> "Polyhedron":
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        n = lo.size
        I = np.eye(n)
        return cls(np.vstack([I, -I]), np.concatenate([hi, -lo]))

    def chebyshev(self) -> tuple[np.ndarray, float]:
        with self._lock:
            if self._cheb is None:
                self._cheb = lp.chebyshev(self.V, self.w)
            return self._cheb

    @property
    def center(self) -> np.ndarray:
        return self.chebyshev()[0]

    @property
    def radius(self) -> float:
        return self.chebyshev()[1]

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box via 2n support LPs (``inf`` if unbounded)."""
        with self._lock:
            if self._bbox is None:
                lo = np.empty(self.n)
                hi = np.empty(self.n)
                for k in range(self.n):
                    e = np.zeros(self.n)
                    e[k] = 1.0
                    hi[k] = support(self, e)
                    lo[k] = -support(self, -e)
                self._bbox = (lo, hi)
            return self._bbox

    def is_bounded(self) -> bool:
        lo, hi = self.bbox()
        return bool(np.isfinite(lo).all() and np.isfinite(hi).all())

    def contains(self, x, tol: float = EPS_GEO) -> bool:
        return bool((self.V @ np.asarray(x, dtype=float) <= self.w + tol).all())

    def contains_many(self, X, tol: float = EPS_GEO) -> np.ndarray:
        """Boolean mask over the rows of ``X``."""
        return (np.asarray(X) @ self.V.T <= self.w + tol).all(axis=1)

    def to_json(self) -> dict:
        return {"V": self.V.tolist(), "w": self.w.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Polyhedron":
        return cls(data["V"], data["w"])


def support(P: Polyhedron, d) -> float:
    """``max d^T x`` over ``P``; ``inf`` when unbounded, ``-inf`` when empty."""
    d = np.asarray(d, dtype=float)
    res = lp.solve(lp.LinearProgram(-d, P.V, P.w), x0=_known_point(P))
    if res.status is lp.Status.UNBOUNDED:
        return math.inf
    if res.status is lp.Status.INFEASIBLE:
        return -math.inf
    return -res.objective


def _known_point(P: Polyhedron):
    """Cached Chebyshev center if it is already known to lie in ``P``."""
    cheb = P._cheb
    if cheb is not None and cheb[1] >= 0 and np.isfinite(cheb[1]):
        return cheb[0]
    return None


@dataclass(frozen=True)
class Hyperplane:
    """``{x | normal^T x = offset}`` in canonical form.

    Canonical means unit normal whose first entry with magnitude above
    ``EPS_GEO`` is positive.
    """

    normal: tuple
    offset: float

    @classmethod
    def make(cls, normal, offset) -> "Hyperplane":
        normal = np.asarray(normal, dtype=float).ravel()
        nrm = np.linalg.norm(normal)
        if nrm < 1e-14:
            raise ValueError("degenerate hyperplane normal")
        normal = normal / nrm
        offset = float(offset) / nrm
        lead = np.flatnonzero(np.abs(normal) > EPS_GEO)[0]
        if normal[lead] < 0:
            normal, offset = -normal, -offset
        return cls(tuple(normal.tolist()), offset)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.normal)

    def same_as(self, other: "Hyperplane", tol: float = EPS_GEO) -> bool:
        return (np.abs(self.vec - other.vec).max() <= tol
                and abs(self.offset - other.offset) <= tol)

    def to_json(self) -> dict:
        return {"normal": list(self.normal), "offset": self.offset}


def dedup_hyperplanes(hps, tol: float = EPS_GEO) -> list[Hyperplane]:
    """Drop hyperplanes equal (componentwise within ``tol``) to an earlier one."""
    hps = list(hps)
    if not hps:
        return []
    M = np.array([list(h.normal) + [h.offset] for h in hps])
    keep = []
    kept_rows = np.empty((0, M.shape[1]))
    for i, row in enumerate(M):
        if kept_rows.shape[0] and (np.abs(kept_rows - row).max(axis=1) <= tol).any():
            continue
        keep.append(i)
        kept_rows = np.vstack([kept_rows, row])
    return [hps[i] for i in keep]


# -- predicates and constructions --------------------------------------------

def is_full_dim(P: Polyhedron, eps_dim: float = EPS_DIM) -> bool:
    return P.radius >= eps_dim


def is_empty(P: Polyhedron, tol: float = EPS_GEO) -> bool:
    return P.radius < -tol


def intersect(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    if P.n != Q.n:
        raise ValueError(f"dimension mismatch: {P.n} vs {Q.n}")
    R = Polyhedron(np.vstack([P.V, Q.V]), np.concatenate([P.w, Q.w]))
    if is_empty(R):
        return R
    return remove_redundant(R)


def _dedup_rows(V, w, tol=1e-12):
    M = np.hstack([V, w[:, None]])
    _, idx = np.unique(np.round(M / tol) * tol, axis=0, return_index=True)
    idx.sort()
    return V[idx], w[idx]


def remove_redundant(P: Polyhedron, tol: float = EPS_GEO) -> Polyhedron:
    """Drop every row whose removal leaves the set unchanged.

    A row is kept outright when a ray from the Chebyshev center along its
    normal exits through that row first (a certificate of irredundancy);
    otherwise an LP maximizes the row over the remaining rows.
    """
    if is_empty(P):
        raise EmptyInput("remove_redundant needs a nonempty polyhedron")
    V, w = _dedup_rows(P.V, P.w)
    c, r = P.chebyshev()
    m = V.shape[0]
    keep = np.ones(m, dtype=bool)
    slack = w - V @ c
    G = V @ V.T
    for i in range(m):
        if r > tol:
            # ray c + t V_i hits row k at t_k = slack_k / (V_k . V_i)
            others = keep.copy()
            others[i] = False
            dots = G[i, others]
            pos = dots > 1e-12
            t_other = (slack[others][pos] / dots[pos]).min(initial=math.inf)
            if slack[i] < t_other - tol:
                continue
        others = keep.copy()
        others[i] = False
        if not others.any():
            continue
        A = np.vstack([V[others], V[i]])
        b = np.concatenate([w[others], [w[i] + 1.0]])
        res = lp.solve(lp.LinearProgram(-V[i], A, b), x0=c if r >= 0 else None)
        if res.optimal and -res.objective <= w[i] + tol:
            keep[i] = False
    out = Polyhedron(V[keep], w[keep])
    with out._lock:
        out._cheb = (c, r)
    return out


def _implicit_equalities(R: Polyhedron, tol: float) -> np.ndarray:
    """Rows of ``R`` whose slack cannot exceed ``tol`` anywhere on ``R``."""
    c, _ = R.chebyshev()
    slack = R.w - R.V @ c
    eq = np.zeros(R.m, dtype=bool)
    for i in np.flatnonzero(slack <= tol):
        # max slack_i = w_i - min V_i x
        res = lp.solve(lp.LinearProgram(R.V[i], R.V, R.w + tol))
        if res.optimal and R.w[i] - res.objective <= 2 * tol:
            eq[i] = True
    return eq


def shared_facet_rows(P: Polyhedron, Q: Polyhedron, tol: float = EPS_GEO):
    """Index pairs ``(p, q)`` where row ``p`` of ``P`` is row ``q`` of ``Q`` reversed."""
    G = P.V @ Q.V.T
    S = P.w[:, None] + Q.w[None, :]
    return [tuple(pq) for pq in np.argwhere((G <= -1 + tol) & (np.abs(S) <= 10 * tol))]


def _face_radius(R: Polyhedron, e, off, skip, tol: float = EPS_GEO) -> float:
    """Chebyshev radius of ``R ∩ {e^T x = off}`` inside that hyperplane.

    Rows in ``skip`` are parallel to ``e``; they are constant on the
    hyperplane, so they either hold there or make the face empty.
    """
    skip = np.asarray(skip, dtype=int)
    x0 = e * off
    if skip.size and (R.V[skip] @ x0 > R.w[skip] + tol).any():
        return -math.inf
    rest = np.ones(R.m, dtype=bool)
    rest[skip] = False
    if R.n == 1:
        return math.inf if (R.V[rest] @ x0 <= R.w[rest] + tol).all() else -math.inf
    if not rest.any():
        return math.inf
    _, _, Vt = np.linalg.svd(e[None, :])
    N = Vt[1:].T
    _, r = lp.chebyshev(R.V[rest] @ N, R.w[rest] - R.V[rest] @ x0)
    return r


def facet_dim_check(P: Polyhedron, Q: Polyhedron, eps_geo: float = EPS_GEO,
                    eps_dim: float = EPS_DIM) -> bool:
    """True iff ``P ∩ Q`` has affine dimension exactly ``n - 1``.

    If a row of ``P`` is a reversed row of ``Q`` the intersection lies in
    that hyperplane and only its radius inside the hyperplane is needed;
    otherwise :func:`facet_dim_generic` decides.
    """
    if P.n != Q.n:
        raise ValueError("dimension mismatch")
    shared = shared_facet_rows(P, Q, eps_geo)
    if not shared:
        return facet_dim_generic(P, Q, eps_geo, eps_dim)
    R = Polyhedron(np.vstack([P.V, Q.V]), np.concatenate([P.w, Q.w]))
    p, _ = shared[0]
    # rows equal to +-V_p are the equality itself; everything else bounds the face
    par = np.flatnonzero(np.abs(np.abs(R.V @ P.V[p]) - 1.0) <= eps_geo)
    return _face_radius(R, P.V[p], P.w[p], par) >= eps_dim


def facet_dim_generic(P: Polyhedron, Q: Polyhedron, eps_geo: float = EPS_GEO,
                      eps_dim: float = EPS_DIM) -> bool:
    """Dimension test from implicit equalities found by per-row slack LPs,
    then a Chebyshev test inside the single equality hyperplane."""
    R = Polyhedron(np.vstack([P.V, Q.V]), np.concatenate([P.w, Q.w]))
    _, r = R.chebyshev()
    if r >= eps_dim or r < -eps_geo:
        return False
    eq = _implicit_equalities(R, eps_geo)
    if not eq.any():
        return False
    E = R.V[eq]
    s = np.linalg.svd(E, compute_uv=False)
    if int((s > 1e-6).sum()) != 1:
        return False
    e = E[0]
    par = np.flatnonzero(np.abs(np.abs(R.V @ e) - 1.0) <= eps_geo)
    return _face_radius(R, e, R.w[eq][0], par) >= eps_dim


def split_by(P: Polyhedron, H: Hyperplane, eps_dim: float = EPS_DIM):
    """Split ``P`` into ``(P ∩ {h·x <= o}, P ∩ {h·x >= o})``.

    A side is ``None`` unless full-dimensional; if the hyperplane misses the
    interior of ``P`` the surviving side is ``P`` itself.
    """
    h = H.vec
    o = H.offset
    lo, hi = P.bbox()
    # support of h over the box
    smin = np.where(h > 0, h * lo, h * hi).sum()
    smax = np.where(h > 0, h * hi, h * lo).sum()
    if smax <= o + eps_dim:
        return P, None
    if smin >= o - eps_dim:
        return None, P
    below = Polyhedron(np.vstack([P.V, h]), np.append(P.w, o))
    above = Polyhedron(np.vstack([P.V, -h]), np.append(P.w, -o))
    below_ok = is_full_dim(below, eps_dim)
    above_ok = is_full_dim(above, eps_dim)
    if below_ok and above_ok:
        return remove_redundant(below), remove_redundant(above)
    if below_ok:
        return P, None
    if above_ok:
        return None, P
    # P itself is thinner than eps_dim; keep it on the side of its center
    return (P, None) if h @ P.center <= o else (None, P)


def arrangement(F: Polyhedron, hyperplanes, cap: int = 100_000,
                eps_dim: float = EPS_DIM) -> list[Polyhedron]:
    """Full-dimensional cells of the arrangement of ``hyperplanes`` inside ``F``.

    Built by incremental splitting; the per-cell bounding boxes prune cells a
    hyperplane cannot reach before any LP is solved.
    """
    if not F.is_bounded():
        raise UnboundedDomain("the arrangement domain must be bounded")
    if not is_full_dim(F, eps_dim):
        raise ValueError("the arrangement domain must be full-dimensional")
    F = remove_redundant(F)
    cells = [F]
    boxes_lo = [F.bbox()[0]]
    boxes_hi = [F.bbox()[1]]
    for H in hyperplanes:
        h = H.vec
        L = np.array(boxes_lo)
        U = np.array(boxes_hi)
        smin = np.where(h > 0, L * h, U * h).sum(axis=1)
        smax = np.where(h > 0, U * h, L * h).sum(axis=1)
        cand = np.flatnonzero((smin < H.offset - eps_dim) & (smax > H.offset + eps_dim))
        new_cells = []
        for idx in cand:
            below, above = split_by(cells[idx], H, eps_dim)
            if below is not None and above is not None:
                cells[idx] = below
                boxes_lo[idx], boxes_hi[idx] = below.bbox()
                new_cells.append(above)
        for c in new_cells:
            cells.append(c)
            lo, hi = c.bbox()
            boxes_lo.append(lo)
            boxes_hi.append(hi)
        if len(cells) > cap:
            raise CellExplosion(f"arrangement exceeded {cap} cells")
    return cells


def sample_uniform(P: Polyhedron, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` uniform samples from bounded ``P`` by rejection from its bounding box."""
    lo, hi = P.bbox()
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise UnboundedDomain("cannot sample an unbounded polyhedron")
    out = []
    got = 0
    while got < k:
        X = rng.uniform(lo, hi, size=(max(2 * (k - got), 64), P.n))
        X = X[P.contains_many(X, tol=0.0)]
        out.append(X)
        got += X.shape[0]
    return np.vstack(out)[:k]


def sample_interior(P: Polyhedron, k: int, rng: np.random.Generator,
                    margin: float = 1e-9) -> np.ndarray:
    """Uniform samples strictly inside ``P`` (slack above ``margin`` on every row)."""
    lo, hi = P.bbox()
    out = []
    got = 0
    tries = 0
    while got < k:
        X = rng.uniform(lo, hi, size=(max(4 * (k - got), 64), P.n))
        X = X[(X @ P.V.T < P.w - margin).all(axis=1)]
        out.append(X)
        got += X.shape[0]
        tries += 1
        if tries > 1000:
            raise RuntimeError("interior sampling failed; polyhedron too thin")
    return np.vstack(out)[:k]


def facet_center(P: Polyhedron, row: int) -> tuple[np.ndarray, float]:
    """Chebyshev center and radius of the face ``P ∩ {V_row x = w_row}``,
    measured inside that hyperplane."""
    e = P.V[row]
    x0 = e * P.w[row]
    rest = np.ones(P.m, dtype=bool)
    rest[row] = False
    if P.n == 1:
        ok = (P.V[rest] @ x0 <= P.w[rest] + EPS_GEO).all()
        return x0, (math.inf if ok else -math.inf)
    _, _, Vt = np.linalg.svd(e[None, :])
    N = Vt[1:].T
    if not rest.any():
        return x0, math.inf
    z, r = lp.chebyshev(P.V[rest] @ N, P.w[rest] - P.V[rest] @ x0)
    return x0 + N @ z, r
