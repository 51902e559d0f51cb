"""Convex decomposition on a fixed partition via a Farkas multiplier LP.

For every region ``i`` the unknowns are the pieces ``(k_i, c_i)`` of ``g`` and
``(l_i, d_i)`` of ``h`` with ``k_i - l_i = a_i`` and ``c_i - d_i = b_i``. For
every neighbour pair, nonnegative multipliers certify that piece ``i``
dominates piece ``j`` on region ``i`` and vice versa, for both ``g`` and
``h``. Feasibility depends on the partition being regular;
:func:`regularize_arrangement` refines a partition into the arrangement of
all its facet hyperplanes, which always is.

Two encodings of the same conditions are available. ``full_lp`` carries one
multiplier per region row in every block. ``reduced_lp`` keeps, per pair,
only the multiplier of the shared facet row: the two opposite dominance
conditions force the pieces to agree on the facet hyperplane, so a
certificate supported on that row exists whenever any certificate does.
The reduced LP is a fraction of the size; the full certificate is rebuilt
from its solution and checked by :meth:`FarkasSystem.residual`.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import geom, lp
from .decomp_folds import Decomposition
from .geom import Polyhedron
from .pwa import AffinePiece, PwaFunction, neighbor_pairs


class Objective(enum.Enum):
    FEASIBILITY = "FeasibilityOnly"
    L1 = "L1Coefficients"


class LabelNotFound(RuntimeError):
    pass


@dataclass
class Infeasible:
    """Typed outcome for a partition that admits no decomposition."""

    n_regions: int
    n_pairs: int
    reason: str = "partition is not regular"
    violation: float = float("nan")

    def __bool__(self):
        return False


def _csr(rows, cols, vals, shape):
    return sp.csr_matrix((np.asarray(vals, float), (np.asarray(rows, int), np.asarray(cols, int))),
                         shape=shape)


@dataclass
class FarkasSystem:
    f: PwaFunction
    pairs: list[tuple[int, int]]
    facet_rows: list[tuple[int, int] | None]   # shared row of region i, of region j

    @property
    def n_coef(self) -> int:
        """Coefficient variables ``k_i, c_i, l_i, d_i`` come first in both LPs."""
        return 2 * (self.f.n + 1) * self.f.s

    @property
    def n_split_rows(self) -> int:
        """Leading equality rows, ``a_i = k_i - l_i`` and ``b_i = c_i - d_i``."""
        return (self.f.n + 1) * self.f.s

    @property
    def reducible(self) -> bool:
        return all(fr is not None for fr in self.facet_rows)

    def _cols(self, i):
        n = self.f.n
        base = 2 * (n + 1) * i
        return base, base + n, base + n + 1, base + 2 * n + 1

    def _split_rows(self):
        n = self.f.n
        rows, cols, vals, rhs = [], [], [], []
        r = 0
        for i, p in enumerate(self.f.pieces):
            ko, co, lo_, do = self._cols(i)
            for t in range(n):
                rows += [r, r]
                cols += [ko + t, lo_ + t]
                vals += [1.0, -1.0]
                rhs.append(p.a[t])
                r += 1
            rows += [r, r]
            cols += [co, do]
            vals += [1.0, -1.0]
            rhs.append(p.b)
            r += 1
        return rows, cols, vals, rhs

    def full_lp(self) -> lp.LinearProgram:
        """Blocks ``V_src^T y = slope_dst - slope_src``, ``w_src^T y <= off_src - off_dst``,
        ``y >= 0`` for ``g`` and ``h`` and both orientations of every pair."""
        n = self.f.n
        eq_r, eq_c, eq_v, eq_b = self._split_rows()
        n_eq = len(eq_b)
        ub_r, ub_c, ub_v = [], [], []
        n_ub = 0
        col = self.n_coef
        for i, j in self.pairs:
            for src, dst in ((i, j), (j, i)):
                R = self.f.regions[src]
                m = R.m
                so, do_ = self._cols(src), self._cols(dst)
                for which in (0, 2):   # g block (k, c), h block (l, d)
                    ys = list(range(col, col + m))
                    for t in range(n):
                        eq_r += [n_eq] * (m + 2)
                        eq_c += ys + [do_[which] + t, so[which] + t]
                        eq_v += list(R.V[:, t]) + [-1.0, 1.0]
                        eq_b.append(0.0)
                        n_eq += 1
                    ub_r += [n_ub] * (m + 2)
                    ub_c += ys + [so[which + 1], do_[which + 1]]
                    ub_v += list(R.w) + [-1.0, 1.0]
                    n_ub += 1
                    col += m
        nv = col
        bounds = [(None, None)] * self.n_coef + [(0.0, None)] * (nv - self.n_coef)
        return lp.LinearProgram(np.zeros(nv), _csr(ub_r, ub_c, ub_v, (n_ub, nv)), np.zeros(n_ub),
                                _csr(eq_r, eq_c, eq_v, (n_eq, nv)), np.array(eq_b), bounds)

    def reduced_lp(self) -> lp.LinearProgram:
        """One multiplier per pair for ``g`` and one for ``h``, on the shared
        facet row ``v^T x <= o`` of region ``i``:
        ``slope_j - slope_i = alpha v`` and ``off_i - off_j = alpha o``."""
        if not self.reducible:
            raise ValueError("some pair has no shared facet row")
        n = self.f.n
        eq_r, eq_c, eq_v, eq_b = self._split_rows()
        r = len(eq_b)
        col = self.n_coef
        for (i, j), (p, _) in zip(self.pairs, self.facet_rows):
            v = self.f.regions[i].V[p]
            o = self.f.regions[i].w[p]
            ci, cj = self._cols(i), self._cols(j)
            for which in (0, 2):
                for t in range(n):
                    eq_r += [r, r, r]
                    eq_c += [cj[which] + t, ci[which] + t, col]
                    eq_v += [1.0, -1.0, -v[t]]
                    eq_b.append(0.0)
                    r += 1
                eq_r += [r, r, r]
                eq_c += [ci[which + 1], cj[which + 1], col]
                eq_v += [1.0, -1.0, -o]
                eq_b.append(0.0)
                r += 1
                col += 1
        nv = col
        bounds = [(None, None)] * self.n_coef + [(0.0, None)] * (nv - self.n_coef)
        return lp.LinearProgram(np.zeros(nv), None, None, _csr(eq_r, eq_c, eq_v, (r, nv)),
                                np.array(eq_b), bounds)

    def unpack(self, z):
        n, s = self.f.n, self.f.s
        blk = np.asarray(z[:self.n_coef]).reshape(s, 2 * (n + 1))
        return blk[:, :n], blk[:, n], blk[:, n + 1:2 * n + 1], blk[:, 2 * n + 1]

    def multipliers_from_reduced(self, z) -> list[dict]:
        """Full multiplier vectors ``lam_ij, mu_ij, lam_ji, mu_ji`` per pair."""
        tail = np.asarray(z[self.n_coef:])
        out = []
        for t, ((i, j), (p, q)) in enumerate(zip(self.pairs, self.facet_rows)):
            alpha, beta = max(tail[2 * t], 0.0), max(tail[2 * t + 1], 0.0)
            mi, mj = self.f.regions[i].m, self.f.regions[j].m
            M = {"lam_ij": np.zeros(mi), "mu_ij": np.zeros(mi),
                 "lam_ji": np.zeros(mj), "mu_ji": np.zeros(mj)}
            M["lam_ij"][p] = M["lam_ji"][q] = alpha
            M["mu_ij"][p] = M["mu_ji"][q] = beta
            out.append(M)
        return out

    def multipliers_from_full(self, z) -> list[dict]:
        z = np.asarray(z)
        col = self.n_coef
        out = []
        for i, j in self.pairs:
            M = {}
            for src, names in ((i, ("lam_ij", "mu_ij")), (j, ("lam_ji", "mu_ji"))):
                m = self.f.regions[src].m
                for name in names:
                    M[name] = z[col:col + m]
                    col += m
            out.append(M)
        return out

    def residual(self, k, c, l, d, mults: list[dict]) -> float:
        """Largest violation of the splitting equalities and of every Farkas
        block for the given coefficients and multipliers."""
        f = self.f
        A = np.array([p.a for p in f.pieces])
        b = np.array([p.b for p in f.pieces])
        worst = max(float(np.abs(k - l - A).max()), float(np.abs(c - d - b).max()))
        for (i, j), M in zip(self.pairs, mults):
            for src, dst, lam, mu in ((i, j, M["lam_ij"], M["mu_ij"]),
                                      (j, i, M["lam_ji"], M["mu_ji"])):
                R = f.regions[src]
                for y, slope, off in ((lam, k, c), (mu, l, d)):
                    worst = max(worst,
                                float(np.abs(R.V.T @ y - (slope[dst] - slope[src])).max()),
                                float(R.w @ y - (off[src] - off[dst])),
                                float(-y.min(initial=0.0)))
        return worst


def assemble(f: PwaFunction, I=None, irredundant: bool = False) -> FarkasSystem:
    """Neighbour pairs of ``f`` (or ``I``) with their shared facet rows.

    Pass ``irredundant=True`` when the region rows are already minimal.
    """
    pairs = sorted(neighbor_pairs(f, irredundant=irredundant) if I is None else I)
    rows = []
    for i, j in pairs:
        cand = geom.shared_facet_rows(f.regions[i], f.regions[j])
        rows.append((int(cand[0][0]), int(cand[0][1])) if len(cand) else None)
    return FarkasSystem(f, pairs, rows)


def _elastic(prog: lp.LinearProgram, n_split: int) -> lp.LinearProgram:
    """Always-feasible variant: violations of the first ``n_split`` equality
    rows go into nonnegative slacks whose sum is minimized."""
    m = prog.A_eq.shape[0]
    E = sp.vstack([sp.eye(n_split, format="csr"), sp.csr_matrix((m - n_split, n_split))])
    A_eq = sp.hstack([prog.A_eq, E, -E], format="csr")
    A_ub = b_ub = None
    if prog.A_ub is not None and prog.A_ub.shape[0]:
        A_ub = sp.hstack([prog.A_ub, sp.csr_matrix((prog.A_ub.shape[0], 2 * n_split))], format="csr")
        b_ub = prog.b_ub
    cost = np.concatenate([np.zeros(prog.nv), np.ones(2 * n_split)])
    return lp.LinearProgram(cost, A_ub, b_ub, A_eq, prog.b_eq,
                            list(prog.bounds) + [(0.0, None)] * (2 * n_split))


def _with_l1(prog: lp.LinearProgram, n_coef: int) -> lp.LinearProgram:
    """Append ``t >= |coef|`` for the first ``n_coef`` variables and minimize ``sum t``."""
    nv = prog.nv
    E = sp.eye(n_coef, nv, format="csr")
    It = sp.eye(n_coef, format="csr")
    blocks = [sp.hstack([E, -It]), sp.hstack([-E, -It])]
    b_ub = np.zeros(2 * n_coef)
    if prog.A_ub is not None and prog.A_ub.shape[0]:
        blocks.insert(0, sp.hstack([prog.A_ub, sp.csr_matrix((prog.A_ub.shape[0], n_coef))]))
        b_ub = np.concatenate([prog.b_ub, b_ub])
    A_eq = sp.hstack([prog.A_eq, sp.csr_matrix((prog.A_eq.shape[0], n_coef))], format="csr")
    cost = np.concatenate([np.zeros(nv), np.ones(n_coef)])
    return lp.LinearProgram(cost, sp.vstack(blocks, format="csr"), b_ub, A_eq, prog.b_eq,
                            list(prog.bounds) + [(0.0, None)] * n_coef)


def solve_decomposition(sys: FarkasSystem, objective: Objective = Objective.L1,
                        method: str = "Optim", reduced: bool | None = None,
                        tol: float = 1e-7) -> Decomposition | Infeasible:
    """Solve the Farkas system; ``Infeasible`` when the partition is not regular.

    Feasibility is decided by the elastic LP (minimum total violation of the
    splitting equalities, infeasible above ``tol`` per row relative to the
    data scale), which HiGHS solves reliably even where the plain system sits
    on the feasibility boundary. The L1 objective is then optimized on the
    exact system. ``reduced=None`` picks the reduced encoding when every pair
    has a shared facet row.
    """
    t0 = time.perf_counter()
    f = sys.f
    if reduced is None:
        reduced = sys.reducible
    prog = sys.reduced_lp() if reduced else sys.full_lp()
    ns = sys.n_split_rows
    scale = 1.0 + float(np.abs(prog.b_eq[:ns]).max())
    el = lp.solve(_elastic(prog, ns), backend="highs")
    if not el.optimal:
        raise lp.NumericalFailure("elastic Farkas LP did not reach optimality")
    violation = el.objective
    if violation > tol * ns * scale:
        return Infeasible(f.s, len(sys.pairs),
                          f"partition is not regular (minimum splitting violation {violation:.4g})",
                          violation)
    z = el.x[:prog.nv]
    obj_value = None
    if objective is Objective.L1:
        res = lp.solve(_with_l1(prog, sys.n_coef), backend="highs")
        if res.optimal:
            z = res.x[:prog.nv]
            obj_value = res.objective
    k, c, l, d = sys.unpack(z)
    mults = sys.multipliers_from_reduced(z) if reduced else sys.multipliers_from_full(z)
    g_pieces = [AffinePiece(k[i], c[i]) for i in range(f.s)]
    # h is taken as g - f exactly, so the identity holds to rounding
    h_pieces = [gp - fp for gp, fp in zip(g_pieces, f.pieces)]
    g = PwaFunction(g_pieces, f.regions, f.domain)
    h = PwaFunction(h_pieces, f.regions, f.domain)
    stats = {"cells_g": f.s, "cells_h": f.s, "lp_variables": prog.nv,
             "encoding": "reduced" if reduced else "full",
             "n_pairs": len(sys.pairs), "objective": objective.value,
             "objective_value": obj_value, "elastic_violation": violation,
             "farkas_residual": sys.residual(k, c, l, d, mults),
             "wall_time": time.perf_counter() - t0}
    return Decomposition(g, h, method, stats)


def facet_hyperplanes(f: PwaFunction) -> list[geom.Hyperplane]:
    hps = []
    for R in f.regions:
        R = geom.remove_redundant(R)
        hps.extend(geom.Hyperplane.make(R.V[r], R.w[r]) for r in range(R.m))
    return geom.dedup_hyperplanes(hps)


def relabel(f: PwaFunction, cells: list[Polyhedron], eps_geo: float = geom.EPS_GEO,
            chunk: int = 2048) -> PwaFunction:
    """Give each cell the piece of the lowest-index region whose interior
    contains the cell's Chebyshev center, falling back to the first region
    whose interior meets the cell's interior."""
    V = np.vstack([R.V for R in f.regions])
    w = np.concatenate([R.w for R in f.regions])
    starts = np.cumsum([0] + [R.m for R in f.regions[:-1]])
    centers = np.array([C.center for C in cells])
    labels = np.empty(len(cells), dtype=int)
    for lo in range(0, len(cells), chunk):
        S = w[:, None] - V @ centers[lo:lo + chunk].T
        worst = np.minimum.reduceat(S, starts, axis=0)     # regions x cells
        inside = worst > eps_geo
        hit = inside.any(axis=0)
        labels[lo:lo + chunk] = np.where(hit, inside.argmax(axis=0), -1)
        for t in np.flatnonzero(~hit):
            C = cells[lo + t]
            for i in np.flatnonzero(worst[:, t] > -eps_geo):
                R = f.regions[i]
                both = Polyhedron(np.vstack([R.V, C.V]), np.concatenate([R.w, C.w]))
                if geom.is_full_dim(both):
                    labels[lo + t] = i
                    break
            else:
                raise LabelNotFound(f"no region meets the interior of the cell centred at {C.center}")
    return PwaFunction([f.pieces[i] for i in labels], cells, f.domain)


def regularize_arrangement(f: PwaFunction, cap: int = 100_000) -> PwaFunction:
    cells = geom.arrangement(f.domain, facet_hyperplanes(f), cap=cap)
    return relabel(f, cells)


def decompose_optim(f: PwaFunction, objective: Objective = Objective.L1,
                    regularize: bool = True, cap: int = 100_000) -> Decomposition | Infeasible:
    """Decompose on the partition of ``f``; on infeasibility optionally refine
    by the facet arrangement and retry."""
    t0 = time.perf_counter()
    calls0 = lp.counter.calls
    out = solve_decomposition(assemble(f), objective)
    regularized = False
    if isinstance(out, Infeasible) and regularize:
        fr = regularize_arrangement(f, cap=cap)
        out = solve_decomposition(assemble(fr, irredundant=True), objective)
        regularized = True
    if isinstance(out, Decomposition):
        out.extra["regularized"] = regularized
        out.stats["wall_time"] = time.perf_counter() - t0
        out.stats["lp_calls"] = lp.counter.calls - calls0
    return out
