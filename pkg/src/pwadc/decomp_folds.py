"""Convex decomposition by collecting convex folds.

``g`` is the sum over convex folds ``(i, j)`` of ``max(piece_i, piece_j)``,
made explicit on the arrangement of the fold hyperplanes; ``h = g - f`` is
made explicit on the overlay of that arrangement with the partition of ``f``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import geom, lp
from .geom import Hyperplane, Polyhedron
from .pwa import AffinePiece, FoldSets, PwaFunction, classify_folds

METHODS = ("Folds", "Optim", "Novel")


class InternalError(RuntimeError):
    pass


@dataclass
class Decomposition:
    g: PwaFunction
    h: PwaFunction
    method: str
    stats: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.stats.setdefault("cells_g", self.g.s)
        self.stats.setdefault("cells_h", self.h.s)

    def __call__(self, X):
        return self.g.eval_many(X) - self.h.eval_many(X)

    def to_json(self) -> dict:
        out = {"method": self.method, "g": self.g.to_json(), "h": self.h.to_json(),
               "stats": dict(self.stats)}
        out.update(self.extra)
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Decomposition":
        extra = {k: v for k, v in d.items() if k not in ("method", "g", "h", "stats")}
        return cls(PwaFunction.from_json(d["g"]), PwaFunction.from_json(d["h"]),
                   d["method"], dict(d.get("stats", {})), extra)


def separator(f: PwaFunction, i: int, j: int) -> Hyperplane:
    """Canonical hyperplane where pieces ``i`` and ``j`` agree."""
    pi, pj = f.pieces[i], f.pieces[j]
    return Hyperplane.make(pi.a - pj.a, pj.b - pi.b)


def build_g_folds(f: PwaFunction, folds: FoldSets, cap: int = 100_000) -> PwaFunction:
    pairs = sorted(folds.V)
    n = f.n
    if not pairs:
        return PwaFunction([AffinePiece.zero(n)], [f.domain], f.domain)
    hps = geom.dedup_hyperplanes(separator(f, i, j) for i, j in pairs)
    cells = geom.arrangement(f.domain, hps, cap=cap)
    Ai = np.array([f.pieces[i].a for i, _ in pairs])
    Aj = np.array([f.pieces[j].a for _, j in pairs])
    bi = np.array([f.pieces[i].b for i, _ in pairs])
    bj = np.array([f.pieces[j].b for _, j in pairs])
    pieces = []
    for C in cells:
        c = C.center
        first = (Ai - Aj) @ c + bi - bj >= 0
        a = np.where(first[:, None], Ai, Aj).sum(axis=0)
        b = float(np.where(first, bi, bj).sum())
        pieces.append(AffinePiece(a, b))
    return PwaFunction(pieces, cells, f.domain)


def overlay(P_list, Q_list, eps_dim: float = geom.EPS_DIM):
    """Full-dimensional pairwise intersections ``(i, j, P_i ∩ Q_j)``."""
    plo = np.array([p.bbox()[0] for p in P_list])
    phi = np.array([p.bbox()[1] for p in P_list])
    out = []
    for j, Q in enumerate(Q_list):
        qlo, qhi = Q.bbox()
        cand = np.flatnonzero(((plo < qhi - eps_dim) & (phi > qlo + eps_dim)).all(axis=1))
        for i in cand:
            P = P_list[i]
            R = Polyhedron(np.vstack([P.V, Q.V]), np.concatenate([P.w, Q.w]))
            if geom.is_full_dim(R, eps_dim):
                out.append((int(i), j, geom.remove_redundant(R)))
    return out


def build_h_overlay(g: PwaFunction, f: PwaFunction) -> PwaFunction:
    if g.n != f.n:
        raise ValueError("g and f must share the dimension")
    parts = overlay(g.regions, f.regions)
    pieces = [g.pieces[i] - f.pieces[j] for i, j, _ in parts]
    cells = [R for _, _, R in parts]
    # independent check by point location in g and f at every cell center
    C = np.array([R.center for R in cells])
    direct = g.eval_many(C) - f.eval_many(C)
    own = np.array([p(c) for p, c in zip(pieces, C)])
    bad = np.flatnonzero(np.abs(own - direct) > 1e-8)
    if bad.size:
        raise InternalError(f"overlay piece disagrees with g - f at the center {C[bad[0]]}")
    return PwaFunction(pieces, cells, f.domain)


def decompose_folds(f: PwaFunction, folds: FoldSets | None = None,
                    cap: int = 100_000) -> Decomposition:
    t0 = time.perf_counter()
    calls0 = lp.counter.calls
    folds = classify_folds(f) if folds is None else folds
    g = build_g_folds(f, folds, cap=cap)
    h = build_h_overlay(g, f)
    stats = {"cells_g": g.s, "cells_h": h.s, "lp_calls": lp.counter.calls - calls0,
             "wall_time": time.perf_counter() - t0,
             "n_convex_folds": len(folds.V), "n_concave_folds": len(folds.A)}
    return Decomposition(g, h, "Folds", stats)
