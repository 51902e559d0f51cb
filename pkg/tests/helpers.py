"""Small hand-checkable functions and independent geometric oracles."""

import itertools

import numpy as np

from pwadc.geom import Polyhedron
from pwadc.pwa import AffinePiece, PwaFunction


def interval(lo, hi):
    return Polyhedron.box([lo], [hi])


def pwa_1d(breaks, pieces):
    """Continuous 1-D function on consecutive intervals ``breaks[k], breaks[k+1]``."""
    regions = [interval(a, b) for a, b in zip(breaks[:-1], breaks[1:])]
    return PwaFunction([AffinePiece([a], b) for a, b in pieces], regions,
                       interval(breaks[0], breaks[-1]))


def abs_model():
    return pwa_1d([-1, 0, 1], [(-1, 0), (1, 0)])


def negabs_model():
    return pwa_1d([-1, 0, 1], [(1, 0), (-1, 0)])


def zigzag():
    return pwa_1d([-2, 0, 1, 2], [(-1, 0), (1, 0), (-1, 2)])


def affine_model(n=2):
    F = Polyhedron.box(-np.ones(n), np.ones(n))
    return PwaFunction([AffinePiece(np.arange(1.0, n + 1), 0.5)], [F], F)


def grid_2x2():
    """Four unit boxes around the origin; f = |x1| + |x2| is convex."""
    regions, pieces = [], []
    for sx, sy in itertools.product((-1, 1), repeat=2):
        lo = [min(0, sx), min(0, sy)]
        regions.append(Polyhedron.box(lo, [lo[0] + 1, lo[1] + 1]))
        pieces.append(AffinePiece([sx, sy], 0.0))
    return PwaFunction(pieces, regions, Polyhedron.box([-1, -1], [1, 1]))


def max_2d():
    """``max(x1, x2)`` on the two triangles cut by the diagonal."""
    regions = [Polyhedron(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1], [-1, 1]]),
                          np.array([1.0, 1, 1, 1, 0])),
               Polyhedron(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1], [1, -1]]),
                          np.array([1.0, 1, 1, 1, 0]))]
    pieces = [AffinePiece([1.0, 0.0], 0.0), AffinePiece([0.0, 1.0], 0.0)]
    return PwaFunction(pieces, regions, Polyhedron.box([-1, -1], [1, 1]))


def vertices_2d(V, w, tol=1e-9):
    """Brute-force vertex enumeration: intersect every pair of rows."""
    V = np.asarray(V, float)
    w = np.asarray(w, float)
    pts = []
    for i, j in itertools.combinations(range(len(w)), 2):
        M = V[[i, j]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, w[[i, j]])
        if (V @ x <= w + tol).all():
            pts.append(x)
    if not pts:
        return np.zeros((0, 2))
    pts = np.round(np.array(pts), 9)
    return np.unique(pts, axis=0)


def same_vertices(P, Q):
    a, b = vertices_2d(P.V, P.w), vertices_2d(Q.V, Q.w)
    return a.shape == b.shape and np.allclose(a, b, atol=1e-7)


def intervals(f):
    """Sorted ``(lo, hi, a, b)`` per region of a 1-D function."""
    out = []
    for R, p in zip(f.regions, f.pieces):
        lo, hi = R.bbox()
        out.append((round(float(lo[0]), 9), round(float(hi[0]), 9), float(p.a[0]), p.b))
    return sorted(out)
