"""Continuous scalar piecewise-affine functions on polyhedral partitions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geom, lp
from .config import EPS_CONT, EPS_GEO
from .geom import Polyhedron


class OutOfDomain(ValueError):
    pass


@dataclass(frozen=True)
class AffinePiece:
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        if not (np.isfinite(a).all() and np.isfinite(self.b)):
            raise ValueError("affine piece has non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def __call__(self, x):
        return np.asarray(x) @ self.a + self.b

    def __sub__(self, other: "AffinePiece") -> "AffinePiece":
        return AffinePiece(self.a - other.a, self.b - other.b)

    def __add__(self, other: "AffinePiece") -> "AffinePiece":
        return AffinePiece(self.a + other.a, self.b + other.b)

    def __neg__(self) -> "AffinePiece":
        return AffinePiece(-self.a, -self.b)

    def scaled(self, alpha: float) -> "AffinePiece":
        return AffinePiece(alpha * self.a, alpha * self.b)

    def close_to(self, other: "AffinePiece", tol: float = 1e-9) -> bool:
        return bool(np.abs(self.a - other.a).max(initial=0.0) <= tol and abs(self.b - other.b) <= tol)

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b}

    @classmethod
    def from_json(cls, d: dict) -> "AffinePiece":
        return cls(d["a"], d["b"])

    @classmethod
    def zero(cls, n: int) -> "AffinePiece":
        return cls(np.zeros(n), 0.0)


class PwaFunction:
    """``f(x) = pieces[i](x)`` for ``x`` in ``regions[i]``, defined on ``domain``.

    ``domain`` is stored explicitly as a polyhedron, so it is convex whenever
    the constructor succeeds; the union of the regions is expected to cover
    it (see :func:`validate`).
    """

    def __init__(self, pieces, regions, domain: Polyhedron):
        pieces = list(pieces)
        regions = list(regions)
        if not pieces:
            raise ValueError("a PWA function needs at least one piece")
        if len(pieces) != len(regions):
            raise ValueError(f"{len(pieces)} pieces but {len(regions)} regions")
        n = domain.n
        for p, r in zip(pieces, regions):
            if p.a.size != n or r.n != n:
                raise ValueError("dimension mismatch between pieces, regions and domain")
        self.pieces = pieces
        self.regions = regions
        self.domain = domain
        self._slopes = np.array([p.a for p in pieces])
        self._offsets = np.array([p.b for p in pieces])
        self._neighbors = None

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def s(self) -> int:
        return len(self.pieces)

    def __repr__(self):
        return f"PwaFunction(n={self.n}, s={self.s})"

    def __neg__(self) -> "PwaFunction":
        return PwaFunction([-p for p in self.pieces], self.regions, self.domain)

    def scaled(self, alpha: float) -> "PwaFunction":
        return PwaFunction([p.scaled(alpha) for p in self.pieces], self.regions, self.domain)

    def __call__(self, x):
        return eval(self, x)

    def locate_many(self, X, tol: float = EPS_GEO) -> np.ndarray:
        """Index of the first region containing each row of ``X`` (``-1`` if none)."""
        X = np.atleast_2d(X)
        out = np.full(X.shape[0], -1)
        todo = np.arange(X.shape[0])
        for i, R in enumerate(self.regions):
            if todo.size == 0:
                break
            hit = R.contains_many(X[todo], tol)
            out[todo[hit]] = i
            todo = todo[~hit]
        return out

    def eval_many(self, X, tol: float = EPS_GEO) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = self.locate_many(X, tol)
        if (idx < 0).any():
            bad = X[np.flatnonzero(idx < 0)[0]]
            raise OutOfDomain(f"point {bad} lies in no region")
        return np.einsum("ij,ij->i", X, self._slopes[idx]) + self._offsets[idx]

    def max_of_pieces(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        step = max(1, 2_000_000 // self.s)
        return np.concatenate([(X[k:k + step] @ self._slopes.T + self._offsets).max(axis=1)
                               for k in range(0, len(X), step)])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "domain": self.domain.to_json(),
            "pieces": [p.to_json() for p in self.pieces],
            "regions": [r.to_json() for r in self.regions],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PwaFunction":
        f = cls([AffinePiece.from_json(p) for p in d["pieces"]],
                [Polyhedron.from_json(r) for r in d["regions"]],
                Polyhedron.from_json(d["domain"]))
        if f.n != d["n"]:
            raise ValueError(f"declared dimension {d['n']} does not match data ({f.n})")
        return f


def eval(f: PwaFunction, x, tol: float = EPS_GEO) -> float:  # noqa: A001
    x = np.asarray(x, dtype=float).ravel()
    if x.size != f.n:
        raise ValueError(f"expected a point of dimension {f.n}")
    for p, R in zip(f.pieces, f.regions):
        if R.contains(x, tol):
            return float(p(x))
    raise OutOfDomain(f"point {x} lies in no region")


# -- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    empty_regions: list[int] = field(default_factory=list)
    overlaps: list[tuple[int, int]] = field(default_factory=list)
    discontinuities: list[tuple[int, int, float]] = field(default_factory=list)
    uncovered: int = 0
    n_samples: int = 0

    @property
    def ok(self) -> bool:
        return not (self.empty_regions or self.overlaps or self.discontinuities or self.uncovered)

    def summary(self) -> str:
        if self.ok:
            return "valid"
        parts = []
        if self.empty_regions:
            parts.append(f"empty-interior regions {self.empty_regions}")
        if self.overlaps:
            parts.append(f"overlapping interiors {self.overlaps}")
        if self.discontinuities:
            parts.append("discontinuities " + ", ".join(
                f"({i},{j}) gap {g:.3g}" for i, j, g in self.discontinuities))
        if self.uncovered:
            parts.append(f"{self.uncovered}/{self.n_samples} domain samples uncovered")
        return "; ".join(parts)


def _bbox_arrays(regions):
    lo = np.array([r.bbox()[0] for r in regions])
    hi = np.array([r.bbox()[1] for r in regions])
    return lo, hi


def _bbox_pairs(regions, tol=EPS_GEO):
    """Candidate pairs ``i < j`` whose bounding boxes touch or overlap."""
    lo, hi = _bbox_arrays(regions)
    pairs = []
    for i in range(len(regions) - 1):
        ok = ((lo[i + 1:] <= hi[i] + tol) & (hi[i + 1:] >= lo[i] - tol)).all(axis=1)
        pairs.extend((i, i + 1 + j) for j in np.flatnonzero(ok))
    return pairs


def _difference_range(P: Polyhedron, d, c) -> float:
    """``max |d^T x + c|`` over ``P`` via two LPs."""
    hi = geom.support(P, d)
    lo = -geom.support(P, -d)
    return max(abs(hi + c), abs(lo + c))


def validate(f: PwaFunction, n_samples: int = 10_000, seed: int = 42,
             eps_cont: float = EPS_CONT) -> ValidationReport:
    rep = ValidationReport(n_samples=n_samples)
    for i, R in enumerate(f.regions):
        if not geom.is_full_dim(R):
            rep.empty_regions.append(i)
    for i, j in _bbox_pairs(f.regions):
        if i in rep.empty_regions or j in rep.empty_regions:
            continue
        both = Polyhedron(np.vstack([f.regions[i].V, f.regions[j].V]),
                          np.concatenate([f.regions[i].w, f.regions[j].w]))
        if geom.is_full_dim(both):
            rep.overlaps.append((i, j))
            continue
        if geom.is_empty(both):
            continue
        d = f.pieces[i].a - f.pieces[j].a
        c = f.pieces[i].b - f.pieces[j].b
        gap = _difference_range(both, d, c)
        if gap > eps_cont:
            rep.discontinuities.append((i, j, gap))
    if n_samples:
        rng = np.random.default_rng(seed)
        X = geom.sample_uniform(f.domain, n_samples, rng)
        rep.uncovered = int((f.locate_many(X) < 0).sum())
    return rep


# -- neighbours and folds -----------------------------------------------------

def _shares_hyperplane(P: Polyhedron, Q: Polyhedron, tol=EPS_GEO) -> bool:
    """Whether some row of ``P`` is the reversed copy of a row of ``Q``.

    Necessary for an (n-1)-dimensional intersection: every H-representation
    contains each facet-defining inequality.
    """
    return bool(geom.shared_facet_rows(P, Q, tol))


def irredundant_regions(f: PwaFunction) -> list[Polyhedron]:
    return [geom.remove_redundant(R) for R in f.regions]


def neighbor_pairs(f: PwaFunction, irredundant: bool = False) -> set[tuple[int, int]]:
    """Pairs ``i < j`` of regions sharing an (n-1)-dimensional facet (0-based).

    Set ``irredundant=True`` when the region rows are known to be minimal;
    otherwise redundant rows are stripped first.
    """
    if f._neighbors is not None:
        return set(f._neighbors)
    regions = f.regions if irredundant else irredundant_regions(f)
    out = set()
    for i, j in _bbox_pairs(regions):
        if not _shares_hyperplane(regions[i], regions[j]):
            continue
        if geom.facet_dim_check(regions[i], regions[j]):
            out.add((i, j))
    f._neighbors = frozenset(out)
    return out


@dataclass
class FoldSets:
    I: set
    V: set
    A: set

    def __post_init__(self):
        if self.V & self.A:
            raise ValueError("a pair cannot be both a convex and a concave fold")
        if not (self.V | self.A) <= self.I:
            raise ValueError("fold pairs must be neighbour pairs")

    def ordered(self) -> list[tuple[int, int]]:
        """``V`` then ``A``, each sorted."""
        return sorted(self.V) + sorted(self.A)


def classify_folds(f: PwaFunction, I=None) -> FoldSets:
    """Split neighbour pairs into convex folds ``V`` and concave folds ``A``.

    The sign of ``(a_i - a_j)^T x + (b_i - b_j)`` at the Chebyshev center of
    region ``i`` decides; pairs whose pieces coincide are in neither set.
    """
    I = neighbor_pairs(f) if I is None else set(I)
    V, A = set(), set()
    for i, j in I:
        c = f.regions[i].center
        d = f.pieces[i].a - f.pieces[j].a
        delta = d @ c + f.pieces[i].b - f.pieces[j].b
        eps = 1e-9 * (1.0 + np.linalg.norm(d) * np.linalg.norm(c))
        if delta > eps:
            V.add((i, j))
        elif delta < -eps:
            A.add((i, j))
    return FoldSets(I, V, A)


def domain_from_regions(regions: list[Polyhedron], step: float = 1e-6) -> Polyhedron:
    """Polyhedron bounded by the facets of ``regions`` that face no other region.

    Equals the union of ``regions`` when that union is convex.
    """
    rows_V, rows_w = [], []
    for R in regions:
        R = geom.remove_redundant(R)
        for r in range(R.m):
            xc, rad = geom.facet_center(R, r)
            if rad < geom.EPS_DIM:
                continue
            probe = xc + step * R.V[r]
            if not any(Q.contains(probe, tol=0.0) for Q in regions):
                rows_V.append(R.V[r])
                rows_w.append(R.w[r])
    return geom.remove_redundant(Polyhedron(np.array(rows_V), np.array(rows_w)))


def lp_calls() -> int:
    return lp.counter.calls
