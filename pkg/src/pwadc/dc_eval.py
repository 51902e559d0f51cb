"""Max-minus-max evaluation of a decomposed PWA function and its benchmark.

Once ``f = g - h`` with ``g`` and ``h`` convex, each of them equals the
pointwise maximum of its own pieces, so ``f(x)`` needs no point location.
"""

from __future__ import annotations

import gc
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .decomp_folds import Decomposition
from .pwa import AffinePiece, PwaFunction

MIN_BENCH_SAMPLES = 1000


class NonConvexDomain(ValueError):
    pass


class NotConvex(ValueError):
    pass


@dataclass
class DcForm:
    g_pieces: list[AffinePiece]
    h_pieces: list[AffinePiece]

    def __post_init__(self):
        if not self.g_pieces or not self.h_pieces:
            raise ValueError("both piece lists must be nonempty")
        self.K = np.array([p.a for p in self.g_pieces])
        self.c = np.array([p.b for p in self.g_pieces])
        self.L = np.array([p.a for p in self.h_pieces])
        self.d = np.array([p.b for p in self.h_pieces])

    @property
    def n(self) -> int:
        return self.K.shape[1]

    def floats_stored(self) -> int:
        return (len(self.g_pieces) + len(self.h_pieces)) * (self.n + 1)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        step = max(1, 2_000_000 // max(len(self.c), len(self.d)))
        return np.concatenate([(x @ self.K.T + self.c).max(axis=1) - (x @ self.L.T + self.d).max(axis=1)
                               for x in (X[k:k + step] for k in range(0, len(X), step))])

    def to_json(self) -> dict:
        return {"g_pieces": [p.to_json() for p in self.g_pieces],
                "h_pieces": [p.to_json() for p in self.h_pieces]}

    @classmethod
    def from_json(cls, d: dict) -> "DcForm":
        return cls([AffinePiece.from_json(p) for p in d["g_pieces"]],
                   [AffinePiece.from_json(p) for p in d["h_pieces"]])


def dedup_pieces(pieces, tol: float = 1e-9) -> list[AffinePiece]:
    """First occurrence of every piece, up to ``tol`` in each coefficient."""
    pieces = list(pieces)
    if not pieces:
        return []
    M = np.array([np.append(p.a, p.b) for p in pieces])
    kept = np.empty_like(M)
    keep = []
    for i, row in enumerate(M):
        if not keep or np.abs(kept[:len(keep)] - row).max(axis=1).min() > tol:
            kept[len(keep)] = row
            keep.append(i)
    return [pieces[i] for i in keep]


def _check_convex(F: PwaFunction, X, name: str, rtol: float = 1e-6):
    vals = F.eval_many(X)
    gap = np.abs(F.max_of_pieces(X) - vals) / (1.0 + np.abs(vals))
    if gap.max() > rtol:
        raise NotConvex(f"{name} differs from the max of its pieces by {gap.max():.3g}")


def to_dc(d: Decomposition, n_samples: int = 2000, seed: int = 42, tol: float = 1e-9) -> DcForm:
    """Drop the regions of ``g`` and ``h`` and keep their distinct pieces.

    The max form only reproduces ``f`` where the regions fill the convex
    polyhedron ``g.domain``; sampled holes raise :class:`NonConvexDomain`.
    """
    F = d.g.domain
    if not isinstance(F, geom.Polyhedron) or not geom.is_full_dim(F):
        raise NonConvexDomain("the decomposition has no full-dimensional polyhedral domain")
    X = geom.sample_uniform(F, n_samples, np.random.default_rng(seed))
    for name, part in (("g", d.g), ("h", d.h)):
        if (part.locate_many(X) < 0).any():
            raise NonConvexDomain(f"the regions of {name} leave parts of the domain uncovered")
        _check_convex(part, X, name)
    return DcForm(dedup_pieces(d.g.pieces, tol), dedup_pieces(d.h.pieces, tol))


def eval_dc(dc: DcForm, x) -> float:
    """``max_i (k_i^T x + c_i) - max_j (l_j^T x + d_j)``; no domain check."""
    x = np.asarray(x, dtype=float).ravel()
    return float((dc.K @ x + dc.c).max() - (dc.L @ x + dc.d).max())


def locate_eval(table, x, tol: float = geom.EPS_GEO) -> float:
    """Linear-scan point location: first region containing ``x``."""
    for V, w, a, b in table:
        if (V @ x <= w + tol).all():
            return float(a @ x + b)
    return float("nan")


def location_table(f: PwaFunction):
    return [(R.V, R.w, p.a, p.b) for R, p in zip(f.regions, f.pieces)]


def floats_stored_pwa(f: PwaFunction) -> int:
    return sum(R.m * (f.n + 1) for R in f.regions) + f.s * (f.n + 1)


@dataclass
class MethodTiming:
    mean_ns: float
    p99_ns: float
    floats_stored: int


@dataclass
class BenchReport:
    methods: dict[str, MethodTiming] = field(default_factory=dict)
    n_samples: int = 0
    max_abs_diff: float = 0.0
    max_rel_diff: float = 0.0

    @property
    def speedup(self) -> float:
        return self.methods["point_location"].mean_ns / self.methods["dc"].mean_ns

    @property
    def storage_ratio(self) -> float:
        return self.methods["point_location"].floats_stored / self.methods["dc"].floats_stored

    def rows(self) -> list[dict]:
        return [{"method": k, "mean_ns": v.mean_ns, "p99_ns": v.p99_ns,
                 "floats_stored": v.floats_stored} for k, v in self.methods.items()]


def _time_calls(fn, X, runs: int):
    enabled = gc.isenabled()
    gc.disable()
    try:
        per_run = [_one_run(fn, X) for _ in range(runs)]
    finally:
        if enabled:
            gc.enable()
    means = [float(ts.mean()) for ts in per_run]
    med = statistics.median(means)
    ts = per_run[means.index(med)] if med in means else per_run[0]
    return med, float(np.percentile(ts, 99))


def _one_run(fn, X):
    ts = np.empty(len(X))
    clock = time.perf_counter_ns
    for t, x in enumerate(X):
        t0 = clock()
        fn(x)
        ts[t] = clock() - t0
    return ts


def bench(f: PwaFunction, dc: DcForm, n_samples: int = 10_000, seed: int = 42,
          runs: int = 5) -> BenchReport:
    """Time point location on ``f`` against ``eval_dc`` on the same samples.

    One warmup pass, then the median over ``runs`` of the mean per call.
    """
    if n_samples < MIN_BENCH_SAMPLES:
        raise ValueError(f"need at least {MIN_BENCH_SAMPLES} samples, got {n_samples}")
    X = geom.sample_uniform(f.domain, n_samples, np.random.default_rng(seed))
    table = location_table(f)
    pl = lambda x: locate_eval(table, x)  # noqa: E731
    dcf = lambda x: eval_dc(dc, x)  # noqa: E731
    for x in X[:min(200, n_samples)]:
        pl(x)
        dcf(x)
    rep = BenchReport(n_samples=n_samples)
    m, p = _time_calls(pl, X, runs)
    rep.methods["point_location"] = MethodTiming(m, p, floats_stored_pwa(f))
    m, p = _time_calls(dcf, X, runs)
    rep.methods["dc"] = MethodTiming(m, p, dc.floats_stored())
    fx = f.eval_many(X)
    diff = np.abs(fx - dc(X))
    rep.max_abs_diff = float(diff.max())
    rep.max_rel_diff = float((diff / (1.0 + np.abs(fx))).max())
    return rep
