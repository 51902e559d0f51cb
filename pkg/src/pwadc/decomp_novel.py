"""Decomposition on the arrangement of all fold hyperplanes.

The separating hyperplanes of every convex and every concave fold cut the
domain into cells on which ``f`` is affine. That partition is regular, so
the Farkas LP of :mod:`pwadc.decomp_opt` is feasible on it, and ``g`` and
``h`` come out on the same cells.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import geom, lp
from .decomp_folds import Decomposition, separator
from .decomp_opt import Infeasible, Objective, assemble, relabel, solve_decomposition
from .geom import Hyperplane, Polyhedron
from .pwa import FoldSets, PwaFunction, classify_folds


class NovelInfeasible(RuntimeError):
    """The Farkas LP failed on the fold arrangement, which should be impossible."""


@dataclass
class FoldArrangement:
    hyperplanes: list[Hyperplane]
    cells: list[Polyhedron]
    labels: list[int]


def fold_hyperplanes(f: PwaFunction, folds: FoldSets) -> list[Hyperplane]:
    return geom.dedup_hyperplanes(separator(f, i, j) for i, j in folds.ordered())


def build_cells(F: Polyhedron, hps, cap: int = 100_000) -> list[Polyhedron]:
    return geom.arrangement(F, hps, cap=cap)


def fold_arrangement(f: PwaFunction, folds: FoldSets | None = None,
                     cap: int = 100_000) -> tuple[FoldArrangement, PwaFunction]:
    """Cells, labels and the relabelled function ``f'`` on those cells."""
    folds = classify_folds(f) if folds is None else folds
    hps = fold_hyperplanes(f, folds)
    cells = build_cells(f.domain, hps, cap=cap)
    f_prime = relabel(f, cells)
    index = {id(p): i for i, p in enumerate(f.pieces)}
    labels = [index[id(p)] for p in f_prime.pieces]
    return FoldArrangement(hps, cells, labels), f_prime


def decompose_novel(f: PwaFunction, objective: Objective = Objective.L1,
                    cap: int = 100_000) -> Decomposition:
    t0 = time.perf_counter()
    calls0 = lp.counter.calls
    folds = classify_folds(f)
    arr, f_prime = fold_arrangement(f, folds, cap=cap)
    out = solve_decomposition(assemble(f_prime, irredundant=True), objective, method="Novel")
    if isinstance(out, Infeasible):
        raise NovelInfeasible(
            f"Farkas LP infeasible on {len(arr.cells)} fold-arrangement cells")
    out.stats.update(wall_time=time.perf_counter() - t0, lp_calls=lp.counter.calls - calls0,
                     n_convex_folds=len(folds.V), n_concave_folds=len(folds.A))
    out.extra["arrangement"] = {"hyperplanes": len(arr.hyperplanes), "cells": len(arr.cells)}
    return out
