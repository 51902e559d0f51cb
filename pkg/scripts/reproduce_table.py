"""Cell counts of the three decompositions for the double-integrator MPC law.

    python3 scripts/reproduce_table.py --horizons 1 5 10 15 [--regularize 5 10]

Regularization (facet arrangement plus the optimization-based LP) is slow
for N=10, so it only runs for the horizons passed to --regularize.
"""

import argparse
import time

from pwadc import decomp_folds, decomp_novel, decomp_opt, empc
from pwadc.decomp_opt import Objective


def row(N, regularize):
    t0 = time.perf_counter()
    f = empc.generate(empc.double_integrator(N))
    t_gen = time.perf_counter() - t0
    dfo = decomp_folds.decompose_folds(f)
    raw = decomp_opt.solve_decomposition(decomp_opt.assemble(f), Objective.FEASIBILITY)
    optim = "%d/%d" % (raw.g.s, raw.h.s) if raw else "infeasible"
    if not raw and regularize:
        fr = decomp_opt.regularize_arrangement(f)
        out = decomp_opt.solve_decomposition(decomp_opt.assemble(fr, irredundant=True),
                                             Objective.FEASIBILITY)
        optim = "%d/%d reg" % (fr.s, fr.s) if out else "%d cells, infeasible" % fr.s
    dno = decomp_novel.decompose_novel(f)
    return [N, f.s, "%d/%d" % (dfo.g.s, dfo.h.s), optim, "%d/%d" % (dno.g.s, dno.h.s),
            "%.1f" % t_gen, "%.1f" % (time.perf_counter() - t0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", type=int, nargs="+", default=[1, 5, 10, 15])
    ap.add_argument("--regularize", type=int, nargs="*", default=[])
    args = ap.parse_args()
    head = ["N", "regions", "folds g/h", "optim g/h", "novel g/h", "gen s", "total s"]
    print("  ".join("%-14s" % h for h in head))
    for N in args.horizons:
        print("  ".join("%-14s" % c for c in row(N, N in args.regularize)), flush=True)


if __name__ == "__main__":
    main()
