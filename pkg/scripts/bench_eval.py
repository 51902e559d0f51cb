"""Point location versus max-minus-max evaluation for each horizon.

    python3 scripts/bench_eval.py --horizons 5 10 15 --samples 10000 [--csv out.csv]
"""

import argparse

from pwadc import dc_eval, decomp_novel, empc, io


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", type=int, nargs="+", default=[5, 10, 15])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--csv")
    args = ap.parse_args()
    rows = []
    for N in args.horizons:
        f = empc.generate(empc.double_integrator(N))
        dc = dc_eval.to_dc(decomp_novel.decompose_novel(f))
        rep = dc_eval.bench(f, dc, args.samples, args.seed)
        pl, d = rep.methods["point_location"], rep.methods["dc"]
        print(f"N={N:2d} regions={f.s:4d} pieces g/h={len(dc.g_pieces)}/{len(dc.h_pieces)} "
              f"location {pl.mean_ns:8.0f} ns  dc {d.mean_ns:7.0f} ns  "
              f"speedup {rep.speedup:5.1f}  storage ratio {rep.storage_ratio:5.1f}", flush=True)
        rows.append([N, f.s, pl.mean_ns, d.mean_ns, rep.speedup, rep.storage_ratio])
    if args.csv:
        io.write_csv(args.csv, ["N", "regions", "location_ns", "dc_ns", "speedup", "storage_ratio"],
                     rows)


if __name__ == "__main__":
    main()
