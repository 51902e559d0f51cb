"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 infeasible, 4 numerical failure,
5 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import dc_eval, decomp_folds, decomp_novel, decomp_opt, empc, geom, io, lp, pwa
from .config import Config
from .decomp_folds import Decomposition

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 2, 3, 4, 5

log = logging.getLogger("pwadc")


class UsageError(Exception):
    pass


def _config(args) -> Config:
    cfg = Config.from_json(args.config) if args.config else Config()
    return cfg.with_overrides(seed=args.seed)


def _spec_overrides(data: dict) -> dict:
    """``A, B, Q, R`` matrices and ``x_max, u_max`` symmetric bounds."""
    known = {"A", "B", "Q", "R", "x_max", "u_max"}
    if set(data) - known:
        raise UsageError(f"unknown spec keys {sorted(set(data) - known)}")
    out = {k: np.asarray(data[k], dtype=float) for k in ("A", "B", "Q", "R") if k in data}
    for key, name in (("x_max", "X"), ("u_max", "U")):
        if key in data:
            m = np.asarray(data[key], dtype=float)
            out[name] = geom.Polyhedron.box(-m, m)
    return out


def cmd_mpc_gen(args, cfg: Config) -> int:
    if args.horizon < 1:
        raise UsageError("--horizon must be >= 1")
    t0 = time.perf_counter()
    overrides = _spec_overrides(io.load_json(args.spec)) if args.spec else {}
    f = empc.generate(empc.double_integrator(args.horizon, **overrides), cap=cfg.region_cap,
                      seed=cfg.seed)
    io.dump_json(f.to_json(), args.out)
    print(f"regions={f.s} wall_time={time.perf_counter() - t0:.3f}")
    return EXIT_OK


def cmd_decompose(args, cfg: Config) -> int:
    f = io.load_pwa(args.pwa)
    objective = decomp_opt.Objective(args.objective)
    if args.method == "folds":
        out = decomp_folds.decompose_folds(f, cap=cfg.cell_cap)
    elif args.method == "optim":
        out = decomp_opt.decompose_optim(f, objective, regularize=not args.no_regularize,
                                         cap=cfg.cell_cap)
    else:
        out = decomp_novel.decompose_novel(f, objective, cap=cfg.cell_cap)
    if isinstance(out, decomp_opt.Infeasible):
        print(f"status=infeasible regions={out.n_regions} pairs={out.n_pairs} ({out.reason})")
        return EXIT_INFEASIBLE
    if args.out:
        io.dump_json(out.to_json(), args.out)
    st = out.stats
    print(f"status=ok method={out.method} cells_g={st['cells_g']} cells_h={st['cells_h']} "
          f"wall_time={st.get('wall_time', float('nan')):.3f}")
    return EXIT_OK


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def cmd_verify(args, cfg: Config) -> int:
    f = io.load_pwa(args.pwa)
    d = io.load_decomposition(args.decomposition)
    if d.g.n != f.n or d.h.n != f.n:
        raise UsageError(f"dimension mismatch: f has n={f.n}, decomposition n={d.g.n}")
    n_samples = args.samples or cfg.n_samples
    X = geom.sample_uniform(f.domain, n_samples, np.random.default_rng(cfg.seed))
    results = []
    fx = f.eval_many(X)
    try:
        gh = d(X)
        rel = np.abs(fx - gh) / (1.0 + np.abs(fx))
        k = int(rel.argmax())
        results.append(_report("identity", rel[k] <= 1e-6,
                               f"max relative residual {rel[k]:.3g} at x={X[k].tolist()}"))
    except pwa.OutOfDomain as exc:
        results.append(_report("identity", False, str(exc)))
    for name, part in (("g", d.g), ("h", d.h)):
        loc = part.locate_many(X)
        results.append(_report(f"cover {name}", bool((loc >= 0).all()),
                               f"{int((loc < 0).sum())}/{n_samples} samples uncovered"))
        if (loc >= 0).all():
            v = part.eval_many(X)
            gap = np.abs(part.max_of_pieces(X) - v) / (1.0 + np.abs(v))
            results.append(_report(f"convexity {name}", gap.max() <= 1e-6,
                                   f"max relative gap to the max of pieces {gap.max():.3g}"))
        rep = pwa.validate(part, n_samples=0, eps_cont=cfg.eps_cont)
        results.append(_report(f"disjointness {name}", not rep.overlaps and not rep.empty_regions,
                               f"{len(rep.overlaps)} overlapping pairs, "
                               f"{len(rep.empty_regions)} empty regions"))
    return EXIT_OK if all(results) else EXIT_VALIDATION


def cmd_bench(args, cfg: Config) -> int:
    f = io.load_pwa(args.pwa)
    dc = io.load_dc(args.dc)
    if dc.n != f.n:
        raise UsageError("dimension mismatch between --pwa and --dc")
    samples = args.samples if args.samples is not None else cfg.n_samples
    if samples < dc_eval.MIN_BENCH_SAMPLES:
        raise UsageError(f"--samples must be >= {dc_eval.MIN_BENCH_SAMPLES}")
    rep = dc_eval.bench(f, dc, samples, cfg.seed)
    for row in rep.rows():
        print(f"{row['method']}: mean_ns={row['mean_ns']:.1f} p99_ns={row['p99_ns']:.1f} "
              f"floats_stored={row['floats_stored']}")
    print(f"speedup={rep.speedup:.3f} storage_ratio={rep.storage_ratio:.3f} "
          f"max_abs_diff={rep.max_abs_diff:.3g}")
    if args.csv:
        io.write_csv(args.csv, ["method", "mean_ns", "p99_ns", "floats_stored"],
                     [[r["method"], r["mean_ns"], r["p99_ns"], r["floats_stored"]] for r in rep.rows()])
    return EXIT_OK if rep.max_rel_diff <= 1e-6 else EXIT_VALIDATION


def cmd_export_grid(args, cfg: Config) -> int:
    data = io.load_json(args.input)
    if "g" in data and "h" in data:
        d = Decomposition.from_json(data)
        which = args.which or "g"
        F = {"g": d.g, "h": d.h}.get(which)
        if F is None:
            raise UsageError("a decomposition file exports g or h")
    else:
        if args.which not in (None, "f"):
            raise UsageError("a PWA file exports f only")
        F = pwa.PwaFunction.from_json(data)
    if F.n != 2:
        raise UsageError("grid export needs a function of two variables")
    if args.box:
        x1lo, x1hi, x2lo, x2hi = args.box
    else:
        lo, hi = F.domain.bbox()
        x1lo, x2lo = lo
        x1hi, x2hi = hi
    if args.res < 2:
        raise UsageError("--res must be >= 2")
    g1, g2 = np.meshgrid(np.linspace(x1lo, x1hi, args.res), np.linspace(x2lo, x2hi, args.res),
                         indexing="ij")
    X = np.column_stack([g1.ravel(), g2.ravel()])
    idx = F.locate_many(X)
    vals = np.full(len(X), np.nan)
    ok = idx >= 0
    vals[ok] = np.einsum("ij,ij->i", X[ok], F._slopes[idx[ok]]) + F._offsets[idx[ok]]
    io.write_csv(args.out, ["x1", "x2", "value"], [[x[0], x[1], v] for x, v in zip(X, vals)])
    print(f"rows={len(X)} inside={int(ok.sum())}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwadc", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file overriding tolerances, caps and sample counts")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mpc-gen", help="explicit MPC law of the double integrator")
    s.add_argument("--horizon", "-N", type=int, required=True)
    s.add_argument("--out", "-o", required=True)
    s.add_argument("--spec", help="JSON with A, B, Q, R, x_max, u_max overrides")
    s.set_defaults(func=cmd_mpc_gen)

    s = sub.add_parser("decompose", help="convex decomposition f = g - h")
    s.add_argument("pwa")
    s.add_argument("--method", choices=("folds", "optim", "novel"), default="novel")
    s.add_argument("--objective", choices=[o.value for o in decomp_opt.Objective],
                   default=decomp_opt.Objective.L1.value)
    s.add_argument("--no-regularize", action="store_true")
    s.add_argument("--out", "-o")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("verify", help="property checks of a decomposition")
    s.add_argument("pwa")
    s.add_argument("decomposition")
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="point location versus max-minus-max evaluation")
    s.add_argument("--pwa", required=True)
    s.add_argument("--dc", required=True, help="decomposition or DC-form JSON")
    s.add_argument("--samples", type=int, default=None)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("export-grid", help="sample f, g or h on a 2-D grid")
    s.add_argument("input", help="PWA or decomposition JSON")
    s.add_argument("--which", choices=("f", "g", "h"))
    s.add_argument("--box", type=float, nargs=4, metavar=("X1LO", "X1HI", "X2LO", "X2HI"))
    s.add_argument("--res", type=int, default=101)
    s.add_argument("--out", "-o", required=True)
    s.set_defaults(func=cmd_export_grid)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (UsageError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (lp.NumericalFailure, empc.NoConvergence, empc.QpInfeasible, empc.ExplosionCap,
            geom.CellExplosion, geom.EmptyInput, geom.UnboundedDomain,
            decomp_novel.NovelInfeasible, decomp_folds.InternalError,
            decomp_opt.LabelNotFound) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (pwa.OutOfDomain, dc_eval.NonConvexDomain, dc_eval.NotConvex,
            empc.ValidationFailed) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
