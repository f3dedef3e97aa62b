"""Command-line interface: ``lassolab {generate,solve,sweep,bounds,oracle-check}``.

Exit codes: 0 success, 1 argument error, 2 solver non-convergence,
3 mathematical-property violation, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import bounds, experiments, io, oracle
from .problem import SIGNAL_DISTS, gen_gaussian_matrix, gen_sparse_signal, lambda_inf, make_observation
from .solver import LassoConfig, check_extremal_pair, solve_lasso

EXIT_OK, EXIT_ARGS, EXIT_NONCONVERGED, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3, 4
OUTPUT_ENV = "LASSOLAB_OUTPUT_DIR"


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _default_outdir() -> str:
    return os.environ.get(OUTPUT_ENV, "lassolab_out")


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _add_instance_flags(p, noise_default=1e-2):
    p.add_argument("--m", type=int, default=256, help="number of measurements")
    p.add_argument("--N", type=int, default=1024, help="signal length")
    p.add_argument("--k", type=int, default=40, help="sparsity of the ground truth")
    p.add_argument("--noise", type=float, default=noise_default, help="noise norm ||eps||_2")
    p.add_argument("--seed", type=int, default=0, help="instance seed")
    p.add_argument("--dist", choices=SIGNAL_DISTS, default="gaussian", help="nonzero distribution")


def _instance(args):
    A = gen_gaussian_matrix(args.m, args.N, args.seed)
    truth = gen_sparse_signal(args.N, args.k, args.seed, args.dist)
    return A, truth, make_observation(A, truth, args.noise, args.seed)


# --------------------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    A, truth, obs = _instance(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix(out / "A.csv", A)
    io.write_vector(out / "x_true.csv", truth.signal)
    io.write_vector(out / "y.csv", obs.y)
    print(f"wrote A.csv ({A.rows}x{A.cols}), x_true.csv (k={truth.k}), y.csv (mu={obs.mu:.6g}) to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.matrix:
        A = io.read_matrix(args.matrix)
        if not args.y:
            raise ArgumentError("--y is required with --matrix")
        y = io.read_vector(args.y)
        if y.size != A.rows:
            raise ArgumentError(f"y has {y.size} entries, the matrix has {A.rows} rows")
    else:
        if args.y:
            raise ArgumentError("--y needs --matrix")
        A, _, obs = _instance(args)
        y = obs.y
    li = lambda_inf(A, y)
    if (args.lam is None) == (args.lam_rel is None):
        raise ArgumentError("give exactly one of --lambda and --lambda-rel")
    lam = args.lam if args.lam is not None else args.lam_rel * li
    cfg = LassoConfig(lam, max_iter=args.max_iter, gap_tol=args.gap_tol, kkt_tol=args.kkt_tol)
    sol = solve_lasso(A, y, cfg)
    cert = check_extremal_pair(sol, args.kkt_tol)
    rows = [
        ("lambda", lam),
        ("lambda_inf", li),
        ("lambda/lambda_inf", lam / li if li > 0 else float("inf")),
        ("s_lambda", sol.s_lambda),
        ("||r||_2/lambda", sol.rescaled_residual),
        ("duality_gap", sol.duality_gap),
        ("pairing_defect", sol.pairing_defect),
        ("||A^T r||_inf", sol.atr_inf),
        ("iterations", sol.iterations),
        ("status", sol.status),
        ("certified", cert.passed),
    ]
    _print_table(rows)
    if args.out:
        io.write_solution(args.out, sol)
    if not sol.converged:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK if cert.passed else EXIT_VIOLATION


def cmd_sweep(args) -> int:
    if args.config:
        cfg = experiments.load_config(args.config)
    else:
        cfg = experiments.full_scale() if args.scale == "full" else experiments.ci_scale()
    records = experiments.run_sweep(cfg, workers=args.threads)
    experiments.emit_all(records, args.out_dir)
    summaries = experiments.summarize(records)
    print(experiments.summary_table(summaries))
    print(f"wrote {len(cfg.noise_levels) * (len(experiments.FIGURES) + 1)} CSV files to {args.out_dir}")
    if any(s.defects for s in summaries):
        print("some solves failed certification; see the defects column", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_bounds(args) -> int:
    if not 0 < args.delta < bounds.DELTA_MAX:
        raise ArgumentError(f"--delta must lie in (0, {bounds.DELTA_MAX:.4f})")
    if args.delta_prime is not None and not 0 < args.delta_prime < 1:
        raise ArgumentError("--delta-prime must lie in (0, 1)")
    rep = bounds.evaluate_bounds(args.delta, args.k, args.lam, args.mu, args.s_lambda, args.delta_prime)
    if not rep.in_regime:
        print(f"warning: theta = {rep.theta:.4g} > 1, outside the regime of the bounds", file=sys.stderr)
    rows = list(rep.as_dict().items())
    rows.insert(rows.index(("chi_sq", rep.chi_sq)) + 1, ("chi_sq_times_k", rep.chi_sq * rep.k))
    rows.append(("multiplier_over_delta_sq", rep.support_multiplier / rep.delta**2))
    _print_table(rows)
    if args.csv:
        io.write_rows(args.csv, bounds.BoundReport.columns(), [rep.as_dict()])
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    budget = oracle.OracleBudget(args.max_cols, args.max_order, args.mc_trials)
    cfg = None
    if args.gap_tol is not None:
        cfg = LassoConfig(1.0, gap_tol=args.gap_tol)
    agree = oracle.oracle_agreement(args.instances, args.seed, budget, cfg)
    theorems, rejected = oracle.theorem_suite(args.instances, args.seed, budget)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    a_cols = oracle.row_columns(oracle.AgreementRow)
    t_cols = oracle.row_columns(oracle.TheoremRow)
    io.write_rows(out / "oracle_agreement.csv", a_cols, [vars(r) for r in agree])
    io.write_rows(out / "oracle_theorems.csv", t_cols, [vars(r) for r in theorems])
    bad_a = [r for r in agree if not r.passed]
    bad_t = [r for r in theorems if not r.passed]
    print(f"agreement: {len(agree)} solves, {len(bad_a)} violations, "
          f"max objective gap {max(r.objective_gap for r in agree):.3g}, "
          f"max sup gap {max(r.sup_gap for r in agree):.3g}")
    print(f"theorems: {args.instances} instances ({rejected} redrawn for delta_2k >= 4/sqrt(41) "
          f"or no lambda with theta <= 1), {len(theorems)} checks, {len(bad_t)} violations")
    for r in bad_a:
        print(f"  agreement seed={r.seed} m={r.m} N={r.N} lambda={r.lam:.6g} "
              f"objective_gap={r.objective_gap:.3g} sup_gap={r.sup_gap:.3g}")
    for r in bad_t:
        failed = [c for c in t_cols if c.endswith("_ok") and not getattr(r, c)]
        if not r.certified:
            failed.insert(0, "certified")
        print(f"  theorem seed={r.seed} lambda={r.lam:.6g} s={r.s_lambda} failed: {', '.join(failed)}")
    return EXIT_VIOLATION if bad_a or bad_t else EXIT_OK


# --------------------------------------------------------------------------- plumbing


def _print_table(rows) -> None:
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {io.format_cell(val, '%.10g')}")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="lassolab", description="LASSO sparse-recovery laboratory", formatter_class=fmt)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance as CSV", formatter_class=fmt)
    _add_instance_flags(g)
    g.add_argument("--out-dir", default=_default_outdir(), help=f"output directory (env {OUTPUT_ENV})")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one LASSO problem", formatter_class=fmt)
    s.add_argument("--matrix", help="matrix CSV; otherwise the instance flags generate one")
    s.add_argument("--y", help="observation vector CSV (with --matrix)")
    _add_instance_flags(s)
    s.add_argument("--lambda", dest="lam", type=_positive, default=None, help="absolute lambda")
    s.add_argument("--lambda-rel", dest="lam_rel", type=_positive, default=None, help="lambda / lambda_inf")
    s.add_argument("--gap-tol", type=_positive, default=1e-10, help="relative duality-gap tolerance")
    s.add_argument("--kkt-tol", type=_positive, default=1e-5, help="extremal-pair tolerance")
    s.add_argument("--max-iter", type=int, default=50000, help="iteration cap")
    s.add_argument("--out", help="solution CSV path")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a lambda-sweep and emit figure data", formatter_class=fmt)
    w.add_argument("--config", help="key = value config file; overrides --scale")
    w.add_argument("--scale", choices=("ci", "full"), default="ci", help="built-in configuration")
    w.add_argument("--out-dir", default=_default_outdir(), help=f"output directory (env {OUTPUT_ENV})")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bounds", help="evaluate the closed-form bounds", formatter_class=fmt)
    b.add_argument("--delta", type=float, required=True, help="restricted isometry constant")
    b.add_argument("--k", type=int, required=True, help="sparsity order")
    b.add_argument("--lambda", dest="lam", type=_positive, required=True, help="lambda")
    b.add_argument("--mu", type=float, required=True, help="small scale sigma_k + ||eps||_2")
    b.add_argument("--s-lambda", type=int, default=None, help="support size for the lower bounds")
    b.add_argument("--delta-prime", type=float, default=None, help="RIC for the l2 upper bound")
    b.add_argument("--csv", help="write the report as a one-row CSV")
    b.set_defaults(func=cmd_bounds)

    o = sub.add_parser("oracle-check", help="solver-vs-oracle and exact-RIC theorem checks",
                       formatter_class=fmt)
    o.add_argument("--instances", type=int, default=200, help="instances per suite")
    o.add_argument("--seed", type=int, default=0, help="first instance seed")
    o.add_argument("--max-cols", type=int, default=14, help="column limit for exact LASSO")
    o.add_argument("--max-order", type=int, default=6, help="largest exact RIC order")
    o.add_argument("--mc-trials", type=int, default=1000, help="Monte-Carlo RIC trials")
    o.add_argument("--gap-tol", type=_positive, default=None,
                   help="override the solver gap tolerance (None keeps the solver default)")
    o.add_argument("--out-dir", default=_default_outdir(), help=f"report directory (env {OUTPUT_ENV})")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("lassolab: error: --threads must be positive", file=sys.stderr)
        return EXIT_ARGS
    try:
        return args.func(args)
    except (ArgumentError, experiments.ConfigError, oracle.BudgetExceeded) as exc:
        print(f"lassolab: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (OSError, io.FormatError) as exc:
        print(f"lassolab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"lassolab: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
