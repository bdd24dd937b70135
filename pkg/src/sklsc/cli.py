"""Command-line front end.

Exit codes: 0 success, 1 verification outside tolerance, 2 no crossing or
no solution in the requested regime, 3 configuration error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .curvature import gauduchon_sign
from .demos import DEMOS, run_demo
from .exceptions import (
    ConfigError,
    ExpressionSyntaxError,
    InvalidBaseDataError,
    InvalidFieldError,
    SklscError,
    SolverFailure,
)
from .family import (
    KappaFamily,
    KappaScan,
    admissible_regime,
    degenerate_kappa,
    kappa_samples,
    lambda_curve,
    largest_crossing,
    warped_instability_scan,
)
from .pipeline import SYNTHETIC_NOTE, SklscProblem, read_solution, solve, verify, write_solution
from .spectral import poincare_constant

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NO_CROSSING = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4


def _emit(lines, stream=None):
    stream = stream or sys.stdout
    for ln in lines:
        print(ln, file=stream)


def _require_base(cfg):
    if cfg.base is None:
        raise ConfigError("this command needs a [base] section")
    return cfg.base


def _require_family(cfg):
    if cfg.family is None:
        raise ConfigError("this command needs a [family] section")
    return cfg.family


def _kappa_intervals(cfg):
    base = cfg.base
    if cfg.regime != "auto":
        lo, hi = cfg.regime
        kd = degenerate_kappa(base.n)
        return [(lo, kd), (kd, hi)] if lo < kd < hi else [(lo, hi)]
    regime = admissible_regime(gauduchon_sign(base), base.n)
    if regime.empty:
        kd = degenerate_kappa(base.n)
        return [(-math.inf, 1.0), (1.0, kd), (kd, math.inf)]
    return list(regime.intervals)


def cmd_scan(args):
    cfg = load_config(args.config)
    if args.family == "warped":
        fam = _require_family(cfg)
        n = cfg.family_samples
        params = fam.a + (fam.b - fam.a) * np.arange(1, n + 1) / (n + 1)
        scan = lambda_curve(fam, params, tol=cfg.settings.eig_tol, threads=cfg.settings.threads)
    else:
        fam = KappaFamily(_require_base(cfg), cfg.settings.eps_deg)
        scans = [
            lambda_curve(fam, kappa_samples(iv, cfg.settings.samples), tol=cfg.settings.eig_tol, threads=cfg.settings.threads)
            for iv in _kappa_intervals(cfg)
        ]
        scan = KappaScan.merge(scans)
    text = scan.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    failed = scan.failures()
    if failed:
        raise SolverFailure(f"ground state failed at parameter {failed[0]!r}", {"param": failed[0]})
    print(f"crossings: {len(scan.crossings)}", file=sys.stderr)
    return EXIT_OK if scan.crossings else EXIT_NO_CROSSING


def cmd_solve(args):
    cfg = load_config(args.config)
    base = _require_base(cfg)
    result = solve(SklscProblem(base, cfg.regime, cfg.settings))
    report = result.report()
    sys.stdout.write(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for i, sol in enumerate(result.solutions, start=1):
            write_solution(out / f"solution_{i}", sol)
        (out / "summary.txt").write_text(report, encoding="ascii")
    return EXIT_OK if len(result) else EXIT_NO_CROSSING


def cmd_verify(args):
    cfg = load_config(args.config)
    base = _require_base(cfg)
    try:
        sol = read_solution(args.solution)
    except (OSError, SklscError, ValueError) as exc:
        raise ConfigError(f"cannot read solution bundle {args.solution}: {exc}") from exc
    if sol.f.grid != base.grid:
        raise ConfigError("solution grid differs from the config grid")
    pde, integral = verify(sol, base)
    tol = cfg.settings.pde_tolerance(base.grid)
    ok = pde <= tol
    _emit([
        f"kappa: {sol.kappa:.17g}",
        f"residual_pde: {pde:.6e}",
        f"residual_integral: {integral:.6e}",
        f"tol_pde: {tol:.6e}",
        f"within_tolerance: {str(ok).lower()}",
        f"note: {SYNTHETIC_NOTE}",
    ])
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_poincare(args):
    cfg = load_config(args.config)
    est = poincare_constant(cfg.grid, method=args.method)
    _emit([f"P: {est.P:.12g}", f"lambda1: {est.lambda1:.12g}"])
    return EXIT_OK


def cmd_instability(args):
    cfg = load_config(args.config)
    fam = _require_family(cfg)
    report = warped_instability_scan(fam, cfg.family_samples, tol=cfg.settings.eig_tol, threads=cfg.settings.threads)
    lines = [f"hypothesis {k}: {'pass' if v else 'fail'}" for k, v in report.hypotheses.items()]
    lines.append(f"samples: {len(report.scan.samples)}")
    lines.append(f"max lambda0: {report.scan.lambdas.max():.6e}")
    lines.append(f"counterexamples: {len(report.counterexamples)}")
    lines.extend(f"counterexample t: {t:.17g}" for t in report.counterexamples)
    ts = report.scan.params
    for s in cfg.shifts:
        c = largest_crossing(fam.with_shift(s), ts, cfg.settings.tol_lambda, cfg.settings.tol_p, cfg.settings.eig_tol)
        lines.append(f"shift {s:g}: t* = {'none' if c is None else f'{c.param:.12g}'}")
    lines.append(f"note: {SYNTHETIC_NOTE}")
    _emit(lines)
    if args.out:
        Path(args.out).write_text(report.scan.to_csv(), encoding="ascii")
    return EXIT_OK


def cmd_demo(args):
    outcome = run_demo(args.name, args.out)
    _emit(outcome.lines)
    return outcome.code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sklsc",
        description="Search conformal classes for metrics with S = 2 kappa S_C via Schrodinger ground states.",
        epilog="Exit codes: 0 ok, 1 verification failed, 2 no crossing, 3 config error, 4 solver failure. "
        "SKLSC_THREADS caps scan concurrency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="sample lambda0 over a parameter range and write CSV")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--family", choices=("kappa", "warped"), default="kappa",
                   help="scan the scaling-constant family (default) or the warped [family] section")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("solve", help="find every scaling constant with zero ground energy")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--out", help="directory for solution bundles and summary.txt")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="recompute residuals of a solution bundle")
    p.add_argument("--config", required=True, help="scenario config file with the same base")
    p.add_argument("--solution", required=True, help="solution bundle directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("poincare", help="print the discrete Poincare constant of the config grid")
    p.add_argument("--config", required=True, help="scenario config file ([grid] is enough)")
    p.add_argument("--method", choices=("iteration", "symbol"), default="iteration",
                   help="LOBPCG on the Laplacian (default) or the exact stencil symbol")
    p.set_defaults(func=cmd_poincare)

    p = sub.add_parser("instability", help="scan a warped family for non-negative ground energies")
    p.add_argument("--config", required=True, help="scenario config with a [family] section")
    p.add_argument("--out", help="CSV output path for the scan")
    p.set_defaults(func=cmd_instability)

    p = sub.add_parser("demo", help="run a preset experiment")
    p.add_argument("name", choices=sorted(DEMOS), help="preset name")
    p.add_argument("--out", help="directory for any files the preset writes")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExpressionSyntaxError, InvalidBaseDataError, InvalidFieldError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        diag = exc.report()
        if diag:
            print(diag, file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
