"""Preset experiments behind ``sklsc demo <name>``.

Each demo returns a ``DemoOutcome`` holding report lines, an exit code and the
objects it computed, so tests can inspect the numbers without parsing text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature import (
    BalancedBaseData,
    HermitianConformalMetric,
    chern_scalar_conformal,
    chern_scalar_direct,
    riemannian_scalar_christoffel,
    riemannian_scalar_conformal,
)
from .family import WarpedFamily, degenerate_obstruction_check, largest_crossing, warped_instability_scan
from .grid import TorusGrid, linf_norm
from .pipeline import (
    SYNTHETIC_NOTE,
    SklscProblem,
    SklscSolution,
    exponent_multiplier,
    solve,
    verify,
    verify_geometric,
    write_solution,
)

EXIT_OK = 0
EXIT_NO_CROSSING = 2


@dataclass
class DemoOutcome:
    lines: list[str]
    code: int = EXIT_OK
    data: dict = field(default_factory=dict)


def circle(N=64):
    grid = TorusGrid(N)
    return grid, grid.coordinates()[0]


def negative_kahler_base(N=64):
    grid, x = circle(N)
    return BalancedBaseData.kahler(grid.field(np.sin(x) - 0.2), 2)


def zero_degree_base(N=64):
    grid, x = circle(N)
    return BalancedBaseData.kahler(grid.field(np.sin(x)), 2)


def positive_balanced_base(N=64):
    grid, x = circle(N)
    SC = grid.field(np.sin(x) + 0.3)
    return BalancedBaseData(2, 2.0 * SC - 0.1, SC)


def warped_preset(N=64, shift=0.0):
    """``V1 = -1 + (cos x - 1)/4``, ``V2 = 1``, ``f = 1/(1-t)``, ``h = (1+t)/2`` on ``(0, 1)``."""
    grid, x = circle(N)
    return WarpedFamily(
        V1=grid.field(-1.0 + (np.cos(x) - 1.0) / 4.0),
        V2=grid.constant(1.0),
        f=lambda t: 1.0 / (1.0 - t),
        h=lambda t: 0.5 * (1.0 + t),
        a=0.0,
        b=1.0,
        C_f_a=1.0,
        C_h_a=0.5,
        C_h_b=1.0,
        shift=shift,
    )


CONTROL_SHIFTS = (0.6, 0.8, 1.0, 1.2, 1.4)


def degenerate_bases(N=16):
    """Kahler ``SC = -1``, Kahler ``SC = -(1 - cos x1)^2`` and a balanced base with sign-changing ``Q``."""
    grid = TorusGrid((N, N))
    x1, _ = grid.coordinates()
    return {
        "kahler-constant": BalancedBaseData.kahler(grid.constant(-1.0), 2),
        "kahler-double-zero": BalancedBaseData.kahler(grid.field(-((1.0 - np.cos(x1)) ** 2)), 2),
        "balanced-sign-changing": BalancedBaseData(2, grid.field(-3.0 + 0.5 * np.sin(x1)), grid.constant(-1.0)),
    }


def _write(out, result):
    if out is None:
        return []
    paths = []
    for i, sol in enumerate(result.solutions, start=1):
        paths.append(str(write_solution(Path(out) / f"solution_{i}", sol)))
    Path(out).mkdir(parents=True, exist_ok=True)
    (Path(out) / "summary.txt").write_text(result.report(), encoding="ascii")
    return paths


def demo_neg_kahler_duality(out=None) -> DemoOutcome:
    base = negative_kahler_base()
    result = solve(SklscProblem(base))
    lines = list(result.lines())
    data = {"result": result}
    if len(result) == 2:
        s1, s2 = result[0], result[1]
        n = base.n
        product = (s1.kappa - 1.0) * (s2.kappa - 1.0)
        lines.append(f"dual_product: {product:.12g} (target {(n - 1) ** 2 / n**2:.12g})")
        # both exponents rebuilt from the first ground state
        f1 = s1.f
        f2 = -exponent_multiplier(s2.kappa, n) * s1.phi.map(np.log)
        claimed = (1 - n) * f1
        lines.append(f"exponent_ratio_f2_over_f1: {exponent_multiplier(s2.kappa, n) / exponent_multiplier(s1.kappa, n):.12g}")
        lines.append(f"exponent_claim_max_error: {linf_norm(f2 - claimed):.3e}")
        data.update(product=product, f1=f1, f2=f2, claim_error=linf_norm(f2 - claimed))
    data["paths"] = _write(out, result)
    return DemoOutcome(lines, EXIT_OK if len(result) else EXIT_NO_CROSSING, data)


def demo_warped_instability(out=None) -> DemoOutcome:
    fam = warped_preset()
    report = warped_instability_scan(fam, 50)
    lines = [f"hypothesis {k}: {'pass' if v else 'fail'}" for k, v in report.hypotheses.items()]
    lam = report.scan.lambdas
    lines.append(f"samples: {lam.size}, max lambda0: {lam.max():.6e}")
    lines.append(f"counterexamples: {len(report.counterexamples)}")
    ts = fam.a + (fam.b - fam.a) * np.arange(1, 51) / 51
    crossings = []
    for s in CONTROL_SHIFTS:
        c = largest_crossing(fam.with_shift(s), ts)
        crossings.append(None if c is None else c.param)
        lines.append(f"shift {s:g}: t* = {'none' if c is None else f'{c.param:.10f}'}")
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "warped_scan.csv").write_text(report.scan.to_csv(), encoding="ascii")
    lines.append(f"note: {SYNTHETIC_NOTE}")
    return DemoOutcome(lines, EXIT_OK, {"report": report, "shifts": CONTROL_SHIFTS, "crossings": crossings})


def demo_zero_degree(out=None) -> DemoOutcome:
    result = solve(SklscProblem(zero_degree_base()))
    _write(out, result)
    return DemoOutcome(list(result.lines()), EXIT_OK if len(result) else EXIT_NO_CROSSING, {"result": result})


def demo_pos_degree_balanced(out=None) -> DemoOutcome:
    base = positive_balanced_base()
    result = solve(SklscProblem(base))
    lines = list(result.lines())
    for sol in result:
        pde, integral = verify(sol, base)
        lines.append(f"verify kappa={sol.kappa:.12g}: residual_pde={pde:.3e} residual_integral={integral:.3e}")
    _write(out, result)
    return DemoOutcome(lines, EXIT_OK if len(result) else EXIT_NO_CROSSING, {"result": result, "base": base})


def demo_degenerate_obstruction(out=None) -> DemoOutcome:
    lines, reports = [], {}
    for name, base in degenerate_bases().items():
        rep = degenerate_obstruction_check(base)
        reports[name] = rep
        lines.extend(f"{name} {ln}" for ln in rep.lines())
    lines.append("note: the zero-site count depends on grid resolution")
    lines.append(f"note: {SYNTHETIC_NOTE}")
    return DemoOutcome(lines, EXIT_OK, {"reports": reports})


def geometric_comparison(N: int, amplitude: float = 0.01, kappa: float = 1.0) -> dict:
    """Curvature-route discrepancies on the flat 4-torus for ``f = amplitude sin(x1)``."""
    grid = TorusGrid((N,) * 4)
    x1 = grid.coordinates()[0]
    base = BalancedBaseData.flat(grid, 2)
    f = grid.field(amplitude * np.sin(x1))
    m = HermitianConformalMetric(2, f)
    chern = linf_norm(chern_scalar_direct(m) - chern_scalar_conformal(base, f))
    riem = linf_norm(riemannian_scalar_christoffel(m) - riemannian_scalar_conformal(base, f))
    phi = f.map(lambda v: np.exp(-v / exponent_multiplier(kappa, 2)))
    sol = SklscSolution(kappa, 0.0, 2, phi, f, 0.0, 0.0, "synthetic")
    pde, _ = verify(sol, base)
    geo = verify_geometric(sol, base, "direct")
    return {"N": N, "h": grid.spacing[0], "chern": chern, "riemannian": riem, "verify": pde, "geometric": geo}


def demo_geometric_n2(out=None) -> DemoOutcome:
    rows = [geometric_comparison(N) for N in (8, 12)]
    lines = []
    for r in rows:
        lines.append(
            f"N={r['N']}: chern_discrepancy={r['chern']:.3e} riemannian_discrepancy={r['riemannian']:.3e} "
            f"verify={r['verify']:.6e} verify_geometric={r['geometric']:.6e} "
            f"difference={abs(r['verify'] - r['geometric']):.3e}"
        )
    ideal = (rows[0]["h"] / rows[1]["h"]) ** 2
    for key in ("chern", "riemannian"):
        lines.append(f"{key} refinement ratio: {rows[0][key] / rows[1][key]:.3f} (h^2 ratio {ideal:.3f})")
    lines.append(f"note: {SYNTHETIC_NOTE}")
    return DemoOutcome(lines, EXIT_OK, {"rows": rows})


DEMOS = {
    "neg-kahler-duality": demo_neg_kahler_duality,
    "warped-instability": demo_warped_instability,
    "zero-degree": demo_zero_degree,
    "pos-degree-balanced": demo_pos_degree_balanced,
    "degenerate-obstruction": demo_degenerate_obstruction,
    "geometric-n2": demo_geometric_n2,
}


def run_demo(name: str, out=None) -> DemoOutcome:
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return DEMOS[name](out)
