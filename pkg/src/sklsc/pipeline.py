"""Search for metrics with ``S = 2 kappa S_C`` in a conformal class with a balanced base.

The search scans the ground energy of ``-lap + V_kappa`` over the admissible
scaling constants, bisects every sign change, and turns each zero-energy
ground state ``phi`` into a conformal exponent ``f``. Which sub-regimes are
searched, and which are ruled out a priori, follows the sign of the total
Chern scalar curvature and, for negative sign, the branch of ``Q``.

All runs are synthetic: they certify the eigenvalue problem and the PDE for
the prescribed curvature fields, not the existence of a complex manifold that
realises them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature import (
    BalancedBaseData,
    GauduchonSign,
    HermitianConformalMetric,
    chern_scalar_conformal,
    chern_scalar_direct,
    gauduchon_sign,
    riemannian_scalar_christoffel,
    riemannian_scalar_conformal,
)
from .exceptions import InvalidEigenfunctionError, InvalidFieldError, SolverFailure, UnsupportedMetricError
from .family import (
    DEGENERATE_RADIUS,
    DegenerateReport,
    KappaFamily,
    KappaScan,
    NegativeBranch,
    admissible_regime,
    check_nondegenerate,
    classify_negative_branch,
    degenerate_kappa,
    degenerate_obstruction_check,
    find_zero_crossing,
    kahler_multiplier,
    kappa_samples,
    lambda_curve,
)
from .grid import (
    ScalarField,
    grad_norm_sq,
    integrate,
    laplacian,
    linf_norm,
    read_field,
    write_field,
)
from .spectral import (
    DEFAULT_TOL,
    SchrodingerOperator,
    ground_state,
    poincare_constant,
)

SYNTHETIC_NOTE = (
    "synthetic mode: results certify the eigenvalue problem and PDE for the prescribed "
    "curvature fields, not the existence of a complex manifold realising them"
)
ZERO_DEGREE_SAMPLES = (64, 32, 32)


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and scan sizes of a search.

    ``tol_pde=None`` means ``10 h^2`` with ``h`` the largest grid spacing.
    """

    tol_lambda: float = 1e-8
    tol_p: float = 1e-8
    eig_tol: float = DEFAULT_TOL
    tol_pde: float | None = None
    samples: int = 64
    eps_deg: float = DEGENERATE_RADIUS
    threads: int | None = None

    def pde_tolerance(self, grid) -> float:
        if self.tol_pde is not None:
            return self.tol_pde
        return 10.0 * max(grid.spacing) ** 2


@dataclass(frozen=True)
class SklscProblem:
    """A base plus either ``regime="auto"`` or an explicit ``(lo, hi)`` interval."""

    base: BalancedBaseData
    regime: str | tuple[float, float] = "auto"
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.regime != "auto":
            lo, hi = (float(v) for v in self.regime)
            if not lo < hi:
                raise ValueError(f"regime interval needs lo < hi, got ({lo}, {hi})")
            object.__setattr__(self, "regime", (lo, hi))


@dataclass(frozen=True)
class SklscSolution:
    kappa: float
    lambda0: float
    n: int
    phi: ScalarField = field(repr=False)
    f: ScalarField = field(repr=False)
    residual_pde: float
    residual_integral: float
    regime: str
    branch: str | None = None

    def __post_init__(self):
        if self.phi.min() <= 0:
            raise InvalidEigenfunctionError("solution ground state must be positive")
        check_nondegenerate(self.kappa, self.n)


@dataclass
class SolveResult:
    """Solutions plus everything needed to explain an empty answer."""

    sign: GauduchonSign
    solutions: list[SklscSolution]
    scans: dict[str, KappaScan]
    branch: str | None = None
    obstruction: str | None = None
    notes: list[str] = field(default_factory=list)
    anomalies: list[str] = field(default_factory=list)
    degenerate: DegenerateReport | None = None

    def __iter__(self):
        return iter(self.solutions)

    def __len__(self):
        return len(self.solutions)

    def __getitem__(self, i):
        return self.solutions[i]

    def lines(self):
        yield f"gauduchon_sign: {self.sign.value}"
        if self.branch:
            yield f"branch: {self.branch}"
        for name, scan in self.scans.items():
            yield f"scan {name}: {len(scan.samples)} samples, {len(scan.crossings)} sign changes"
        for sol in self.solutions:
            yield (
                f"solution: kappa={sol.kappa:.12g} lambda0={sol.lambda0:.3e} "
                f"residual_pde={sol.residual_pde:.3e} residual_integral={sol.residual_integral:.3e} "
                f"regime={sol.regime}"
            )
        if not self.solutions:
            yield f"no solution: {self.obstruction or 'no sign change of lambda0 in the searched regimes'}"
        if self.degenerate is not None:
            for ln in self.degenerate.lines():
                yield f"degenerate {ln}"
        for note in self.notes:
            yield f"note: {note}"
        for a in self.anomalies:
            yield f"anomaly: {a}"
        yield f"note: {SYNTHETIC_NOTE}"

    def report(self) -> str:
        return "\n".join(self.lines()) + "\n"


def exponent_multiplier(kappa: float, n: int) -> float:
    """``c`` in ``f = -c log phi``: ``(2n-1-n kappa) / ((2n-1)(n-1))``."""
    return (2 * n - 1 - n * kappa) / ((2 * n - 1) * (n - 1))


def reconstruct_exponent(phi: ScalarField, kappa: float, n: int) -> ScalarField:
    """Conformal exponent ``f`` with ``e^{-2f} = phi^(2 c)``, ``c = exponent_multiplier``."""
    check_nondegenerate(kappa, n)
    if phi.min() <= 0:
        raise InvalidEigenfunctionError(
            f"ground state must be positive everywhere, min is {phi.min():.3e}"
        )
    return -exponent_multiplier(kappa, n) * phi.map(np.log)


def pde_residual_field(f: ScalarField, kappa: float, base: BalancedBaseData) -> ScalarField:
    """``(2n-1-n kappa) lap f - (2n-1)(n-1) |grad f|^2 + (S_b - 2 kappa SC_b) / 2``."""
    n = base.n
    return (
        (2 * n - 1 - n * kappa) * laplacian(f)
        - (2 * n - 1) * (n - 1) * grad_norm_sq(f)
        + 0.5 * (base.S_b - 2.0 * kappa * base.SC_b)
    )


def verify(sol: SklscSolution, base: BalancedBaseData) -> tuple[float, float]:
    """Dimensionless PDE and integral-identity residuals of a solution.

    Returns ``(max|pde| / scale, |int |grad f|^2 - int(S_b - 2 kappa SC_b)/(2(2n-1)(n-1))| / (vol scale))``.
    """
    return _residuals(sol.f, sol.kappa, base)


def _residuals(f, kappa, base):
    n = base.n
    scale = base.scale
    pde = linf_norm(pde_residual_field(f, kappa, base)) / scale
    lhs = integrate(grad_norm_sq(f))
    rhs = integrate(base.S_b - 2.0 * kappa * base.SC_b) / (2.0 * (2 * n - 1) * (n - 1))
    return pde, abs(lhs - rhs) / (base.grid.volume * scale)


def verify_geometric(sol: SklscSolution, base: BalancedBaseData, method: str = "direct") -> float:
    """Check ``S = 2 kappa S_C`` on the metric ``e^{-2f} g_b`` itself.

    ``method="direct"`` builds the metric (``g_b`` must be flat) and computes
    both curvatures from its components; ``method="formula"`` uses the
    conformal transformation laws. The conformal weight is removed,
    ``max|e^{-2f} (S - 2 kappa S_C) / 2| / scale``, so the value is comparable
    with the PDE residual of ``verify``.
    """
    f = sol.f
    if f.grid.d != 2 * base.n:
        raise UnsupportedMetricError(f"geometric check needs a {2 * base.n}-dimensional grid")
    if method == "direct":
        if linf_norm(base.S_b) > 0 or linf_norm(base.SC_b) > 0:
            raise UnsupportedMetricError("direct curvature route needs the flat base")
        m = HermitianConformalMetric(base.n, f)
        S, SC = riemannian_scalar_christoffel(m), chern_scalar_direct(m)
    elif method == "formula":
        S, SC = riemannian_scalar_conformal(base, f), chern_scalar_conformal(base, f)
    else:
        raise ValueError(f"unknown method {method!r}")
    weighted = 0.5 * (S - 2.0 * sol.kappa * SC) * f.map(lambda v: np.exp(-2.0 * v))
    return linf_norm(weighted) / base.scale


def _interval_label(lo, hi):
    def fmt(v):
        return "inf" if v == math.inf else "-inf" if v == -math.inf else f"{v:.6g}"

    return f"({fmt(lo)}, {fmt(hi)})"


def _sub_intervals(lo, hi, kd, eps):
    """Split ``(lo, hi)`` at the degenerate band."""
    if lo < kd < hi:
        return [(lo, kd), (kd, hi)]
    return [(lo, hi)]


def _scan_interval(fam, interval, count, settings):
    lo, hi = interval
    params = kappa_samples(interval, count)
    scan = lambda_curve(fam, params, tol=settings.eig_tol, threads=settings.threads)
    bad = scan.failures()
    if bad:
        raise SolverFailure(
            f"ground state failed at kappa={bad[0]!r}",
            {"kappa": bad[0], "failed_samples": len(bad), "regime": _interval_label(lo, hi)},
        )
    return scan


def _refine(fam, scan, label, base, settings, branch):
    out = []
    for bracket in scan.crossings:
        c = find_zero_crossing(
            fam, bracket, settings.tol_lambda, settings.tol_p, tol=settings.eig_tol
        )
        phi = c.state.phi
        f = reconstruct_exponent(phi, c.param, base.n)
        pde, integral = _residuals(f, c.param, base)
        out.append(SklscSolution(c.param, c.lambda0, base.n, phi, f, pde, integral, label, branch))
    return out


def _plan(base: BalancedBaseData, sign: GauduchonSign):
    """Decide which sub-regimes may hold solutions.

    Returns ``(allowed, evidence_only, branch, obstruction, degenerate_report)``
    where ``evidence_only`` intervals are scanned but never refined.
    """
    n = base.n
    kd = degenerate_kappa(n)
    lower, upper = (1.0, kd), (kd, math.inf)
    if sign is GauduchonSign.ZERO:
        return [], [(-math.inf, 1.0), lower, upper], None, "zero Gauduchon degree admits no solution with kappa != 1", None
    if sign is GauduchonSign.POSITIVE:
        neg = (-math.inf, 1.0)
        if base.is_kahler and base.SC_b.min() >= 0:
            return [], [neg], None, "Kahler base with SC_b >= 0: integration rules out non-Kahler solutions", None
        if base.is_kahler and bound_obstructs(base):
            return [], [neg], None, "positivity bound rules out every kappa < 1", None
        return [neg], [], None, None, None
    if base.is_kahler:
        if base.SC_b.max() > 0:
            return [lower, upper], [], None, None, None
        rep = degenerate_obstruction_check(base)
        reason = "Kahler base with SC_b <= 0: only the degenerate constant is possible"
        if not rep.passes:
            reason += ", and its necessary conditions fail"
        return [], [lower, upper], None, reason, rep
    cls = classify_negative_branch(base)
    b = cls.branch
    if b is NegativeBranch.B1A:
        return [lower, upper], [], b.value, None, None
    if b in (NegativeBranch.B1B, NegativeBranch.B3):
        return [lower], [upper], b.value, None, None
    if b is NegativeBranch.B2A:
        return [upper], [lower], b.value, None, None
    if b is NegativeBranch.B2B:
        return [], [lower, upper], b.value, "the balanced base itself is the unique solution, at the degenerate constant", None
    rep = degenerate_obstruction_check(base)
    reason = "contact point of Q: only the degenerate constant is possible"
    if not rep.passes:
        reason += ", and its necessary conditions fail"
    return [], [lower, upper], b.value, reason, rep


def solve(problem: SklscProblem) -> SolveResult:
    """Locate every scaling constant with zero ground energy in the admissible regimes.

    Sub-regimes ruled out a priori are still scanned as evidence; sign changes
    found there are reported as anomalies instead of solutions.

    Raises
    ------
    SolverFailure
        If any ground state fails to converge; ``diagnostics["kappa"]`` names it.
    """
    base, settings = problem.base, problem.settings
    fam = KappaFamily(base, settings.eps_deg)
    sign = gauduchon_sign(base)
    kd = degenerate_kappa(base.n)
    result = SolveResult(sign, [], {})

    if problem.regime != "auto":
        lo, hi = problem.regime
        for iv in _sub_intervals(lo, hi, kd, settings.eps_deg):
            label = _interval_label(*iv)
            scan = _scan_interval(fam, iv, settings.samples, settings)
            result.scans[label] = scan
            result.solutions.extend(_refine(fam, scan, label, base, settings, None))
        regime = admissible_regime(sign, base.n)
        for sol in result.solutions:
            if sol.kappa not in regime:
                result.anomalies.append(f"kappa={sol.kappa:.12g} lies outside the admissible regime")
        return result

    allowed, evidence, branch, obstruction, rep = _plan(base, sign)
    result.branch, result.obstruction, result.degenerate = branch, obstruction, rep
    counts = dict(zip([(-math.inf, 1.0), (1.0, kd), (kd, math.inf)], ZERO_DEGREE_SAMPLES))
    for iv in allowed + evidence:
        count = counts[iv] if sign is GauduchonSign.ZERO else settings.samples
        label = _interval_label(*iv)
        scan = _scan_interval(fam, iv, count, settings)
        result.scans[label] = scan
        if iv in allowed:
            result.solutions.extend(_refine(fam, scan, label, base, settings, branch))
        else:
            for lo, hi in scan.crossings:
                result.anomalies.append(f"sign change of lambda0 in ruled-out regime {label}: ({lo:.6g}, {hi:.6g})")
    if sign is GauduchonSign.ZERO:
        lam = np.concatenate([s.lambdas for s in result.scans.values()])
        result.notes.append(
            f"zero-degree evidence: max lambda0 over {lam.size} sampled kappa = {lam.max():.3e}"
        )
    if branch == NegativeBranch.B1A.value:
        result.notes.append("branch 1a: the lower sub-regime is scanned but completeness there is not claimed")
    tol_pde = settings.pde_tolerance(base.grid)
    for sol in result.solutions:
        if sol.residual_pde > tol_pde:
            result.anomalies.append(
                f"kappa={sol.kappa:.12g}: residual_pde {sol.residual_pde:.3e} exceeds {tol_pde:.3e}"
            )
    return result


@dataclass(frozen=True)
class BridgeReport:
    kappa: float
    multiplier: float
    multiplier_closed_form: float
    status: str
    lambda0: float | None = None
    bound_value: float | None = None
    sklsc_factor: ScalarField | None = field(default=None, repr=False)
    scalar_flat_factor: ScalarField | None = field(default=None, repr=False)

    def lines(self):
        yield f"kappa: {self.kappa:.17g}"
        yield f"multiplier: {self.multiplier:.17g}"
        yield f"multiplier_closed_form: {self.multiplier_closed_form:.17g}"
        if self.bound_value is not None:
            yield f"bound_value: {self.bound_value:.17g}"
        if self.lambda0 is not None:
            yield f"lambda0: {self.lambda0:.17g}"
        yield f"status: {self.status}"
        yield f"note: {SYNTHETIC_NOTE}"


def positive_kahler_bound(base: BalancedBaseData) -> float | None:
    """``int SC / (P max|SC| (4 vol max|SC| + int SC))`` for sign-changing ``SC_b``.

    When this is at least ``(2n-1)/(4n)`` no solution with ``kappa < 1`` exists.
    """
    SC = base.SC_b
    total = integrate(SC)
    if not (SC.min() < 0 < SC.max()) or total <= 0:
        return None
    P = poincare_constant(base.grid, method="symbol").P
    vmax = linf_norm(SC)
    return total / (P * vmax * (4.0 * base.grid.volume * vmax + total))


def scalar_flat_bridge(base: BalancedBaseData, tol: float = 1e-8, eig_tol: float = DEFAULT_TOL) -> BridgeReport:
    """Compare the problem at ``kappa = (2n-1)/n^2`` with the scalar-flat problem.

    At this constant the Kahler-base potential is ``(n-1)/(2n-1) SC``, the
    Yamabe potential of a scalar-flat metric. If ``lambda0`` vanishes there,
    both conformal factors are returned: ``phi^(2/n)`` and ``phi^(2/(n-1))``.
    """
    if not base.is_kahler:
        raise UnsupportedMetricError("the scalar-flat comparison needs a Kahler base")
    n = base.n
    kappa = (2 * n - 1) / n**2
    mult = kahler_multiplier(kappa, n)
    closed = (n - 1) / (2 * n - 1)
    if base.SC_b.min() >= 0:
        return BridgeReport(kappa, mult, closed, "no non-Kahler solution possible (SC_b >= 0)")
    ratio = positive_kahler_bound(base)
    if ratio is not None and (2 * n - 1) / (4 * n) <= ratio:
        return BridgeReport(kappa, mult, closed, "obstructed by bound", bound_value=ratio)
    gs = ground_state(SchrodingerOperator(mult * base.SC_b), tol=eig_tol)
    if abs(gs.lambda0) > tol:
        return BridgeReport(kappa, mult, closed, "lambda0 nonzero at bridge constant", gs.lambda0, ratio)
    return BridgeReport(
        kappa,
        mult,
        closed,
        "lambda0 zero at bridge constant",
        gs.lambda0,
        ratio,
        gs.phi.map(lambda v: v ** (2.0 / n)),
        gs.phi.map(lambda v: v ** (2.0 / (n - 1))),
    )


def bound_obstructs(base: BalancedBaseData) -> bool:
    """True when the positivity bound already rules out every ``kappa < 1``."""
    ratio = positive_kahler_bound(base)
    return ratio is not None and (2 * base.n - 1) / (4 * base.n) <= ratio


META_KEYS = ("kappa", "lambda0", "n", "residual_pde", "residual_integral", "regime", "branch")


def write_solution(directory, sol: SklscSolution) -> Path:
    """Write ``solution.meta``, ``phi.field`` and ``f.field`` into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    meta = [
        f"kappa: {sol.kappa:.17g}",
        f"lambda0: {sol.lambda0:.17g}",
        f"n: {sol.n}",
        f"residual_pde: {sol.residual_pde:.17g}",
        f"residual_integral: {sol.residual_integral:.17g}",
        f"regime: {sol.regime}",
        f"branch: {sol.branch or 'none'}",
        f"note: {SYNTHETIC_NOTE}",
    ]
    (out / "solution.meta").write_text("\n".join(meta) + "\n", encoding="ascii")
    write_field(out / "phi.field", sol.phi)
    write_field(out / "f.field", sol.f)
    return out


def read_solution(directory) -> SklscSolution:
    src = Path(directory)
    meta = {}
    for line in (src / "solution.meta").read_text(encoding="ascii").splitlines():
        key, sep, value = line.partition(":")
        if sep:
            meta[key.strip()] = value.strip()
    missing = [k for k in META_KEYS if k not in meta]
    if missing:
        raise InvalidFieldError(f"{src}/solution.meta lacks {', '.join(missing)}")
    phi, f = read_field(src / "phi.field"), read_field(src / "f.field")
    return SklscSolution(
        kappa=float(meta["kappa"]),
        lambda0=float(meta["lambda0"]),
        n=int(meta["n"]),
        phi=phi,
        f=f,
        residual_pde=float(meta["residual_pde"]),
        residual_integral=float(meta["residual_integral"]),
        regime=meta["regime"],
        branch=None if meta["branch"] == "none" else meta["branch"],
    )
