"""One-parameter Schrodinger families, lambda0 curves and their zero crossings.

Two families are provided:

* ``KappaFamily`` -- the operators ``-lap + V_kappa`` whose zero ground
  energy encodes a conformal metric with ``S = 2 kappa S_C``;
* ``WarpedFamily`` -- ``-lap + f(t) (V1 + h(t) (V2 + s))``, a scaled and
  warped pair of fixed potentials with an optional constant shift ``s``.

Both expose ``potential(p)`` and ``admissible(p)`` so that scans and
bisection work on either.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .curvature import BalancedBaseData, GauduchonSign
from .exceptions import BracketError, DegenerateKappaError, SolverFailure
from .grid import ScalarField, integrate, linf_norm
from .spectral import DEFAULT_TOL, GroundState, SchrodingerOperator, ground_state

DEGENERATE_RADIUS = 1e-3
ZERO_INTEGRAL_RTOL = 1e-8
CONTACT_Q_RTOL = 1e-8
CONTACT_NONZERO_RTOL = 1e-6
MONOTONE_SAMPLES = 1024


def degenerate_kappa(n: int) -> float:
    return (2 * n - 1) / n


def potential_coefficient(kappa: float, n: int) -> float:
    """``(2n-1)(n-1) / (2 (n kappa + 1 - 2n)^2)``."""
    return (2 * n - 1) * (n - 1) / (2.0 * (n * kappa + 1 - 2 * n) ** 2)


def kahler_multiplier(kappa: float, n: int) -> float:
    """Multiplier of ``S_C`` in ``V_kappa`` when the base is Kahler.

    ``(1 - kappa)(2n-1)(n-1) / (n kappa + 1 - 2n)^2``; over ``kappa < 1`` its
    maximum ``(2n-1)/(4n)`` sits at ``kappa = 1/n``.
    """
    return (1 - kappa) * (2 * n - 1) * (n - 1) / (n * kappa + 1 - 2 * n) ** 2


def check_nondegenerate(kappa: float, n: int, eps: float = DEGENERATE_RADIUS) -> None:
    kd = degenerate_kappa(n)
    if abs(kappa - kd) < eps:
        raise DegenerateKappaError(
            f"kappa={kappa!r} is within {eps} of the degenerate value {kd!r}"
        )


def sklsc_potential(base: BalancedBaseData, kappa: float, eps: float = DEGENERATE_RADIUS) -> ScalarField:
    """``V_kappa = (2n-1)(n-1) / (2 (n kappa + 1 - 2n)^2) * (S_b - 2 kappa SC_b)``."""
    check_nondegenerate(kappa, base.n, eps)
    return potential_coefficient(kappa, base.n) * (base.S_b - 2.0 * kappa * base.SC_b)


def kappa_dual(kappa1: float, n: int) -> float:
    """Partner scaling constant with the same Kahler-base potential.

    Solves ``(kappa1 - 1)(kappa2 - 1) = (n-1)^2 / n^2``. The map is an
    involution exchanging ``(1, (2n-1)/n)`` and ``((2n-1)/n, inf)``.
    """
    kd = degenerate_kappa(n)
    if not kappa1 > 1 or kappa1 == kd:
        raise ValueError(f"kappa_dual needs kappa1 in (1, {kd}) or ({kd}, inf), got {kappa1!r}")
    return 1.0 + (n - 1) ** 2 / (n**2 * (kappa1 - 1.0))


@dataclass(frozen=True)
class Regime:
    """Admissible scaling constants as a union of open intervals."""

    sign: GauduchonSign
    intervals: tuple[tuple[float, float], ...]

    @property
    def empty(self) -> bool:
        return not self.intervals

    def __contains__(self, kappa):
        return any(lo < kappa < hi for lo, hi in self.intervals)


def admissible_regime(sign: GauduchonSign, n: int = 2) -> Regime:
    kd = degenerate_kappa(n)
    if sign is GauduchonSign.NEGATIVE:
        return Regime(sign, ((1.0, kd), (kd, math.inf)))
    if sign is GauduchonSign.POSITIVE:
        return Regime(sign, ((-math.inf, 1.0),))
    return Regime(sign, ())


@dataclass(frozen=True)
class KappaFamily:
    base: BalancedBaseData
    eps_deg: float = DEGENERATE_RADIUS

    @property
    def grid(self):
        return self.base.grid

    @property
    def degenerate(self) -> float:
        return self.base.degenerate_kappa

    def admissible(self, kappa: float) -> bool:
        return abs(kappa - self.degenerate) >= self.eps_deg and math.isfinite(kappa)

    def potential(self, kappa: float) -> ScalarField:
        return sklsc_potential(self.base, kappa, self.eps_deg)

    def separated(self, lo: float, hi: float) -> bool:
        """True if the degenerate constant lies between ``lo`` and ``hi``."""
        return min(lo, hi) < self.degenerate < max(lo, hi)


@dataclass(frozen=True)
class WarpedFamily:
    """``-lap + f(t) (V1 + h(t) (V2 + shift))`` for ``t`` in ``(a, b)``.

    ``C_f_a``, ``C_h_a`` and ``C_h_b`` are the one-sided limits of ``f`` at
    ``a`` and of ``h`` at ``a`` and ``b``; they are supplied, not computed.
    """

    V1: ScalarField
    V2: ScalarField
    f: Callable[[float], float]
    h: Callable[[float], float]
    a: float
    b: float
    C_f_a: float
    C_h_a: float
    C_h_b: float
    shift: float = 0.0

    @property
    def grid(self):
        return self.V1.grid

    def admissible(self, t: float) -> bool:
        return self.a < t < self.b

    def potential(self, t: float) -> ScalarField:
        if not self.admissible(t):
            raise ValueError(f"t={t!r} outside ({self.a}, {self.b})")
        return float(self.f(t)) * (self.V1 + float(self.h(t)) * (self.V2 + self.shift))

    def with_shift(self, s: float) -> WarpedFamily:
        return replace(self, shift=float(s))

    def limit_potential(self) -> ScalarField:
        """``V1 + C_h(b) (V2 + shift)``, the warped potential at the far end."""
        return self.V1 + self.C_h_b * (self.V2 + self.shift)

    def check_hypotheses(self) -> dict[str, bool]:
        """Evaluate the standing assumptions on ``f``, ``h``, ``V1`` and ``V2``.

        Positivity of ``f``, ``h`` and strict monotonicity of ``h`` are checked
        on 1024 interior samples.
        """
        ts = self.a + (self.b - self.a) * (np.arange(1, MONOTONE_SAMPLES + 1) / (MONOTONE_SAMPLES + 1))
        fv = np.array([float(self.f(t)) for t in ts])
        hv = np.array([float(self.h(t)) for t in ts])
        V2s = self.V2 + self.shift
        return {
            "f_positive": bool(np.all(np.isfinite(fv)) and np.all(fv > 0)),
            "h_positive": bool(np.all(np.isfinite(hv)) and np.all(hv > 0)),
            "h_increasing": bool(np.all(np.diff(hv) > 0)),
            "V1_le_V2": bool(np.all(self.V1.values <= V2s.values)),
            "negative_start_integral": integrate(self.V1 + self.C_h_a * V2s) < 0,
        }

    def validate(self) -> None:
        failed = [k for k, ok in self.check_hypotheses().items() if not ok]
        if failed:
            raise ValueError(f"warped family violates: {', '.join(failed)}")


@dataclass(frozen=True)
class ScanSample:
    param: float
    lambda0: float
    residual: float
    converged: bool


@dataclass(frozen=True)
class KappaScan:
    samples: tuple[ScanSample, ...]
    crossings: tuple[tuple[float, float], ...]

    @property
    def params(self) -> np.ndarray:
        return np.array([s.param for s in self.samples])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lambda0 for s in self.samples])

    @property
    def all_converged(self) -> bool:
        return all(s.converged for s in self.samples)

    def failures(self) -> list[float]:
        return [s.param for s in self.samples if not s.converged]

    def to_csv(self) -> str:
        lines = ["param,lambda0,residual,converged"]
        for s in self.samples:
            lines.append(f"{s.param:.17g},{s.lambda0:.17g},{s.residual:.17g},{str(s.converged).lower()}")
        for lo, hi in self.crossings:
            lines.append(f"# crossing {lo:.17g} {hi:.17g}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def merge(scans: Sequence[KappaScan]) -> KappaScan:
        samples = sorted((s for sc in scans for s in sc.samples), key=lambda s: s.param)
        crossings = sorted(c for sc in scans for c in sc.crossings)
        return KappaScan(tuple(samples), tuple(crossings))


def scan_threads() -> int:
    env = os.environ.get("SKLSC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _solve_sample(fam, p, tol):
    try:
        gs = ground_state(SchrodingerOperator(fam.potential(p)), tol=tol)
    except SolverFailure as exc:
        return ScanSample(float(p), math.nan, float(exc.diagnostics.get("residual", math.nan)), False)
    return ScanSample(float(p), gs.lambda0, gs.residual, True)


def _crossings(fam, samples):
    out = []
    for s0, s1 in zip(samples, samples[1:]):
        if not (s0.converged and s1.converged):
            continue
        if isinstance(fam, KappaFamily) and fam.separated(s0.param, s1.param):
            continue
        if s0.lambda0 * s1.lambda0 < 0 or s1.lambda0 == 0.0:
            out.append((s0.param, s1.param))
    return tuple(out)


def lambda_curve(fam, params: Sequence[float], tol: float = DEFAULT_TOL, threads: int | None = None) -> KappaScan:
    """Sample ``lambda0`` over ``params`` and locate sign changes.

    Parameters inside the degenerate band of a ``KappaFamily`` (or outside a
    warped family's interval) are dropped. Solver failures are recorded as
    unconverged samples rather than raised. Samples may be computed
    concurrently (``SKLSC_THREADS``); the result does not depend on it.
    """
    ps = sorted({float(p) for p in params if fam.admissible(float(p))})
    workers = threads or scan_threads()
    if workers > 1 and len(ps) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(lambda p: _solve_sample(fam, p, tol), ps))
    else:
        samples = [_solve_sample(fam, p, tol) for p in ps]
    return KappaScan(tuple(samples), _crossings(fam, samples))


@dataclass(frozen=True)
class Crossing:
    """A parameter where the ground energy vanishes, with its ground state."""

    param: float
    lambda0: float
    width: float
    state: GroundState = field(repr=False)


def _lambda(fam, p, tol):
    return ground_state(SchrodingerOperator(fam.potential(p)), tol=tol)


def find_zero_crossing(
    fam,
    bracket: tuple[float, float],
    tol_lambda: float = 1e-8,
    tol_p: float = 1e-8,
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
) -> Crossing:
    """Bisect ``lambda0`` on ``bracket`` down to ``|lambda0| <= tol_lambda``.

    The returned parameter lies in a final bracket of width ``<= tol_p``.
    For a ``KappaFamily`` a bracket containing the degenerate constant is
    split at the excluded band and each side searched in turn.
    """
    lo, hi = sorted(float(x) for x in bracket)
    if isinstance(fam, KappaFamily) and fam.separated(lo, hi):
        # a hair outside the band so round-off cannot land an endpoint inside it
        kd, eps = fam.degenerate, fam.eps_deg * (1.0 + 1e-9)
        errors = []
        for sub in ((lo, kd - eps), (kd + eps, hi)):
            if sub[0] < sub[1]:
                try:
                    return find_zero_crossing(fam, sub, tol_lambda, tol_p, tol, max_iter)
                except BracketError as exc:
                    errors.append(str(exc))
        raise BracketError("no sign change on either side of the degenerate band: " + "; ".join(errors))

    g_lo, g_hi = _lambda(fam, lo, tol), _lambda(fam, hi, tol)
    if g_lo.lambda0 == 0.0:
        return Crossing(lo, 0.0, 0.0, g_lo)
    if g_hi.lambda0 == 0.0:
        return Crossing(hi, 0.0, 0.0, g_hi)
    if g_lo.lambda0 * g_hi.lambda0 > 0:
        raise BracketError(
            f"lambda0 has the same sign at both ends: {g_lo.lambda0:.3e} at {lo!r}, {g_hi.lambda0:.3e} at {hi!r}"
        )
    f_lo = g_lo.lambda0
    best = g_lo if abs(g_lo.lambda0) < abs(g_hi.lambda0) else g_hi
    best_p = lo if best is g_lo else hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = _lambda(fam, mid, tol)
        if abs(g_mid.lambda0) <= abs(best.lambda0):
            best, best_p = g_mid, mid
        if g_mid.lambda0 == 0.0:
            return Crossing(mid, 0.0, hi - lo, g_mid)
        if (g_mid.lambda0 < 0) == (f_lo < 0):
            lo, f_lo = mid, g_mid.lambda0
        else:
            hi = mid
        if abs(g_mid.lambda0) <= tol_lambda and hi - lo <= tol_p:
            return Crossing(mid, g_mid.lambda0, hi - lo, g_mid)
    return Crossing(best_p, best.lambda0, hi - lo, best)


def kappa_samples(interval: tuple[float, float], count: int) -> np.ndarray:
    """Scan points inside an open interval of scaling constants.

    Bounded intervals get ``count`` uniform interior points; half-lines are
    covered by ``boundary +- tan(theta)`` with ``theta`` uniform in
    ``(0, pi/2)``, which concentrates points near the finite end.
    """
    lo, hi = interval
    j = np.arange(1, count + 1) / (count + 1)
    if math.isfinite(lo) and math.isfinite(hi):
        return lo + (hi - lo) * j
    theta = 0.5 * math.pi * j
    if math.isfinite(lo):
        return lo + np.tan(theta)
    if math.isfinite(hi):
        return np.sort(hi - np.tan(theta))
    raise ValueError("interval must have at least one finite end")


class NegativeBranch(enum.Enum):
    B1A = "1a"
    B1B = "1b"
    B1C = "1c"
    B2A = "2a"
    B2B = "2b"
    B3 = "3"


@dataclass(frozen=True)
class BranchClassification:
    branch: NegativeBranch
    integral_Q: float
    changes_sign: bool
    contact_sites: int

    @property
    def tag(self) -> str:
        return self.branch.value


def _zero_band(Q: ScalarField, rtol: float) -> float:
    return rtol * max(linf_norm(Q), np.finfo(float).tiny)


def classify_negative_branch(
    base: BalancedBaseData,
    zero_rtol: float = ZERO_INTEGRAL_RTOL,
    q_rtol: float = CONTACT_Q_RTOL,
    nonzero_rtol: float = CONTACT_NONZERO_RTOL,
) -> BranchClassification:
    """Sort a negative-degree base by ``Q = S_b - 2 (2n-1)/n SC_b``.

    ``|int Q| <= zero_rtol * vol * max|Q|`` counts as zero. A contact site has
    ``|Q| <= q_rtol * max|Q|`` while both ``|S_b|`` and ``|SC_b|`` exceed
    ``nonzero_rtol * max(max|S_b|, max|SC_b|)``.
    """
    Q = base.critical_potential()
    total = integrate(Q)
    tol_q = _zero_band(Q, q_rtol)
    changes = Q.min() < -tol_q and Q.max() > tol_q
    tol_nz = nonzero_rtol * max(linf_norm(base.S_b), linf_norm(base.SC_b))
    contact = (
        (np.abs(Q.values) <= tol_q)
        & (np.abs(base.S_b.values) > tol_nz)
        & (np.abs(base.SC_b.values) > tol_nz)
    )
    n_contact = int(contact.sum())
    if abs(total) <= zero_rtol * base.grid.volume * max(linf_norm(Q), np.finfo(float).tiny):
        branch = NegativeBranch.B2A if changes else NegativeBranch.B2B
    elif total > 0:
        if changes:
            branch = NegativeBranch.B1A
        else:
            branch = NegativeBranch.B1C if n_contact else NegativeBranch.B1B
    else:
        branch = NegativeBranch.B3
    return BranchClassification(branch, total, bool(changes), n_contact)


@dataclass(frozen=True)
class InstabilityReport:
    scan: KappaScan
    hypotheses: dict
    counterexamples: tuple[float, ...]

    @property
    def all_negative(self) -> bool:
        return self.scan.all_converged and not self.counterexamples


def warped_hypotheses(fam: WarpedFamily, q_rtol: float = CONTACT_Q_RTOL, nonzero_rtol: float = CONTACT_NONZERO_RTOL) -> dict:
    """Standing assumptions plus the contact-point condition at ``t -> b``."""
    hyp = fam.check_hypotheses()
    W = fam.limit_potential()
    V2s = fam.V2 + fam.shift
    tol_w = _zero_band(W, q_rtol)
    tol_nz = nonzero_rtol * max(linf_norm(fam.V1), linf_norm(V2s))
    hyp["limit_nonnegative"] = bool(W.min() >= -tol_w)
    contact = (
        (np.abs(W.values) <= tol_w)
        & (np.abs(fam.V1.values) > tol_nz)
        & (np.abs(V2s.values) > tol_nz)
    )
    hyp["contact_point"] = bool(contact.any())
    return hyp


def warped_instability_scan(fam: WarpedFamily, samples: int = 50, tol: float = DEFAULT_TOL, threads=None) -> InstabilityReport:
    """Scan ``lambda0(t)`` on ``samples`` uniform interior points of ``(a, b)``.

    Every converged sample with ``lambda0 >= 0`` is listed as a
    counterexample to strict negativity; the hypotheses are evaluated and
    reported, not enforced.
    """
    ts = fam.a + (fam.b - fam.a) * np.arange(1, samples + 1) / (samples + 1)
    scan = lambda_curve(fam, ts, tol=tol, threads=threads)
    bad = tuple(s.param for s in scan.samples if s.converged and s.lambda0 >= 0)
    return InstabilityReport(scan, warped_hypotheses(fam), bad)


def largest_crossing(fam, params, tol_lambda=1e-8, tol_p=1e-8, tol=DEFAULT_TOL) -> Crossing | None:
    """Bisect the last sign change of a scan, i.e. the greatest zero found."""
    scan = lambda_curve(fam, params, tol=tol)
    if not scan.crossings:
        return None
    return find_zero_crossing(fam, scan.crossings[-1], tol_lambda, tol_p, tol)


@dataclass(frozen=True)
class DegenerateReport:
    """Necessary conditions for a solution at ``kappa = (2n-1)/n``."""

    kappa: float
    sc_nonpositive: bool
    sc_not_identically_zero: bool
    rhs_nonnegative: bool
    zero_site_count: int
    vanishes_twice: bool

    @property
    def passes(self) -> bool:
        return (
            self.sc_nonpositive
            and self.sc_not_identically_zero
            and self.rhs_nonnegative
            and self.vanishes_twice
        )

    def lines(self):
        yield f"kappa: {self.kappa:.17g}"
        for key in ("sc_nonpositive", "sc_not_identically_zero", "rhs_nonnegative", "vanishes_twice"):
            yield f"{key}: {'pass' if getattr(self, key) else 'fail'}"
        yield f"zero_site_count: {self.zero_site_count}"
        yield f"passes: {self.passes}"


def degenerate_obstruction_check(base: BalancedBaseData, rtol: float = CONTACT_Q_RTOL) -> DegenerateReport:
    """Evaluate the obstructions to ``|grad f|^2 = Q / (2(2n-1)(n-1))``.

    A classical solution needs ``Q >= 0`` and ``SC_b <= 0``, not identically
    zero, and ``Q`` must vanish at the extrema of ``f``; on the lattice that is
    read as at least two sites with ``|Q| <= rtol * max|Q|``, which depends on
    grid resolution.
    """
    Q = base.critical_potential()
    tol_q = _zero_band(Q, rtol)
    tol_sc = rtol * max(linf_norm(base.SC_b), np.finfo(float).tiny)
    zeros = int((np.abs(Q.values) <= tol_q).sum())
    return DegenerateReport(
        kappa=base.degenerate_kappa,
        sc_nonpositive=bool(base.SC_b.max() <= tol_sc),
        sc_not_identically_zero=bool(linf_norm(base.SC_b) > 0),
        rhs_nonnegative=bool(Q.min() >= -tol_q),
        zero_site_count=zeros,
        vanishes_twice=zeros >= 2,
    )
