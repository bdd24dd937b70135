"""Ground states of discrete Schrodinger operators ``-lap + V`` on tori."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import check_positive_scalar, check_same_grid
from .exceptions import SolverFailure
from .grid import ScalarField, TorusGrid, dirichlet_energy, integrate, inner, laplacian, linf_norm

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1000
# Above this many sites (or beyond 2-D) the shifted solves use FFT-preconditioned
# CG instead of sparse LU, whose fill-in grows badly in 3-D and 4-D.
DIRECT_SITE_LIMIT = 4096
DENSE_SITE_LIMIT = 4096
# LOBPCG needs several times more sites than its block size
SMALL_POINCARE_SITES = 64
# extra steps after the residual target is met, while each still halves it
POLISH_STEPS = 3


@dataclass(frozen=True)
class SchrodingerOperator:
    """``L = -lap + V`` on the grid of ``V``."""

    V: ScalarField

    @property
    def grid(self) -> TorusGrid:
        return self.V.grid

    def matrix(self) -> sp.csc_matrix:
        return (-self.grid.laplacian_matrix() + sp.diags(self.V.ravel())).tocsc()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def apply(self, u: ScalarField) -> ScalarField:
        check_same_grid(self.V, u)
        return -laplacian(u) + self.V * u

    def shifted(self, c: float) -> SchrodingerOperator:
        return SchrodingerOperator(self.V + c)


@dataclass(frozen=True)
class GroundState:
    lambda0: float
    phi: ScalarField = field(repr=False)
    residual: float
    iterations: int


@dataclass(frozen=True)
class PoincareEstimate:
    P: float
    lambda1: float


class BoundDecision(enum.Enum):
    SATISFIED = "bound-satisfied"
    VIOLATED = "bound-violated"
    CONDITIONS_NOT_MET = "conditions-not-met"


@dataclass(frozen=True)
class BoundCheck:
    decision: BoundDecision
    value: float | None
    reason: str = ""


class _DirectShiftSolver:
    """Sparse LU of ``A - sigma I`` without off-diagonal pivoting.

    With a symmetric ordering and diagonal pivots the diagonal of ``U`` is the
    ``D`` of an ``LDL^T`` factorisation, so its signs certify whether the
    shift lies below the spectrum.
    """

    def __init__(self, A, sigma):
        M = (A - sigma * sp.identity(A.shape[0], format="csc")).tocsc()
        self.lu = spla.splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0)
        self.certified = bool(
            np.array_equal(self.lu.perm_r, self.lu.perm_c) and np.all(self.lu.U.diagonal() > 0)
        )

    def __call__(self, x):
        return self.lu.solve(x)


class _IterativeShiftSolver:
    """CG on ``A - sigma I`` preconditioned by the exact inverse of ``-lap + c``."""

    def __init__(self, A, sigma, grid, V):
        self.A = A
        self.sigma = sigma
        self.shape = grid.shape
        self.n = grid.size
        c = max(float(np.mean(V)) - sigma, 1e-3 * max(1.0, float(np.abs(V).max())))
        self.inv_symbol = 1.0 / (grid.laplacian_symbol() + c)
        self.certified = True
        self.op = spla.LinearOperator(
            (self.n, self.n), matvec=lambda v: A @ v - sigma * v, dtype=float
        )
        self.prec = spla.LinearOperator((self.n, self.n), matvec=self._precondition, dtype=float)

    def _precondition(self, v):
        vv = np.reshape(v, self.shape)
        out = scipy.fft.ifftn(scipy.fft.fftn(vv) * self.inv_symbol).real
        return out.ravel()

    def __call__(self, x):
        y, info = spla.cg(self.op, x, rtol=1e-14, atol=0.0, maxiter=2000, M=self.prec)
        if info < 0:
            raise SolverFailure("CG breakdown in shifted solve", {"sigma": self.sigma, "info": info})
        return y


def _make_solver(A, sigma, grid, V, method):
    if method == "direct":
        return _DirectShiftSolver(A, sigma)
    return _IterativeShiftSolver(A, sigma, grid, V)


def ground_state(
    op: SchrodingerOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "auto",
) -> GroundState:
    """Lowest eigenpair of ``op`` by shifted inverse iteration.

    The iteration starts from the constant vector with shift
    ``min(V) - 1``, which is certified to lie below the spectrum. Each time
    the Rayleigh quotient ``rho`` and residual ``r`` make ``rho - 2 r`` a
    safe lower bound that is markedly closer, the shift moves there (after an
    inertia check in the direct path). Because every shift stays below
    ``lambda0`` the shifted inverse is entrywise positive, so the iterates
    remain positive and converge to the ground state even when the first
    excited level is nearly degenerate.

    Parameters
    ----------
    op : SchrodingerOperator
    tol : float
        Residual target ``||L phi - lambda0 phi||_2 <= tol * max(1, ||V||_inf)``.
    max_iter : int
        Iteration budget; exhausting it raises ``SolverFailure``.
    method : {"auto", "direct", "iterative"}

    Returns
    -------
    GroundState
        ``phi`` is positive at every site with ``inner(phi, phi) == 1``.
    """
    check_positive_scalar(tol, "tol")
    grid = op.grid
    V = op.V.ravel()
    A = op.matrix()
    if method == "auto":
        method = "direct" if (grid.d <= 2 or grid.size <= DIRECT_SITE_LIMIT) else "iterative"
    if method not in ("direct", "iterative"):
        raise ValueError(f"unknown method {method!r}")

    scale = max(1.0, float(np.abs(V).max()))
    target = tol * scale
    floor = 64.0 * np.finfo(float).eps * scale
    sigma = float(V.min()) - 1.0
    solver = _make_solver(A, sigma, grid, V, method)
    x = np.full(grid.size, 1.0 / math.sqrt(grid.size))
    rho, r = float(x @ (A @ x)), math.inf
    last_try = math.inf

    for it in range(1, max_iter + 1):
        y = solver(x)
        if method == "direct" and not np.all(y > 0):
            raise SolverFailure(
                "inverse iterate lost positivity (underflow in a deep well?)",
                {"iteration": it, "sigma": sigma, "min_iterate": float(y.min())},
            )
        x = y / np.linalg.norm(y)
        Ax = A @ x
        rho = float(x @ Ax)
        r = float(np.linalg.norm(Ax - rho * x))
        if r <= target:
            x, rho, r, it = _polish(solver, A, x, rho, r, floor, it)
            break
        candidate = rho - 2.0 * r - floor
        if candidate > sigma and 2.0 * r + floor < 0.25 * (rho - sigma) and r < 0.5 * last_try:
            last_try = r
            trial = _make_solver(A, candidate, grid, V, method)
            if trial.certified:
                solver, sigma = trial, candidate
    else:
        raise SolverFailure(
            "ground state did not converge",
            {"iterations": max_iter, "rho": rho, "residual": r, "target": target, "sigma": sigma},
        )

    if x.sum() < 0:
        x = -x
    if not np.all(x > 0):
        raise SolverFailure(
            "converged eigenvector is not positive",
            {"lambda0": rho, "residual": r, "min_phi": float(x.min())},
        )
    phi = ScalarField(grid, x / math.sqrt(grid.cell_volume))
    return GroundState(lambda0=rho, phi=phi, residual=r, iterations=it)


def _polish(solver, A, x, rho, r, floor, it):
    """Cheap extra inverse steps so the eigenvector error, about ``r / gap``, stays small near degeneracy."""
    for _ in range(POLISH_STEPS):
        if r <= floor:
            break
        y = solver(x)
        if not np.all(np.isfinite(y)):
            break
        y = y / np.linalg.norm(y)
        Ay = A @ y
        rho_y = float(y @ Ay)
        r_y = float(np.linalg.norm(Ay - rho_y * y))
        if r_y > 0.5 * r:
            if r_y < r:
                x, rho, r, it = y, rho_y, r_y, it + 1
            break
        x, rho, r, it = y, rho_y, r_y, it + 1
    return x, rho, r, it


def dense_spectrum(op: SchrodingerOperator) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of the operator matrix (oracle for small grids)."""
    if op.grid.size > DENSE_SITE_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_SITE_LIMIT} sites")
    return np.linalg.eigh(op.dense())


def rayleigh(u: ScalarField, op: SchrodingerOperator) -> float:
    """Discrete Rayleigh quotient ``(int |grad u|^2 + int V u^2) / int u^2``."""
    check_same_grid(u, op.V)
    denom = inner(u, u)
    if denom == 0.0:
        raise ValueError("Rayleigh quotient of the zero field")
    return (dirichlet_energy(u) + inner(op.V * u, u)) / denom


def poincare_constant(grid: TorusGrid, method: str = "iteration", tol: float = 1e-12) -> PoincareEstimate:
    """Poincare constant ``P = 1 / lambda1`` of the discrete Laplacian.

    ``method="iteration"`` runs LOBPCG on ``-lap`` with the constants
    deflated (dense eigenvalues below 64 sites); ``method="symbol"`` reads ``lambda1`` off the exact Fourier
    symbol of the stencil.
    """
    exact = np.sort(grid.laplacian_symbol().ravel())[1]
    if method == "symbol":
        lam1 = float(exact)
    elif method == "iteration":
        A = (-grid.laplacian_matrix()).tocsr()
        m = grid.size
        k = min(2 * grid.d + 1, m - 2)
        if m <= SMALL_POINCARE_SITES:
            lam1 = float(np.linalg.eigvalsh(A.toarray())[1])
        else:
            rng = np.random.default_rng(0)
            X = rng.standard_normal((m, k))
            Y = np.ones((m, 1)) / math.sqrt(m)
            lu = spla.splu((A + sp.identity(m, format="csc")).tocsc()) if m <= 20000 else None
            M = spla.LinearOperator((m, m), matvec=lu.solve) if lu is not None else None
            # eigenvalue error is quadratic in the residual
            vals, _ = spla.lobpcg(A, X, M=M, Y=Y, tol=math.sqrt(tol) * float(exact), maxiter=500, largest=False)
            lam1 = float(np.min(vals))
    else:
        raise ValueError(f"unknown method {method!r}")
    return PoincareEstimate(P=1.0 / lam1, lambda1=lam1)


def positivity_bound_check(op: SchrodingerOperator, P: PoincareEstimate) -> BoundCheck:
    """Sufficient condition for a strictly positive lowest eigenvalue.

    Applies only to potentials that change sign and have positive integral;
    then ``P ||V|| (4 vol ||V|| + int V) / int V <= 1`` implies ``lambda0 > 0``.
    """
    V = op.V
    total = integrate(V)
    if not (V.min() < 0.0 < V.max()):
        return BoundCheck(BoundDecision.CONDITIONS_NOT_MET, None, "potential does not change sign")
    if total <= 1e-12 * op.grid.volume * linf_norm(V):
        return BoundCheck(BoundDecision.CONDITIONS_NOT_MET, None, "integral of potential is not positive")
    vmax = linf_norm(V)
    value = P.P * vmax * (4.0 * op.grid.volume * vmax + total) / total
    decision = BoundDecision.SATISFIED if value <= 1.0 else BoundDecision.VIOLATED
    return BoundCheck(decision, value)
