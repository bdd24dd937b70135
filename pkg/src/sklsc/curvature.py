"""Scalar curvatures of conformally flat Hermitian metrics and prescribed bases.

Convention
----------
A conformal exponent ``f`` stands for the metric ``e^{-2f} g``. With that
reading the transformation laws

    S(e^{-2f} g)   = e^{2f} (2(2n-1) lap f - 2(2n-1)(n-1) |grad f|^2 + S(g))
    S_C(e^{-2f} g) = e^{2f} (n lap f - n <df, theta> + S_C(g))

hold with ``lap`` the non-positive Laplacian, and they agree with the two
independent routes implemented below: Christoffel symbols of the real metric,
and the trace of ``-i d dbar log det(g_{i jbar})`` for the Chern scalar.

The complex coordinates on a ``2n``-dimensional grid are
``z_j = x_{2j} + i x_{2j+1}`` (axes ordered ``x_1, y_1, ..., x_n, y_n``) and the
flat metric has ``g(d/dz_i, d/dzbar_j) = delta_ij / 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_complex_dimension, check_same_grid
from .exceptions import InvalidBaseDataError, InvalidFieldError, UnsupportedMetricError
from .grid import (
    CovectorField,
    ScalarField,
    TorusGrid,
    grad_norm_sq,
    gradient,
    integrate,
    laplacian,
    linf_norm,
    pairing,
    read_field,
    write_field,
)

KAHLER_KINDS = ("kahler", "synthetic-kahler")
BALANCED_KINDS = ("balanced", "synthetic-balanced")
BASE_KINDS = KAHLER_KINDS + BALANCED_KINDS


class GauduchonSign(enum.Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"


@dataclass(frozen=True)
class BalancedBaseData:
    """Curvature of a balanced base metric, prescribed site by site.

    Only ``S_b`` and ``SC_b`` enter the eigenvalue reduction, so in the
    synthetic kinds the grid dimension need not equal ``2n``.

    Parameters
    ----------
    n : int
        Complex dimension (>= 2).
    S_b, SC_b : ScalarField
        Riemannian and Chern scalar curvature of the base.
    kind : str
        One of ``kahler``, ``balanced``, ``synthetic-kahler``,
        ``synthetic-balanced``. Kahler kinds require ``S_b == 2 SC_b``;
        balanced kinds require ``S_b <= 2 SC_b``.
    tol : float
        Relative tolerance used for both pointwise checks.
    """

    n: int
    S_b: ScalarField
    SC_b: ScalarField
    kind: str = "synthetic-balanced"
    tol: float = 1e-12

    def __post_init__(self):
        check_complex_dimension(self.n)
        check_same_grid(self.S_b, self.SC_b)
        if self.kind not in BASE_KINDS:
            raise InvalidBaseDataError(f"unknown base kind {self.kind!r}; expected one of {BASE_KINDS}")
        band = self.tol * self.scale
        tau = self.torsion_density.values
        if self.is_kahler:
            if np.abs(tau).max() > band:
                raise InvalidBaseDataError(
                    f"Kahler base needs S_b = 2 SC_b; max deviation {np.abs(tau).max():.3e}"
                )
        elif tau.min() < -band:
            raise InvalidBaseDataError(
                f"balanced base needs S_b <= 2 SC_b; min(2 SC_b - S_b) = {tau.min():.3e}"
            )

    @classmethod
    def kahler(cls, SC_b: ScalarField, n: int, synthetic: bool = True) -> BalancedBaseData:
        kind = "synthetic-kahler" if synthetic else "kahler"
        return cls(n, 2.0 * SC_b, SC_b, kind)

    @classmethod
    def flat(cls, grid: TorusGrid, n: int) -> BalancedBaseData:
        zero = grid.zeros()
        return cls(n, zero, zero, "kahler")

    @property
    def grid(self) -> TorusGrid:
        return self.S_b.grid

    @property
    def is_kahler(self) -> bool:
        return self.kind in KAHLER_KINDS

    @property
    def is_synthetic(self) -> bool:
        return self.kind.startswith("synthetic")

    @property
    def torsion_density(self) -> ScalarField:
        """``2 SC_b - S_b``, the pointwise torsion term ``|T|^2 / 2`` (>= 0)."""
        return 2.0 * self.SC_b - self.S_b

    @property
    def scale(self) -> float:
        return max(linf_norm(self.S_b), linf_norm(self.SC_b), 1.0)

    @property
    def degenerate_kappa(self) -> float:
        return (2 * self.n - 1) / self.n

    def critical_potential(self) -> ScalarField:
        """``S_b - 2 (2n-1)/n SC_b``, the field that decides the negative branches."""
        return self.S_b - 2.0 * self.degenerate_kappa * self.SC_b


@dataclass(frozen=True)
class HermitianConformalMetric:
    """The metric ``e^{-2f}`` times the flat Kahler metric on a ``2n``-torus."""

    n: int
    f: ScalarField

    def __post_init__(self):
        check_complex_dimension(self.n)
        if self.f.grid.d != 2 * self.n:
            raise UnsupportedMetricError(
                f"geometric mode needs a {2 * self.n}-dimensional grid, got d={self.f.grid.d}"
            )

    @property
    def grid(self) -> TorusGrid:
        return self.f.grid

    def real_metric(self) -> np.ndarray:
        """Components ``g_ab`` with shape ``grid.shape + (2n, 2n)``."""
        d = 2 * self.n
        conf = np.exp(-2.0 * self.f.values)
        return conf[..., None, None] * np.eye(d)

    def hermitian_metric(self) -> np.ndarray:
        """Components ``g_{i jbar}`` with shape ``grid.shape + (n, n)``."""
        conf = np.exp(-2.0 * self.f.values)
        return (0.5 * conf)[..., None, None] * np.eye(self.n, dtype=complex)

    def lee_form(self) -> CovectorField:
        return lee_form_conformal(-self.f, self.n)


def riemannian_scalar_conformal(base: BalancedBaseData, f: ScalarField, n: int | None = None) -> ScalarField:
    """Riemannian scalar curvature of ``e^{-2f} g_b`` from the transformation law."""
    n = check_complex_dimension(base.n if n is None else n)
    check_same_grid(base.S_b, f)
    c = 2 * n - 1
    inner = 2 * c * laplacian(f) - 2 * c * (n - 1) * grad_norm_sq(f) + base.S_b
    return inner * f.map(lambda v: np.exp(2.0 * v))


def chern_scalar_conformal(
    base: BalancedBaseData,
    f: ScalarField,
    theta: CovectorField | None = None,
    n: int | None = None,
) -> ScalarField:
    """Chern scalar curvature of ``e^{-2f} g_b``; ``theta`` is the Lee form of ``g_b``."""
    n = check_complex_dimension(base.n if n is None else n)
    check_same_grid(base.SC_b, f)
    inner = n * laplacian(f) + base.SC_b
    if theta is not None:
        inner = inner - n * pairing(gradient(f), theta)
    return inner * f.map(lambda v: np.exp(2.0 * v))


def lee_form_conformal(u: ScalarField, n: int) -> CovectorField:
    """Lee form of ``e^{2u} omega_0`` for a Kahler ``omega_0``: ``2(n-1) du``."""
    n = check_complex_dimension(n)
    return gradient(u) * (2.0 * (n - 1))


def _central(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)


def chern_scalar_direct(m: HermitianConformalMetric) -> ScalarField:
    """Chern scalar curvature from the metric components alone.

    Forms ``log det g_{i jbar}`` site by site, applies the Wirtinger operators
    ``d/dz_i`` and ``d/dzbar_j`` built from central differences, and traces
    ``Theta_{i jbar} = -d_i dbar_j log det`` against the inverse metric.
    """
    if not isinstance(m, HermitianConformalMetric):
        raise UnsupportedMetricError("only conformally flat Hermitian metrics are supported")
    grid, n = m.grid, m.n
    h = grid.spacing
    G = m.hermitian_metric()
    logdet = np.log(np.linalg.det(G)).real

    def d_z(a, i):
        return 0.5 * (_central(a, 2 * i, h[2 * i]) - 1j * _central(a, 2 * i + 1, h[2 * i + 1]))

    def d_zbar(a, j):
        return 0.5 * (_central(a, 2 * j, h[2 * j]) + 1j * _central(a, 2 * j + 1, h[2 * j + 1]))

    theta = np.empty(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        dbar = d_zbar(logdet, j)
        for i in range(n):
            theta[..., i, j] = -d_z(dbar, i)
    Ginv = np.linalg.inv(G)
    sc = np.einsum("...ji,...ij->...", Ginv, theta)
    return ScalarField(grid, sc.real)


def riemannian_scalar_christoffel(m: HermitianConformalMetric) -> ScalarField:
    """Riemannian scalar curvature by brute-force tensor calculus.

    Builds ``g_ab``, its central-difference derivatives, the Christoffel
    symbols, the Ricci tensor and its trace, without using conformal
    structure. Cost is O(d^4) per site; meant for 4-D grids up to ~12^4.
    """
    grid = m.grid
    d = grid.d
    h = grid.spacing
    g = m.real_metric()
    ginv = np.linalg.inv(g)
    # dg[..., c, a, b] = d_c g_ab
    dg = np.stack([_central(g, c, h[c]) for c in range(d)], axis=-3)
    # lower[..., d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    lower = (
        np.einsum("...bdc->...dbc", dg)
        + np.einsum("...cdb->...dbc", dg)
        - dg
    )
    gamma = 0.5 * np.einsum("...ad,...dbc->...abc", ginv, lower)
    # dgamma[..., e, a, b, c] = d_e Gamma^a_bc
    dgamma = np.stack([_central(gamma, e, h[e]) for e in range(d)], axis=-4)
    term1 = np.einsum("...aabd->...bd", dgamma)
    term2 = np.einsum("...daab->...bd", dgamma)
    term3 = np.einsum("...aae,...ebd->...bd", gamma, gamma)
    term4 = np.einsum("...ade,...eab->...bd", gamma, gamma)
    ricci = term1 - term2 + term3 - term4
    return ScalarField(grid, np.einsum("...bd,...bd->...", ginv, ricci))


def gauduchon_sign(base: BalancedBaseData, rtol: float = 1e-8) -> GauduchonSign:
    """Sign of the total Chern scalar curvature of the balanced base.

    Balanced metrics are Gauduchon, so this is the sign of the Gauduchon
    degree. Integrals within ``rtol * volume * max|SC_b|`` count as zero.
    """
    total = integrate(base.SC_b)
    band = rtol * base.grid.volume * max(linf_norm(base.SC_b), np.finfo(float).tiny)
    if abs(total) <= band:
        return GauduchonSign.ZERO
    return GauduchonSign.NEGATIVE if total < 0 else GauduchonSign.POSITIVE


def write_base_bundle(directory, base: BalancedBaseData) -> Path:
    """Write ``S_b.field``, ``SC_b.field`` and a ``meta`` file with ``n=`` and ``kind=`` lines."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_field(out / "S_b.field", base.S_b)
    write_field(out / "SC_b.field", base.SC_b)
    (out / "meta").write_text(f"n={base.n}\nkind={base.kind}\n", encoding="ascii")
    return out


def read_base_bundle(directory) -> BalancedBaseData:
    src = Path(directory)
    meta = {}
    for line in (src / "meta").read_text(encoding="ascii").splitlines():
        key, sep, value = line.partition("=")
        if sep:
            meta[key.strip()] = value.strip()
    if "n" not in meta or "kind" not in meta:
        raise InvalidFieldError(f"{src}/meta needs n= and kind= lines")
    return BalancedBaseData(
        int(meta["n"]), read_field(src / "S_b.field"), read_field(src / "SC_b.field"), meta["kind"]
    )
