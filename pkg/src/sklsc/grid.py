"""Periodic finite-difference calculus on flat tori.

Sites are stored row-major with axis 0 slowest, so a field on a grid with
``points = (N_1, ..., N_d)`` is an array of that shape and flattens with
``ravel()`` into the ordering used by the sparse operators and field files.

Conventions
-----------
* ``laplacian`` is the sum of second derivatives (non-positive spectrum),
  discretised with the compact 3-point stencil per axis.
* ``gradient`` uses central differences ``(u[i+1] - u[i-1]) / 2h``.
* ``integrate`` is the trapezoidal rule, which on a periodic lattice is the
  plain sum times the cell volume.
* ``dirichlet_energy`` uses forward differences and satisfies the exact
  discrete identity ``inner(-laplacian(u), u) == dirichlet_energy(u)``.
  ``integrate(grad_norm_sq(u))`` differs from it by O(h^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ._validation import check_finite_array, check_same_grid
from .exceptions import GridMismatchError, InvalidFieldError

FIELD_HEADER = "# torus-field v1"
MIN_POINTS = 4


@dataclass(frozen=True)
class TorusGrid:
    """Uniform lattice on the flat torus ``prod_i [0, L_i)``."""

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __init__(self, points: Sequence[int], lengths: Sequence[float] | float | None = None):
        pts = tuple(int(p) for p in np.atleast_1d(points))
        if lengths is None:
            lens = (2.0 * math.pi,) * len(pts)
        elif np.ndim(lengths) == 0:
            lens = (float(lengths),) * len(pts)
        else:
            lens = tuple(float(x) for x in lengths)
        if len(pts) == 0:
            raise ValueError("grid needs at least one axis")
        if len(lens) != len(pts):
            raise ValueError(f"{len(pts)} point counts but {len(lens)} lengths")
        if any(p < MIN_POINTS for p in pts):
            raise ValueError(f"every axis needs at least {MIN_POINTS} points, got {pts}")
        if any(not np.isfinite(x) or x <= 0 for x in lens):
            raise ValueError(f"lengths must be positive and finite, got {lens}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lengths", lens)

    @property
    def d(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis(self, i: int) -> np.ndarray:
        return np.arange(self.points[i]) * self.spacing[i]

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays ``x_1 .. x_d``, each of the grid shape."""
        return tuple(np.meshgrid(*[self.axis(i) for i in range(self.d)], indexing="ij"))

    def field(self, values) -> ScalarField:
        """Build a field from an array, a scalar, or a callable of the coordinates."""
        if callable(values):
            values = values(*self.coordinates())
        if np.ndim(values) == 0:
            values = np.full(self.shape, float(values))
        return ScalarField(self, values)

    def constant(self, c: float) -> ScalarField:
        return ScalarField(self, np.full(self.shape, float(c)))

    def zeros(self) -> ScalarField:
        return self.constant(0.0)

    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse matrix of the discrete Laplacian in flattened site order."""
        return _laplacian_matrix(self.points, self.lengths)

    def laplacian_symbol(self) -> np.ndarray:
        """Eigenvalues of ``-laplacian`` on the discrete Fourier modes (grid shape).

        Mode ``k`` on axis ``i`` contributes ``(2/h_i)^2 sin^2(pi k / N_i)``.
        """
        total = np.zeros(self.shape)
        for i, (N, h) in enumerate(zip(self.points, self.spacing)):
            k = np.arange(N)
            sym = (2.0 / h) ** 2 * np.sin(np.pi * k / N) ** 2
            shape = [1] * self.d
            shape[i] = N
            total = total + sym.reshape(shape)
        return total

    def __repr__(self):
        return f"TorusGrid(points={self.points}, lengths={self.lengths})"


def _laplacian_matrix(points, lengths):
    result = None
    for N, L in zip(points, lengths):
        h = L / N
        one = np.ones(N)
        lap = sp.diags([one[:-1], -2.0 * one, one[:-1]], [-1, 0, 1], format="lil")
        lap[0, N - 1] += 1.0
        lap[N - 1, 0] += 1.0
        lap = lap.tocsr() / h**2
        if result is None:
            result = lap
        else:
            result = sp.kron(result, sp.identity(N), format="csr") + sp.kron(
                sp.identity(result.shape[0]), lap, format="csr"
            )
    return result.tocsr()


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values on every lattice site of a grid. Immutable."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = check_finite_array(self.values, self.grid.shape, name="ScalarField")
        arr = np.array(arr, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def ravel(self) -> np.ndarray:
        return self.values.ravel()

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
        return ScalarField(self.grid, func(self.values))

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            check_same_grid(self, other)
            return other.values
        if np.ndim(other) == 0:
            return float(other)
        return NotImplemented

    def _binary(self, other, op):
        rhs = self._coerce(other)
        if rhs is NotImplemented:
            return NotImplemented
        return ScalarField(self.grid, op(self.values, rhs))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __eq__(self, other):
        return (
            isinstance(other, ScalarField)
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CovectorField:
    """One ``ScalarField`` per coordinate direction."""

    grid: TorusGrid
    components: tuple[ScalarField, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.d:
            raise InvalidFieldError(
                f"covector needs {self.grid.d} components, got {len(comps)}"
            )
        for c in comps:
            if c.grid != self.grid:
                raise GridMismatchError(f"component on {c.grid}, covector on {self.grid}")
        object.__setattr__(self, "components", comps)

    def __getitem__(self, i):
        return self.components[i]

    def __mul__(self, a):
        return CovectorField(self.grid, tuple(c * a for c in self.components))

    __rmul__ = __mul__

    def __add__(self, other):
        return CovectorField(
            self.grid, tuple(a + b for a, b in zip(self.components, other.components))
        )

    @classmethod
    def zeros(cls, grid):
        return cls(grid, tuple(grid.zeros() for _ in range(grid.d)))


def laplacian(u: ScalarField) -> ScalarField:
    out = np.zeros(u.grid.shape)
    for axis, h in enumerate(u.grid.spacing):
        v = u.values
        out += (np.roll(v, -1, axis) - 2.0 * v + np.roll(v, 1, axis)) / h**2
    return ScalarField(u.grid, out)


def gradient(u: ScalarField) -> CovectorField:
    comps = []
    for axis, h in enumerate(u.grid.spacing):
        v = u.values
        comps.append(ScalarField(u.grid, (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2.0 * h)))
    return CovectorField(u.grid, tuple(comps))


def pairing(alpha: CovectorField, beta: CovectorField) -> ScalarField:
    """Pointwise flat inner product of two covectors."""
    if alpha.grid != beta.grid:
        raise GridMismatchError(f"grid mismatch: {alpha.grid} vs {beta.grid}")
    total = np.zeros(alpha.grid.shape)
    for a, b in zip(alpha.components, beta.components):
        total += a.values * b.values
    return ScalarField(alpha.grid, total)


def grad_norm_sq(u: ScalarField) -> ScalarField:
    g = gradient(u)
    return pairing(g, g)


def integrate(u: ScalarField) -> float:
    return float(u.values.sum() * u.grid.cell_volume)


def inner(u: ScalarField, v: ScalarField) -> float:
    check_same_grid(u, v)
    return float(np.vdot(u.values, v.values) * u.grid.cell_volume)


def linf_norm(u: ScalarField) -> float:
    return float(np.abs(u.values).max())


def l2_norm(u: ScalarField) -> float:
    # scale by the max first so tiny or huge fields neither underflow nor overflow
    m = linf_norm(u)
    if m == 0.0:
        return 0.0
    v = u / m
    return m * math.sqrt(inner(v, v))


def l2_normalize(u: ScalarField) -> ScalarField:
    m = linf_norm(u)
    if m == 0.0:
        raise InvalidFieldError("cannot normalise the zero field")
    v = u / m
    return v / math.sqrt(inner(v, v))


def mean(u: ScalarField) -> float:
    return integrate(u) / u.grid.volume


def dirichlet_energy(u: ScalarField) -> float:
    """Integral of the squared forward-difference gradient."""
    total = 0.0
    for axis, h in enumerate(u.grid.spacing):
        diff = (np.roll(u.values, -1, axis) - u.values) / h
        total += float(np.sum(diff * diff))
    return total * u.grid.cell_volume


def write_field(path, u: ScalarField) -> None:
    """Write ``u`` in the ``torus-field v1`` text format."""
    lines = [
        FIELD_HEADER,
        " ".join([str(u.grid.d)] + [str(n) for n in u.grid.points]),
        " ".join(f"{x:.17g}" for x in u.grid.lengths),
    ]
    lines.extend(f"{x:.17g}" for x in u.ravel())
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_field(path) -> ScalarField:
    text = Path(path).read_text(encoding="ascii").splitlines()
    rows = [ln.strip() for ln in text if ln.strip()]
    if not rows or rows[0] != FIELD_HEADER:
        raise InvalidFieldError(f"{path}: missing '{FIELD_HEADER}' header")
    try:
        dims = [int(tok) for tok in rows[1].split()]
        lengths = [float(tok) for tok in rows[2].split()]
        values = np.array([float(tok) for tok in rows[3:]])
    except (IndexError, ValueError) as exc:
        raise InvalidFieldError(f"{path}: malformed field file ({exc})") from exc
    d, points = dims[0], dims[1:]
    if len(points) != d or len(lengths) != d:
        raise InvalidFieldError(f"{path}: dimension line disagrees with d={d}")
    grid = TorusGrid(points, lengths)
    return ScalarField(grid, values)
