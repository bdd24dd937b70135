"""scikit-learn style wrappers around the ground-state solver and the search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .curvature import BalancedBaseData
from .family import DEGENERATE_RADIUS, KappaFamily, lambda_curve
from .grid import ScalarField, TorusGrid
from .pipeline import SklscProblem, SolverSettings, reconstruct_exponent, solve
from .spectral import DEFAULT_TOL, SchrodingerOperator, ground_state


def _as_field(X, grid):
    if isinstance(X, ScalarField):
        return X
    if grid is None:
        raise ValueError("pass a ScalarField or set the estimator's grid")
    return grid.field(np.asarray(X, dtype=float))


class GroundStateEstimator(BaseEstimator):
    """Lowest eigenpair of ``-lap + V`` for a potential ``V``.

    Parameters
    ----------
    tol : float
        Eigen-residual tolerance relative to ``max(1, max|V|)``.
    method : {"auto", "direct", "iterative"}
    grid : TorusGrid or None
        Needed only when ``fit`` receives a plain array.
    """

    def __init__(self, tol=DEFAULT_TOL, method="auto", grid=None):
        self.tol = tol
        self.method = method
        self.grid = grid

    def fit(self, X, y=None):
        V = _as_field(X, self.grid)
        state = ground_state(SchrodingerOperator(V), tol=self.tol, method=self.method)
        self.lambda0_ = state.lambda0
        self.phi_ = state.phi
        self.residual_ = state.residual
        self.n_iter_ = state.iterations
        return self

    def predict(self, X):
        """``lambda0`` for each potential in ``X`` (a ScalarField or a sequence of them)."""
        check_is_fitted(self, "lambda0_")
        fields = [X] if isinstance(X, ScalarField) else list(X)
        return np.array([
            ground_state(SchrodingerOperator(_as_field(V, self.grid)), tol=self.tol, method=self.method).lambda0
            for V in fields
        ])


class SklscSearch(BaseEstimator):
    """Fit on a ``BalancedBaseData`` to find its zero-energy scaling constants.

    Attributes
    ----------
    result_ : SolveResult
    solutions_ : list of SklscSolution
    kappas_ : ndarray
    """

    def __init__(self, regime="auto", tol_lambda=1e-8, tol_p=1e-8, eig_tol=DEFAULT_TOL,
                 samples=64, eps_deg=DEGENERATE_RADIUS, tol_pde=None):
        self.regime = regime
        self.tol_lambda = tol_lambda
        self.tol_p = tol_p
        self.eig_tol = eig_tol
        self.samples = samples
        self.eps_deg = eps_deg
        self.tol_pde = tol_pde

    def _settings(self):
        return SolverSettings(
            tol_lambda=self.tol_lambda, tol_p=self.tol_p, eig_tol=self.eig_tol,
            tol_pde=self.tol_pde, samples=self.samples, eps_deg=self.eps_deg,
        )

    def fit(self, X: BalancedBaseData, y=None):
        if not isinstance(X, BalancedBaseData):
            raise TypeError("SklscSearch.fit expects BalancedBaseData")
        self.base_ = X
        self.result_ = solve(SklscProblem(X, self.regime, self._settings()))
        self.solutions_ = list(self.result_.solutions)
        self.kappas_ = np.array([s.kappa for s in self.solutions_])
        return self

    def predict(self, X):
        """``lambda0(kappa)`` of the fitted base at the scaling constants ``X``."""
        check_is_fitted(self, "result_")
        kappas = check_array(np.atleast_1d(np.asarray(X, dtype=float)), ensure_2d=False).ravel()
        fam = KappaFamily(self.base_, self.eps_deg)
        scan = lambda_curve(fam, kappas, tol=self.eig_tol, threads=1)
        lookup = {s.param: s.lambda0 for s in scan.samples}
        return np.array([lookup.get(float(k), np.nan) for k in kappas])

    def transform(self, X=None):
        """Conformal exponents of the fitted solutions, one flattened row each."""
        check_is_fitted(self, "result_")
        if not self.solutions_:
            return np.empty((0, self.base_.grid.size))
        return np.vstack([s.f.ravel() for s in self.solutions_])


class ConformalExponentTransformer(TransformerMixin, BaseEstimator):
    """Map positive ground states (rows) to conformal exponents at fixed ``kappa``."""

    def __init__(self, kappa=2.0, n=2, grid: TorusGrid | None = None):
        self.kappa = kappa
        self.n = n
        self.grid = grid

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        grid = self.grid or TorusGrid(X.shape[1])
        return np.vstack([
            reconstruct_exponent(grid.field(row), self.kappa, self.n).ravel() for row in X
        ])
