"""Numerical search for Hermitian metrics with ``S = 2 kappa S_C`` on flat tori.

The problem reduces to zero crossings of the ground energy of a one-parameter
family of Schrodinger operators ``-lap + V_kappa`` built from prescribed base
curvature.
"""

from .curvature import (
    BalancedBaseData,
    GauduchonSign,
    HermitianConformalMetric,
    chern_scalar_conformal,
    chern_scalar_direct,
    gauduchon_sign,
    lee_form_conformal,
    riemannian_scalar_christoffel,
    riemannian_scalar_conformal,
)
from .estimator import ConformalExponentTransformer, GroundStateEstimator, SklscSearch
from .exceptions import (
    BracketError,
    ConfigError,
    DegenerateKappaError,
    ExpressionSyntaxError,
    GridMismatchError,
    InvalidBaseDataError,
    InvalidEigenfunctionError,
    InvalidFieldError,
    SklscError,
    SolverFailure,
    UnsupportedMetricError,
)
from .expression import FieldExpression, parse_expression
from .family import (
    KappaFamily,
    KappaScan,
    WarpedFamily,
    admissible_regime,
    classify_negative_branch,
    degenerate_obstruction_check,
    find_zero_crossing,
    kahler_multiplier,
    kappa_dual,
    lambda_curve,
    sklsc_potential,
    warped_instability_scan,
)
from .grid import (
    CovectorField,
    ScalarField,
    TorusGrid,
    dirichlet_energy,
    gradient,
    inner,
    integrate,
    laplacian,
    read_field,
    write_field,
)
from .pipeline import (
    SklscProblem,
    SklscSolution,
    SolverSettings,
    reconstruct_exponent,
    scalar_flat_bridge,
    solve,
    verify,
    verify_geometric,
)
from .spectral import (
    SchrodingerOperator,
    dense_spectrum,
    ground_state,
    poincare_constant,
    positivity_bound_check,
)

__version__ = "0.1.0"
