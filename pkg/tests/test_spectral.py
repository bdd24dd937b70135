import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sklsc.exceptions import SolverFailure
from sklsc.grid import TorusGrid, inner, linf_norm
from sklsc.spectral import (
    BoundDecision,
    PoincareEstimate,
    SchrodingerOperator,
    dense_spectrum,
    ground_state,
    poincare_constant,
    positivity_bound_check,
    rayleigh,
)

potentials = arrays(float, 16, elements=st.floats(-20, 20, allow_nan=False))


def lam(V, **kw):
    return ground_state(SchrodingerOperator(V), **kw)


def test_zero_and_constant_potentials():
    g = TorusGrid(32)
    for c in (0.0, 5.0):
        gs = lam(g.constant(c))
        assert gs.lambda0 == pytest.approx(c, abs=1e-12)
        assert np.allclose(gs.phi.values, 1.0 / math.sqrt(g.volume), rtol=1e-12)


def test_random_potentials_match_dense_oracle():
    g = TorusGrid(16)
    rng = np.random.default_rng(7)
    for _ in range(5):
        V = g.field(rng.uniform(-1, 1, 16))
        op = SchrodingerOperator(V)
        assert abs(lam(V).lambda0 - dense_spectrum(op)[0][0]) <= 1e-10


@given(potentials)
def test_ground_state_invariants(values):
    g = TorusGrid(16)
    V = g.field(values)
    gs = lam(V)
    assert gs.phi.min() > 0
    assert inner(gs.phi, gs.phi) == pytest.approx(1.0, abs=1e-12)
    assert gs.residual <= 1e-10 * max(1.0, linf_norm(V))
    assert abs(gs.lambda0 - dense_spectrum(SchrodingerOperator(V))[0][0]) <= 1e-9 * max(1.0, linf_norm(V))


@given(potentials, st.floats(-50, 50))
def test_shift_identity(values, c):
    g = TorusGrid(16)
    V = g.field(values)
    a, b = lam(V), lam(V + c)
    assert abs(b.lambda0 - a.lambda0 - c) <= 1e-10 * max(1.0, linf_norm(V) + abs(c))
    assert linf_norm(a.phi - b.phi) <= 1e-8


@given(potentials, arrays(float, 16, elements=st.floats(0, 10, allow_nan=False)))
def test_monotone_in_potential(values, bump):
    g = TorusGrid(16)
    V = g.field(values)
    W = V + g.field(bump)
    assert lam(V).lambda0 <= lam(W).lambda0 + 1e-9 * max(1.0, linf_norm(W))


@given(st.floats(0.001, 0.2), st.floats(0.05, 0.95))
def test_bound_satisfied_implies_positive_ground_energy(amp, offset):
    g = TorusGrid(32)
    x, = g.coordinates()
    V = g.field(amp * (np.sin(x) + offset))
    check = positivity_bound_check(SchrodingerOperator(V), poincare_constant(g, "symbol"))
    if check.decision is BoundDecision.SATISFIED:
        assert lam(V).lambda0 > 0


def test_rayleigh_examples():
    g = TorusGrid(32)
    x, = g.coordinates()
    V = g.field(np.sin(x) + 0.3)
    one = g.constant(1.0)
    assert rayleigh(one, SchrodingerOperator(g.zeros())) == 0.0
    assert rayleigh(one, SchrodingerOperator(V)) == pytest.approx(0.3, abs=1e-12)
    gs = lam(V)
    assert abs(rayleigh(gs.phi, SchrodingerOperator(V)) - gs.lambda0) <= 1e-12
    with pytest.raises(ValueError):
        rayleigh(g.zeros(), SchrodingerOperator(V))


@given(arrays(float, 16, elements=st.floats(-1, 1, allow_nan=False)))
def test_rayleigh_bounds_ground_energy(u):
    if np.abs(u).max() < 1e-3:
        return
    g = TorusGrid(16)
    x, = g.coordinates()
    op = SchrodingerOperator(g.field(3 * np.cos(2 * x)))
    assert rayleigh(g.field(u), op) >= lam(op.V).lambda0 - 1e-10


@pytest.mark.parametrize("method", ["iteration", "symbol"])
def test_poincare_constant_circle(method):
    for L in (2 * math.pi, 4 * math.pi):
        g = TorusGrid(64, L)
        h = g.spacing[0]
        lam1 = (2 / h) ** 2 * math.sin(math.pi / 64) ** 2
        est = poincare_constant(g, method)
        assert est.lambda1 == pytest.approx(lam1, rel=1e-10)
        assert est.P == pytest.approx(1 / lam1, rel=1e-10)
    assert poincare_constant(TorusGrid(64, 4 * math.pi), method).P == pytest.approx(
        4 * poincare_constant(TorusGrid(64), method).P, rel=1e-10
    )


def test_poincare_square_torus_with_double_eigenvalue():
    g = TorusGrid((16, 16))
    est = poincare_constant(g, "iteration")
    assert est.lambda1 == pytest.approx(poincare_constant(TorusGrid(16), "symbol").lambda1, rel=1e-9)


def test_bound_check_decisions():
    g = TorusGrid(64)
    x, = g.coordinates()
    P = poincare_constant(g, "symbol")
    V = g.field(0.01 * (np.sin(x) + 0.5))
    check = positivity_bound_check(SchrodingerOperator(V), P)
    assert check.decision is BoundDecision.SATISFIED
    assert check.value == pytest.approx(P.P * 0.015 * (4 * 2 * math.pi * 0.015 + 0.01 * math.pi) / (0.01 * math.pi), rel=1e-12)
    assert lam(V).lambda0 > 0
    assert positivity_bound_check(SchrodingerOperator(g.constant(1.0)), P).decision is BoundDecision.CONDITIONS_NOT_MET
    assert positivity_bound_check(SchrodingerOperator(g.field(np.sin(x))), P).decision is BoundDecision.CONDITIONS_NOT_MET
    big = positivity_bound_check(SchrodingerOperator(g.field(np.sin(x) + 0.5)), P)
    assert big.decision is BoundDecision.VIOLATED


def test_direct_and_iterative_paths_agree():
    g = TorusGrid((12, 12))
    x1, x2 = g.coordinates()
    V = g.field(4 * np.sin(x1) * np.cos(x2) - np.cos(2 * x2))
    a = ground_state(SchrodingerOperator(V), method="direct")
    b = ground_state(SchrodingerOperator(V), method="iterative")
    assert abs(a.lambda0 - b.lambda0) <= 1e-10
    assert linf_norm(a.phi - b.phi) <= 1e-7


def test_four_dimensional_grid_uses_iterative_path():
    g = TorusGrid((6, 6, 6, 6))
    x1, x2, x3, x4 = g.coordinates()
    V = g.field(np.sin(x1) + np.cos(x2) * np.sin(x4))
    a = ground_state(SchrodingerOperator(V))
    ref = np.linalg.eigvalsh(SchrodingerOperator(V).dense())[0]
    assert abs(a.lambda0 - ref) <= 1e-10


def test_near_degenerate_double_well_finds_ground_state():
    g = TorusGrid((32, 32))
    x1, x2 = g.coordinates()
    V = g.field(-60 * (np.exp(-4 * ((x1 - 1.5) ** 2 + (x2 - 3) ** 2)) + np.exp(-4 * ((x1 - 4.6) ** 2 + (x2 - 3) ** 2))))
    gs = lam(V)
    assert gs.phi.min() > 0
    assert abs(gs.lambda0 - dense_spectrum(SchrodingerOperator(V))[0][0]) <= 1e-9


def test_solver_failure_carries_diagnostics():
    g = TorusGrid(64)
    x, = g.coordinates()
    with pytest.raises(SolverFailure) as info:
        ground_state(SchrodingerOperator(g.field(np.sin(x))), tol=1e-30, max_iter=3)
    assert "residual" in info.value.diagnostics
    assert "iterations: 3" in info.value.report()


def test_invalid_arguments():
    g = TorusGrid(8)
    with pytest.raises(ValueError):
        ground_state(SchrodingerOperator(g.zeros()), tol=0.0)
    with pytest.raises(ValueError):
        ground_state(SchrodingerOperator(g.zeros()), method="qr")
    with pytest.raises(ValueError):
        poincare_constant(g, "guess")
    assert isinstance(poincare_constant(g), PoincareEstimate)
