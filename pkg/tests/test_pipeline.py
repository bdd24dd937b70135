import math

import numpy as np
import pytest

import sklsc.family as family_mod
from sklsc.curvature import BalancedBaseData, GauduchonSign
from sklsc.demos import negative_kahler_base, positive_balanced_base, zero_degree_base
from sklsc.exceptions import InvalidEigenfunctionError, SolverFailure, UnsupportedMetricError
from sklsc.family import kahler_multiplier, kappa_dual
from sklsc.grid import TorusGrid, linf_norm
from sklsc.pipeline import (
    SYNTHETIC_NOTE,
    SklscProblem,
    SklscSolution,
    SolverSettings,
    bound_obstructs,
    exponent_multiplier,
    pde_residual_field,
    read_solution,
    reconstruct_exponent,
    scalar_flat_bridge,
    solve,
    verify,
    verify_geometric,
    write_solution,
)


def circle(N=64):
    g = TorusGrid(N)
    return g, g.coordinates()[0]


@pytest.fixture(scope="module")
def neg_kahler():
    base = negative_kahler_base()
    return base, solve(SklscProblem(base))


def test_exponent_multiplier_values():
    assert exponent_multiplier(2.0, 2) == pytest.approx(-1 / 3)
    assert exponent_multiplier(1.0, 2) == pytest.approx(1 / 3)
    assert exponent_multiplier(1.0, 3) == pytest.approx(0.2)


def test_reconstruct_exponent_examples():
    g, x = circle(16)
    phi = g.field(np.exp(np.sin(x)))
    f = reconstruct_exponent(phi, 2.0, 2)
    assert np.allclose(f.values, np.sin(x) / 3, atol=1e-15)
    assert linf_norm(reconstruct_exponent(g.constant(1.0), 1.2, 2)) == 0.0
    with pytest.raises(InvalidEigenfunctionError):
        reconstruct_exponent(g.field(np.sin(x)), 2.0, 2)


def test_dual_exponents_from_a_shared_ground_state():
    g, x = circle(16)
    phi = g.field(np.exp(0.3 * np.cos(x)))
    for k1 in (1.1, 1.25, 1.4):
        k2 = kappa_dual(k1, 2)
        f1, f2 = reconstruct_exponent(phi, k1, 2), reconstruct_exponent(phi, k2, 2)
        ratio = -(2 - 1) / (2 * (k1 - 1))
        assert np.allclose(f2.values, ratio * f1.values, rtol=1e-12, atol=1e-15)


def test_verify_trivial_solution_on_flat_base():
    g, _ = circle(16)
    base = BalancedBaseData.flat(g, 2)
    sol = SklscSolution(1.2, 0.0, 2, g.constant(1.0), g.constant(0.0), 0.0, 0.0, "test")
    assert verify(sol, base) == (0.0, 0.0)


def test_solution_invariants():
    g, x = circle(16)
    with pytest.raises(InvalidEigenfunctionError):
        SklscSolution(1.2, 0.0, 2, g.field(np.sin(x)), g.constant(0.0), 0.0, 0.0, "t")
    with pytest.raises(ValueError):
        SklscSolution(1.5, 0.0, 2, g.constant(1.0), g.constant(0.0), 0.0, 0.0, "t")
    with pytest.raises(ValueError):
        SklscProblem(negative_kahler_base(16), (2.0, 1.0))


def test_negative_kahler_solutions(neg_kahler):
    base, result = neg_kahler
    assert result.sign is GauduchonSign.NEGATIVE
    assert len(result) == 2
    k1, k2 = sorted(s.kappa for s in result)
    assert 1 < k1 < 1.5 < k2
    assert abs((k1 - 1) * (k2 - 1) - 0.25) <= 1e-6
    tol = SolverSettings().pde_tolerance(base.grid)
    for sol in result:
        assert sol.phi.min() > 0
        assert abs(sol.lambda0) <= 1e-8
        pde, integral = verify(sol, base)
        assert pde == pytest.approx(sol.residual_pde) and pde <= tol
        assert integral <= tol
    assert not result.anomalies
    assert result.report().rstrip().endswith(SYNTHETIC_NOTE)


def test_corrupted_exponent_fails_verification(neg_kahler):
    base, result = neg_kahler
    sol = result[0]
    x = base.grid.coordinates()[0]
    bad = SklscSolution(sol.kappa, sol.lambda0, 2, sol.phi, sol.f + base.grid.field(0.05 * np.cos(3 * x)), 0, 0, "x")
    assert verify(bad, base)[0] > 10 * verify(sol, base)[0]
    assert verify(bad, base)[0] > SolverSettings().pde_tolerance(base.grid)


def test_pde_residual_shrinks_under_refinement():
    res = []
    for N in (32, 64):
        base = negative_kahler_base(N)
        sols = solve(SklscProblem(base, (1.0, 1.5), SolverSettings(samples=16)))
        res.append(sols[0].residual_pde)
    assert res[1] < res[0]


def test_explicit_regime_and_containment(neg_kahler):
    base, auto = neg_kahler
    lower = solve(SklscProblem(base, (1.0, 1.5)))
    assert len(lower) == 1 and 1 < lower[0].kappa < 1.5
    assert lower[0].kappa == pytest.approx(min(s.kappa for s in auto), abs=1e-7)
    wide = solve(SklscProblem(base, (1.01, 10.0)))
    assert len(wide) == 2 and not wide.anomalies
    # the potential of a Kahler base vanishes at kappa = 1, which is the base itself
    with_one = solve(SklscProblem(base, (0.0, 10.0)))
    assert len(with_one) == 3
    assert abs(min(s.kappa for s in with_one) - 1.0) <= 1e-7
    assert len(with_one.anomalies) == 1 and "outside the admissible regime" in with_one.anomalies[0]


def test_zero_degree_evidence():
    result = solve(SklscProblem(zero_degree_base()))
    assert result.sign is GauduchonSign.ZERO
    assert len(result) == 0
    lam = np.concatenate([s.lambdas for s in result.scans.values()])
    assert lam.size == 128 and np.all(lam < 0)
    assert any("zero-degree evidence" in ln for ln in result.lines())


def test_positive_balanced_solution():
    base = positive_balanced_base()
    result = solve(SklscProblem(base))
    assert result.sign is GauduchonSign.POSITIVE and len(result) >= 1
    for sol in result:
        assert sol.kappa < 1
        assert max(verify(sol, base)) <= SolverSettings().pde_tolerance(base.grid)


def test_positive_kahler_nonnegative_chern_scalar_is_obstructed():
    g, x = circle()
    result = solve(SklscProblem(BalancedBaseData.kahler(g.field(np.sin(x) + 1.5), 2)))
    assert len(result) == 0 and "SC_b >= 0" in result.obstruction


def test_solver_failure_propagates(monkeypatch):
    def broken(op, tol=1e-10, max_iter=1000, method="auto"):
        raise SolverFailure("no convergence", {"residual": 1.0, "iterations": max_iter})

    monkeypatch.setattr(family_mod, "ground_state", broken)
    with pytest.raises(SolverFailure) as info:
        solve(SklscProblem(negative_kahler_base(16), (1.0, 1.5), SolverSettings(samples=4)))
    assert "kappa" in info.value.diagnostics
    assert "kappa" in info.value.report()


def test_verify_geometric_zero_and_formula_routes():
    g = TorusGrid((6,) * 4)
    base = BalancedBaseData.flat(g, 2)
    zero = SklscSolution(1.2, 0.0, 2, g.constant(1.0), g.constant(0.0), 0, 0, "t")
    assert verify_geometric(zero, base, "direct") <= 1e-13
    x1 = g.coordinates()[0]
    f = g.field(0.05 * np.sin(x1))
    sol = SklscSolution(1.2, 0.0, 2, f.map(lambda v: np.exp(-v / exponent_multiplier(1.2, 2))), f, 0, 0, "t")
    assert verify_geometric(sol, base, "formula") == pytest.approx(verify(sol, base)[0], rel=1e-10)
    with pytest.raises(UnsupportedMetricError):
        verify_geometric(sol, BalancedBaseData.kahler(g.field(np.sin(x1)), 2), "direct")
    with pytest.raises(UnsupportedMetricError):
        verify_geometric(SklscSolution(1.2, 0, 2, TorusGrid(8).constant(1.0), TorusGrid(8).constant(0.0), 0, 0, "t"),
                         BalancedBaseData.flat(TorusGrid(8), 2))


def test_pde_residual_field_matches_formula():
    g, x = circle(32)
    base = negative_kahler_base(32)
    f = g.field(0.1 * np.cos(x))
    r = pde_residual_field(f, 2.0, base)
    assert r.grid == g
    assert np.allclose(r.values, (3 - 4) * (-0.1 * np.cos(x)) * 1.0 - 3 * (0.1 * np.sin(x)) ** 2
                       + 0.5 * (base.S_b.values - 4 * base.SC_b.values), atol=2e-3)


def test_scalar_flat_bridge():
    g, x = circle()
    rep = scalar_flat_bridge(BalancedBaseData.kahler(g.field(np.sin(x) - 0.2), 2))
    assert rep.kappa == pytest.approx(0.75)
    assert rep.multiplier == pytest.approx(rep.multiplier_closed_form, rel=1e-14)
    assert rep.multiplier == pytest.approx(kahler_multiplier(0.75, 2))
    assert rep.status == "lambda0 nonzero at bridge constant"
    assert scalar_flat_bridge(BalancedBaseData.kahler(g.field(np.sin(x) + 2), 2)).status.startswith("no non-Kahler")
    small = BalancedBaseData.kahler(g.field(0.01 * (np.sin(x) + 0.5)), 2)
    assert bound_obstructs(small)
    assert scalar_flat_bridge(small).status == "obstructed by bound"
    with pytest.raises(UnsupportedMetricError):
        scalar_flat_bridge(positive_balanced_base())


def test_solution_bundle_round_trip(tmp_path, neg_kahler):
    _, result = neg_kahler
    sol = result[0]
    back = read_solution(write_solution(tmp_path / "s", sol))
    assert back.kappa == sol.kappa and back.regime == sol.regime and back.branch == sol.branch
    assert np.array_equal(back.f.values, sol.f.values)
    assert np.array_equal(back.phi.values, sol.phi.values)
    assert math.isclose(back.residual_pde, sol.residual_pde, rel_tol=0, abs_tol=0)
