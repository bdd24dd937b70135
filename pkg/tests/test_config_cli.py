import numpy as np
import pytest

from sklsc.cli import build_parser, main
from sklsc.config import load_config, parse_config
from sklsc.curvature import write_base_bundle
from sklsc.demos import negative_kahler_base
from sklsc.exceptions import ConfigError
from sklsc.grid import write_field

NEG_KAHLER = """
[grid]
d = 1
N = 64
L = 2*pi

[base]
n = 2
kind = synthetic-kahler
SC_b = sin(x1) - 0.2

[scan]
regime = auto
samples = 64
"""

ZERO_DEGREE = NEG_KAHLER.replace("sin(x1) - 0.2", "sin(x1)")

WARPED = """
[grid]
N = 64

[family]
V1 = -1 + (cos(x1) - 1)/4
V2 = 1
f = 1/(1-t)
h = (1+t)/2
a = 0
b = 1
C_f_a = 1
C_h_a = 0.5
C_h_b = 1
samples = 50
shifts = 0.6, 1.0, 1.4
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_neg_kahler_config():
    cfg = parse_config(NEG_KAHLER)
    ref = negative_kahler_base()
    assert cfg.grid == ref.grid and cfg.base.n == 2
    assert np.array_equal(cfg.base.SC_b.values, ref.SC_b.values)
    assert np.array_equal(cfg.base.S_b.values, ref.S_b.values)
    assert cfg.regime == "auto" and cfg.settings.samples == 64


def test_parse_regime_and_settings():
    cfg = parse_config("[grid]\nN = 8 4\nd = 2\nL = 1, 2\n[scan]\nregime = 1.5, inf\ntol_pde = 1e-3\nthreads = 2\n")
    assert cfg.grid.shape == (8, 4) and cfg.grid.lengths == (1.0, 2.0)
    assert cfg.regime == (1.5, float("inf"))
    assert cfg.settings.tol_pde == 1e-3 and cfg.settings.threads == 2


@pytest.mark.parametrize(
    "text",
    [
        "[grid]\n",
        "[grid]\nN = 0\n",
        "[grid]\nN = 8\n[bogus]\n",
        "[grid]\nN = 8\n[base]\nkind = synthetic-balanced\nSC_b = -1\n",
        "[grid]\nN = 8\n[base]\nkind = kahler\nSC_b = sin(x2)\n",
        "[grid]\nN = 8\n[base]\nkind = kahler\nSC_b = 1 +\n",
        "[grid]\nN = 8\n[base]\nSC_b = -1\nS_b = 0\n",
        "[grid]\nN = 8\n[scan]\nregime = 2, 1\n",
        "[grid]\nN = 8\n[family]\nV1 = 1\n",
        "[grid]\nN = 8\n[base]\nSC_b = missing.field\nkind = kahler\n",
        "not a config",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_field_files_and_bundles(tmp_path):
    base = negative_kahler_base()
    write_field(tmp_path / "sc.field", base.SC_b)
    cfg = load_config(write(tmp_path, "[grid]\nN = 64\n[base]\nkind = kahler\nSC_b = sc.field\n"))
    assert np.array_equal(cfg.base.SC_b.values, base.SC_b.values)
    write_base_bundle(tmp_path / "bundle", base)
    cfg = load_config(write(tmp_path, "[grid]\nN = 64\n[base]\nbundle = bundle\n", "b.cfg"))
    assert cfg.base.is_kahler and np.array_equal(cfg.base.S_b.values, base.S_b.values)
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[grid]\nN = 32\n[base]\nbundle = bundle\n", "c.cfg"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_help_lists_every_command(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("scan", "solve", "verify", "poincare", "instability", "demo"):
        assert cmd in out


def test_solve_then_verify(tmp_path, capsys):
    cfg = write(tmp_path, NEG_KAHLER)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert out.count("solution: kappa=") == 2
    assert (tmp_path / "out" / "summary.txt").read_text() == out
    assert main(["verify", "--config", cfg, "--solution", str(tmp_path / "out" / "solution_1")]) == 0
    assert "within_tolerance: true" in capsys.readouterr().out
    strict = write(tmp_path, NEG_KAHLER + "tol_pde = 1e-12\n", "strict.cfg")
    assert main(["verify", "--config", strict, "--solution", str(tmp_path / "out" / "solution_2")]) == 1
    assert main(["verify", "--config", cfg, "--solution", str(tmp_path / "missing")]) == 3


def test_zero_degree_exit_code(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, ZERO_DEGREE)]) == 2
    assert "no solution" in capsys.readouterr().out


def test_scan_csv_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, NEG_KAHLER)
    one = write(tmp_path, NEG_KAHLER + "threads = 1\n", "one.cfg")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["scan", "--config", one, "--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    rows = [ln for ln in a.decode().splitlines() if not ln.startswith("#")]
    assert rows[0] == "param,lambda0,residual,converged" and len(rows) == 129
    assert "crossings: 2" in capsys.readouterr().err


def test_warped_scan_and_instability(tmp_path, capsys):
    cfg = write(tmp_path, WARPED)
    assert main(["scan", "--config", cfg, "--family", "warped"]) == 2
    assert main(["instability", "--config", cfg, "--out", str(tmp_path / "w.csv")]) == 0
    out = capsys.readouterr().out
    assert "counterexamples: 0" in out and out.count("t* = ") == 3
    assert (tmp_path / "w.csv").exists()


def test_poincare_command(tmp_path, capsys):
    cfg = write(tmp_path, "[grid]\nN = 64\n")
    assert main(["poincare", "--config", cfg]) == 0
    a = capsys.readouterr().out
    assert main(["poincare", "--config", cfg, "--method", "symbol"]) == 0
    b = capsys.readouterr().out
    pa, pb = (float(s.splitlines()[0].split()[1]) for s in (a, b))
    assert pa == pytest.approx(pb, rel=1e-8)
    assert pb == pytest.approx(1 / (4 / (2 * np.pi / 64) ** 2 * np.sin(np.pi / 64) ** 2), rel=1e-12)


def test_config_errors_exit_three(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, "[grid]\nN = 8\n[base]\nkind = kahler\nSC_b = 2*\n")]) == 3
    assert "column" in capsys.readouterr().err
    assert main(["instability", "--config", write(tmp_path, "[grid]\nN = 8\n", "g.cfg")]) == 3
    assert main(["solve", "--config", str(tmp_path / "absent.cfg")]) == 3


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    import sklsc.family as family_mod
    from sklsc.exceptions import SolverFailure

    def broken(op, tol=1e-10, max_iter=1000, method="auto"):
        raise SolverFailure("no convergence", {"residual": 1.0})

    monkeypatch.setattr(family_mod, "ground_state", broken)
    assert main(["solve", "--config", write(tmp_path, NEG_KAHLER)]) == 4
    assert "kappa:" in capsys.readouterr().err


def test_demo_writes_outputs(tmp_path, capsys):
    assert main(["demo", "degenerate-obstruction"]) == 0
    assert "kahler-constant" in capsys.readouterr().out
    assert main(["demo", "pos-degree-balanced", "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "solution_1" / "phi.field").exists()
