"""Scenario files: ``[section]`` headers with ``key = value`` lines.

Example::

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

``N`` and ``L`` take one value for every axis or ``d`` values. ``S_b``,
``SC_b``, ``V1`` and ``V2`` are expressions in ``x1 .. xd`` or paths to field
files (relative to the config file); ``bundle = dir`` instead loads a base
bundle directory written by ``write_base_bundle``. For Kahler kinds ``S_b`` defaults to
``2 SC_b``. Scalar entries may be constant expressions such as ``2*pi``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .curvature import BalancedBaseData, read_base_bundle
from .exceptions import ConfigError, ExpressionSyntaxError, SklscError
from .expression import parse_expression
from .family import WarpedFamily
from .grid import ScalarField, TorusGrid, read_field
from .pipeline import SolverSettings

SECTIONS = ("grid", "base", "scan", "family")


@dataclass
class Config:
    grid: TorusGrid
    base: BalancedBaseData | None = None
    regime: str | tuple[float, float] = "auto"
    settings: SolverSettings = field(default_factory=SolverSettings)
    family: WarpedFamily | None = None
    family_samples: int = 50
    shifts: tuple[float, ...] = ()
    source: Path | None = None


def _constant(text: str, key: str) -> float:
    try:
        value = float(parse_expression(text, variables=())())
    except ExpressionSyntaxError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value {text!r} is not finite")
    return value


def _constants(text: str, key: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ConfigError(f"{key}: empty value")
    return [_constant(p, key) for p in parts]


def _integer(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _field(text: str, key: str, grid: TorusGrid, root: Path) -> ScalarField:
    candidate = root / text
    if candidate.is_file():
        fld = read_field(candidate)
        if fld.grid != grid:
            raise ConfigError(f"{key}: {candidate} is on {fld.grid}, config grid is {grid}")
        return fld
    if text.endswith(".field"):
        raise ConfigError(f"{key}: field file {candidate} does not exist")
    try:
        return parse_expression(text, d=grid.d).on_grid(grid)
    except ExpressionSyntaxError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _function(text: str, key: str):
    try:
        return parse_expression(text, variables=("t",)).as_function("t")
    except ExpressionSyntaxError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _grid(sec) -> TorusGrid:
    d = _integer(sec.get("d", "1"), "grid.d")
    if "N" not in sec:
        raise ConfigError("grid.N is required")
    points = [_integer(tok, "grid.N") for tok in sec["N"].replace(",", " ").split()]
    lengths = _constants(sec.get("L", "2*pi"), "grid.L")
    if len(points) == 1:
        points *= d
    if len(lengths) == 1:
        lengths *= d
    if len(points) != d or len(lengths) != d:
        raise ConfigError(f"grid: need 1 or {d} values for N and L")
    try:
        return TorusGrid(points, lengths)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _settings(sec) -> SolverSettings:
    kw = {}
    for key in ("tol_lambda", "tol_p", "eig_tol", "tol_pde", "eps_deg"):
        if key in sec:
            kw[key] = _constant(sec[key], f"scan.{key}")
    if "samples" in sec:
        kw["samples"] = _integer(sec["samples"], "scan.samples")
    if "threads" in sec:
        kw["threads"] = _integer(sec["threads"], "scan.threads")
    return SolverSettings(**kw)


def _regime(sec):
    text = sec.get("regime", "auto").strip()
    if text == "auto":
        return "auto"
    vals = [v.strip() for v in text.replace("(", "").replace(")", "").split(",")]
    if len(vals) != 2:
        raise ConfigError(f"scan.regime: expected 'auto' or 'lo, hi', got {text!r}")
    out = []
    for v in vals:
        if v in ("inf", "+inf", "-inf"):
            out.append(float(v))
        else:
            out.append(_constant(v, "scan.regime"))
    if not out[0] < out[1]:
        raise ConfigError("scan.regime: need lo < hi")
    return tuple(out)


def _base(sec, grid, root) -> BalancedBaseData:
    if "bundle" in sec:
        path = root / sec["bundle"]
        if not path.is_dir():
            raise ConfigError(f"base.bundle: directory {path} does not exist")
        try:
            base = read_base_bundle(path)
        except (OSError, SklscError, ValueError) as exc:
            raise ConfigError(f"base.bundle: {exc}") from exc
        if base.grid != grid:
            raise ConfigError(f"base.bundle: bundle grid {base.grid} differs from config grid {grid}")
        return base
    n = _integer(sec.get("n", "2"), "base.n")
    kind = sec.get("kind", "synthetic-balanced").strip()
    if "SC_b" not in sec:
        raise ConfigError("base.SC_b is required")
    SC = _field(sec["SC_b"], "base.SC_b", grid, root)
    if "S_b" in sec:
        S = _field(sec["S_b"], "base.S_b", grid, root)
    elif kind in ("kahler", "synthetic-kahler"):
        S = 2.0 * SC
    else:
        raise ConfigError("base.S_b is required for balanced kinds")
    kw = {"tol": _constant(sec["tol"], "base.tol")} if "tol" in sec else {}
    try:
        return BalancedBaseData(n, S, SC, kind, **kw)
    except (SklscError, ValueError) as exc:
        raise ConfigError(f"base: {exc}") from exc


def _family(sec, grid, root):
    required = ("V1", "V2", "f", "h", "a", "b", "C_f_a", "C_h_a", "C_h_b")
    missing = [k for k in required if k not in sec]
    if missing:
        raise ConfigError(f"family: missing {', '.join(missing)}")
    fam = WarpedFamily(
        V1=_field(sec["V1"], "family.V1", grid, root),
        V2=_field(sec["V2"], "family.V2", grid, root),
        f=_function(sec["f"], "family.f"),
        h=_function(sec["h"], "family.h"),
        a=_constant(sec["a"], "family.a"),
        b=_constant(sec["b"], "family.b"),
        C_f_a=_constant(sec["C_f_a"], "family.C_f_a"),
        C_h_a=_constant(sec["C_h_a"], "family.C_h_a"),
        C_h_b=_constant(sec["C_h_b"], "family.C_h_b"),
        shift=_constant(sec.get("shift", "0"), "family.shift"),
    )
    if not fam.a < fam.b:
        raise ConfigError("family: need a < b")
    samples = _integer(sec.get("samples", "50"), "family.samples")
    shifts = tuple(_constants(sec["shifts"], "family.shifts")) if "shifts" in sec else ()
    return fam, samples, shifts


def parse_config(text: str, root: Path | str = ".", source: Path | None = None) -> Config:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if not cp.has_section("grid"):
        raise ConfigError("[grid] section is required")
    root = Path(root)
    grid = _grid(cp["grid"])
    cfg = Config(grid=grid, source=source)
    if cp.has_section("base"):
        cfg.base = _base(cp["base"], grid, root)
    if cp.has_section("scan"):
        cfg.regime = _regime(cp["scan"])
        cfg.settings = _settings(cp["scan"])
    if cp.has_section("family"):
        cfg.family, cfg.family_samples, cfg.shifts = _family(cp["family"], grid, root)
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(), root=path.parent, source=path)
