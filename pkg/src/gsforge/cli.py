"""Command-line driver.

Every command reads one configuration (built-in defaults, then an optional
``--config`` JSON file, then command-line flags), writes its artifacts to
``--out`` and finishes with ``manifest.json``. Exit status:

====  ===========================================================
0     every requested check met its threshold
1     at least one check missed its threshold
2     the configuration could not be used (bad flag, unreadable or
      missing file, unparsable expression)
3     a numerical routine failed; its message is printed
====  ===========================================================

Normal derivatives on the boundary circle are ``-d/dr`` (the normal points
from the coil region into the plasma) and a current sheet of density j
enters as ``Lap a = -j delta``.

``GSFORGE_THREADS`` caps the BLAS/OpenMP pools used by numpy and scipy.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import sympy
from threadpoolctl import threadpool_limits

from . import __version__
from .axisym import AxisymSpec, updown_asymmetry
from .coil_design import (
    CoilSheet, Curve, analyticity_radius, design_coil_levelset, design_coil_perturbed, design_coil_spectral,
    exterior_potential, verify_coil,
)
from .core.fourier import FourierSeries
from .core.grid import PolarGrid, RZGrid, ScalarField
from .core.profile import Profile
from .diagnostics import VirialInput, free_boundary_audit, serrin_check, stellarator_loop, virial_check
from .equilibrium import build_radial_equilibrium, momentum_residual
from .errors import GSForgeError
from .io import Report, dump_json, save_field, write_manifest
from .reconstruction import reconstruction_report

COMMANDS = ("equilibrium", "reconstruct", "design-coil", "verify-coil", "audit", "virial", "axisym", "sharpness")
DEMOS = ("disk", "coil", "solovev")

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

_RADIAL = {"A": "(1 - r**2)/2", "G": "0", "p_boundary": 0.0, "grid": 128}
_BOUNDARY = {"f": "cos", "R": "2", "method": "auto", "k_max": 64, "a0": None}

DEFAULTS = {
    "equilibrium": {**_RADIAL, "tol": 1e-8, "checks": ["audit"], "no_coil": False, "coil": None},
    "audit": {**_RADIAL, "tol": 1e-8, "no_coil": False},
    "virial": {**_RADIAL, "tol": 1e-8, "rho": 1.0},
    "reconstruct": {**_RADIAL, "G": "sin(a)", "tol": 1e-6, "fields": None, "n_bins": 128},
    "design-coil": {**_BOUNDARY, "tol": 1e-8, "samples": 256},
    "verify-coil": {"f": "cos", "k_max": 64, "coil_file": None, "tol": 1e-8},
    "sharpness": {"f": "1/(1 - cos(theta)/2)", "k_max": 64, "R": None, "tol": 1e-8},
    "axisym": {"symmetry": "phi_independent", "A": "r**2*z**2/2 + 3*r**2/10", "G": "0", "C": "0", "F": "0",
               "P": "-a", "r_range": [0.5, 1.5], "z_range": [-0.5, 0.5], "grid": 64, "tol": 1e-8},
}


class ConfigError(GSForgeError):
    """The run configuration is unusable."""


# ------------------------------------------------------------ parsing helpers

def _sympify(text, names):
    symbols = {n: sympy.Symbol(n, real=True) for n in names}
    try:
        expr = sympy.sympify(str(text), locals=symbols)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from exc
    if isinstance(expr, sympy.FunctionClass):
        # a bare function name such as "cos" means cos of the first variable
        expr = expr(symbols[names[0]])
    unknown = {str(s) for s in expr.free_symbols} - set(names)
    if unknown:
        raise ConfigError(f"expression {text!r} uses unknown symbols {sorted(unknown)}; allowed: {list(names)}")
    return expr, [symbols[n] for n in names]


def profile_from_text(text, variable="a"):
    """A :class:`Profile` in one variable from an expression string or number."""
    if isinstance(text, (int, float)):
        return Profile.constant(float(text))
    expr, (sym,) = _sympify(text, (variable,))
    try:
        return Profile.from_expr(str(expr), variable)
    except GSForgeError as exc:
        raise ConfigError(str(exc)) from exc


def series_from_text(text, k_max=64):
    """Fourier series of an expression in ``theta`` (``"cos"`` is shorthand for ``cos(theta)``)."""
    if isinstance(text, (int, float)):
        return FourierSeries.constant(float(text))
    expr, (theta,) = _sympify(text, ("theta",))
    fn = sympy.lambdify(theta, expr, "numpy")
    return FourierSeries.from_function(lambda t: np.broadcast_to(fn(t), t.shape), int(k_max)).trimmed(1e-15)


def rz_function(text):
    expr, syms = _sympify(text, ("r", "z"))
    fn = sympy.lambdify(syms, expr, "numpy")
    return lambda r, z: np.broadcast_to(fn(r, z), np.broadcast(r, z).shape).astype(float)


def _coil_shape(value, k_max):
    """A float radius for circles, otherwise a FourierSeries R(theta)."""
    series = series_from_text(value, k_max)
    return series.mean if series.k_max == 0 else series


def read_polar_csv(path):
    """Rebuild a polar ScalarField from the CSV written by :func:`gsforge.io.save_field`."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        r = np.array([float(row["r"]) for row in rows])
        th = np.array([float(row["theta"]) for row in rows])
        v = np.array([float(row["value"]) for row in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path} is not a polar field CSV: {exc}") from exc
    r_nodes, n_theta = np.unique(r), np.unique(th).size
    if r_nodes.size * n_theta != v.size:
        raise ConfigError(f"{path} does not hold a full tensor grid")
    dr = (r_nodes[-1] - r_nodes[0]) / (r_nodes.size - 1)
    has_axis = abs(r_nodes[0] - 0.5 * dr) < 1e-9 * dr
    grid = PolarGrid(r_nodes, n_theta, has_axis=has_axis)
    return ScalarField(grid, v.reshape(r_nodes.size, n_theta))


def _load_json(path, what):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def demo_config(name):
    """The bundled configuration ``name`` (one of :data:`DEMOS`) as a dict."""
    if name not in DEMOS:
        raise ConfigError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return json.loads(resources.files("gsforge").joinpath("demos", f"{name}.json").read_text())


def resolve_config(options):
    """Merge defaults, the optional config file and explicit flags; validate the result."""
    options = dict(options)
    base = {}
    if "demo" in options:
        base = demo_config(options.pop("demo"))
    if "config" in options:
        base.update(_load_json(options.pop("config"), "config file"))
    command = options.pop("command", None) or base.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"no valid command given (got {command!r}); choose from {', '.join(COMMANDS)}")
    cfg = {**DEFAULTS[command], **base, **options, "command": command}
    unknown = set(cfg) - set(DEFAULTS[command]) - {"command", "out"}
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
    tol = cfg["tol"]
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigError(f"tol must be a positive number, got {tol!r}")
    if "grid" in cfg:
        n = cfg["grid"]
        if not isinstance(n, int) or n < 32 or n > 2048 or n & (n - 1):
            raise ConfigError(f"grid must be a power of two between 32 and 2048, got {n!r}")
    cfg.setdefault("out", "gsforge-out")
    return cfg


# ------------------------------------------------------------ run machinery

class Run:
    """Collects artifacts and check outcomes for one command."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.files = []
        self.checks = {}

    def json(self, name, obj):
        self.files.append(dump_json(obj, self.out / name))

    def text(self, name, text):
        path = self.out / name
        path.write_text(text)
        self.files.append(path)

    def field(self, name, f):
        self.files.append(save_field(f, self.out / name))

    def check(self, name, passed, detail=""):
        self.checks[name] = bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name}{': ' + detail if detail else ''}")


def _radial_spec(cfg):
    A = profile_from_text(cfg["A"], "r")
    G = profile_from_text(cfg["G"], "a")
    n = cfg["grid"]
    return build_radial_equilibrium(A, G, n_r=n, n_theta=n, p_boundary=float(cfg["p_boundary"]))


def _audit(run, spec):
    cfg = run.cfg
    rep = free_boundary_audit(spec)
    run.json("audit.json", rep)
    ok = rep["solvable"] and (not cfg.get("no_coil") or rep["residual_max"] <= cfg["tol"])
    run.check("audit", ok, f"condition={rep['condition']} residual={rep['residual_max']:.3e}")
    if "required_f" in rep.extra:
        run.json("required_f.json", rep.extra["required_f"])
    return rep


def cmd_equilibrium(run):
    cfg = run.cfg
    checks = set(cfg["checks"]) | ({"loop"} if cfg["coil"] is not None else set())
    unknown = checks - {"audit", "virial", "serrin", "loop"}
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    spec = _radial_spec(cfg)
    for name in ("A", "psi", "p"):
        run.field(f"{name}.csv", getattr(spec, name))
    run.json("equilibrium.json", Report(
        "equilibrium",
        {"momentum_residual": momentum_residual(spec).max_abs(), "bracket_defect": spec.bracket_defect(),
         "boundary_normal_derivative": spec.boundary_normal_derivative(), "H0": float(spec.H(0.0))},
        inputs={k: cfg[k] for k in ("A", "G", "p_boundary", "grid")}))
    if "audit" in checks:
        _audit(run, spec)
    if "virial" in checks:
        _virial(run, spec)
    if "serrin" in checks:
        rep = serrin_check(spec.A)
        run.json("serrin.json", rep)
        run.check("serrin", not rep["rigidity_violation"], f"variation={rep['neumann_variation']:.3e}")
    if "loop" in checks:
        shape = _coil_shape(cfg["coil"], 64)
        rep = stellarator_loop(spec, shape, tol=cfg["tol"])
        run.json("loop.json", rep)
        if "coil" in rep.extra:
            run.json("coil.json", rep.extra["coil"])
            run.text("coil.csv", rep.extra["coil"].to_csv())
        run.check("loop", rep["closed"], f"total_residual={rep['total_residual']:.3e}")


def cmd_audit(run):
    _audit(run, _radial_spec(run.cfg))


def _virial(run, spec):
    rep = virial_check(VirialInput.from_equilibrium(spec, rho=float(run.cfg.get("rho", 1.0))), run.cfg["tol"])
    run.json("virial.json", rep)
    run.check("virial", rep["identity"], f"combined={rep['combined']:.3e} relative={rep['relative']:.3e}")


def cmd_virial(run):
    _virial(run, _radial_spec(run.cfg))


def cmd_reconstruct(run):
    cfg = run.cfg
    if cfg["fields"]:
        src = Path(cfg["fields"])
        A, psi = read_polar_csv(src / "A.csv"), read_polar_csv(src / "psi.csv")
        p = read_polar_csv(src / "p.csv") if (src / "p.csv").is_file() else None
    else:
        spec = _radial_spec(cfg)
        A, psi, p = spec.A, spec.psi, spec.p
    rep = reconstruction_report(A, psi, p, n_bins=int(cfg["n_bins"]), spread_rel=cfg["tol"])
    run.json("reconstruction.json", rep)
    run.check("reconstruct", rep["flags"]["psi_function_of_A"], f"spread={rep['G']['spread']:.3e}")


def _design(cfg, f):
    shape = _coil_shape(cfg["R"], cfg["k_max"])
    method = cfg["method"]
    if method == "auto":
        method = "spectral" if np.isscalar(shape) else "perturbed"
    if method == "spectral":
        if not np.isscalar(shape):
            raise ConfigError("the spectral method needs a circular coil (constant R)")
        return design_coil_spectral(f, float(shape)), None
    if method == "perturbed":
        curve = Curve(FourierSeries.constant(shape) if np.isscalar(shape) else shape)
        sheet, state = design_coil_perturbed(f, curve)
        return sheet, state.to_json()
    if method == "levelset":
        return design_coil_levelset(f, cfg["a0"]).coil, None
    raise ConfigError(f"unknown method {method!r}; use auto, spectral, perturbed or levelset")


def _verify(run, sheet, f):
    cfg = run.cfg
    res = verify_coil(exterior_potential(sheet, 2 * np.pi * f.mean), f, tol=cfg["tol"])
    flags = res.pop("flags")
    run.json("verify.json", Report("verify_coil", res, flags, {"coil": sheet.to_json(), "f": f.to_json(),
                                                               "tol": cfg["tol"]}))
    run.check("verify", all(flags.values()), f"dirichlet={res['dirichlet']:.3e} neumann={res['neumann']:.3e}")


def cmd_design_coil(run):
    cfg = run.cfg
    f = series_from_text(cfg["f"], cfg["k_max"])
    sheet, state = _design(cfg, f)
    run.json("coil.json", sheet)
    run.text("coil.csv", sheet.to_csv(int(cfg["samples"])))
    if state is not None:
        run.json("neumann_series.json", state)
    _verify(run, sheet, f)


def cmd_verify_coil(run):
    cfg = run.cfg
    if not cfg["coil_file"]:
        raise ConfigError("verify-coil needs --coil-file")
    obj = _load_json(cfg["coil_file"], "coil file")
    try:
        sheet = CoilSheet.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{cfg['coil_file']} is not a coil export: {exc}") from exc
    _verify(run, sheet, series_from_text(cfg["f"], cfg["k_max"]))


def cmd_sharpness(run):
    cfg = run.cfg
    est = analyticity_radius(series_from_text(cfg["f"], cfg["k_max"]))
    metrics = est.to_json()
    flags = {}
    if cfg["R"] is not None:
        metrics["R"] = float(cfg["R"])
        flags["feasible"] = est.feasible(float(cfg["R"]))
    run.json("sharpness.json", Report("sharpness", metrics, flags, {"f": cfg["f"], "k_max": cfg["k_max"]}))
    run.check("sharpness", all(flags.values()), f"rho={est.rho:.6g} flag={est.flag}")


def cmd_axisym(run):
    cfg = run.cfg
    n = cfg["grid"]
    grid = RZGrid.uniform(tuple(cfg["r_range"]), tuple(cfg["z_range"]), n + 1, n + 1)
    A = ScalarField.from_function(grid, rz_function(cfg["A"]))
    profiles = {k: profile_from_text(cfg[k]) for k in ("G", "C", "F", "P")}
    spec = AxisymSpec.build(cfg["symmetry"], A, **profiles)
    metrics = spec.report()
    if cfg["symmetry"] == "phi_independent":
        metrics["updown_asymmetry"] = updown_asymmetry(A)["asymmetry"]
    run.field("A.csv", A)
    run.field("gs_residual.csv", spec.residual())
    ok = metrics["gs_residual"] <= cfg["tol"] and metrics["compatibility"] <= cfg["tol"]
    run.json("axisym.json", Report("axisym", metrics, {"residual": ok},
                                   {k: cfg[k] for k in ("symmetry", "A", "G", "C", "F", "P", "r_range", "z_range")}))
    run.check("axisym", ok, f"gs_residual={metrics['gs_residual']:.3e}")


RUNNERS = {
    "equilibrium": cmd_equilibrium, "audit": cmd_audit, "virial": cmd_virial, "reconstruct": cmd_reconstruct,
    "design-coil": cmd_design_coil, "verify-coil": cmd_verify_coil, "sharpness": cmd_sharpness,
    "axisym": cmd_axisym,
}


def run(cfg):
    """Execute a resolved configuration; return the exit status."""
    r = Run(cfg)
    r.out.mkdir(parents=True, exist_ok=True)
    try:
        RUNNERS[cfg["command"]](r)
    except ConfigError as exc:
        print(f"gsforge: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GSForgeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gsforge: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_NUMERICAL
    else:
        status = EXIT_OK if all(r.checks.values()) else EXIT_THRESHOLD
    write_manifest(r.out, r.files, cfg["command"], status)
    return status


# ------------------------------------------------------------ argparse

def _json_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser():
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, metavar="PATH", help="JSON file of settings")
    common.add_argument("--out", default=S, metavar="DIR", help="output directory (default gsforge-out)")
    common.add_argument("--grid", type=int, default=S, metavar="N", help="grid size, a power of two in [32, 2048]")
    common.add_argument("--tol", type=float, default=S, metavar="X", help="pass/fail threshold")

    parser = argparse.ArgumentParser(
        prog="gsforge", parents=[common],
        description="Symmetric MHD equilibria, free-boundary audits and current-sheet coil design.",
        epilog="Boundary normal derivatives are taken as -d/dr on the unit circle. "
               "Exit codes: 0 pass, 1 threshold failure, 2 configuration error, 3 numerical failure.")
    parser.add_argument("--version", action="version", version=f"gsforge {__version__}")
    parser.add_argument("--demo", choices=DEMOS, default=S,
                        help="run a bundled configuration: disk (no coil), coil (coil-held), solovev (axisymmetric)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, argument_default=S)

    radial = []
    for name, text in [("equilibrium", "build a radial equilibrium and run the requested checks"),
                       ("audit", "free-boundary pressure-balance audit"),
                       ("virial", "virial identity"),
                       ("reconstruct", "recover structure functions from A and psi")]:
        p = add(name, text)
        p.add_argument("--A", help="flux profile A(r), vanishing at r = 1")
        p.add_argument("--G", help="stream function psi = G(a)")
        p.add_argument("--p-boundary", dest="p_boundary", type=float, help="boundary pressure")
        radial.append(p)
    radial[0].add_argument("--coil", help="coil shape R(theta); runs audit, coil design and verification")
    radial[0].add_argument("--checks", type=lambda s: s.split(","), help="comma list of audit,virial,serrin")
    radial[0].add_argument("--no-coil", dest="no_coil", action="store_true",
                           help="require pressure balance with no external field")
    radial[1].add_argument("--no-coil", dest="no_coil", action="store_true")
    radial[2].add_argument("--rho", type=float, help="mass density")
    radial[3].add_argument("--fields", metavar="DIR", help="directory with A.csv and psi.csv (and optionally p.csv)")
    radial[3].add_argument("--n-bins", dest="n_bins", type=int)

    p = add("design-coil", "current sheet reproducing -d_r a = f on the unit circle")
    p.add_argument("--f", help="boundary data in theta, e.g. 'cos' or '1 + 0.2*cos(theta)'")
    p.add_argument("--R", help="coil radius or shape R(theta)")
    p.add_argument("--method", choices=("auto", "spectral", "perturbed", "levelset"))
    p.add_argument("--a0", type=float, help="cut-off level for the level-set method")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--samples", type=int, help="rows in coil.csv")

    p = add("verify-coil", "check a coil export against boundary data")
    p.add_argument("--coil-file", dest="coil_file", metavar="PATH", help="coil.json from design-coil")
    p.add_argument("--f")
    p.add_argument("--k-max", dest="k_max", type=int)

    p = add("sharpness", "analyticity radius of boundary data")
    p.add_argument("--f")
    p.add_argument("--R", type=float, help="coil radius whose feasibility is checked")
    p.add_argument("--k-max", dest="k_max", type=int)

    p = add("axisym", "residuals of a translation- or rotation-symmetric configuration")
    p.add_argument("--symmetry", choices=("z_independent", "phi_independent"))
    p.add_argument("--A", help="A(r, z)")
    for name in "GCFP":
        p.add_argument(f"--{name}", help=f"profile {name}(a)")
    p.add_argument("--r-range", dest="r_range", type=_json_value, help="JSON pair, e.g. [0.5, 1.5]")
    p.add_argument("--z-range", dest="z_range", type=_json_value)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:                     # argparse exits 2 on bad flags already
        return int(exc.code or 0)
    options = {k: v for k, v in vars(ns).items() if v is not None or k != "command"}
    try:
        cfg = resolve_config(options)
    except ConfigError as exc:
        print(f"gsforge: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    threads = os.environ.get("GSFORGE_THREADS")
    if threads is None:
        return run(cfg)
    try:
        limit = int(threads)
        if limit < 1:
            raise ValueError
    except ValueError:
        print(f"gsforge: configuration error: GSFORGE_THREADS must be a positive integer, got {threads!r}",
              file=sys.stderr)
        return EXIT_CONFIG
    with threadpool_limits(limits=limit):
        return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
