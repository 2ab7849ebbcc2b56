"""Command-line runner.

Usage::

    scalarflat <command> [--config PATH] [--out DIR] [--cache DIR] [--threads K]
    scalarflat --print-defaults

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures.  Artifacts are written only after a command finishes, so a failed
run leaves nothing but ``error.json``.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import tempfile

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from .angular import AngularGrid
from .embedding import residual_csv, scalar_curvature_field, shape_operator_fd, verdict_summary
from .errors import ConfigError, NumericalFailure, ScalarFlatError
from .fields import ConeField, RadialGrid
from .link_geometry import invariants, solve_scalar_flat_radii
from .radial import solve_linear
from .solver import SolverConfig, lambda_threshold_scan, solve_graph
from .spectrum import cached_spectrum, select_threshold, spectrum_csv
from .stability import cone_stability, hardy_check, instability_witness

COMMANDS = ("link", "spectrum", "solve-linear", "solve-graph", "verify", "stability",
            "lambda-scan")

DEFAULTS = {
    "link": {"p": 2, "q": 1},
    "grids": {"t_min": 1e-3, "radial": 129, "angular": 33, "angular2": None, "accuracy": 4},
    "selection": {"n": None, "m": None, "epsilon": 0.5, "mode_budget": 200},
    "solver": {"lambda": 0.01, "psi": None, "tol_fixed_point": 1e-10, "max_iter": 50,
               "contraction_window": 3, "lambdas": [0.005, 0.01, 0.02, 0.04, 0.08]},
    "stability": {"hardy_fields": 50, "eig_points": 400},
    "seed": 0,
}

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_NULLABLE_NUM = {"type": ["number", "null"]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "link": {"type": "object", "additionalProperties": False,
                 "properties": {"p": _POS_INT, "q": _POS_INT}},
        "grids": {"type": "object", "additionalProperties": False, "properties": {
            "t_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "radial": {"type": "integer", "minimum": 9},
            "angular": {"type": "integer", "minimum": 5},
            "angular2": {"type": ["integer", "null"], "minimum": 4},
            "accuracy": {"enum": [2, 4, 6]}}},
        "selection": {"type": "object", "additionalProperties": False, "properties": {
            "n": {"type": ["integer", "null"], "minimum": 4},
            "m": _NULLABLE_NUM,
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "mode_budget": _POS_INT}},
        "solver": {"type": "object", "additionalProperties": False, "properties": {
            "lambda": {"type": "number", "minimum": 0},
            "psi": {"oneOf": [{"type": "null"}, {"type": "array", "items": {
                "type": "object", "additionalProperties": False,
                "required": ["k", "l", "value"],
                "properties": {"k": {"type": "integer", "minimum": 0},
                               "l": {"type": "integer", "minimum": 0},
                               "parity": {"enum": ["", "cos", "sin"]},
                               "value": _NUM}}}]},
            "tol_fixed_point": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": _POS_INT,
            "contraction_window": _POS_INT,
            "lambdas": {"type": "array", "items": {"type": "number", "minimum": 0},
                        "minItems": 1}}},
        "stability": {"type": "object", "additionalProperties": False, "properties": {
            "hardy_fields": _POS_INT, "eig_points": {"type": "integer", "minimum": 10}}},
        "seed": {"type": "integer", "minimum": 0},
    },
}


def load_config(path=None):
    """Defaults merged section-wise with the JSON file at ``path``."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        jsonschema.validate(user, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    for key, val in user.items():
        if isinstance(val, dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    return cfg


class _Run:
    """Objects shared by the commands, built lazily from a config."""

    def __init__(self, cfg, cache=None):
        self.cfg = cfg
        self.cache = cache
        self.link = solve_scalar_flat_radii(cfg["link"]["p"], cfg["link"]["q"])
        s = cfg["selection"]
        self.n = self.link.n if s["n"] is None else s["n"]
        g = cfg["grids"]
        self.radial = RadialGrid(g["t_min"], g["radial"])
        self.angular = AngularGrid.for_link(self.link, g["angular"], g["angular2"])
        self.accuracy = g["accuracy"]

    @property
    def selection(self):
        s = self.cfg["selection"]
        return select_threshold(self.link, self.n, s["m"], s["mode_budget"], s["epsilon"])

    def solver_config(self):
        sel = self.selection
        sv = self.cfg["solver"]
        if sv["psi"] is None:
            psi = {sel.modes[sel.J].label: 1.0}
        else:
            psi = {(e["k"], e["l"], e.get("parity", "")): e["value"] for e in sv["psi"]}
        cfg = SolverConfig(self.link, sel, self.radial, self.angular, sv["lambda"], psi,
                           sv["tol_fixed_point"], sv["max_iter"], sv["contraction_window"],
                           self.accuracy)
        try:
            cfg.psi_coefficients
        except KeyError as exc:
            raise ConfigError(f"psi mode {exc} is not resolved by the angular grid") from None
        return cfg


def _grid_csv(values, radial, angular):
    return residual_csv(np.real(values), radial, angular)


def cmd_link(run):
    inv = invariants(run.link)
    return {"summary.json": {"link": run.link.to_record(), "invariants": {
        "lambda1": inv.lambda1, "lambda2": inv.lambda2, "S1": inv.S1, "S2": inv.S2,
        "S3": inv.S3, "t1_eigs": list(inv.t1_eigs)}}}


def cmd_spectrum(run):
    s = run.cfg["selection"]
    modes = cached_spectrum(run.link, run.n, s["mode_budget"], run.cache)
    sel = run.selection
    return {"summary.json": {"link": run.link.to_record(), "selection": sel.to_record()},
            "spectrum.csv": spectrum_csv(modes)}


def cmd_solve_linear(run):
    cfg = run.solver_config()
    f = ConeField.zeros(cfg.basis, cfg.radial)
    u, diag = solve_linear(f, cfg.lam * cfg.psi_coefficients, cfg.selection, cfg.radial)
    return {"summary.json": {"config": cfg.to_record(), "diagnostics": diag.to_record()},
            "u_field.csv": _grid_csv(u.values, cfg.radial, cfg.angular)}


def cmd_solve_graph(run):
    cfg = run.solver_config()
    u, diag = solve_graph(cfg)
    S2 = scalar_curvature_field(cfg.link, u.values, cfg.angular, cfg.radial, cfg.accuracy)
    t3 = cfg.radial.t[:, None, None] ** 3
    return {"summary.json": {"config": cfg.to_record(), "diagnostics": diag.to_record(),
                             "converged": diag.converged, "iterations": diag.iterations,
                             "empirical_lambda_hat": None},
            "u_field.csv": _grid_csv(u.values, cfg.radial, cfg.angular),
            "residual.csv": _grid_csv(t3 * np.real(S2), cfg.radial, cfg.angular)}


def cmd_verify(run):
    """Oracle calibration on the bare cone, then the residual of the solved graph."""
    from .embedding import embed_graph

    cfg = run.solver_config()
    zero = np.zeros((cfg.radial.count,) + cfg.angular.shape)
    curv = shape_operator_fd(embed_graph(cfg.link, zero, cfg.angular, cfg.radial),
                             cfg.accuracy, base="fd")
    t = cfg.radial.t[:, None, None, None]
    exact = np.sort(np.broadcast_to(
        np.array([0.0] + [invariants(cfg.link).lambda1] * cfg.link.p
                 + [invariants(cfg.link).lambda2] * cfg.link.q), curv.principal().shape) / t, axis=-1)
    kerr = np.abs(t * (curv.principal() - exact))[1:]
    out = {"calibration": {"max_scaled_curvature_error": float(kerr.max()),
                           "sup_t2_S2": float(np.max(np.abs((t[..., 0] ** 2 * curv.S[1])[1:])))}}
    files = {}
    if cfg.lam > 0:
        u, diag = solve_graph(cfg)
        S2 = scalar_curvature_field(cfg.link, u.values, cfg.angular, cfg.radial, cfg.accuracy)
        out["graph"] = verdict_summary(S2, cfg.radial, cfg.angular)
        out["graph"]["boundary_error"] = diag.boundary_error
        files["residual.csv"] = _grid_csv(t[..., 0] ** 3 * np.real(S2), cfg.radial, cfg.angular)
    files["summary.json"] = out
    return files


def cmd_stability(run):
    st = run.cfg["stability"]
    rep = cone_stability(run.link, run.n)
    if rep.mu_M < 0:
        w = instability_witness(run.link, run.n, eig_points=st["eig_points"])
        rep.witness = {"sigma": w.sigma, "tau": w.tau, "quotient": w.quotient,
                       "lowest_eigenvalue": w.lowest_eigenvalue}
    h = hardy_check(run.link, run.n, st["hardy_fields"], run.cfg["seed"])
    record = rep.to_record()
    record["hardy"] = {"holds": h.holds, "worst_ratio": h.worst_ratio, "fields": len(h.lhs)}
    return {"stability.json": record,
            "summary.json": {"link": run.link.to_record(), "mu_M": rep.mu_M,
                             "classification": rep.classification}}


def cmd_lambda_scan(run):
    cfg = run.solver_config()
    rows, lam_hat = lambda_threshold_scan(cfg, run.cfg["solver"]["lambdas"])
    return {"summary.json": {"config": cfg.to_record(), "rows": rows,
                             "empirical_lambda_hat": lam_hat}}


HANDLERS = {"link": cmd_link, "spectrum": cmd_spectrum, "solve-linear": cmd_solve_linear,
            "solve-graph": cmd_solve_graph, "verify": cmd_verify, "stability": cmd_stability,
            "lambda-scan": cmd_lambda_scan}


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_all(out, files):
    """Write every artifact to a scratch directory, then move them into ``out``."""
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out) as tmp:
        for name, content in files.items():
            text = content if isinstance(content, str) else _dump(content)
            with open(os.path.join(tmp, name), "w", encoding="utf-8") as fh:
                fh.write(text)
        for name in files:
            os.replace(os.path.join(tmp, name), os.path.join(out, name))


def _fail(out, exc, status):
    record = {"error": type(exc).__name__, "code": getattr(exc, "code", type(exc).__name__),
              "message": str(exc), "exit_status": status}
    trace = getattr(exc, "trace", None)
    if trace is not None:
        record["trace"] = [float(x) for x in trace]
    sys.stderr.write(_dump(record))
    if out is not None:
        _write_all(out, {"error.json": record})
    return status


def build_parser():
    ap = argparse.ArgumentParser(prog="scalarflat", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--cache", help="spectrum cache directory")
    ap.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    ap.add_argument("--print-defaults", action="store_true", help="print the default config")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(_dump(DEFAULTS))
        return 0
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        run = _Run(cfg, args.cache)
    except (ConfigError, ValueError) as exc:
        return _fail(args.out, exc, 1)
    except NumericalFailure as exc:
        return _fail(args.out, exc, 2)
    try:
        with threadpool_limits(limits=args.threads):
            files = HANDLERS[args.command](run)
    except (ConfigError, ValueError) as exc:
        return _fail(args.out, exc, 1)
    except (NumericalFailure, ScalarFlatError) as exc:
        return _fail(args.out, exc, 2)
    _write_all(args.out, files)
    return 0


if __name__ == "__main__":
    sys.exit(main())
