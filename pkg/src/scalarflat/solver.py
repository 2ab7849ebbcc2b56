"""Fixed-point iteration for scalar-flat normal graphs.

``U(v)`` solves ``L U = -Q(v)`` with ``Pi_J U(1, .) = Pi_J(lambda psi)``; the
graph of a fixed point ``u = U(u)`` has ``Sbar_2 = 0`` up to discretization.
The iteration starts at ``H_J(lambda psi)``, the first iterate from zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .angular import AngularGrid
from .calculus import ConeGeometry, nonlinear_remainder
from .embedding import scalar_curvature_field, verdict_summary
from .errors import NonConvergence
from .fields import ConeField, RadialGrid
from .radial import (global_norm, harmonic_extension, high_mode_mask, iteration_norm,
                     slice_norm, solve_linear)
from .spectrum import ModeBasis

__all__ = ["SolverConfig", "Diagnostics", "picard_step", "solve_graph", "lambda_threshold_scan",
           "mode_vector"]


def mode_vector(basis, coeffs):
    """Coefficient vector from ``{(k, l, parity): value}`` or a full array."""
    if isinstance(coeffs, dict):
        out = np.zeros(len(basis))
        for label, val in coeffs.items():
            out[basis.index(tuple(label))] = float(val)
        return out
    out = np.asarray(coeffs, dtype=float)
    if out.shape != (len(basis),):
        raise ValueError("psi coefficient vector has the wrong length")
    return out


@dataclass
class SolverConfig:
    link: object
    selection: object
    radial: RadialGrid
    angular: AngularGrid
    lam: float = 0.0
    psi: object = None
    tol_fixed_point: float = 1e-10
    max_iter: int = 50
    contraction_window: int = 3
    accuracy: int = 4
    linear: str = "consistent"
    chunk: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.tol_fixed_point <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    @cached_property
    def basis(self):
        return ModeBasis(self.link, self.angular, self.selection.n)

    @cached_property
    def geometry(self):
        return ConeGeometry(self.link)

    @cached_property
    def psi_coefficients(self):
        if self.psi is None:
            return np.zeros(len(self.basis))
        return mode_vector(self.basis, self.psi)

    @cached_property
    def cone_curvature(self):
        z = np.zeros((self.radial.count,) + self.angular.shape)
        return scalar_curvature_field(self.link, z, self.angular, self.radial, self.accuracy,
                                      self.chunk)

    def with_lambda(self, lam):
        cfg = SolverConfig(self.link, self.selection, self.radial, self.angular, lam, self.psi,
                           self.tol_fixed_point, self.max_iter, self.contraction_window,
                           self.accuracy, self.linear, self.chunk)
        for name in ("basis", "geometry", "psi_coefficients", "cone_curvature"):
            if name in self.__dict__:
                cfg.__dict__[name] = self.__dict__[name]
        return cfg

    def to_record(self):
        return {
            "link": self.link.to_record(),
            "selection": self.selection.to_record(),
            "radial": self.radial.to_record(),
            "angular": {"n1": self.angular.n1, "n2": self.angular.n2},
            "lambda": self.lam,
            "tol_fixed_point": self.tol_fixed_point,
            "max_iter": self.max_iter,
            "contraction_window": self.contraction_window,
            "accuracy": self.accuracy,
            "linear": self.linear,
        }


@dataclass
class Diagnostics:
    iterations: int = 0
    converged: bool = False
    update_norms: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    final_update_norm: float = float("nan")
    embedded_residual: float = float("nan")
    tip_residual: float = float("nan")
    prop1_ratio: float = float("nan")
    prop2_ratio: float = float("nan")
    q_bound_ratios: list = field(default_factory=list)
    boundary_error: float = float("nan")

    @property
    def mean_contraction(self):
        return float(np.mean(self.contraction_ratios)) if self.contraction_ratios else 0.0

    def window_contraction(self, k):
        r = self.contraction_ratios[-k:]
        return float(np.mean(r)) if r else 0.0

    def to_record(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "update_norms": [float(x) for x in self.update_norms],
            "contraction_ratios": [float(x) for x in self.contraction_ratios],
            "final_update_norm": float(self.final_update_norm),
            "embedded_residual": float(self.embedded_residual),
            "tip_residual": float(self.tip_residual),
            "prop1_ratio": float(self.prop1_ratio),
            "prop2_ratio": float(self.prop2_ratio),
            "q_bound_ratios": [float(x) for x in self.q_bound_ratios],
            "boundary_error": float(self.boundary_error),
        }


def picard_step(v: ConeField, config: SolverConfig):
    """``U(v)``: solve ``L U = -Q(v)`` with the boundary data ``lambda psi``.

    Returns ``(U, info)`` where ``info`` holds the linear-solve diagnostics,
    the weighted size of ``Q(v)`` and its ratio to ``t^(m-2+eps) ||v||^2``.
    """
    sel = config.selection
    boundary = config.lam * config.psi_coefficients
    empty = not np.any(v.profiles if v.has_profiles else v.values)
    if empty:
        Q = ConeField.zeros(config.basis, config.radial)
    else:
        Q = nonlinear_remainder(v, config.geometry, config.linear, config.accuracy, config.chunk,
                                S0=config.cone_curvature)
    U, lin = solve_linear(-Q, boundary, sel, config.radial)
    t = config.radial.t
    qs = slice_norm(Q)
    vnorm = iteration_norm(v, sel.m, config.accuracy)
    bound = t ** (sel.m - 2 + sel.epsilon) * vnorm**2
    q_ratio = float(np.max(qs[1:] / bound[1:])) if vnorm > 0 else 0.0
    info = {"linear": lin.to_record(), "q_global": global_norm(qs, config.radial, sel.m),
            "q_bound_ratio": q_ratio, "v_norm": vnorm}
    return U, info


def solve_graph(config: SolverConfig, raise_on_failure=True):
    """Iterate ``v_{k+1} = U(v_k)`` from ``v_0 = H_J(lambda psi)``."""
    sel = config.selection
    basis = config.basis
    diag = Diagnostics()
    boundary = config.lam * config.psi_coefficients
    v = harmonic_extension(boundary, basis, sel, config.radial)
    if config.lam == 0.0 or not np.any(boundary):
        diag.iterations = 1
        diag.converged = True
        diag.final_update_norm = 0.0
        _finish(v, config, diag, {"linear": {"prop1_ratio": 0.0}, "v_norm": 0.0})
        return v, diag
    prev = None
    info = None
    for k in range(config.max_iter):
        U, info = picard_step(v, config)
        diag.q_bound_ratios.append(info["q_bound_ratio"])
        upd = iteration_norm(U - v, sel.m, config.accuracy)
        diag.update_norms.append(upd)
        if prev is not None and prev > 0:
            diag.contraction_ratios.append(upd / prev)
        diag.iterations = k + 1
        v = U
        if upd <= config.tol_fixed_point:
            diag.converged = True
            break
        n = diag.update_norms
        growing = len(n) >= 4 and all(n[-i] > n[-i - 1] for i in range(1, 4))
        if growing or upd > 10.0 * n[0]:
            break
        prev = upd
    diag.final_update_norm = diag.update_norms[-1]
    if not diag.converged:
        if raise_on_failure:
            raise NonConvergence(f"Picard iteration failed at lambda={config.lam}",
                                 trace=diag.contraction_ratios)
        return v, diag
    _finish(v, config, diag, info)
    return v, diag


def _finish(u, config, diag, info):
    S2 = scalar_curvature_field(config.link, u.values, config.angular, config.radial,
                                config.accuracy, config.chunk)
    summ = verdict_summary(S2, config.radial, config.angular)
    diag.embedded_residual = summ["weighted_sup"]
    diag.tip_residual = summ["tip_weighted_sup"]
    diag.prop1_ratio = float(info["linear"].get("prop1_ratio", 0.0))
    unorm = iteration_norm(u, config.selection.m, config.accuracy)
    high = high_mode_mask(config.basis, config.selection)
    bnorm = float(np.sqrt(np.sum((config.lam * config.psi_coefficients[high]) ** 2)))
    diag.prop2_ratio = unorm / bnorm if bnorm > 0 else 0.0
    target = config.lam * config.psi_coefficients[high]
    diag.boundary_error = float(np.max(np.abs(u.profiles[-1, high] - target))) if high.any() else 0.0


def lambda_threshold_scan(config: SolverConfig, lambdas):
    """Solve for each ``lambda`` (ascending); stop at the first failure.

    Returns ``(rows, lambda_hat)`` where each row records convergence,
    contraction ratios and the embedded residual.
    """
    lambdas = [float(x) for x in lambdas]
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be ascending")
    rows = []
    lam_hat = None
    for lam in lambdas:
        cfg = config.with_lambda(lam)
        try:
            _, d = solve_graph(cfg, raise_on_failure=False)
        except Exception as exc:  # numerical failures are data here
            rows.append({"lambda": lam, "converged": False, "error": type(exc).__name__,
                         "contraction_ratios": [], "embedded_residual": None})
            break
        rows.append({"lambda": lam, "converged": d.converged, "iterations": d.iterations,
                     "contraction_ratios": [float(x) for x in d.contraction_ratios],
                     "mean_contraction": d.mean_contraction,
                     "embedded_residual": d.embedded_residual if d.converged else None})
        if not d.converged:
            rows[-1]["note"] = "first failure; larger lambdas not attempted"
            break
        lam_hat = lam
    return rows, lam_hat
