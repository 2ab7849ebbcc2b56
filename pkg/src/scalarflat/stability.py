"""Stability of the cone and of its scalar-flat graphs for the functional ``int Sbar_1``.

Everything radial is done per mode.  For ``u = sum_j b_j(t) phi_j`` the second
variation and the weighted mass separate as

    -int u L u dM = sum_j int (t^(n-2) b_j'^2 + mu_j t^(n-4) b_j^2) dt,
    int u^2 t^-2 Sbar_1 dM = sum_j int t^(n-4) b_j^2 dt,

and in ``x = ln t`` the weight ``t^(n-4) dt`` becomes ``e^((n-3) x) dx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .angular import AngularGrid
from .calculus import ConeGeometry, cone_derivatives
from .embedding import graph_forms, scalar_curvature_field
from .errors import ConfigError, NotUnstable, SolverFailure, ZeroDenominator
from .fields import ConeField, RadialGrid
from .link_geometry import invariants
from .spectrum import ModeBasis, enumerate_modes, indicial_roots, mode_eigenvalue

__all__ = [
    "StabilityReport",
    "Witness",
    "HardyResult",
    "classify",
    "cone_stability",
    "modal_energy",
    "rayleigh_quotient",
    "second_variation",
    "dirichlet_eigenvalues",
    "instability_witness",
    "hardy_check",
    "graph_s3_deviation",
    "battery_fields",
    "graph_quadratic_form",
    "graph_form_battery",
]

_ZERO_TOL = 1e-12


def classify(mu_M):
    if mu_M > _ZERO_TOL:
        return "strictly-1-stable"
    if mu_M < -_ZERO_TOL:
        return "not-1-stable"
    return "1-stable-only"


@dataclass
class StabilityReport:
    n: int
    mu1: float
    mu1_minus: float
    mu_M: float
    classification: str
    witness: dict | None = field(default=None)

    def to_record(self):
        return {"n": self.n, "mu1": self.mu1, "mu1_minus": self.mu1_minus, "mu_M": self.mu_M,
                "classification": self.classification, "witness": self.witness}


def _report(n, mu1):
    if n < 4:
        raise ConfigError("the stability criterion needs n >= 4")
    minus = max(-mu1, 0.0)
    mu_M = 1.0 - 4.0 * minus / (n - 3) ** 2
    return StabilityReport(n, float(mu1), float(minus), float(mu_M), classify(mu_M))


def cone_stability(link, n=None, scan=50):
    """``mu_M = 1 - 4 mu1^- / (n-3)^2`` with ``mu1 = mu_{0,0} = 3 S3 / S1``.

    The first ``scan`` lattice eigenvalues are checked not to undercut ``mu1``.
    """
    n = link.n if n is None else n
    mu1 = mode_eigenvalue(link, 0, 0)
    lowest = min(m.mu for m in enumerate_modes(link, n, scan))
    if lowest < mu1 - 1e-12:
        raise SolverFailure(f"mode lattice has eigenvalue {lowest} below mu_00 = {mu1}")
    return _report(n, mu1)


def _restrict(x, b, xs, xe):
    """Nodes of ``[xs, xe]`` with the profile clamped to zero at both ends."""
    inside = (x > xs) & (x < xe)
    xn = np.concatenate([[xs], x[inside], [xe]])
    zero = np.zeros((1,) + b.shape[1:])
    bn = np.concatenate([zero, b[inside], zero])
    return xn, bn


def modal_energy(b, x, mu, n, xs=None, xe=None):
    """Per-mode ``(N_j, D_j)`` for profiles ``b`` (``(Nt, modes)``) on nodes ``x``.

    ``N_j = int e^(c x) (b_x^2 + mu_j b^2) dx`` and ``D_j = int e^(c x) b^2 dx``
    with ``c = n - 3``, for the piecewise-linear interpolant clamped to zero
    outside ``[xs, xe]`` (in ``ln t``).  Both are second-order accurate.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    x = np.asarray(x, dtype=float)
    if xs is not None or xe is not None:
        x, b = _restrict(x, b, x[0] if xs is None else xs, x[-1] if xe is None else xe)
    c = n - 3
    dx = np.diff(x)
    grad = np.diff(b, axis=0) / dx[:, None]
    wmid = np.exp(c * (0.5 * (x[1:] + x[:-1])))
    stiff = np.sum((wmid * dx)[:, None] * grad**2, axis=0)
    wn = np.exp(c * x)
    tw = np.zeros_like(x)
    tw[:-1] += 0.5 * dx
    tw[1:] += 0.5 * dx
    mass = np.sum((tw * wn)[:, None] * b**2, axis=0)
    return stiff + np.asarray(mu) * mass, mass


def rayleigh_quotient(u: ConeField, sigma, tau, geometry=None):
    """``-int u L u / int u^2 t^-2 Sbar_1`` over ``sigma < t < tau``.

    The numerator is the integrated-by-parts form, evaluated per mode, so
    kinks at ``sigma`` and ``tau`` are harmless.
    """
    if not 0 < sigma < tau:
        raise ValueError("need 0 < sigma < tau")
    basis = u.basis
    n = basis.n if geometry is None else geometry.n
    N, D = modal_energy(u.profiles, u.radial.x, basis.mu, n, np.log(sigma), np.log(tau))
    den = float(np.sum(D))
    if den <= 0.0:
        raise ZeroDenominator("test field vanishes on the truncated cone")
    return float(np.sum(N)) / den


def second_variation(u: ConeField, geometry=None, form="energy"):
    """``-int u L u dM`` over the whole grid.

    ``form='energy'`` uses the per-mode energy, ``form='operator'`` the grid
    divergence-form Jacobi operator with ``dM = t^n dx dtheta``.
    """
    from .calculus import jacobi_apply

    basis = u.basis
    n = basis.n if geometry is None else geometry.n
    if form == "energy":
        N, _ = modal_energy(u.profiles, u.radial.x, basis.mu, n)
        return float(np.sum(N))
    if form == "operator":
        geometry = ConeGeometry(basis.link) if geometry is None else geometry
        Lu = jacobi_apply(ConeField(basis, u.radial, values=u.values), geometry, "divergence")
        dens = np.einsum("tij,ij->t", u.values * Lu.values, basis.weights) * u.radial.t**n
        return -float(_trapezoid(dens, u.radial.h))
    raise ValueError(f"unknown form {form!r}")


def _trapezoid(f, h):
    return h * (np.sum(f) - 0.5 * (f[0] + f[-1]))


def dirichlet_eigenvalues(link, n=None, a=0.01, b=1.0, points=400, mode_count=20):
    """Lowest Dirichlet eigenvalue of ``L u + t^-2 Sbar_1 lam u = 0`` per mode on
    ``a < t < b``.

    Conservative second differences in ``x = ln t`` give a symmetric
    generalized problem ``K b = lam W b`` with diagonal ``W``; it is
    symmetrized and solved as a tridiagonal eigenproblem.  Returns
    ``(mus, lowest)`` over the first ``mode_count`` lattice modes.
    """
    n = link.n if n is None else n
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    c = n - 3
    xa, xb = np.log(a), np.log(b)
    h = (xb - xa) / (points + 1)
    x = xa + h * np.arange(1, points + 1)
    w = np.exp(c * x)
    wp = np.exp(c * (x + 0.5 * h))
    wm = np.exp(c * (x - 0.5 * h))
    diag0 = (wp + wm) / (h * h * w)
    off = -wp[:-1] / (h * h * np.sqrt(w[:-1] * w[1:]))
    mus = np.array([m.mu for m in enumerate_modes(link, n, mode_count)])
    low = np.array([eigh_tridiagonal(diag0 + mu, off, eigvals_only=True,
                                     select="i", select_range=(0, 0))[0] for mu in mus])
    return mus, low


class Witness(NamedTuple):
    field: ConeField
    sigma: float
    tau: float
    quotient: float
    lowest_eigenvalue: float


def instability_witness(link, n=None, radial=None, angular=None, eig_points=400):
    """Truncated Jacobi field ``Re(t^gamma) phi_00`` between consecutive zeros.

    With ``gamma = -(n-3)/2 + i beta`` the radial factor
    ``t^(-(n-3)/2) cos(beta ln t)`` vanishes at ``tau = exp(-pi/(2 beta))`` and
    ``sigma = exp(-3 pi/(2 beta))``.  Returns the field, the truncation points,
    its Rayleigh quotient (zero up to discretization) and the lowest Dirichlet
    eigenvalue on ``sigma/2 < t < 1``.
    """
    n = link.n if n is None else n
    report = cone_stability(link, n)
    if report.mu_M >= 0:
        raise NotUnstable(f"mu_M = {report.mu_M} >= 0; the cone is 1-stable")
    gamma = indicial_roots(n, report.mu1)[1]
    beta = abs(complex(gamma).imag)
    tau = float(np.exp(-np.pi / (2 * beta)))
    sigma = float(np.exp(-3 * np.pi / (2 * beta)))
    if radial is None:
        radial = RadialGrid(min(1e-3, sigma / 4), 257)
    if angular is None:
        angular = AngularGrid.for_link(link, 9)
    basis = ModeBasis(link, angular, n)
    j0 = next(i for i, m in enumerate(basis.modes) if m.k == 0 and m.l == 0)
    t = radial.t
    prof = np.zeros((radial.count, len(basis)))
    inside = (t > sigma) & (t < tau)
    prof[inside, j0] = t[inside] ** complex(gamma).real * np.cos(beta * np.log(t[inside]))
    w = ConeField(basis, radial, profiles=prof)
    q = rayleigh_quotient(w, sigma, tau)
    _, low = dirichlet_eigenvalues(link, n, sigma / 2, 1.0, eig_points, mode_count=20)
    return Witness(w, sigma, tau, q, float(low.min()))


@dataclass
class HardyResult:
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray

    @property
    def holds(self):
        return bool(np.all(self.lhs <= self.rhs + self.slack))

    @property
    def worst_ratio(self):
        return float(np.max(self.lhs / self.rhs))


def hardy_check(link, n=None, count=50, seed=0, radial=None, modes=8, bandwidth=8):
    """``int u^2 t^-2 Sbar_1 <= 4/(n-3)^2 int u_t^2 Sbar_1`` on random fields.

    Each field has ``modes`` random mode profiles built from the first
    ``bandwidth`` sine modes of ``[ln t_min, 0]``, so it vanishes at
    ``t_min`` and at ``t = 1``.  The slack is ``h^2`` times the right side.
    """
    n = link.n if n is None else n
    radial = RadialGrid(1e-3, 257) if radial is None else radial
    x = radial.x
    s = (x - x[0]) / (x[-1] - x[0])
    rng = np.random.default_rng(seed)
    sines = np.sin(np.pi * np.outer(s, np.arange(1, bandwidth + 1)))
    lhs, rhs = [], []
    for _ in range(count):
        coef = rng.standard_normal((bandwidth, modes)) / np.arange(1, bandwidth + 1)[:, None]
        b = sines @ coef
        b[0] = b[-1] = 0.0
        grad, mass = modal_energy(b, x, 0.0, n)
        lhs.append(mass.sum())
        rhs.append(4.0 / (n - 3) ** 2 * grad.sum())
    rhs = np.array(rhs)
    return HardyResult(np.array(lhs), rhs, radial.h**2 * rhs)


def graph_s3_deviation(u_lambda: ConeField, lam, accuracy=4, chunk=None):
    """``sup (1/lam) t^3 |Sbar_3(graph) - S3/t^3| / |S3|`` over interior rows."""
    if lam == 0:
        return 0.0
    basis, radial = u_lambda.basis, u_lambda.radial
    link = basis.link
    S3 = invariants(link).S3
    g = scalar_curvature_field(link, u_lambda.values, basis.grid, radial, accuracy, chunk, which=3)
    t3 = radial.t[:, None, None] ** 3
    dev = np.abs(t3 * np.real(g) - S3)[1:-1]
    return float(np.max(dev) / (abs(S3) * lam))


_BUMPS = ((-6.0, -2.0), (-4.0, -1.0), (-2.5, -0.3))


def battery_fields(basis, radial, count=20, bumps=_BUMPS):
    """Mode ``i`` times the radial bump ``i mod 3``, for the first ``count`` modes.

    Bumps are ``(1 - s^2)^3`` on intervals of ``x = ln t``.
    """
    x = radial.x
    out = []
    for i in range(min(count, len(basis))):
        lo, hi = bumps[i % len(bumps)]
        s = (2 * x - lo - hi) / (hi - lo)
        b = np.where(np.abs(s) < 1, (1 - s * s) ** 3, 0.0)
        prof = np.zeros((radial.count, len(basis)))
        prof[:, i] = b
        out.append(ConeField(basis, radial, profiles=prof))
    return out


def graph_quadratic_form(test: ConeField, forms, accuracy=4):
    """Second variation of ``int Sbar_1`` on a graph, normalized by its weighted mass.

    ``(int <T1 grad u, grad u> + 3 Sbar_3 u^2) / int u^2 t^-2 Sbar_1`` with
    ``T1 = Sbar_1 Id - A`` built from the graph's fundamental forms (see
    :func:`~scalarflat.embedding.graph_forms`).
    """
    basis, radial = test.basis, test.radial
    link = basis.link
    D = cone_derivatives(test, accuracy)
    t = radial.t[:, None, None]
    du = np.stack([D.u_x, D.grad[1] * t * link.a1, D.grad[2] * t * link.a2])
    G, h = forms.G, forms.h
    Ginv = np.moveaxis(np.linalg.inv(np.moveaxis(G, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    g_up = np.einsum("ij...,j...->i...", Ginv, du)
    grad2 = np.einsum("i...,i...->...", du, g_up)
    second = np.einsum("i...,ij...,j...->...", g_up, h, g_up)
    u = test.values
    energy = forms.S1 * grad2 - second + 3.0 * forms.S3 * u * u
    mass = u * u * forms.S1 / t**2
    vol = forms.density * radial.t[:, None, None] ** basis.n
    num = _trapezoid(np.einsum("tij,ij->t", energy * vol, basis.weights), radial.h)
    den = _trapezoid(np.einsum("tij,ij->t", mass * vol, basis.weights), radial.h)
    if den <= 0:
        raise ZeroDenominator("test field has no weighted mass")
    return float(num / den)


def graph_form_battery(u_lambda: ConeField, count=20, accuracy=4, chunk=None):
    """Normalized graph quadratic form over the standard test battery."""
    basis, radial = u_lambda.basis, u_lambda.radial
    forms = graph_forms(basis.link, u_lambda.values, basis.grid, radial, accuracy, chunk)
    return np.array([graph_quadratic_form(f, forms, accuracy)
                     for f in battery_fields(basis, radial, count)])
