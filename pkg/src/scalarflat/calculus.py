"""Differential operators on the truncated cone over a product link.

Coordinates are ``(x, theta1, theta2)`` with ``x = ln t``.  The cone metric is
``dt^2 + t^2 (a1^2 g_{S^p} + a2^2 g_{S^q})`` and all tensors are expressed in
the orthonormal frame ``(e_t, e_1, e_2, orbit directions)``, in which the
cone's shape operator is diagonal::

    A = diag(0, lam1/t, lam2/t, lam1/t (x p-1), lam2/t (x q-1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .fd import diff, diff_padded, half_width, pad_axis
from .fields import ConeField
from .link_geometry import invariants

__all__ = [
    "ConeGeometry",
    "ConeDerivatives",
    "pad_angles",
    "padded_angles",
    "grid_derivatives",
    "cone_derivatives",
    "jacobi_apply",
    "explicit_leading_Q",
    "displayed_quadratic_form",
    "nonlinear_remainder",
]


@dataclass(frozen=True)
class ConeGeometry:
    link: object

    @cached_property
    def inv(self):
        return invariants(self.link)

    @property
    def n(self):
        return self.link.n

    @property
    def S1(self):
        return self.inv.S1

    @property
    def S3(self):
        return self.inv.S3

    @property
    def lambdas(self):
        return (self.inv.lambda1, self.inv.lambda2)

    @property
    def angular_coefficients(self):
        """``c_i = (S1 - lam_i) / a_i^2`` multiplying the factor Laplacians."""
        l1, l2 = self.lambdas
        return ((self.S1 - l1) / self.link.a1**2, (self.S1 - l2) / self.link.a2**2)

    def Sbar(self, r, t):
        S = {1: self.inv.S1, 2: self.inv.S2, 3: self.inv.S3}[r]
        return S / np.asarray(t, dtype=float) ** r

    def shape_eigenvalues(self, t):
        """Cone principal curvatures ``{0, lam1/t (x p), lam2/t (x q)}``."""
        l1, l2 = self.lambdas
        t = np.asarray(t, dtype=float)[..., None]
        vals = np.array([0.0] + [l1] * self.link.p + [l2] * self.link.q)
        out = vals / t
        out[..., 0] = 0.0
        return out

    def power_sum(self, k):
        l1, l2 = self.lambdas
        return self.link.p * l1**k + self.link.q * l2**k


def pad_angles(arr, grid, width):
    """Ghost cells on the two angular (last two) axes."""
    for axis, fac in ((-2, grid.factors[0]), (-1, grid.factors[1])):
        arr = pad_axis(arr, arr.ndim + axis, width, "wrap" if fac.periodic else "reflect")
    return arr


def padded_angles(grid, width):
    """Angle arrays extended linearly into the ghost cells."""
    out = []
    for fac in grid.factors:
        k = np.arange(-width, fac.count + width)
        out.append(k * fac.step)
    return tuple(out)


def grid_derivatives(arr, hx, h1, h2, accuracy=4, width=None):
    """First and second derivatives in ``(x, theta1, theta2)``.

    ``arr`` has shape ``(..., Nt, n1 + 2w, n2 + 2w)`` with angular ghost cells
    already filled.  The radial axis uses one-sided closures.
    """
    w = half_width(2, accuracy) if width is None else width
    ax_x = arr.ndim - 3
    core = arr[..., w:-w, w:-w]
    d = {"u": core}
    d["x"] = diff(core, ax_x, hx, 1, accuracy)
    d["xx"] = diff(core, ax_x, hx, 2, accuracy)
    u1 = diff_padded(arr, -2, h1, 1, accuracy, w)          # (..., n1, n2+2w)
    d["1"] = u1[..., w:-w]
    d["11"] = diff_padded(arr, -2, h1, 2, accuracy, w)[..., w:-w]
    d["2"] = diff_padded(arr, -1, h2, 1, accuracy, w)[..., w:-w, :]
    d["22"] = diff_padded(arr, -1, h2, 2, accuracy, w)[..., w:-w, :]
    d["12"] = diff_padded(u1, -1, h2, 1, accuracy, w)
    d["x1"] = diff(d["1"], ax_x, hx, 1, accuracy)
    d["x2"] = diff(d["2"], ax_x, hx, 1, accuracy)
    return d


def _cot_term(d1, d11, theta, periodic):
    """``cot(theta) * u_theta`` with the pole limit ``u_thetatheta``."""
    if periodic:
        return np.zeros_like(d1)
    s = np.sin(theta)
    out = np.empty_like(d1)
    inner = slice(1, len(theta) - 1)
    out[..., inner, :] = (np.cos(theta[inner]) / s[inner])[:, None] * d1[..., inner, :]
    out[..., 0, :] = d11[..., 0, :]
    out[..., -1, :] = d11[..., -1, :]
    return out


@dataclass
class ConeDerivatives:
    """Gradient and covariant Hessian of a field in the orthonormal frame."""

    t: np.ndarray
    u: np.ndarray
    grad: tuple             # (u_t, e_1 u, e_2 u)
    hess: np.ndarray        # visible 3x3 block, shape (3, 3, Nt, n1, n2)
    orbit: tuple            # (H_o1, H_o2) on the S^{p-1}, S^{q-1} orbit directions
    multiplicity: tuple     # (p-1, q-1), zero for circle factors
    lap1: np.ndarray        # unit-sphere zonal Laplacians
    lap2: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray

    def grad_norm2(self):
        return sum(g * g for g in self.grad)

    def hess_norm2(self):
        H = self.hess
        out = sum(H[i, j] ** 2 for i in range(3) for j in range(3))
        m1, m2 = self.multiplicity
        return out + m1 * self.orbit[0] ** 2 + m2 * self.orbit[1] ** 2

    def laplacian(self):
        m1, m2 = self.multiplicity
        return self.hess[0, 0] + self.hess[1, 1] + self.hess[2, 2] + m1 * self.orbit[0] + m2 * self.orbit[1]


def cone_derivatives(field, accuracy=4):
    """Cone gradient and Hessian of a :class:`ConeField` (or a raw value array
    when called as ``cone_derivatives((values, basis, radial))``)."""
    if isinstance(field, ConeField):
        values, basis, radial = field.values, field.basis, field.radial
    else:
        values, basis, radial = field
    link, grid = basis.link, basis.grid
    f1, f2 = grid.factors
    w = half_width(2, accuracy)
    d = grid_derivatives(pad_angles(values, grid, w), radial.h, f1.step, f2.step, accuracy, w)
    t = radial.t[:, None, None]
    a1, a2 = link.a1, link.a2
    u_t = d["x"] / t
    u_tt = (d["xx"] - d["x"]) / t**2
    u_t1 = d["x1"] / t
    u_t2 = d["x2"] / t
    th1 = grid.theta1
    th2 = grid.theta2
    cot1 = _cot_term(d["1"], d["11"], th1, f1.periodic)
    cot2 = np.swapaxes(_cot_term(np.swapaxes(d["2"], -1, -2), np.swapaxes(d["22"], -1, -2),
                                 th2, f2.periodic), -1, -2)
    H = np.empty((3, 3) + values.shape, dtype=values.dtype)
    H[0, 0] = u_tt
    H[0, 1] = H[1, 0] = (u_t1 - d["1"] / t) / (t * a1)
    H[0, 2] = H[2, 0] = (u_t2 - d["2"] / t) / (t * a2)
    H[1, 1] = d["11"] / (t * a1) ** 2 + u_t / t
    H[2, 2] = d["22"] / (t * a2) ** 2 + u_t / t
    H[1, 2] = H[2, 1] = d["12"] / (t * t * a1 * a2)
    o1 = u_t / t + cot1 / (t * a1) ** 2
    o2 = u_t / t + cot2 / (t * a2) ** 2
    mult = (0 if f1.periodic else link.p - 1, 0 if f2.periodic else link.q - 1)
    lap1 = d["11"] + mult[0] * cot1
    lap2 = d["22"] + mult[1] * cot2
    return ConeDerivatives(t, values, (u_t, d["1"] / (t * a1), d["2"] / (t * a2)), H,
                           (o1, o2), mult, lap1, lap2, d["x"], d["xx"])


def jacobi_apply(u, geometry, form="spectral", accuracy=4):
    """Jacobi operator ``L u = div(T1 grad u) - 3 S3bar u``.

    ``form='spectral'`` acts per mode, ``S1 [a_xx + (n-3) a_x - mu a] / t^3``,
    and needs mode profiles.  ``form='divergence'`` assembles the same
    operator from grid finite differences.
    """
    n = geometry.n
    S1, S3 = geometry.S1, geometry.S3
    radial = u.radial
    t3 = radial.t**3
    if form == "spectral":
        a = u.require_profiles()
        ax = diff(a, 0, radial.h, 1, accuracy)
        axx = diff(a, 0, radial.h, 2, accuracy)
        out = S1 * (axx + (n - 3) * ax - u.basis.mu * a) / t3[:, None]
        return ConeField(u.basis, radial, profiles=out)
    if form == "divergence":
        D = cone_derivatives(u, accuracy)
        c1, c2 = geometry.angular_coefficients
        body = S1 * (D.u_xx + (n - 3) * D.u_x) + c1 * D.lap1 + c2 * D.lap2 - 3.0 * S3 * D.u
        return ConeField(u.basis, radial, values=body / t3[:, None, None])
    raise ValueError(f"unknown form {form!r}")


def _sigma2_blocks(X, o1, o2, m1, m2):
    """``sigma_2`` of ``blockdiag(X (3x3), o1 Id_{m1}, o2 Id_{m2})``."""
    tr = X[0, 0] + X[1, 1] + X[2, 2]
    tr2 = sum(X[i, j] * X[j, i] for i in range(3) for j in range(3))
    s2_vis = 0.5 * (tr * tr - tr2)
    orb_sum = m1 * o1 + m2 * o2
    s2_orb = comb(m1, 2) * o1**2 + comb(m2, 2) * o2**2 + m1 * m2 * o1 * o2
    return s2_vis + tr * orb_sum + s2_orb


def explicit_leading_Q(u, geometry, accuracy=4):
    """Quadratic part of ``Sbar_2(u) - L u`` in closed form.

    With ``H`` the cone Hessian and ``A`` the cone shape operator::

        Q = sigma2(H + u A^2) + <grad u, A T1 grad u> + 2 u tr(T1 A H) + u^2 tr(T1 A^3)
    """
    D = cone_derivatives(u, accuracy)
    t = D.t
    l1, l2 = geometry.lambdas
    S1 = geometry.S1
    m1, m2 = D.multiplicity
    p, q = geometry.link.p, geometry.link.q
    uu = D.u
    X = D.hess.copy()
    X[1, 1] = X[1, 1] + uu * (l1 / t) ** 2
    X[2, 2] = X[2, 2] + uu * (l2 / t) ** 2
    o1 = D.orbit[0] + uu * (l1 / t) ** 2
    o2 = D.orbit[1] + uu * (l2 / t) ** 2
    sig = _sigma2_blocks(X, o1, o2, m1, m2)
    k1 = l1 * (S1 - l1) / t**2
    k2 = l2 * (S1 - l2) / t**2
    grad_term = k1 * D.grad[1] ** 2 + k2 * D.grad[2] ** 2
    trace_term = k1 * (D.hess[1, 1] + m1 * D.orbit[0]) + k2 * (D.hess[2, 2] + m2 * D.orbit[1])
    cubic = (p * (S1 - l1) * l1**3 + q * (S1 - l2) * l2**3) / t**4
    Q = sig + grad_term + 2.0 * uu * trace_term + uu * uu * cubic
    return ConeField(u.basis, u.radial, values=Q)


def displayed_quadratic_form(u, geometry, accuracy=4):
    """The quadratic expression in the ``|Delta u|^2 - |Hess u|^2 + ...`` form,
    evaluated on the cone with ``r = A^2`` (kept for comparison only)."""
    D = cone_derivatives(u, accuracy)
    t = D.t
    l1, l2 = geometry.lambdas
    S1 = geometry.S1
    n = geometry.n
    m1, m2 = D.multiplicity
    uu = D.u
    lap = D.laplacian()
    r1, r2 = (l1 / t) ** 2, (l2 / t) ** 2
    rtr = S1**2 / t**2
    tr_rH = r1 * (D.hess[1, 1] + m1 * D.orbit[0]) + r2 * (D.hess[2, 2] + m2 * D.orbit[1])
    r_grad = r1 * D.grad[1] ** 2 + r2 * D.grad[2] ** 2
    p3, p4 = geometry.power_sum(3), geometry.power_sum(4)
    Q = (lap**2 - D.hess_norm2() + 2.0 * uu * (tr_rH - rtr * lap) + 2.0 * r_grad
         - 2.0 * rtr * D.grad_norm2() + 4.0 * S1**2 * uu * D.grad[0] / t**3
         + ((n - 4) * S1**2 - (S1 * p3 - p4)) * uu**2 / t**4)
    return ConeField(u.basis, u.radial, values=Q)


def nonlinear_remainder(u, geometry, linear="consistent", accuracy=4, chunk=None, base="analytic",
                        S0=None):
    """``Q(u) = Sbar_2(u) - Sbar_2(0) - L u`` with ``Sbar_2`` from the embedding oracle.

    ``linear='consistent'`` takes ``L`` as the exact linearization of the
    discrete oracle at the cone (complex-step derivative), so the remainder
    carries no first-order discretization error.  ``'spectral'`` and
    ``'divergence'`` use :func:`jacobi_apply` instead.
    """
    from .embedding import scalar_curvature_field

    vals = u.values
    grid = u.basis.grid

    def S(v):
        return scalar_curvature_field(geometry.link, v, grid, u.radial, accuracy, chunk=chunk,
                                      base=base)

    S_u = S(vals)
    if linear == "consistent":
        step = 1e-30
        Sc = S(1j * step * vals)
        Lu = Sc.imag / step
        S_0 = Sc.real if S0 is None else S0
    else:
        S_0 = S(np.zeros_like(vals)) if S0 is None else S0
        Lu = jacobi_apply(u if linear == "divergence" else u.spectral(), geometry, linear,
                          accuracy).values
    return ConeField(u.basis, u.radial, values=S_u - S_0 - Lu)
