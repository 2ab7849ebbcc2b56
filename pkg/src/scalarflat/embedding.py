"""Curvature of normal graphs over the cone, measured directly in ``R^{n+1}``.

The graph point over ``(t, omega1, omega2)`` is ``(rho1 omega1, rho2 omega2)``
with ``rho1 = t a1 - sigma u a2`` and ``rho2 = t a2 + sigma u a1``.  For doubly
zonal ``u`` the hypersurface is swept out by the isometry orbits of the
3-dimensional meridian

    Z = (rho1 cos th1, rho1 sin th1, rho2 cos th2, rho2 sin th2)  in R^4,

so the fundamental forms split into the visible ``3 x 3`` block (finite
differences of ``Z`` in ``(x, th1, th2)``) and orbit directions whose principal
curvature is ``-nu_r / r`` with ``r`` the orbit radius.  Nothing here uses the
linearized theory; it is the independent ground truth for ``Sbar_2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .calculus import grid_derivatives, pad_angles, padded_angles
from .errors import ImmersionFailure, NormalDegeneracy
from .fd import half_width, stencil_weights
from .link_geometry import elementary_symmetric

__all__ = [
    "EmbeddedGraph",
    "CurvatureFields",
    "embed_graph",
    "shape_operator_fd",
    "symmetric_functions_field",
    "scalar_curvature_field",
    "GraphForms",
    "graph_forms",
    "verdict_summary",
    "residual_csv",
]

_POINT_BUDGET = 150_000


def _values_of(u):
    return u.values if hasattr(u, "values") and not isinstance(u, np.ndarray) else np.asarray(u)


@dataclass
class EmbeddedGraph:
    link: object
    grid: object
    radial: object
    u: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray

    @property
    def meridian(self):
        """Reduced coordinates ``Z``, shape ``(4, Nt, n1, n2)``."""
        th1 = self.grid.theta1[None, :, None]
        th2 = self.grid.theta2[None, None, :]
        return np.stack([self.rho1 * np.cos(th1), self.rho1 * np.sin(th1),
                         self.rho2 * np.cos(th2), self.rho2 * np.sin(th2)])

    def points(self):
        """Positions in ``R^{n+1}`` ordered ``(x in R^{p+1}, y in R^{q+1})``;
        the orbit representatives use the first unit vector of each factor."""
        Z = self.meridian
        p, q = self.link.p, self.link.q
        shape = Z.shape[1:]
        out = np.zeros((p + q + 2,) + shape, dtype=Z.dtype)
        out[0], out[1] = Z[0], Z[1]
        out[p + 1], out[p + 2] = Z[2], Z[3]
        return out

    def radius(self):
        return np.sqrt(self.rho1**2 + self.rho2**2)


def embed_graph(link, u, grid, radial):
    """Embed the normal graph of ``u`` (values ``(Nt, n1, n2)`` or a ConeField)."""
    vals = _values_of(u)
    t = radial.t[:, None, None]
    s = link.sigma
    rho1 = t * link.a1 - s * vals * link.a2
    rho2 = t * link.a2 + s * vals * link.a1
    if np.any(np.real(rho1) <= 0) or np.any(np.real(rho2) <= 0):
        raise ImmersionFailure("graph crosses the axis of a factor (orbit radius <= 0)")
    return EmbeddedGraph(link, grid, radial, vals, rho1, rho2)


def _cross4(a, b, c):
    """Generalized cross product of three vectors in ``R^4`` (leading axis)."""
    def det3(r0, r1, r2):
        return (r0[0] * (r1[1] * r2[2] - r1[2] * r2[1])
                - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
                + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]))
    cols = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
    out = []
    for i, cs in enumerate(cols):
        m = det3([a[k] for k in cs], [b[k] for k in cs], [c[k] for k in cs])
        out.append(m if i % 2 == 0 else -m)
    return np.stack(out)


def _odd_pole_derivative(f, h, accuracy, axis):
    """Derivative at both end nodes of an axis for a function odd about them."""
    w = half_width(1, accuracy)
    offs = tuple(range(-w, w + 1))
    wts = stencil_weights(offs, 1)
    f = np.moveaxis(f, axis, 0)
    lo = sum(wk * (f[o] if o >= 0 else -f[-o]) for o, wk in zip(offs, wts))
    N = f.shape[0] - 1
    hi = sum(wk * (f[N + o] if o <= 0 else -f[N - o]) for o, wk in zip(offs, wts))
    return lo / h, hi / h


def _orbit_curvature(nu_r, r, fac, accuracy, axis, rho):
    """``-nu_r / r`` with the pole limit ``-d(nu_r) / d(r)``, ``d(r)/d(th) = +-rho``."""
    out = np.empty_like(nu_r)
    n = nu_r.shape[axis]
    inner = [slice(None)] * nu_r.ndim
    inner[axis] = slice(1, n - 1)
    inner = tuple(inner)
    out[inner] = -nu_r[inner] / r[inner]
    dlo, dhi = _odd_pole_derivative(nu_r, fac.step, accuracy, axis)
    lo = [slice(None)] * nu_r.ndim
    hi = [slice(None)] * nu_r.ndim
    lo[axis], hi[axis] = 0, n - 1
    out[tuple(lo)] = -dlo / rho[tuple(lo)]
    out[tuple(hi)] = dhi / rho[tuple(hi)]
    return out


def _cone_derivatives(link, t, th1, th2):
    """Exact derivatives of the cone meridian ``t (a1 w1, a2 w2)``."""
    a1, a2 = link.a1, link.a2
    c1, s1, c2, s2 = np.cos(th1), np.sin(th1), np.cos(th2), np.sin(th2)
    z = np.zeros(np.broadcast_shapes(t.shape, th1.shape, th2.shape))

    def vec(*comps):
        return np.stack(np.broadcast_arrays(*comps, z)[:4])

    Z0 = vec(t * a1 * c1, t * a1 * s1, t * a2 * c2, t * a2 * s2)
    Z1 = vec(-t * a1 * s1, t * a1 * c1, z, z)
    Z2 = vec(z, z, -t * a2 * s2, t * a2 * c2)
    return {"u": Z0, "x": Z0, "xx": Z0, "1": Z1, "x1": Z1, "2": Z2, "x2": Z2,
            "11": vec(-t * a1 * c1, -t * a1 * s1, z, z),
            "22": vec(z, z, -t * a2 * c2, -t * a2 * s2),
            "12": vec(z, z, z, z)}


def _chunk_invariants(link, grid, vals_pad, t_chunk, th_pad, hx, accuracy, w, want_eigs,
                      base="analytic", want_forms=False):
    f1, f2 = grid.factors
    s = link.sigma
    t = t_chunk[:, None, None]
    th1 = th_pad[0][None, :, None]
    th2 = th_pad[1][None, None, :]
    rho1 = t * link.a1 - s * vals_pad * link.a2
    rho2 = t * link.a2 + s * vals_pad * link.a1
    Z = np.stack(np.broadcast_arrays(rho1 * np.cos(th1), rho1 * np.sin(th1),
                                     rho2 * np.cos(th2), rho2 * np.sin(th2)))
    if base == "analytic":
        # finite differences act on the normal displacement only
        dZ = s * vals_pad * np.stack(np.broadcast_arrays(
            -link.a2 * np.cos(th1), -link.a2 * np.sin(th1),
            link.a1 * np.cos(th2), link.a1 * np.sin(th2)))
        d = grid_derivatives(dZ, hx, f1.step, f2.step, accuracy, w)
        core_t1 = grid.theta1[None, :, None]
        core_t2 = grid.theta2[None, None, :]
        d0 = _cone_derivatives(link, t, core_t1, core_t2)
        d = {k: d[k] + d0[k] for k in d}
    elif base == "fd":
        d = grid_derivatives(Z, hx, f1.step, f2.step, accuracy, w)
    else:
        raise ValueError(f"unknown base {base!r}")
    T = (d["x"], d["1"], d["2"])
    G = np.empty((3, 3) + T[0].shape[1:], dtype=Z.dtype)
    for i in range(3):
        for j in range(i, 3):
            G[i, j] = G[j, i] = np.sum(T[i] * T[j], axis=0)
    detG = (G[0, 0] * (G[1, 1] * G[2, 2] - G[1, 2] ** 2)
            - G[0, 1] * (G[0, 1] * G[2, 2] - G[1, 2] * G[0, 2])
            + G[0, 2] * (G[0, 1] * G[1, 2] - G[1, 1] * G[0, 2]))
    if np.any(~(np.real(detG) > 0)):
        raise ImmersionFailure("induced metric degenerates on the grid")
    c = _cross4(*T)
    norm2 = np.sum(c * c, axis=0)
    if np.any(np.abs(norm2) <= 1e-300):
        raise NormalDegeneracy("tangent block is rank deficient")
    c1 = grid.theta1[None, :, None]
    c2 = grid.theta2[None, None, :]
    ref = s * np.stack(np.broadcast_arrays(-link.a2 * np.cos(c1), -link.a2 * np.sin(c1),
                                           link.a1 * np.cos(c2), link.a1 * np.sin(c2)))
    orient = np.sign(np.real(np.sum(c * ref, axis=0)))
    nu = c * (orient / np.sqrt(norm2))
    names = (("xx", "x1", "x2"), ("x1", "11", "12"), ("x2", "12", "22"))
    h = np.empty_like(G)
    for i in range(3):
        for j in range(i, 3):
            h[i, j] = h[j, i] = np.sum(d[names[i][j]] * nu, axis=0)
    # B = G^{-1} h via the adjugate
    adj = np.empty_like(G)
    adj[0, 0] = G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1]
    adj[0, 1] = G[0, 2] * G[2, 1] - G[0, 1] * G[2, 2]
    adj[0, 2] = G[0, 1] * G[1, 2] - G[0, 2] * G[1, 1]
    adj[1, 0] = G[1, 2] * G[2, 0] - G[1, 0] * G[2, 2]
    adj[1, 1] = G[0, 0] * G[2, 2] - G[0, 2] * G[2, 0]
    adj[1, 2] = G[0, 2] * G[1, 0] - G[0, 0] * G[1, 2]
    adj[2, 0] = G[1, 0] * G[2, 1] - G[1, 1] * G[2, 0]
    adj[2, 1] = G[0, 1] * G[2, 0] - G[0, 0] * G[2, 1]
    adj[2, 2] = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    B = np.einsum("ik...,kj...->ij...", adj, h) / detG
    e1 = B[0, 0] + B[1, 1] + B[2, 2]
    trB2 = sum(B[i, j] * B[j, i] for i in range(3) for j in range(3))
    e2 = 0.5 * (e1 * e1 - trB2)
    e3 = (B[0, 0] * (B[1, 1] * B[2, 2] - B[1, 2] * B[2, 1])
          - B[0, 1] * (B[1, 0] * B[2, 2] - B[1, 2] * B[2, 0])
          + B[0, 2] * (B[1, 0] * B[2, 1] - B[1, 1] * B[2, 0]))
    core = (slice(w, -w), slice(w, -w))
    mult = (0 if f1.periodic else link.p - 1, 0 if f2.periodic else link.q - 1)
    orbit = [None, None]
    if mult[0]:
        orbit[0] = _orbit_curvature(nu[1], Z[1][(slice(None),) + core], f1, accuracy, 1,
                                    rho1[(slice(None),) + core])
    if mult[1]:
        orbit[1] = _orbit_curvature(nu[3], Z[3][(slice(None),) + core], f2, accuracy, 2,
                                    rho2[(slice(None),) + core])
    # prod(1 + s k) truncated at s^3
    E = [np.ones_like(e1), e1, e2, e3]
    for m, o in zip(mult, orbit):
        for _ in range(m):
            E = [E[0], E[1] + o * E[0], E[2] + o * E[1], E[3] + o * E[2]]
    out = {"S1": E[1], "S2": E[2], "S3": E[3], "detG": detG}
    if want_eigs:
        out["visible"] = _visible_eigs(G, h)
        out["orbit"] = tuple(orbit)
    if want_forms:
        # graph volume density relative to the cone's t^n dx dtheta
        dens = np.sqrt(np.real(detG)) / (t**3 * link.a1 * link.a2)
        if mult[0]:
            dens = dens * (np.real(rho1[(slice(None),) + core]) / (t * link.a1)) ** mult[0]
        if mult[1]:
            dens = dens * (np.real(rho2[(slice(None),) + core]) / (t * link.a2)) ** mult[1]
        out["G"] = np.real(G)
        out["h"] = np.real(h)
        out["density"] = dens
    return out


def _visible_eigs(G, h):
    """Eigenvalues of ``G^{-1} h`` through the symmetric form ``L^{-1} h L^{-T}``."""
    G, h = np.real(G), np.real(h)
    L00 = np.sqrt(G[0, 0])
    L10, L20 = G[1, 0] / L00, G[2, 0] / L00
    L11 = np.sqrt(G[1, 1] - L10**2)
    L21 = (G[2, 1] - L20 * L10) / L11
    L22 = np.sqrt(G[2, 2] - L20**2 - L21**2)

    def lower_solve(b0, b1, b2):
        y0 = b0 / L00
        y1 = (b1 - L10 * y0) / L11
        return y0, y1, (b2 - L20 * y0 - L21 * y1) / L22

    # W = L^{-1} h (columns), then S = L^{-1} W^T
    W = [lower_solve(h[0, j], h[1, j], h[2, j]) for j in range(3)]
    rows = [lower_solve(W[0][i], W[1][i], W[2][i]) for i in range(3)]
    S = np.empty(G.shape[2:] + (3, 3))
    for i in range(3):
        for j in range(3):
            S[..., j, i] = rows[i][j]
    return np.linalg.eigvalsh(S)


def _sweep(link, values, grid, radial, accuracy, chunk, want_eigs, base="analytic",
           want_forms=False):
    vals = np.asarray(values)
    w = half_width(2, accuracy)
    th_pad = padded_angles(grid, w)
    pad = pad_angles(vals, grid, w)
    Nt = radial.count
    npts = 2 + accuracy
    if chunk is None:
        chunk = max(npts + 2, _POINT_BUDGET // (grid.n1 * grid.n2))
    chunk = max(int(chunk), npts + 2)
    pieces = []
    for i0 in range(0, Nt, chunk):
        i1 = min(Nt, i0 + chunk)
        lo, hi = max(0, i0 - w), min(Nt, i1 + w)
        if hi - lo < npts:
            lo = max(0, hi - npts)
        res = _chunk_invariants(link, grid, pad[lo:hi], radial.t[lo:hi], th_pad, radial.h,
                                accuracy, w, want_eigs, base, want_forms)
        keep = slice(i0 - lo, i0 - lo + (i1 - i0))
        pieces.append(_take(res, keep))
    return _concat(pieces)


def _take(res, keep):
    out = {}
    for k, v in res.items():
        if k in ("G", "h"):
            out[k] = v[:, :, keep]
        elif isinstance(v, tuple):
            out[k] = tuple(None if a is None else a[keep] for a in v)
        else:
            out[k] = v[keep]
    return out


def _concat(pieces):
    out = {}
    for k, v in pieces[0].items():
        if k in ("G", "h"):
            out[k] = np.concatenate([p[k] for p in pieces], axis=2)
        elif isinstance(v, tuple):
            out[k] = tuple(None if v[j] is None else np.concatenate([p[k][j] for p in pieces])
                           for j in range(len(v)))
        else:
            out[k] = np.concatenate([p[k] for p in pieces])
    return out


@dataclass
class CurvatureFields:
    visible: np.ndarray          # (Nt, n1, n2, 3) ascending
    orbit: tuple                 # per factor: (Nt, n1, n2) or None
    multiplicity: tuple
    S: tuple                     # (S1, S2, S3) from the characteristic polynomial

    def principal(self):
        """All ``n`` principal curvatures per node, ascending."""
        parts = [self.visible]
        for m, o in zip(self.multiplicity, self.orbit):
            if m:
                parts.append(np.repeat(o[..., None], m, axis=-1))
        return np.sort(np.concatenate(parts, axis=-1), axis=-1)


def shape_operator_fd(graph: EmbeddedGraph, accuracy=4, chunk=None, base="fd"):
    """Principal curvatures of the graph from finite differences of ``Z``.

    ``base='fd'`` differentiates the whole meridian numerically.
    ``base='analytic'`` differentiates only the displacement ``u N`` and adds
    the exact cone derivatives, which keeps roundoff at the level of ``u``.
    """
    res = _sweep(graph.link, graph.u, graph.grid, graph.radial, accuracy, chunk, True, base)
    f1, f2 = graph.grid.factors
    mult = (0 if f1.periodic else graph.link.p - 1, 0 if f2.periodic else graph.link.q - 1)
    return CurvatureFields(res["visible"], res["orbit"], mult,
                           (np.real(res["S1"]), np.real(res["S2"]), np.real(res["S3"])))


def symmetric_functions_field(curvatures):
    """``(Sbar1, Sbar2, Sbar3)`` from a :class:`CurvatureFields` or an array
    whose last axis lists the principal curvatures."""
    if isinstance(curvatures, CurvatureFields):
        k = curvatures.principal()
    else:
        k = np.asarray(curvatures, dtype=float)
    return tuple(np.asarray(elementary_symmetric(k, r)) for r in (1, 2, 3))


def scalar_curvature_field(link, values, grid, radial, accuracy=4, chunk=None, which=2,
                           base="analytic"):
    """``Sbar_which`` of the graph of ``values`` (complex input allowed)."""
    res = _sweep(link, values, grid, radial, accuracy, chunk, False, base)
    return res[f"S{which}"]


@dataclass
class GraphForms:
    """Induced metric ``G`` and second fundamental form ``h`` in ``(x, th1, th2)``
    coordinates, with ``S1, S3`` of the graph and its volume density relative
    to the cone measure ``t^n dx dtheta``."""

    G: np.ndarray
    h: np.ndarray
    S1: np.ndarray
    S3: np.ndarray
    density: np.ndarray


def graph_forms(link, values, grid, radial, accuracy=4, chunk=None, base="analytic"):
    """Fundamental forms of the graph of ``values`` on the grid."""
    res = _sweep(link, values, grid, radial, accuracy, chunk, False, base, want_forms=True)
    return GraphForms(res["G"], res["h"], np.real(res["S1"]), np.real(res["S3"]), res["density"])


def verdict_summary(S2, radial, grid):
    """Residual statistics of an ``Sbar_2`` field; the tip row is reported apart."""
    S2 = np.asarray(S2)
    t = radial.t[:, None, None]
    body = S2[1:]
    return {
        "sup_residual": float(np.max(np.abs(body))),
        "weighted_sup": float(np.max(np.abs((t**3 * S2)[1:]))),
        "tip_weighted_sup": float(np.max(np.abs(radial.t[0] ** 3 * S2[0]))),
        "grid": {"nt": radial.count, "n1": grid.n1, "n2": grid.n2, "t_min": radial.t_min},
    }


def residual_csv(field, radial, grid):
    """Rows ``t, theta1, theta2, value`` in full precision."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "theta1", "theta2", "value"])
    T, A, B = np.meshgrid(radial.t, grid.theta1, grid.theta2, indexing="ij")
    for row in zip(T.ravel(), A.ravel(), B.ravel(), np.asarray(field).ravel()):
        wr.writerow(["%.17g" % v for v in row])
    return buf.getvalue()
