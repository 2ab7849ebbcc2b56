"""Per-mode solution of ``L u = f`` on the truncated cone.

With ``x = ln t`` the mode equation is ``a'' + (n-3) a' - mu a = t^3 f_j`` and
its solution with prescribed behaviour at the tip is

    a(t) = Re( alpha t^g + t^g int_beta^t s^(2-n-2g) int_0^s tau^(n-1+g) f_j dtau ds ),

``g = gamma_plus``.  Low modes use ``alpha = beta = 0``; high modes use
``beta = 1`` and ``alpha`` from the boundary data.  Both nested integrals are
evaluated as scaled exponential recurrences on the log grid, with the
integrand interpolated by local cubics and the exponential weight integrated
exactly (product integration), so exponents of any size stay stable.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .calculus import cone_derivatives
from .errors import DecayClassViolation, DegenerateRoot, QuadratureUnderflow
from .fields import ConeField, RadialGrid

__all__ = [
    "WeightedNorms",
    "LinearDiagnostics",
    "slice_norm",
    "weighted_norms",
    "global_norm",
    "iteration_norm",
    "project_modes",
    "solve_mode",
    "solve_modes",
    "solve_linear",
    "harmonic_extension",
    "boundary_coefficients",
    "high_mode_mask",
    "profile_csv",
]

_STENCILS = {"first": (0, 1, 2, 3), "interior": (-1, 0, 1, 2), "last": (-2, -1, 0, 1)}


def _lagrange_basis(offsets, s):
    offs = np.asarray(offsets, dtype=float)
    out = []
    for i, oi in enumerate(offs):
        v = np.ones_like(s)
        for j, oj in enumerate(offs):
            if i != j:
                v = v * (s - oj) / (oi - oj)
        out.append(v)
    return np.array(out)


def _panel_weights(z, anchor):
    """``w[c] = int_0^1 exp(z (s - anchor)) l_c(s) ds`` for each stencil kind.

    ``z`` is an array of (complex) rates; the result has shape
    ``(len(z), 4)`` per stencil kind.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    npts = 16 + 4 * int(np.ceil(np.max(np.abs(z)) if z.size else 0))
    x, w = np.polynomial.legendre.leggauss(npts)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    E = np.exp(np.outer(z, s - anchor)) * w                   # (M, G)
    return {k: E @ _lagrange_basis(offs, s).T for k, offs in _STENCILS.items()}


def _panel_sum(W, values, i, N):
    """``sum_c W[c] values[i + offset_c]`` for panel ``[x_i, x_{i+1}]``."""
    if i == 0:
        kind = "first"
    elif i == N - 2:
        kind = "last"
    else:
        kind = "interior"
    offs = _STENCILS[kind]
    return sum(W[kind][:, c] * values[i + o] for c, o in enumerate(offs))


def _tail_exponent(f, h, fallback):
    """Power-law exponent of ``f`` near the tip, fitted from the first nodes.

    Falls back to ``fallback`` for profiles that vanish, change sign or do not
    look like a power law there.
    """
    f0, f1, f2 = f[0], f[1], f[2]
    scale = np.max(np.abs(f), axis=0)
    kappa = np.full(f.shape[1], fallback, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.log(np.abs(f1 / f0)) / h
        s2 = np.log(np.abs(f2 / f1)) / h
    ok = ((np.sign(f0) == np.sign(f1)) & (np.sign(f1) == np.sign(f2))
          & (np.abs(f0) > 1e-13 * scale) & np.isfinite(s1) & np.isfinite(s2)
          & (np.abs(s1 - s2) <= 0.1 * (1.0 + np.abs(s1))))
    kappa[ok] = s1[ok]
    return kappa


def solve_modes(F, mu, n, high, alpha, grid: RadialGrid, tail_exponent, allow_degenerate=False):
    """Vectorized solve for many modes.

    Parameters
    ----------
    F : (Nt, M) array
        Right-hand side profiles ``f_j(t)``.
    mu : (M,) array
    high : (M,) bool array
        True where ``alpha_j`` and ``beta_j = 1`` are used.
    alpha : (M,) array
        Boundary values for the high modes (ignored for low modes).
    tail_exponent : float
        Fallback exponent ``m - 2 + eps`` for the tail below ``t_min``.
    """
    F = np.asarray(F, dtype=float)
    mu = np.asarray(mu, dtype=float)
    high = np.asarray(high, dtype=bool)
    alpha = np.asarray(alpha, dtype=float)
    N, M = F.shape
    h = grid.h
    x = grid.x
    half = 0.5 * (n - 3)
    disc = half * half + mu
    if not allow_degenerate and np.any(np.abs(disc) < 1e-12):
        raise DegenerateRoot("repeated indicial root; enable the log branch to proceed")
    g = -half + np.sqrt(disc.astype(complex))
    a_rate = n + g
    b_rate = 3.0 - g
    low = ~high
    kappa = _tail_exponent(F, h, tail_exponent)

    def divergent(k):
        return (np.real(a_rate + k) <= 0) | (low & (np.real(b_rate + k) <= 0))

    # a fit that would make the tail diverge is noise; use the decay class instead
    kappa = np.where(divergent(kappa), tail_exponent, kappa)
    if np.any(divergent(kappa)):
        raise QuadratureUnderflow("tail integral below t_min diverges under the decay class")
    # inner integral, scaled: J = t^-(n+g) int_0^t tau^(n-1+g) f dtau
    Wa = _panel_weights(a_rate * h, 1.0)
    decay = np.exp(-a_rate * h)
    J = np.empty((N, M), dtype=complex)
    J[0] = F[0] / (a_rate + kappa)
    for i in range(N - 1):
        J[i + 1] = decay * J[i] + h * _panel_sum(Wa, F, i, N)
    out = np.zeros((N, M))
    e3 = np.exp(3.0 * x)
    if np.any(high):
        Jh = J[:, high]
        gh = g[high]
        Wb = _panel_weights(b_rate[high] * h, 0.0)
        back = np.exp(-gh * h)
        K = np.zeros((N, Jh.shape[1]), dtype=complex)
        for i in range(N - 2, -1, -1):
            K[i] = back * K[i + 1] + e3[i] * h * _panel_sum(Wb, Jh, i, N)
        tg = np.exp(np.outer(x, gh))
        out[:, high] = np.real(alpha[high] * tg - K)
    if np.any(low):
        Jl = J[:, low]
        gl = g[low]
        Wb = _panel_weights(b_rate[low] * h, 1.0)
        fwd = np.exp(gl * h)
        K = np.empty((N, Jl.shape[1]), dtype=complex)
        K[0] = e3[0] * Jl[0] / (b_rate[low] + kappa[low])
        for i in range(N - 1):
            K[i + 1] = fwd * K[i] + e3[i + 1] * h * _panel_sum(Wb, Jl, i, N)
        out[:, low] = np.real(K)
    return out


def solve_mode(mode, f_j, alpha, n, selection, grid: RadialGrid, allow_degenerate=False):
    """Profile ``a_j(t)`` of one mode; ``mode`` needs ``mu`` and ``gamma_plus``."""
    f = np.broadcast_to(np.asarray(f_j, dtype=float), (grid.count,))[:, None]
    high = not selection.is_low(mode)
    return solve_modes(f, [mode.mu], n, [high], [alpha], grid,
                       selection.m - 2 + selection.epsilon, allow_degenerate)[:, 0]


def high_mode_mask(basis, selection):
    return np.array([not selection.is_low(m) for m in basis.modes])


def project_modes(field: ConeField):
    """``f_j(t) = int_M f phi_j dtheta`` for every mode, shape ``(Nt, modes)``."""
    return field.profiles / field.basis.S1


def boundary_coefficients(psi, basis):
    """Mode coefficients ``<psi, phi_j>`` (weight ``S1``) of boundary data given
    as grid values ``(n1, n2)`` or directly as a coefficient vector."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape == basis.grid.shape:
        return basis.analyze(psi)
    if psi.shape == (len(basis),):
        return psi
    raise ValueError("psi must be grid values or a full coefficient vector")


def harmonic_extension(psi, basis, selection, grid: RadialGrid):
    """``H_J psi = sum_{j > J} <psi, phi_j> t^gamma_j phi_j``."""
    coeff = boundary_coefficients(psi, basis)
    high = high_mode_mask(basis, selection)
    g = basis.gamma_plus
    prof = np.zeros((grid.count, len(basis)))
    prof[:, high] = np.real(coeff[high] * np.exp(np.outer(grid.x, g[high])))
    return ConeField(basis, grid, profiles=prof)


@dataclass
class LinearDiagnostics:
    decay_sup_f: float
    global_norm_f: float
    boundary_norm: float
    weighted_sup_u: float
    prop1_ratio: float
    boundary_error: float
    extra: dict = field(default_factory=dict)

    def to_record(self):
        rec = {k: getattr(self, k) for k in ("decay_sup_f", "global_norm_f", "boundary_norm",
                                              "weighted_sup_u", "prop1_ratio", "boundary_error")}
        rec.update(self.extra)
        return rec


def solve_linear(f: ConeField, psi, selection, grid: RadialGrid = None, decay_cap=None,
                 allow_degenerate=False):
    """Solve ``L u = f`` with ``Pi_J u(1, .) = Pi_J psi``.

    Returns the solution (mode profiles) and :class:`LinearDiagnostics`.
    """
    basis = f.basis
    grid = f.radial if grid is None else grid
    F = project_modes(f)
    high = high_mode_mask(basis, selection)
    coeff = boundary_coefficients(psi, basis)
    m, eps = selection.m, selection.epsilon
    fn = weighted_norms(f, m, eps)
    if decay_cap is not None and fn.decay_sup > decay_cap:
        warnings.warn(f"decay_sup {fn.decay_sup:.3e} exceeds the cap {decay_cap:.3e}",
                      DecayClassViolation, stacklevel=2)
    prof = solve_modes(F, basis.mu, basis.n, high, coeff, grid, m - 2 + eps, allow_degenerate)
    u = ConeField(basis, grid, profiles=prof)
    b_norm = float(np.sqrt(np.sum(coeff[high] ** 2)))
    slice_u = np.sqrt(np.sum(prof**2, axis=1))
    wsup = float(np.max(grid.t ** (-m) * slice_u))
    denom = fn.global_norm + b_norm
    berr = float(np.max(np.abs(prof[-1, high] - coeff[high]))) if np.any(high) else 0.0
    diag = LinearDiagnostics(fn.decay_sup, fn.global_norm, b_norm, wsup,
                             wsup / denom if denom > 0 else 0.0, berr)
    return u, diag


@dataclass
class WeightedNorms:
    t: np.ndarray
    slice_values: np.ndarray
    global_norm: float
    decay_sup: float
    c2_weighted: float

    def slice(self, t):
        """``|f|_t`` interpolated in ``ln t``."""
        return np.interp(np.log(t), np.log(self.t), self.slice_values)


def slice_norm(field: ConeField):
    """``|f|_t = (int_M f^2 S1^-1 dtheta)^(1/2)`` per radial node."""
    W = field.basis.weights
    return np.sqrt(np.einsum("tij,ij->t", field.values**2, W) / field.basis.S1)


def global_norm(slice_values, grid: RadialGrid, m):
    """``(int t^(4-2m) |f|_t^2 dt)^(1/2)`` by Simpson's rule in ``x = ln t``."""
    integrand = np.exp((5.0 - 2.0 * m) * grid.x) * np.asarray(slice_values) ** 2
    return float(np.sqrt(max(simpson(integrand, x=grid.x), 0.0)))


def iteration_norm(field: ConeField, m, accuracy=4, holder_samples=0, seed=0):
    """``sup_{t <= 1/2} t^-m max_{A_t} (|v| + t|grad v| + t^2 |Hess v|)``.

    ``A_t`` is the annulus ``t <= s <= 2t``; the row ``t = t_min`` is skipped.
    With ``holder_samples > 0`` a sampled scale-invariant Hoelder quotient of
    the Hessian is added.
    """
    D = cone_derivatives(field, accuracy)
    t = field.radial.t
    tt = t[:, None, None]
    pt = np.abs(D.u) + tt * np.sqrt(D.grad_norm2()) + tt**2 * np.sqrt(D.hess_norm2())
    per_slice = pt.reshape(len(t), -1).max(axis=1)
    span = int(round(np.log(2.0) / field.radial.h))
    # the tip row is left out: its one-sided stencils only resolve roundoff there
    starts = np.nonzero(t <= 0.5 + 1e-12)[0][1:]
    if starts.size == 0:
        starts = np.array([0])
    vals = [t[i] ** (-m) * per_slice[max(i, 1):i + span + 1].max() for i in starts]
    out = float(max(vals))
    if holder_samples:
        out += _holder_quotient(D, field, m, holder_samples, seed)
    return out


def _holder_quotient(D, field, m, samples, seed, alpha=0.5):
    rng = np.random.default_rng(seed)
    t = field.radial.t
    H = np.sqrt(D.hess_norm2())
    shape = H.shape
    idx = rng.integers(0, np.prod(shape), size=(samples, 2))
    i1 = np.unravel_index(idx[:, 0], shape)
    i2 = np.unravel_index(idx[:, 1], shape)
    link = field.basis.link
    th1, th2 = field.basis.grid.theta1, field.basis.grid.theta2

    def point(ix):
        tt, a, b = t[ix[0]], th1[ix[1]], th2[ix[2]]
        return tt * np.array([link.a1 * np.cos(a), link.a1 * np.sin(a),
                              link.a2 * np.cos(b), link.a2 * np.sin(b)])

    best = 0.0
    for k in range(samples):
        p1 = (i1[0][k], i1[1][k], i1[2][k])
        p2 = (i2[0][k], i2[1][k], i2[2][k])
        dist = np.linalg.norm(point(p1) - point(p2))
        if dist <= 0:
            continue
        ts = min(t[p1[0]], t[p2[0]])
        q = ts ** (2 + alpha - m) * abs(H[p1] - H[p2]) / dist**alpha
        best = max(best, q)
    return float(best)


def weighted_norms(field: ConeField, m, epsilon, c2=False, accuracy=4):
    """Slice, global and decay norms; ``c2=True`` adds the iteration norm."""
    s = slice_norm(field)
    t = field.radial.t
    return WeightedNorms(
        t=t,
        slice_values=s,
        global_norm=global_norm(s, field.radial, m),
        decay_sup=float(np.max(t ** (2.0 - m - epsilon) * s)),
        c2_weighted=iteration_norm(field, m, accuracy) if c2 else float("nan"),
    )


def profile_csv(field: ConeField, modes=None):
    """Columns ``t`` then ``re_a_<label>, im_a_<label>`` per mode."""
    basis = field.basis
    idx = range(len(basis)) if modes is None else [basis.index(m) for m in modes]
    prof = field.profiles
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    head = ["t"]
    for j in idx:
        k, l, par = basis.modes[j].label
        tag = f"{k}_{l}{'_' + par if par else ''}"
        head += [f"re_a_{tag}", f"im_a_{tag}"]
    wr.writerow(head)
    for i, t in enumerate(field.radial.t):
        row = ["%.17g" % t]
        for j in idx:
            row += ["%.17g" % prof[i, j], "0"]
        wr.writerow(row)
    return buf.getvalue()
