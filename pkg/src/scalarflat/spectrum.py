"""Spectrum of the weighted link operator ``-S1^{-1}(L1 - 3 S3)``.

On a product link ``L1 = div(T1 grad)`` acts factor-wise with the constant
Newton-tensor eigenvalues, so the doubly zonal eigenfunctions are products of
factor harmonics and

    mu(k, l) = [ (S1-lam1) k(k+p-1)/a1^2 + (S1-lam2) l(l+q-1)/a2^2 + 3 S3 ] / S1.

Every mode has indicial roots ``gamma^2 + (n-3) gamma - mu = 0``; the weight
exponent ``m`` and the threshold ``J`` split the modes into those decaying
slower than ``t^m`` (low) and the rest (high).
"""

from __future__ import annotations

import csv
import cmath
import io
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .angular import AngularGrid
from .errors import BudgetExceeded, DegenerateRoot, ForbiddenWeight, SolverFailure
from .link_geometry import invariants

__all__ = [
    "SpectralMode",
    "ThresholdSelection",
    "ModeBasis",
    "mode_eigenvalue",
    "indicial_roots",
    "enumerate_modes",
    "select_threshold",
    "eigenfunction_values",
    "discrete_spectrum_oracle",
    "spectrum_csv",
    "read_spectrum_csv",
    "cached_spectrum",
]

_PARITY_ORDER = {"": 0, "cos": 1, "sin": 2}


def _factor_coefficients(link):
    inv = invariants(link)
    c1 = (inv.S1 - inv.lambda1) / link.a1**2
    c2 = (inv.S1 - inv.lambda2) / link.a2**2
    return c1, c2, inv.S1, inv.S3


def mode_eigenvalue(link, k, l):
    """Closed-form eigenvalue of the doubly zonal mode ``(k, l)``."""
    if k < 0 or l < 0:
        raise ValueError("mode degrees must be non-negative")
    c1, c2, S1, S3 = _factor_coefficients(link)
    return (c1 * k * (k + link.p - 1) + c2 * l * (l + link.q - 1) + 3.0 * S3) / S1


def indicial_roots(n, mu):
    """``(gamma_minus, gamma_plus)`` solving ``gamma^2 + (n-3) gamma - mu = 0``."""
    if n < 4:
        raise ValueError("indicial roots are defined for n >= 4")
    half = 0.5 * (n - 3)
    disc = half * half + mu
    root = cmath.sqrt(disc)
    return complex(-half - root), complex(-half + root)


@dataclass(frozen=True)
class SpectralMode:
    k: int
    l: int
    parity: str
    mu: float
    gamma_plus: complex
    gamma_minus: complex
    norm_const: float = float("nan")

    @property
    def label(self):
        return (self.k, self.l, self.parity)

    @property
    def degenerate(self):
        return abs(self.gamma_plus - self.gamma_minus) < 1e-12

    def to_row(self):
        return {"k": self.k, "l": self.l, "parity": self.parity, "mu": self.mu,
                "re_gamma_plus": self.gamma_plus.real, "im_gamma_plus": self.gamma_plus.imag}


def _make_mode(link, n, k, l, parity, norm=float("nan")):
    mu = mode_eigenvalue(link, k, l)
    gm, gp = indicial_roots(n, mu)
    return SpectralMode(k, l, parity, mu, gp, gm, norm)


def _factor_labels(d, degree):
    if d == 1 and degree > 0:
        return [(degree, "cos"), (degree, "sin")]
    return [(degree, "")]


def _sort_key(mode):
    return (round(mode.mu, 9), mode.k, mode.l, _PARITY_ORDER[mode.parity])


def enumerate_modes(link, n, count):
    """The ``count`` lowest doubly zonal modes, sorted by ``mu`` (ties by labels)."""
    if count < 1:
        raise ValueError("count must be positive")
    K = L = 4
    while True:
        modes = []
        for k in range(K + 1):
            for l in range(L + 1):
                for (kk, pk) in _factor_labels(link.p, k):
                    for (ll, pl) in _factor_labels(link.q, l):
                        modes.append(_make_mode(link, n, kk, ll, pk or pl))
        modes.sort(key=_sort_key)
        if len(modes) >= count:
            cutoff = modes[count - 1].mu
            if cutoff < min(mode_eigenvalue(link, K + 1, 0), mode_eigenvalue(link, 0, L + 1)):
                return modes[:count]
        K, L = 2 * K, 2 * L


@dataclass(frozen=True)
class ThresholdSelection:
    m: float
    epsilon: float
    J: int
    modes: tuple
    n: int

    def __post_init__(self):
        if not self.m > 2:
            raise ForbiddenWeight("weight exponent m must exceed 2")
        if self.m + 2 < self.epsilon:
            raise ForbiddenWeight("decay margin must satisfy m + 2 >= epsilon")

    def is_low(self, mode):
        return mode.gamma_plus.real < self.m

    def to_record(self):
        return {"m": self.m, "epsilon": self.epsilon, "J": self.J, "n": self.n,
                "mode_count": len(self.modes)}


def select_threshold(link, n=None, m_requested=None, mode_budget=200, epsilon=0.5):
    """Pick the weight exponent ``m`` and count the low modes ``J``.

    Without ``m_requested`` the midpoint of the first gap in ``Re gamma_plus``
    lying above 2 is used.
    """
    n = link.n if n is None else n
    modes = enumerate_modes(link, n, mode_budget)
    re = np.array([md.gamma_plus.real for md in modes])
    if m_requested is None:
        above = np.nonzero(re > 2.0)[0]
        if above.size == 0:
            raise BudgetExceeded("no indicial root above 2 within the mode budget")
        j = above[0]
        lower = max(2.0, re[j - 1]) if j > 0 else 2.0
        m = 0.5 * (lower + re[j])
    else:
        m = float(m_requested)
        if m <= 2.0:
            raise ForbiddenWeight(f"m={m} must exceed 2")
        if np.any(np.abs(re - m) < 1e-9):
            raise ForbiddenWeight(f"m={m} coincides with an indicial root")
        if not np.any(re > m):
            raise BudgetExceeded("mode budget exhausted below the requested m")
    J = int(np.count_nonzero(re < m))
    return ThresholdSelection(m, epsilon, J, tuple(modes), n)


class ModeBasis:
    """All doubly zonal modes resolvable on an :class:`AngularGrid`.

    Eigenfunctions are ``phi = c * Y1_k(theta1) * Y2_l(theta2)`` with
    ``int_M phi^2 S1 dtheta = 1``.  Analysis and synthesis act separably on
    the two angular axes (the last two axes of a field).
    """

    def __init__(self, link, grid: AngularGrid, n=None):
        self.link = link
        self.grid = grid
        self.n = link.n if n is None else n
        inv = invariants(link)
        self.S1 = inv.S1
        self.S3 = inv.S3
        self.vol_scale = link.a1 ** link.p * link.a2 ** link.q
        self.c = 1.0 / np.sqrt(self.vol_scale * self.S1)
        f1, f2 = grid.factors
        lab1, self.Y1 = f1.harmonics
        lab2, self.Y2 = f2.harmonics
        entries = []
        for i, (k, pk) in enumerate(lab1):
            for j, (l, pl) in enumerate(lab2):
                mode = _make_mode(link, self.n, k, l, pk or pl, self.c)
                entries.append((mode, i, j))
        entries.sort(key=lambda e: _sort_key(e[0]))
        self.modes = tuple(e[0] for e in entries)
        self.index1 = np.array([e[1] for e in entries])
        self.index2 = np.array([e[2] for e in entries])
        self._lookup = {m.label: idx for idx, m in enumerate(self.modes)}

    def __len__(self):
        return len(self.modes)

    def index(self, label):
        return self._lookup[tuple(label)]

    @cached_property
    def mu(self):
        return np.array([m.mu for m in self.modes])

    @cached_property
    def gamma_plus(self):
        return np.array([m.gamma_plus for m in self.modes])

    @cached_property
    def weights(self):
        """Quadrature for ``int_M g dtheta``."""
        return self.grid.volume_weights(self.link)

    def values(self, idx):
        return self.c * np.outer(self.Y1[self.index1[idx]], self.Y2[self.index2[idx]])

    def analyze(self, values):
        """Coefficients ``a_j = int u phi_j S1 dtheta`` of fields ``(..., n1, n2)``."""
        w1, w2 = (f.weights for f in self.grid.factors)
        scale = self.S1 * self.vol_scale * self.c
        tmp = np.tensordot(values * w2, self.Y2, axes=([-1], [1]))      # (..., n1, K2)
        tmp = np.tensordot(np.moveaxis(tmp, -2, -1) * w1, self.Y1, axes=([-1], [1]))  # (..., K2, K1)
        return scale * tmp[..., self.index2, self.index1]

    def synthesize(self, coeffs):
        """Grid values of ``sum_j a_j phi_j`` for coefficients ``(..., modes)``."""
        coeffs = np.asarray(coeffs)
        K1, K2 = self.Y1.shape[0], self.Y2.shape[0]
        C = np.zeros(coeffs.shape[:-1] + (K1, K2), dtype=coeffs.dtype)
        C[..., self.index1, self.index2] = coeffs
        tmp = np.tensordot(C, self.Y2, axes=([-1], [0]))                 # (..., K1, n2)
        tmp = np.tensordot(np.moveaxis(tmp, -2, -1), self.Y1, axes=([-1], [0]))  # (..., n2, n1)
        return self.c * np.moveaxis(tmp, -1, -2)

    def check_roots(self, allow_degenerate=False):
        bad = [m.label for m in self.modes if m.degenerate]
        if bad and not allow_degenerate:
            raise DegenerateRoot(f"repeated indicial root for modes {bad}")


def eigenfunction_values(link, mode, grid: AngularGrid):
    """Grid values of one eigenfunction, normalized in ``L^2(M, S1 dtheta)``."""
    basis = ModeBasis(link, grid)
    try:
        idx = basis.index(mode.label if isinstance(mode, SpectralMode) else mode)
    except KeyError:
        raise ValueError(f"mode {mode} not resolvable on this grid") from None
    return basis.values(idx)


def _fv_factor(d, N):
    """Finite-volume stiffness and cell volumes for the zonal Laplacian on ``S^d``."""
    if d == 1:
        h = 2 * np.pi / N
        main = np.full(N, 2.0 / h)
        K = sp.diags([main, -np.ones(N - 1) / h, -np.ones(N - 1) / h], [0, 1, -1], format="lil")
        K[0, N - 1] = K[N - 1, 0] = -1.0 / h
        return K.tocsr(), np.full(N, h)
    h = np.pi / (N - 1)
    th = np.arange(N) * h
    mid = th[:-1] + 0.5 * h
    flux = np.sin(mid) ** (d - 1) / h
    main = np.zeros(N)
    main[:-1] += flux
    main[1:] += flux
    K = sp.diags([main, -flux, -flux], [0, 1, -1], format="csr")
    x, w = np.polynomial.legendre.leggauss(8)
    lo = np.clip(th - 0.5 * h, 0, np.pi)
    hi = np.clip(th + 0.5 * h, 0, np.pi)
    pts = 0.5 * (hi - lo)[:, None] * (x + 1) + lo[:, None]
    vol = (np.sin(pts) ** (d - 1) @ w) * 0.5 * (hi - lo)
    return K, vol


def discrete_spectrum_oracle(link, grid: AngularGrid, count):
    """Lowest eigenvalues of a finite-volume discretization of
    ``-(L1 - 3 S3) phi = mu S1 phi`` on the doubly zonal grid.

    Independent of the closed form: the operator is assembled from fluxes
    ``sin^(d-1)`` at half nodes with exact cell volumes (poles included) and
    the generalized eigenproblem is solved by shift-invert Lanczos.
    """
    if min(grid.n1, grid.n2) < 17:
        raise ValueError("oracle needs at least 17 points per factor")
    c1, c2, S1, S3 = _factor_coefficients(link)
    K1, V1 = _fv_factor(link.p, grid.n1)
    K2, V2 = _fv_factor(link.q, grid.n2)
    D1, D2 = sp.diags(V1), sp.diags(V2)
    A = c1 * sp.kron(K1, D2) + c2 * sp.kron(D1, K2) + 3.0 * S3 * sp.kron(D1, D2)
    b = S1 * np.kron(V1, V2)
    s = sp.diags(1.0 / np.sqrt(b))
    C = (s @ A @ s).tocsc()
    shift = 3.0 * S3 / S1 - 1.0
    try:
        vals = eigsh(C, k=count, sigma=shift, which="LM", return_eigenvectors=False,
                     tol=1e-12, maxiter=5000)
    except ArpackNoConvergence as exc:
        raise SolverFailure(f"discrete eigenproblem did not converge: {exc}") from exc
    return np.sort(vals)


_CSV_FIELDS = ["k", "l", "parity", "mu", "re_gamma_plus", "im_gamma_plus"]


def spectrum_csv(modes):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for md in modes:
        writer.writerow([md.k, md.l, md.parity, repr(float(md.mu)),
                         repr(float(md.gamma_plus.real)), repr(float(md.gamma_plus.imag))])
    return buf.getvalue()


def read_spectrum_csv(text, n):
    rows = list(csv.DictReader(io.StringIO(text)))
    modes = []
    for r in rows:
        mu = float(r["mu"])
        gm, gp = indicial_roots(n, mu)
        gp = complex(float(r["re_gamma_plus"]), float(r["im_gamma_plus"]))
        modes.append(SpectralMode(int(r["k"]), int(r["l"]), r["parity"], mu, gp, gm))
    return modes


def cached_spectrum(link, n, count, cache_dir=None):
    """Spectrum table, read from ``cache_dir`` when present."""
    if cache_dir is None:
        return enumerate_modes(link, n, count)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"spectrum_p{link.p}_q{link.q}_n{n}_c{count}.csv")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return read_spectrum_csv(fh.read(), n)
    modes = enumerate_modes(link, n, count)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spectrum_csv(modes))
    return modes
