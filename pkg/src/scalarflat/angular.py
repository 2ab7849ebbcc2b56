"""Zonal grids on the two sphere factors of a product link.

A sphere factor ``S^d`` with ``d >= 2`` is sampled at equispaced polar angles
``theta_i = i*pi/(N-1)`` (poles included) and carries the zonal harmonics
``C_k^{(d-1)/2}(cos theta)``.  A circle factor is sampled periodically and
carries ``cos(l theta)`` and ``sin(l theta)``.

Quadrature weights integrate ``g(theta) * sin(theta)**(d-1)`` exactly for every
cosine polynomial ``g`` of degree ``<= N-1`` (a Clenshaw-Curtis rule with the
zonal volume weight folded in).  Harmonics up to degree ``(N-1)//2`` are
therefore orthonormal to rounding under the grid quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import eval_gegenbauer, gammaln

from .errors import UnsupportedFactor

__all__ = ["FactorGrid", "AngularGrid", "sphere_area"]


def sphere_area(d):
    """Volume of the unit ``S^d``."""
    return float(2.0 * np.pi ** ((d + 1) / 2) / np.exp(gammaln((d + 1) / 2)))


def _zonal_moments(d, kmax):
    # int_0^pi cos(k th) sin(th)^(d-1) dth; integrand is entire, Gauss-Legendre converges fast
    x, w = np.polynomial.legendre.leggauss(kmax + 96)
    th = 0.5 * np.pi * (x + 1.0)
    w = 0.5 * np.pi * w
    k = np.arange(kmax + 1)[:, None]
    return (np.cos(k * th) * np.sin(th) ** (d - 1)) @ w


def _cc_weights(d, N):
    th = np.arange(N) * np.pi / (N - 1)
    mom = _zonal_moments(d, N - 1)
    k = np.arange(N)
    dk = np.ones(N)
    dk[0] = dk[-1] = 0.5
    ei = np.ones(N)
    ei[0] = ei[-1] = 0.5
    C = np.cos(np.outer(k, th))
    return (2.0 / (N - 1)) * ei * ((mom * dk) @ C)


@dataclass(frozen=True)
class FactorGrid:
    """Nodes, quadrature and harmonics of one factor ``S^dim`` (unit radius)."""

    dim: int
    count: int
    max_degree: int | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise UnsupportedFactor(f"factor dimension {self.dim}")
        if self.count < 5:
            raise ValueError("need at least 5 nodes per factor")

    @property
    def kind(self):
        return "circle" if self.dim == 1 else "sphere"

    @property
    def periodic(self):
        return self.dim == 1

    @cached_property
    def nodes(self):
        if self.periodic:
            return 2.0 * np.pi * np.arange(self.count) / self.count
        return np.pi * np.arange(self.count) / (self.count - 1)

    @property
    def step(self):
        return float(self.nodes[1] - self.nodes[0])

    @cached_property
    def weights(self):
        """``sum(w * g(nodes)) = int_{S^dim} g`` for zonal ``g``."""
        if self.periodic:
            return np.full(self.count, 2.0 * np.pi / self.count)
        return sphere_area(self.dim - 1) * _cc_weights(self.dim, self.count)

    @property
    def degree_limit(self):
        lim = (self.count - 1) // 2
        return lim if self.max_degree is None else min(lim, self.max_degree)

    @cached_property
    def harmonics(self):
        """``(labels, values)`` with labels ``(degree, parity)`` and values
        normalized in ``L^2(S^dim)``; parity is ``''`` on spheres."""
        th = self.nodes
        labels, rows = [], []
        if self.periodic:
            labels.append((0, ""))
            rows.append(np.full_like(th, 1.0 / np.sqrt(2 * np.pi)))
            for l in range(1, self.degree_limit + 1):
                labels.append((l, "cos"))
                rows.append(np.cos(l * th) / np.sqrt(np.pi))
                labels.append((l, "sin"))
                rows.append(np.sin(l * th) / np.sqrt(np.pi))
        else:
            for k in range(self.degree_limit + 1):
                labels.append((k, ""))
                rows.append(zonal_harmonic(self.dim, k, th))
        return labels, np.array(rows)

    def laplacian_eigenvalue(self, degree):
        return degree * (degree + self.dim - 1)


def zonal_harmonic(d, k, theta):
    """Degree-``k`` zonal harmonic of ``S^d`` (``d >= 2``), unit ``L^2`` norm."""
    alpha = 0.5 * (d - 1)
    lognorm = (np.log(sphere_area(d - 1)) + np.log(np.pi) + (1 - 2 * alpha) * np.log(2.0)
               + gammaln(k + 2 * alpha) - gammaln(k + 1) - np.log(k + alpha)
               - 2 * gammaln(alpha))
    return eval_gegenbauer(k, alpha, np.cos(theta)) * np.exp(-0.5 * lognorm)


@dataclass(frozen=True)
class AngularGrid:
    """Tensor grid over ``(theta1, theta2)`` on the link ``M``."""

    p: int
    q: int
    n1: int
    n2: int
    kmax: int | None = None
    lmax: int | None = None
    factors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", (FactorGrid(self.p, self.n1, self.kmax),
                                             FactorGrid(self.q, self.n2, self.lmax)))

    @classmethod
    def for_link(cls, link, n1, n2=None, kmax=None, lmax=None):
        if n2 is None:
            n2 = n1 - 1 if link.q == 1 else n1
        return cls(link.p, link.q, n1, n2, kmax, lmax)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def theta1(self):
        return self.factors[0].nodes

    @property
    def theta2(self):
        return self.factors[1].nodes

    def volume_weights(self, link):
        """Weights ``W`` with ``sum(W * g) = int_M g dtheta`` for doubly zonal ``g``."""
        f1, f2 = self.factors
        scale = link.a1 ** link.p * link.a2 ** link.q
        return scale * np.outer(f1.weights, f2.weights)
