"""Scalar-flat products of spheres in the unit sphere.

A link ``S^p(a1) x S^q(a2)`` sits in ``S^n`` with ``n = p + q + 1`` and
``a1**2 + a2**2 = 1``.  With the unit normal ``N = sigma * (-a2*w1, a1*w2)``
and the shape operator ``A = -dN`` its principal curvatures are constant::

    lambda1 = sigma * a2 / a1   (multiplicity p)
    lambda2 = -sigma * a1 / a2  (multiplicity q)

so every curvature invariant reduces to closed forms in ``(p, q, a1, a2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLink, InvalidOrder, NoScalarFlatRadii

__all__ = [
    "CliffordLink",
    "CurvatureInvariants",
    "elementary_symmetric",
    "invariants",
    "solve_scalar_flat_radii",
]


def elementary_symmetric(values, r):
    """Elementary symmetric polynomial ``e_r`` of a multiset.

    Uses the coefficient recurrence of ``prod(1 + s*v)`` so no subsets are
    enumerated.  ``values`` may carry extra leading axes; the multiset runs
    along the last axis.
    """
    vals = np.asarray(values, dtype=float)
    size = vals.shape[-1] if vals.ndim else 0
    if not isinstance(r, (int, np.integer)) or r < 0 or r > size:
        raise InvalidOrder(f"order r={r!r} outside [0, {size}]")
    e = np.zeros(vals.shape[:-1] + (r + 1,))
    e[..., 0] = 1.0
    for i in range(size):
        v = vals[..., i]
        # descending so each value enters once
        for k in range(min(i + 1, r), 0, -1):
            e[..., k] = e[..., k] + v * e[..., k - 1]
    out = e[..., r]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CliffordLink:
    """A product link ``S^p(a1) x S^q(a2)`` with orientation ``sigma``."""

    p: int
    q: int
    a1: float
    a2: float
    sigma: int = 1

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("sphere factors need dimension >= 1")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("factor radii must be positive")
        if abs(self.a1**2 + self.a2**2 - 1.0) > 1e-12:
            raise ValueError("factor radii must satisfy a1^2 + a2^2 = 1")

    @property
    def n(self):
        return self.p + self.q + 1

    @property
    def dims(self):
        return (self.p, self.q)

    @property
    def radii(self):
        return (self.a1, self.a2)

    @property
    def principal_curvatures(self):
        """``(lambda1, lambda2)``; multiplicities are ``(p, q)``."""
        return (self.sigma * self.a2 / self.a1, -self.sigma * self.a1 / self.a2)

    def curvature_multiset(self):
        lam1, lam2 = self.principal_curvatures
        return np.array([lam1] * self.p + [lam2] * self.q)

    def to_record(self):
        return {"p": self.p, "q": self.q, "a1": self.a1, "a2": self.a2,
                "sigma": self.sigma, "n": self.n}

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_record(cls, record):
        link = cls(int(record["p"]), int(record["q"]), float(record["a1"]),
                   float(record["a2"]), int(record["sigma"]))
        if "n" in record and int(record["n"]) != link.n:
            raise ValueError("record field n disagrees with p + q + 1")
        return link

    def swapped(self):
        """The same submanifold with the factors listed in the other order."""
        return CliffordLink(self.q, self.p, self.a2, self.a1, -self.sigma)


@dataclass(frozen=True)
class CurvatureInvariants:
    lambda1: float
    lambda2: float
    S1: float
    S2: float
    S3: float
    t1_eigs: tuple

    def trace_T1_A2(self, p, q):
        """``tr(T1 A^2)`` summed over the full multiset."""
        (t1, t2) = self.t1_eigs
        return p * t1 * self.lambda1**2 + q * t2 * self.lambda2**2


def invariants(link):
    """Principal curvatures, ``S_1..S_3`` and Newton-tensor eigenvalues."""
    lam1, lam2 = link.principal_curvatures
    ks = link.curvature_multiset()
    S = [elementary_symmetric(ks, r) for r in (1, 2, 3)]
    return CurvatureInvariants(lam1, lam2, S[0], S[1], S[2],
                               (S[0] - lam1, S[0] - lam2))


def solve_scalar_flat_radii(p, q):
    """Radii making ``S^p(a1) x S^q(a2)`` scalar-flat, oriented so ``S1 > 0``.

    With ``y = (a2/a1)**2`` the condition ``S2 = 0`` reads
    ``C(p,2) y^2 - p q y + C(q,2) = 0``.  Swapping the factors maps the roots
    to their reciprocals, so when both roots are positive the one with
    ``y >= 1`` is returned for ``p <= q`` and the one with ``y <= 1`` for
    ``p > q``: the larger radius sits on the higher-dimensional factor and
    ``(p, q)``, ``(q, p)`` give swapped copies of one link.

    Raises
    ------
    NoScalarFlatRadii
        no positive root (e.g. ``p = q = 1``).
    DegenerateLink
        ``S1 = 0`` for both orientations.
    """
    if p < 1 or q < 1:
        raise ValueError("need p, q >= 1")
    A, B, C = math.comb(p, 2), -p * q, math.comb(q, 2)
    if A == 0:
        roots = [C / (p * q)] if C > 0 else []
    else:
        disc = B * B - 4 * A * C
        if disc < 0:
            roots = []
        else:
            sq = math.sqrt(disc)
            # stable pair: q_ = -(B - sq)/2 has no cancellation since B < 0
            big = (-B + sq) / (2 * A)
            roots = [big, C / (A * big)] if big > 0 else []
    roots = sorted(y for y in roots if y > 0)
    if not roots:
        raise NoScalarFlatRadii(f"S^{p} x S^{q} admits no scalar-flat radii")
    if p <= q:
        y = roots[-1] if roots[-1] >= 1 else roots[0]
    else:
        y = roots[0] if roots[0] <= 1 else roots[-1]
    a1 = math.sqrt(1.0 / (1.0 + y))
    a2 = math.sqrt(y / (1.0 + y))
    s1_plus = p * a2 / a1 - q * a1 / a2
    if abs(s1_plus) < 1e-12:
        raise DegenerateLink(f"S1 vanishes on S^{p} x S^{q}")
    return CliffordLink(p, q, a1, a2, 1 if s1_plus > 0 else -1)
