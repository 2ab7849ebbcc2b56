"""Radial grid and the two-representation field container on the truncated cone."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import MissingProfiles

__all__ = ["RadialGrid", "ConeField"]


@dataclass(frozen=True)
class RadialGrid:
    """Log-spaced nodes ``t_min = t_0 < ... < t_{N-1} = 1``."""

    t_min: float = 1e-3
    count: int = 257

    def __post_init__(self):
        if not 0.0 < self.t_min < 1.0:
            raise ValueError("t_min must lie in (0, 1)")
        if self.count < 9:
            raise ValueError("radial grid needs at least 9 nodes")

    @cached_property
    def x(self):
        x = np.linspace(np.log(self.t_min), 0.0, self.count)
        x[-1] = 0.0
        return x

    @cached_property
    def t(self):
        t = np.exp(self.x)
        t[0], t[-1] = self.t_min, 1.0
        return t

    @property
    def t_nodes(self):
        return self.t

    @property
    def h(self):
        return -np.log(self.t_min) / (self.count - 1)

    def refined(self):
        return RadialGrid(self.t_min, 2 * self.count - 1)

    def to_record(self):
        return {"t_min": self.t_min, "count": self.count}


class ConeField:
    """Scalar field on ``[t_min, 1] x M``.

    ``values`` has shape ``(Nt, n1, n2)``; ``profiles`` has shape
    ``(Nt, modes)`` and holds ``a_j(t)`` with ``u = sum_j a_j phi_j``.
    Whichever representation is missing is produced on demand.
    """

    def __init__(self, basis, radial: RadialGrid, values=None, profiles=None):
        if values is None and profiles is None:
            raise ValueError("need grid values or mode profiles")
        self.basis = basis
        self.radial = radial
        self._values = None if values is None else np.asarray(values, dtype=float)
        self._profiles = None if profiles is None else np.asarray(profiles, dtype=float)
        shape = (radial.count,) + basis.grid.shape
        if self._values is not None and self._values.shape != shape:
            raise ValueError(f"values shape {self._values.shape} != {shape}")
        if self._profiles is not None and self._profiles.shape != (radial.count, len(basis)):
            raise ValueError("profiles shape mismatch")

    @classmethod
    def zeros(cls, basis, radial):
        return cls(basis, radial, profiles=np.zeros((radial.count, len(basis))))

    @classmethod
    def from_function(cls, basis, radial, func):
        """``func(t, theta1, theta2)`` broadcast over the grid."""
        t = radial.t[:, None, None]
        th1 = basis.grid.theta1[None, :, None]
        th2 = basis.grid.theta2[None, None, :]
        vals = np.broadcast_to(func(t, th1, th2), (radial.count,) + basis.grid.shape)
        return cls(basis, radial, values=np.array(vals, dtype=float))

    @property
    def has_values(self):
        return self._values is not None

    @property
    def has_profiles(self):
        return self._profiles is not None

    @property
    def values(self):
        if self._values is None:
            self._values = self.basis.synthesize(self._profiles)
        return self._values

    @property
    def profiles(self):
        if self._profiles is None:
            self._profiles = self.basis.analyze(self._values)
        return self._profiles

    def require_profiles(self):
        if self._profiles is None:
            raise MissingProfiles("field carries no spectral representation")
        return self._profiles

    def spectral(self):
        """Copy holding only the mode profiles (band-limited projection)."""
        return ConeField(self.basis, self.radial, profiles=self.profiles.copy())

    def _combine(self, other, op):
        if isinstance(other, ConeField):
            if self.has_profiles and other.has_profiles:
                return ConeField(self.basis, self.radial, profiles=op(self._profiles, other._profiles))
            return ConeField(self.basis, self.radial, values=op(self.values, other.values))
        raise TypeError("ConeField arithmetic needs another ConeField")

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, s):
        s = float(s)
        return ConeField(self.basis, self.radial,
                         values=None if self._values is None else s * self._values,
                         profiles=None if self._profiles is None else s * self._profiles)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def boundary_coefficients(self):
        """Mode coefficients of ``u(1, .)``."""
        return self.profiles[-1]
