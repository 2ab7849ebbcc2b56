import numpy as np
import pytest

from scalarflat.errors import MissingProfiles
from scalarflat.fields import ConeField, RadialGrid


def test_radial_grid():
    r = RadialGrid(1e-3, 65)
    assert r.t[0] == 1e-3 and r.t[-1] == 1.0
    assert np.allclose(np.diff(r.x), r.h)
    assert r.refined().h == pytest.approx(r.h / 2)
    with pytest.raises(ValueError):
        RadialGrid(2.0, 65)


def test_two_representations(basis21, radial65):
    f = ConeField.from_function(basis21, radial65, lambda t, a, b: t**2 * np.cos(a))
    with pytest.raises(MissingProfiles):
        f.require_profiles()
    g = f.spectral()
    assert np.allclose(g.values, f.values, atol=1e-12)


def test_arithmetic(basis21, radial65):
    f = ConeField.from_function(basis21, radial65, lambda t, a, b: t + 0 * a * b)
    h = 2 * f - f
    assert np.allclose(h.values, f.values)
    assert np.allclose((-f).values, -f.values)
