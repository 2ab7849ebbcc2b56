import numpy as np
import pytest

from scalarflat.fields import ConeField, RadialGrid
from scalarflat.radial import (global_norm, harmonic_extension, high_mode_mask, iteration_norm,
                               profile_csv, slice_norm, solve_linear, solve_modes)


@pytest.mark.parametrize("mu,high,alpha,expected", [
    (2.0, True, 0.1, lambda t: t**3 / 10),
    (0.0, False, 0.0, lambda t: t**3 / 12),
    (2.0, True, 0.3, lambda t: t**3 / 10 + 0.2 * t),
])
def test_manufactured_modes(mu, high, alpha, expected):
    rad = RadialGrid(1e-3, 129)
    a = solve_modes(np.ones((rad.count, 1)), [mu], 4, [high], [alpha], rad, 0.0)[:, 0]
    assert np.max(np.abs(a - expected(rad.t))) < 1e-10


def test_power_forcing_low_mode():
    # a'' + a' - mu a = t^3 * t^-1 with mu = 0: a = t^2 / 6; cubic panels give O(h^4)
    errs = []
    for N in (65, 129):
        rad = RadialGrid(1e-3, N)
        a = solve_modes((1 / rad.t)[:, None], [0.0], 4, [False], [0.0], rad, 0.0)[:, 0]
        errs.append(np.max(np.abs(a - rad.t**2 / 6)))
    assert errs[1] < 1e-7 and errs[0] / errs[1] > 12


def test_harmonic_extension_boundary(basis21, sel21, radial65):
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(len(basis21))
    H = harmonic_extension(psi, basis21, sel21, radial65)
    high = high_mode_mask(basis21, sel21)
    assert np.allclose(H.profiles[-1, high], psi[high])
    assert np.all(H.profiles[:, ~high] == 0)


def test_solve_linear_reproduces_harmonic(basis21, sel21, radial65):
    psi = np.zeros(len(basis21))
    psi[sel21.J] = 1.0
    u, diag = solve_linear(ConeField.zeros(basis21, radial65), psi, sel21)
    H = harmonic_extension(psi, basis21, sel21, radial65)
    assert np.allclose(u.profiles, H.profiles, atol=1e-14)
    assert diag.boundary_error < 1e-14


def test_norms_positive_homogeneous(basis21, radial65, sel21):
    psi = np.zeros(len(basis21))
    psi[sel21.J] = 1.0
    H = harmonic_extension(psi, basis21, sel21, radial65)
    n1 = iteration_norm(H, sel21.m)
    n2 = iteration_norm(H * 3.0, sel21.m)
    assert n1 > 0 and n2 == pytest.approx(3 * n1)
    g = global_norm(slice_norm(H), radial65, sel21.m)
    assert g > 0


def test_slice_norm_of_single_mode(basis21, radial65):
    prof = np.zeros((radial65.count, len(basis21)))
    prof[:, 3] = 2.0
    f = ConeField(basis21, radial65, profiles=prof)
    assert np.allclose(slice_norm(f), 2.0 / basis21.S1, rtol=1e-10)


def test_profile_csv_precision(basis21, radial65):
    f = ConeField(basis21, radial65, profiles=np.full((radial65.count, len(basis21)), 1 / 3))
    text = profile_csv(f, modes=[basis21.modes[0].label])
    row = text.splitlines()[1].split(",")
    assert float(row[1]) == 1 / 3
