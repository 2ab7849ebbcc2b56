import numpy as np
import pytest

from scalarflat.angular import AngularGrid
from scalarflat.errors import ForbiddenWeight
from scalarflat.spectrum import (ModeBasis, cached_spectrum, discrete_spectrum_oracle,
                                 enumerate_modes, indicial_roots, mode_eigenvalue,
                                 read_spectrum_csv, select_threshold, spectrum_csv)


def test_closed_form_link21(link21):
    for k in range(4):
        for l in range(4):
            assert mode_eigenvalue(link21, k, l) == pytest.approx(k * (k + 1) + 2 * l * l - 2, abs=1e-12)


def test_indicial_roots_complex():
    gm, gp = indicial_roots(4, -2.0)
    assert gp == pytest.approx(-0.5 + 1j * np.sqrt(7) / 2)
    assert gm == pytest.approx(np.conj(gp))
    gm, gp = indicial_roots(4, 8.0)
    assert gp == pytest.approx(2.372281323269, abs=1e-9)
    assert gp**2 + gp - 8 == pytest.approx(0, abs=1e-12)


def test_threshold_selection(link21, link44):
    s = select_threshold(link21, 4)
    assert s.m == pytest.approx(2.186140661634507, abs=1e-12)
    assert s.J == 11
    assert s.modes[s.J].label == (1, 2, "cos")
    assert s.modes[s.J].mu == pytest.approx(8.0)
    s44 = select_threshold(link44, 9)
    assert s44.J == 6 and 2 < s44.m < 2.2


def test_forbidden_weight(link21):
    with pytest.raises(ForbiddenWeight):
        select_threshold(link21, 4, m_requested=1.5)


def test_modes_sorted(link21):
    mus = [m.mu for m in enumerate_modes(link21, 4, 40)]
    assert mus == sorted(mus)
    assert mus[0] == pytest.approx(-2.0)


def test_basis_roundtrip(basis21):
    rng = np.random.default_rng(1)
    c = rng.standard_normal(len(basis21))
    assert np.allclose(basis21.analyze(basis21.synthesize(c)), c, atol=1e-12)


def test_discrete_oracle_converges(link21):
    exact = np.sort([m.mu for m in enumerate_modes(link21, 4, 6)])
    e = [np.abs(discrete_spectrum_oracle(link21, AngularGrid.for_link(link21, N), 6) - exact).max()
         for N in (33, 65)]
    assert e[1] < 0.01 and e[0] / e[1] > 3.5


def test_spectrum_cache(tmp_path, link21):
    a = cached_spectrum(link21, 4, 30, str(tmp_path))
    b = cached_spectrum(link21, 4, 30, str(tmp_path))
    assert spectrum_csv(a) == spectrum_csv(b)
    c = read_spectrum_csv(spectrum_csv(a), 4)
    assert [m.label for m in c] == [m.label for m in a]
    assert all(x.mu == y.mu for x, y in zip(a, c))
