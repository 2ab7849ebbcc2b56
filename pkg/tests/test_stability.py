import math

import numpy as np
import pytest

from scalarflat.angular import AngularGrid
from scalarflat.errors import NotUnstable, ZeroDenominator
from scalarflat.fields import ConeField, RadialGrid
from scalarflat.link_geometry import solve_scalar_flat_radii
from scalarflat.spectrum import ModeBasis, enumerate_modes
from scalarflat.stability import (battery_fields, classify, cone_stability, dirichlet_eigenvalues,
                                  graph_form_battery, graph_s3_deviation, hardy_check,
                                  instability_witness, rayleigh_quotient, second_variation)


def test_golden_values(link21, link44):
    a, b = cone_stability(link21, 4), cone_stability(link44, 9)
    assert a.mu1 == pytest.approx(-2, abs=1e-12) and a.mu_M == pytest.approx(-7, abs=1e-12)
    assert b.mu1 == pytest.approx(-7, abs=1e-12) and b.mu_M == pytest.approx(2 / 9, abs=1e-12)
    assert a.classification == "not-1-stable" and b.classification == "strictly-1-stable"


def test_classification_rules():
    assert classify(0.0) == "1-stable-only"
    assert classify(1.0) == "strictly-1-stable"
    assert classify(-0.1) == "not-1-stable"


@pytest.mark.parametrize("pq", [(2, 3), (4, 4), (2, 5)])
def test_swap_invariance(pq):
    p, q = pq
    a = cone_stability(solve_scalar_flat_radii(p, q))
    b = cone_stability(solve_scalar_flat_radii(q, p))
    assert a.classification == b.classification and a.mu_M == pytest.approx(b.mu_M)


def test_mu1_is_lattice_minimum(link44):
    assert min(m.mu for m in enumerate_modes(link44, 9, 50)) == pytest.approx(cone_stability(link44).mu1)


def test_witness(link21):
    w = instability_witness(link21, 4)
    assert w.tau == pytest.approx(math.exp(-math.pi / math.sqrt(7)), abs=1e-12)
    assert w.sigma == pytest.approx(math.exp(-3 * math.pi / math.sqrt(7)), abs=1e-12)
    assert abs(w.quotient) < 5 * w.field.radial.h ** 2
    assert w.lowest_eigenvalue < 0


def test_witness_refuses_stable_cone(link44):
    with pytest.raises(NotUnstable):
        instability_witness(link44, 9)


def test_dirichlet_eigenvalue_matches_closed_form(link21):
    # lowest eigenvalue on (a, 1): (n-3)^2/4 + mu1 + (pi / ln(1/a))^2
    a = 0.01
    _, low = dirichlet_eigenvalues(link21, 4, a, 1.0, 800)
    exact = 0.25 - 2 + (math.pi / math.log(1 / a)) ** 2
    assert low.min() == pytest.approx(exact, abs=1e-4)


def test_rayleigh_scale_invariance_and_lower_bound(link44):
    basis = ModeBasis(link44, AngularGrid.for_link(link44, 9), 9)
    rad = RadialGrid(1e-3, 129)
    rng = np.random.default_rng(3)
    s = (rad.x - rad.x[0]) / (-rad.x[0])
    for _ in range(5):
        P = np.zeros((rad.count, len(basis)))
        P[:, :6] = np.sin(np.pi * np.outer(s, np.arange(1, 4))) @ rng.standard_normal((3, 6))
        u = ConeField(basis, rad, profiles=P)
        q = rayleigh_quotient(u, 1e-3, 1.0)
        assert rayleigh_quotient(u * 7.0, 1e-3, 1.0) == pytest.approx(q, rel=1e-12)
        assert q >= cone_stability(link44).mu_M * 36 / 4 - rad.h**2 * abs(q)


def test_zero_field_raises(link44):
    basis = ModeBasis(link44, AngularGrid.for_link(link44, 9), 9)
    rad = RadialGrid(1e-3, 33)
    with pytest.raises(ZeroDenominator):
        rayleigh_quotient(ConeField.zeros(basis, rad), 0.01, 0.5)


def test_integration_by_parts_identity(link44):
    basis = ModeBasis(link44, AngularGrid.for_link(link44, 33), 9)
    for i, f in enumerate(battery_fields(basis, RadialGrid(1e-3, 129), 6)):
        e, o = second_variation(f, form="energy"), second_variation(f, form="operator")
        assert o == pytest.approx(e, rel=2e-3), i


@pytest.mark.parametrize("which", ["21", "44"])
def test_hardy(which, link21, link44):
    r = hardy_check(link21 if which == "21" else link44, count=50, seed=1)
    assert r.holds and r.worst_ratio < 1


def test_graph_form_at_cone_matches_modal_quotient(link44):
    basis = ModeBasis(link44, AngularGrid.for_link(link44, 17), 9)
    rad = RadialGrid(1e-3, 65)
    zero = ConeField.zeros(basis, rad)
    forms = graph_form_battery(zero, count=6)
    modal = [rayleigh_quotient(f, 1e-3, 1.0) for f in battery_fields(basis, rad, 6)]
    assert np.allclose(forms, modal, rtol=2e-2)
    assert graph_s3_deviation(zero, 0.0) == 0.0
