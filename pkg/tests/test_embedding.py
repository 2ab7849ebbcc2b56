import numpy as np
import pytest

from scalarflat.angular import AngularGrid
from scalarflat.embedding import (embed_graph, graph_forms, residual_csv, scalar_curvature_field,
                                  shape_operator_fd, symmetric_functions_field, verdict_summary)
from scalarflat.errors import ImmersionFailure
from scalarflat.fields import RadialGrid
from scalarflat.link_geometry import invariants


@pytest.mark.parametrize("which", ["21", "44"])
def test_cone_calibration(which, link21, link44):
    L = link21 if which == "21" else link44
    rad = RadialGrid(1e-3, 65)
    grid = AngularGrid.for_link(L, 17)
    z = np.zeros((rad.count,) + grid.shape)
    curv = shape_operator_fd(embed_graph(L, z, grid, rad), base="analytic")
    inv = invariants(L)
    ref = np.sort([0.0] + [inv.lambda1] * L.p + [inv.lambda2] * L.q)
    t = rad.t[:, None, None, None]
    # the visible block is exact here; orbit curvatures still come from differences
    vis = np.sort([0.0, inv.lambda1, inv.lambda2])
    assert np.max(np.abs(t * curv.visible - vis)) < 1e-10
    assert np.max(np.abs(t * curv.principal() - ref)) < 2e-4
    S = symmetric_functions_field(curv)
    assert np.allclose(S[1], curv.S[1], rtol=0, atol=1e-9 * np.max(np.abs(curv.S[0]))**2)
    assert np.max(np.abs(rad.t[:, None, None] ** 2 * S[1])) < 1e-3


def test_fd_base_converges(link21):
    errs = []
    for nt, n1 in ((33, 17), (65, 33)):
        rad = RadialGrid(1e-2, nt)
        grid = AngularGrid.for_link(link21, n1)
        S2 = scalar_curvature_field(link21, np.zeros((nt,) + grid.shape), grid, rad, base="fd")
        errs.append(np.max(np.abs(rad.t[:, None, None] ** 2 * S2)[1:]))
    assert errs[0] / errs[1] > 3.5


def test_graph_of_translated_sphere_is_consistent(link21):
    # the chunked sweep must match a single-chunk evaluation
    rad = RadialGrid(1e-2, 41)
    grid = AngularGrid.for_link(link21, 17)
    T, A, B = np.meshgrid(rad.t, grid.theta1, grid.theta2, indexing="ij")
    u = 1e-2 * T**2 * np.cos(A) * np.cos(B)
    a = scalar_curvature_field(link21, u, grid, rad)
    b = scalar_curvature_field(link21, u, grid, rad, chunk=9)
    assert np.allclose(a, b, rtol=0, atol=1e-12 * np.max(np.abs(a)))
    f = graph_forms(link21, u, grid, rad)
    assert f.G.shape == (3, 3) + u.shape and np.all(f.density > 0)


def test_immersion_failure(link21):
    rad = RadialGrid(1e-2, 21)
    grid = AngularGrid.for_link(link21, 9)
    u = np.full((rad.count,) + grid.shape, 5.0)
    with pytest.raises(ImmersionFailure):
        embed_graph(link21, u, grid, rad)


def test_summary_and_csv(link21):
    rad = RadialGrid(1e-2, 11)
    grid = AngularGrid.for_link(link21, 9)
    S2 = np.zeros((rad.count,) + grid.shape)
    S2[0] = 1.0
    s = verdict_summary(S2, rad, grid)
    assert s["weighted_sup"] == 0 and s["tip_weighted_sup"] > 0
    text = residual_csv(S2, rad, grid)
    assert text.splitlines()[0] == "t,theta1,theta2,value"
    assert len(text.splitlines()) == 1 + S2.size
