import numpy as np
import pytest

from scalarflat.angular import AngularGrid
from scalarflat.errors import NonConvergence
from scalarflat.fields import RadialGrid
from scalarflat.radial import harmonic_extension, iteration_norm
from scalarflat.solver import SolverConfig, lambda_threshold_scan, mode_vector, picard_step, solve_graph


@pytest.fixture(scope="module")
def cfg21(link21, sel21):
    return SolverConfig(link21, sel21, RadialGrid(1e-3, 65), AngularGrid.for_link(link21, 17),
                        0.0, {(1, 2, "cos"): 1.0})


def test_lambda_zero_is_cone(cfg21):
    u, d = solve_graph(cfg21)
    assert d.converged and np.all(u.profiles == 0)


def test_converges_with_certificates(cfg21):
    cfg = cfg21.with_lambda(0.01)
    u, d = solve_graph(cfg)
    assert d.converged and d.iterations <= 30
    assert all(r < 1 for r in d.contraction_ratios)
    assert d.boundary_error < 1e-8
    U, info = picard_step(u, cfg)
    assert iteration_norm(U - u, cfg.selection.m) <= 2 * cfg.tol_fixed_point
    assert info["q_bound_ratio"] > 0


def test_first_iterate_is_harmonic_extension(cfg21):
    cfg = cfg21.with_lambda(0.01)
    H = harmonic_extension(cfg.lam * cfg.psi_coefficients, cfg.basis, cfg.selection, cfg.radial)
    d = iteration_norm(solve_graph(cfg)[0] - H, cfg.selection.m)
    assert 0 < d < 0.01 * iteration_norm(H, cfg.selection.m)


def test_nonconvergence_raises(cfg21):
    cfg = cfg21.with_lambda(0.01)
    cfg.max_iter = 1
    with pytest.raises(NonConvergence) as exc:
        solve_graph(cfg)
    assert exc.value.trace is not None


def test_threshold_scan_stops_at_failure(cfg21):
    rows, lam_hat = lambda_threshold_scan(cfg21, [0.01, 5.0, 10.0])
    assert rows[0]["converged"] and lam_hat == 0.01
    assert len(rows) == 2 and not rows[1]["converged"]


def test_scan_requires_ascending(cfg21):
    with pytest.raises(ValueError):
        lambda_threshold_scan(cfg21, [0.02, 0.01])


def test_mode_vector(cfg21):
    v = mode_vector(cfg21.basis, {(1, 2, "cos"): 2.0})
    assert v[cfg21.basis.index((1, 2, "cos"))] == 2.0 and v.sum() == 2.0
