import numpy as np
import pytest

from crnentropy.experiments import (
    boundary_degeneracy,
    experiment_2x2_bounds,
    experiment_3x3_lower_bound,
    experiment_boundary_convergence,
    lower_bound_curve,
)
from crnentropy.grid import Grid1D


def mixed(eps, J=128):
    lo = eps**2
    return Grid1D.from_functions([lambda x: lo + (2 - lo) * (x < 0.5), lambda x: 1 + 0.5 * np.cos(np.pi * x)], J)


def test_2x2_bounds_and_eps_trend():
    r = experiment_2x2_bounds(mixed(0.5), 20, eps=0.5, upper=2, dt_max=5e-3)
    assert r.ok and r.first_violation is None
    assert r.decay_rate > 0 and r.r_squared > 0.99
    assert r.l2_gap[-1] < 1e-5
    half = experiment_2x2_bounds(mixed(0.25), 20, eps=0.25, upper=2, dt_max=5e-3)
    assert half.ok
    assert 0 < half.decay_rate <= 1.05 * r.decay_rate


def test_2x2_bounds_trivial_case():
    r = experiment_2x2_bounds(Grid1D.constant([1.0, 1.0], 16), 1.0, eps=0.5, upper=2, dt_max=1e-2)
    assert r.ok
    assert np.max(r.l2_gap) == pytest.approx(0.0, abs=1e-15)


def test_2x2_bounds_reject_bad_initial_data():
    with pytest.raises(ValueError):
        experiment_2x2_bounds(Grid1D.constant([0.1, 1.0], 4), 1.0, eps=0.5, upper=2)


def test_lower_bound_curve():
    assert lower_bound_curve(0.0, 10.0) == 10.0
    np.testing.assert_allclose(lower_bound_curve([0, 1, 2], 1.0), [1, 1 / 3, 1 / 5])
    # alpha = 2: b' = -3 b^3
    t = np.linspace(0, 1, 2001)
    b = lower_bound_curve(t, 2.0, alpha=2)
    np.testing.assert_allclose(np.gradient(b, t, edge_order=2), -3 * b**3, rtol=1e-3)


@pytest.mark.slow
def test_3x3_lower_bound_alpha1():
    r = experiment_3x3_lower_bound(1.0, 50, J=128)
    assert r.ok, r.first_violation


def test_3x3_lower_bound_large_b0_and_alpha2():
    r = experiment_3x3_lower_bound(10.0, 2.0, J=32)
    assert r.ok and r.bound[0] == 10.0
    assert r.min_b[0] == 10.0
    r2 = experiment_3x3_lower_bound(1.0, 5.0, alpha=2, J=32)
    assert r2.ok


def test_boundary_convergence_and_dc_scaling():
    r = experiment_boundary_convergence(J=128, t_end=0.3)
    assert r.relative_error < 0.02
    assert r.max_other == 0.0
    r2 = experiment_boundary_convergence(J=128, t_end=0.15, d_c=2.0)
    assert r2.exponent == pytest.approx(2 * r.exponent, rel=0.02)


def test_boundary_convergence_constant():
    g = Grid1D.constant([0.0, 0.0, 1.0], 16)
    r = experiment_boundary_convergence(g, t_end=0.1, dt_max=1e-2)
    assert r.exponent == 0.0
    assert np.max(r.gap_sq) < 1e-28


def test_boundary_degeneracy():
    r = boundary_degeneracy()
    assert r.D_monotone
    assert r.D[-1] < 1e-4
    assert r.E[-1] == pytest.approx(4 * np.log(4) - 1, abs=1e-3)
    assert r.E_limit == pytest.approx(4 * np.log(4) - 1, rel=1e-12)
