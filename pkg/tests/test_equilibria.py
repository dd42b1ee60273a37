import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st
from scipy.optimize import fsolve

from crnentropy.equilibria import (
    boundary_equilibria,
    classify,
    classify_detailed_balance,
    complex_balance_residual,
    solve_cyclic_equilibrium,
    solve_positive_equilibrium,
)
from crnentropy.errors import NotComplexBalanced, SupportEnumerationTooLarge
from crnentropy.network import Network, Reaction, conservation_basis, reaction_vector
from crnentropy.networks import cyclic, three_by_three


def three_by_three_closed_form(k1, k2, k3, M):
    # equal fluxes k1 a = k2 b c = k3 b^2 and 2a + b + c = M give a quadratic in b
    qa, qb = 2 * k3 / k1, 1 + k3 / k2
    b = (-qb + np.sqrt(qb**2 + 4 * qa * M)) / (2 * qa)
    return np.array([k3 / k1 * b**2, b, k3 / k2 * b])


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.1, 20))
def test_reduced_closed_form_when_k2_equals_k3(k1, k2, M):
    b = (-k1 + np.sqrt(k1 * (k1 + 2 * k2 * M))) / (2 * k2)
    np.testing.assert_allclose(three_by_three_closed_form(k1, k2, k2, M)[1], b, rtol=1e-10)


def test_residual_signs_two_by_two(net2):
    np.testing.assert_allclose(complex_balance_residual(net2, [2.0, 1.0]), [-2.0, 2.0])
    np.testing.assert_allclose(complex_balance_residual(net2, [1.0, 1.0]), [0.0, 0.0])


def test_residual_zero_three_by_three(net3):
    np.testing.assert_allclose(complex_balance_residual(net3, [1.0, 1.0, 1.0]), 0.0, atol=1e-15)


def test_three_by_three_unit_mass_four(net3):
    eq = solve_positive_equilibrium(net3, conservation_basis(net3), [4.0])
    np.testing.assert_allclose(eq.c, [1.0, 1.0, 1.0], atol=1e-10)
    assert eq.kind == "complex_balance" and not eq.boundary


def test_three_by_three_mass_two(net3):
    eq = solve_positive_equilibrium(net3, conservation_basis(net3), [2.0])
    b = (-1 + np.sqrt(5)) / 2
    np.testing.assert_allclose(eq.c, [b**2, b, b], atol=1e-10)
    assert 2 * eq.c[0] + eq.c[1] + eq.c[2] == pytest.approx(2.0, abs=1e-12)


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.1, 20))
@example(4.0, 0.21875, 0.75, 1.0)  # start used to converge onto the boundary point (0, 0, M)
def test_three_by_three_matches_closed_form(k1, k2, k3, M):
    net = three_by_three(k1, k2, k3)
    eq = solve_positive_equilibrium(net, None, [M])
    np.testing.assert_allclose(eq.c, three_by_three_closed_form(k1, k2, k3, M), rtol=1e-9)
    flux = net.rates * np.array([eq.c[0], eq.c[1] * eq.c[2], eq.c[1] ** 2])
    assert np.max(np.abs(eq.residuals)) <= 1e-10 * (1 + flux.max())


@pytest.mark.parametrize("M", [0.5, 2.0, 7.0])
def test_two_by_two_equal_split(net2, M):
    eq = solve_positive_equilibrium(net2, None, [M])
    np.testing.assert_allclose(eq.c, [M / 2, M / 2], rtol=1e-12)
    assert eq.kind == "detailed_balance"


def test_mass_validation(net3):
    with pytest.raises(ValueError):
        solve_positive_equilibrium(net3, None, [0.0])
    with pytest.raises(ValueError):
        solve_positive_equilibrium(net3, None, [1.0, 2.0])


def test_not_complex_balanced():
    # A -> B, A -> C, B + C -> 2A : deficiency one; these rates admit no complex-balance point
    net = Network(
        ("A", "B", "C"),
        (
            Reaction((1, 0, 0), (0, 1, 0), 1.0),
            Reaction((0, 1, 0), (1, 0, 0), 1.0),
            Reaction((1, 0, 0), (0, 0, 1), 1.0),
            Reaction((0, 0, 1), (1, 0, 0), 1.0),
            Reaction((0, 1, 1), (2, 0, 0), 1.0),
        ),
    )
    with pytest.raises(NotComplexBalanced):
        solve_positive_equilibrium(net, None, [3.0])


def test_cyclic_symmetric():
    np.testing.assert_allclose(solve_cyclic_equilibrium([1, 1], [1, 1], 2.0).c, [1.0, 1.0], atol=1e-12)


def test_cyclic_quadratic_case():
    eq = solve_cyclic_equilibrium([2, 1], [1, 2], 1.0)
    np.testing.assert_allclose(eq.c, [1.0, 0.5], atol=1e-10)
    a1, a2 = eq.c
    assert a1**2 == pytest.approx(2 * a2, abs=1e-12)
    assert a1 / 2 + a2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scale", [0.1, 1.0, 8.0])
def test_cyclic_linear_proportions(scale):
    M = 7 / 8 * scale
    eq = solve_cyclic_equilibrium([1, 1, 1], [1, 2, 4], M)
    np.testing.assert_allclose(eq.c, scale * np.array([0.5, 0.25, 0.125]), rtol=1e-12)


@given(st.lists(st.integers(1, 3), min_size=2, max_size=5), st.data())
def test_cyclic_against_fsolve_and_general_solver(alphas, data):
    ks = data.draw(st.lists(st.floats(0.3, 3), min_size=len(alphas), max_size=len(alphas)))
    M = data.draw(st.floats(0.2, 5))
    eq = solve_cyclic_equilibrium(alphas, ks, M)
    a = np.array(alphas, float)
    flux = np.array(ks) * eq.c**a
    np.testing.assert_allclose(flux, flux[0], rtol=1e-9)
    assert np.sum(eq.c / a) == pytest.approx(M, rel=1e-12)
    # the general solver's basis row is (1/alpha_i) scaled to primitive integers
    basis = conservation_basis(cyclic(alphas, ks))
    scale = basis.Q[0, 0] * a[0]
    general = solve_positive_equilibrium(cyclic(alphas, ks), basis, [M * scale])
    np.testing.assert_allclose(general.c, eq.c, rtol=1e-8)


def test_cyclic_oracle_fsolve():
    alphas, ks, M = np.array([1.0, 2.0, 1.0]), np.array([1.0, 3.0, 0.5]), 2.5

    def F(z):
        a = np.abs(z)
        return [ks[0] * a[0] - ks[1] * a[1] ** 2, ks[1] * a[1] ** 2 - ks[2] * a[2], np.sum(a / alphas) - M]

    ref = np.abs(fsolve(F, [1.0, 1.0, 1.0], xtol=1e-14))
    np.testing.assert_allclose(solve_cyclic_equilibrium(alphas.astype(int), ks, M).c, ref, rtol=1e-10)


def test_cyclic_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_cyclic_equilibrium([0, 1], [1, 1], 1.0)
    with pytest.raises(ValueError):
        solve_cyclic_equilibrium([1, 1], [1, -1], 1.0)


def test_boundary_two_by_two(net2):
    pts = boundary_equilibria(net2, None, [3.0])
    assert any(np.allclose(p.c, [0.0, 3.0]) for p in pts)
    assert all(p.boundary for p in pts)


def test_boundary_three_by_three(net3):
    pts = boundary_equilibria(net3, None, [4.0])
    assert [tuple(p.c) for p in pts] == [(0.0, 0.0, 4.0)]


def test_boundary_cycle_empty(cycle3):
    assert boundary_equilibria(cycle3, None, [3.0]) == []


def test_boundary_zero_mass_includes_origin(net3):
    pts = boundary_equilibria(net3, None, [0.0])
    assert any(np.all(p.c == 0) for p in pts)


def test_support_cap():
    net = cyclic([1] * 13)
    with pytest.raises(SupportEnumerationTooLarge):
        boundary_equilibria(net, None, [1.0])


def test_detailed_balance_classification(net2, net3, cycle3):
    assert classify_detailed_balance(net2, solve_positive_equilibrium(net2, None, [2.0]))
    assert not classify_detailed_balance(net3, solve_positive_equilibrium(net3, None, [4.0]))
    assert not classify_detailed_balance(cycle3, solve_positive_equilibrium(cycle3, None, [3.0]))


def test_classification_lattice(bundled):
    basis = conservation_basis(bundled)
    eq = solve_positive_equilibrium(bundled, basis, np.full(basis.m, 3.0))
    kind = classify(bundled, eq.c)
    assert kind in ("detailed_balance", "complex_balance")
    np.testing.assert_allclose(reaction_vector(bundled, eq.c), 0.0, atol=1e-10)
    if kind == "detailed_balance":
        assert np.max(np.abs(eq.residuals)) < 1e-10
    assert np.max(np.abs(basis.Q @ eq.c - 3.0)) <= 1e-10 * 4


def test_classify_non_equilibrium(net2):
    assert classify(net2, [2.0, 1.0]) is None


def test_plain_equilibrium_not_complex_balanced():
    # A -> 2A, A + B -> B, B -> 0, 0 -> B : has R(c*) = 0 at a=1,b=1 without complex balance
    net = Network(
        ("A", "B"),
        (
            Reaction((1, 0), (2, 0), 1.0),
            Reaction((1, 1), (0, 1), 1.0),
            Reaction((0, 1), (0, 0), 1.0),
            Reaction((0, 0), (0, 1), 1.0),
        ),
    )
    np.testing.assert_allclose(reaction_vector(net, [1.0, 1.0]), 0.0)
    assert classify(net, [1.0, 1.0]) == "plain_equilibrium"
