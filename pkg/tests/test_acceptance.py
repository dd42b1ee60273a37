"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see ``conftest.py``).
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from crnentropy.eed import quadratic_form_Lambda, rayleigh_quotient, verify_3x3_inequality, verify_finite_cycle_inequality
from crnentropy.entropy import dissipation_formula, dissipation_logform, relative_entropy
from crnentropy.equilibria import complex_balance_residual, solve_cyclic_equilibrium, solve_positive_equilibrium
from crnentropy.experiments import (
    boundary_degeneracy,
    experiment_2x2_bounds,
    experiment_3x3_lower_bound,
    experiment_boundary_convergence,
)
from crnentropy.grid import Grid1D
from crnentropy.network import conservation_basis, reaction_vector
from crnentropy.networks import cyclic, three_by_three, two_by_two
from crnentropy.ode import fit_decay_rate, integrate_ode

SYSTEMS = {"cycle3": cyclic([1, 1, 1]), "2x2": two_by_two(), "3x3": three_by_three()}


@pytest.fixture
def criterion(request):
    """Yield a dict for details; record PASS/FAIL with them once the test finishes."""
    n = request.node.get_closest_marker("criterion").args[0]
    info = {"detail": ""}
    yield info
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    ACCEPTANCE_LINES[n] = f"{status} criterion {n}: {request.node.get_closest_marker('criterion').args[1]}" + (
        f" ({info['detail']})" if info["detail"] else "")


def _proportional(row, target):
    row = np.asarray(row, dtype=float)
    target = np.asarray(target, dtype=float)
    return np.allclose(row / row[0], target / target[0], rtol=1e-12)


@pytest.mark.criterion(1, "dissipation identity on 10^4 random states per network")
def test_criterion_01_dissipation_identity(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for net in SYSTEMS.values():
        basis = conservation_basis(net)
        eq = solve_positive_equilibrium(net, basis, np.full(basis.m, 3.0)).c
        states = np.exp(rng.uniform(-4, 2, (10_000, net.n_species)))
        d1 = dissipation_formula(net, states, eq)
        d2 = dissipation_logform(net, states, eq)
        worst = max(worst, float(np.max(np.abs(d1 - d2) / (1 + d1))))
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"worst scaled gap {worst:.2e}, {elapsed:.2f} s"
    assert worst <= 1e-9
    assert elapsed < 5


@pytest.mark.criterion(2, "conservation laws match and annihilate R")
def test_criterion_02_conservation_laws(criterion):
    rng = np.random.default_rng(2)
    cases = [(two_by_two(), [1, 1]), (three_by_three(), [2, 1, 1])]
    for alphas in ([1, 1, 1], [1, 2, 1], [2, 1], [1, 1, 2, 3]):
        cases.append((cyclic(alphas), [1 / a for a in alphas]))
    worst = 0.0
    for net, expected in cases:
        Q = conservation_basis(net).Q
        assert Q.shape[0] == 1
        assert _proportional(Q[0], expected)
        states = rng.uniform(0, 5, (10_000, net.n_species))
        worst = max(worst, float(np.max(np.abs(reaction_vector(net, states) @ Q.T))))
    criterion["detail"] = f"max |Q R| {worst:.1e}"
    assert worst <= 1e-10


@pytest.mark.criterion(3, "equilibrium closed forms")
def test_criterion_03_equilibria(criterion):
    net = three_by_three()
    e4 = solve_positive_equilibrium(net, None, [4.0]).c
    e2 = solve_positive_equilibrium(net, None, [2.0]).c
    b = (-1 + np.sqrt(5)) / 2
    cyc = solve_cyclic_equilibrium([2, 1], [1.0, 2.0], 1.0).c
    errs = [np.max(np.abs(e4 - 1)), np.max(np.abs(e2 - [b * b, b, b])), np.max(np.abs(cyc - [1.0, 0.5]))]
    criterion["detail"] = "errors " + ", ".join(f"{e:.1e}" for e in errs)
    assert max(errs) <= 1e-10


@pytest.mark.criterion(4, "ODE convergence, entropy monotonicity and exponential tail")
def test_criterion_04_ode(criterion):
    rng = np.random.default_rng(4)
    worst_dE = worst_res = worst_mass = 0.0
    worst_r2 = 1.0
    for net in SYSTEMS.values():
        for _ in range(20):
            c0 = rng.uniform(0.1, 3.0, net.n_species)
            tr = integrate_ode(net, c0, 50)
            worst_dE = max(worst_dE, float(np.max(np.diff(tr.E))))
            worst_res = max(worst_res, float(np.max(np.abs(complex_balance_residual(net, tr.final)))))
            worst_mass = max(worst_mass, float(np.max(tr.mass_residual)))
            # tail: from the first time E has dropped by two decades
            t_tail = tr.times[np.argmax(tr.E <= 1e-2 * tr.E[0])]
            _, r2 = fit_decay_rate(tr, t_start=t_tail)
            worst_r2 = min(worst_r2, r2)
    criterion["detail"] = (f"max dE {worst_dE:.1e}, residual {worst_res:.1e}, "
                           f"mass {worst_mass:.1e}, min r2 {worst_r2:.4f}")
    assert worst_dE <= 1e-8
    assert worst_res <= 1e-8
    assert worst_mass <= 1e-8
    assert worst_r2 > 0.99


@pytest.mark.criterion(5, "quadratic form for 2x2 at M=2 equals 4 and the directional limit")
def test_criterion_05_quadratic_form(criterion):
    net = two_by_two()
    c_inf = solve_positive_equilibrium(net, None, [2.0]).c
    lam, mu = quadratic_form_Lambda(net, c_inf, return_vector=True)
    mu = mu / np.linalg.norm(mu)
    t = 1e-4
    errs = []
    for s in (1.0, -1.0):
        xi = c_inf + s * t * mu
        ratio = float(dissipation_formula(net, xi, c_inf) / relative_entropy(xi, c_inf))
        errs.append(abs(ratio - lam) / lam)
    assert rayleigh_quotient(net, c_inf, mu) == pytest.approx(lam, rel=1e-12)
    criterion["detail"] = f"Lambda {lam:.12g}, directional rel. error {max(errs):.1e}"
    assert abs(lam - 4.0) <= 1e-10
    assert max(errs) <= 1e-3


@pytest.mark.criterion(6, "finite cycle inequality, 10^5 samples per configuration")
def test_criterion_06_finite_cycle(criterion):
    t0 = time.perf_counter()
    parts = []
    for alphas in ([1, 1], [1, 2, 1], [1, 1, 2, 3]):
        rep = verify_finite_cycle_inequality(alphas, samples=100_000, seed=6)
        assert rep.samples == 100_000 and len(rep.ratios) == 100_000
        parts.append(rep)
    elapsed = time.perf_counter() - t0
    criterion["detail"] = "violations " + ", ".join(str(r.violations) for r in parts) + f", {elapsed:.2f} s"
    assert all(r.violations == 0 for r in parts)
    assert elapsed < 10


@pytest.mark.criterion(7, "3x3 inequality on the mass surface, 10^5 samples per epsilon")
def test_criterion_07_g6(criterion):
    reps = [verify_3x3_inequality(epsilon=eps, samples=100_000, seed=7) for eps in (0.25, 0.5, 1.0)]
    criterion["detail"] = "violations " + ", ".join(str(r.violations) for r in reps)
    assert reps[1].constant == pytest.approx(1 / 16)
    assert all(r.violations == 0 for r in reps)


@pytest.mark.criterion(8, "2x2 PDE: mass, entropy decay, L2 gap, bounds")
def test_criterion_08_pde_2x2(criterion):
    grid0 = Grid1D.from_functions([lambda x: 1 + 0.4 * np.sin(2 * np.pi * x),
                                   lambda x: 1 - 0.4 * np.sin(2 * np.pi * x)], 256)
    t0 = time.perf_counter()
    rep = experiment_2x2_bounds(grid0, 20.0, eps=0.5, upper=2.0)
    elapsed = time.perf_counter() - t0
    tr = rep.trace
    mass = float(np.max(tr.mass_residual))
    dE = float(np.max(np.diff(tr.E)))
    criterion["detail"] = (f"mass {mass:.1e}, max dE {dE:.1e}, gap {rep.l2_gap[-1]:.1e}, "
                           f"violations {rep.violations}, {elapsed:.1f} s")
    assert mass <= 1e-10
    assert dE <= 1e-12
    assert rep.l2_gap[-1] < 1e-5
    assert rep.violations == 0
    assert elapsed < 30


@pytest.mark.criterion(9, "3x3 lower bound 1/(1+2t)")
def test_criterion_09_lower_bound(criterion):
    rep = experiment_3x3_lower_bound(1.0, 50.0, J=128)
    criterion["detail"] = f"violations {rep.violations}, worst margin {rep.worst_margin:.2e}"
    np.testing.assert_allclose(rep.bound, 1 / (1 + 2 * rep.times), rtol=1e-14)
    assert rep.violations == 0


@pytest.mark.criterion(10, "boundary convergence exponent 2 pi^2")
def test_criterion_10_boundary_convergence(criterion):
    rep = experiment_boundary_convergence()
    criterion["detail"] = f"exponent {rep.exponent:.4f} vs {rep.expected:.4f}"
    assert rep.relative_error < 0.02


@pytest.mark.criterion(11, "boundary degeneracy of D with E -> 4 ln 4 - 1")
def test_criterion_11_degeneracy(criterion):
    rep = boundary_degeneracy(4.0, range(1, 7))
    target = 4 * np.log(4) - 1
    criterion["detail"] = f"E(1e-6) {rep.E[-1]:.6f}, D(1e-6) {rep.D[-1]:.1e}"
    assert rep.D_monotone
    assert rep.D[-1] < 1e-4
    assert abs(rep.E[-1] - target) <= 1e-3


@pytest.mark.criterion(12, "CLI reruns with a fixed seed give byte-identical CSV")
def test_criterion_12_determinism(criterion, tmp_path):
    commands = {
        "ode": ["ode", "builtin:3x3", "--c0", "1.2,0.8,0.8", "--t-end", "10"],
        "eed": ["eed", "finite-cycle", "--n", "3", "--samples", "20000", "--seed", "7"],
        "pde": ["pde", "builtin:2x2", "--init", "A=1+0.4*sin(2*pi*x)", "--init", "B=1-0.4*sin(2*pi*x)",
                "--J", "32", "--t-end", "0.2"],
    }
    same = []
    for name, argv in commands.items():
        outputs = []
        for k in range(2):
            dest = tmp_path / f"{name}{k}.csv"
            proc = subprocess.run([sys.executable, "-m", "crnentropy.cli", *argv, "--out", str(dest)],
                                  capture_output=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append(dest.read_bytes())
        same.append(outputs[0] == outputs[1] and len(outputs[0]) > 0)
    criterion["detail"] = ", ".join(f"{n} {'identical' if s else 'differs'}" for n, s in zip(commands, same))
    assert all(same)
