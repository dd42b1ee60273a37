"""Named reaction-diffusion scenarios for the 2x2 and 3x3 model systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .entropy import dissipation_formula, relative_entropy
from .equilibria import solve_positive_equilibrium
from .errors import FitError
from .grid import Grid1D
from .network import Network
from .networks import generalized_three_by_three, three_by_three, two_by_two
from .pde import PdeTrace, integrate_pde


@dataclass
class BoundsReport:
    """Two-sided bound check for the 2x2 system."""

    lower: float
    upper: float
    violations: int
    first_violation: tuple[float, int] | None
    times: np.ndarray
    l2_gap: np.ndarray
    decay_rate: float
    r_squared: float
    trace: PdeTrace = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.violations == 0


@dataclass
class LowerBoundReport:
    beta: float
    alpha: int
    violations: int
    first_violation: tuple[float, int] | None
    times: np.ndarray
    min_b: np.ndarray
    bound: np.ndarray
    trace: PdeTrace = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.min_b - self.bound))


@dataclass
class BoundaryConvergenceReport:
    times: np.ndarray
    gap_sq: np.ndarray
    exponent: float
    expected: float
    r_squared: float
    max_other: float
    trace: PdeTrace = field(repr=False)

    @property
    def relative_error(self) -> float:
        return abs(self.exponent - self.expected) / self.expected


@dataclass
class DegeneracyReport:
    deltas: np.ndarray
    E: np.ndarray
    D: np.ndarray
    E_limit: float

    @property
    def D_monotone(self) -> bool:
        return bool(np.all(np.diff(self.D) < 0))


def _fit_log(t, y, floor):
    keep = y > floor
    t, y = t[keep], y[keep]
    if t.size < 10:
        raise FitError("too few samples above the noise floor")
    res = linregress(t, np.log(y))
    return float(-res.slope), float(res.rvalue**2)


def experiment_2x2_bounds(grid0: Grid1D, t_end: float = 20.0, *, eps: float, upper: float,
                          net: Network | None = None, tol: float = 1e-10, dt_max: float = 1e-3,
                          fit_start: float = 0.5) -> BoundsReport:
    """Check ``eps^2 <= a, b <= upper`` on every cell at every step for the 2x2 system.

    Also records the L2 distance to ``(M/2, M/2)`` and fits its squared decay rate.
    """
    net = two_by_two() if net is None else net
    lo = eps**2
    if np.any(grid0.values < lo - tol) or np.any(grid0.values > upper + tol):
        raise ValueError("initial data violates the prescribed bounds")
    target = np.full(2, float(np.sum(grid0.means())) / 2.0)
    gap_list: list[float] = []
    first: list[tuple[float, int]] = []

    def observe(t, values):
        gap_list.append(float(np.sqrt(grid0.h * np.sum((values - target) ** 2))))
        if not first:
            bad = np.flatnonzero(((values < lo - tol) | (values > upper + tol)).any(axis=1))
            if bad.size:
                first.append((float(t), int(bad[0])))

    trace = integrate_pde(net, grid0, t_end, dt_max=dt_max, observer=observe)
    bad_rows = (trace.mins < lo - tol) | (trace.maxs > upper + tol)
    n_bad = int(bad_rows.any(axis=1).sum())
    gap = np.array(gap_list)
    try:
        rate, r2 = _fit_log(trace.times[trace.times >= fit_start], gap[trace.times >= fit_start] ** 2, 1e-24)
    except FitError:
        rate, r2 = np.nan, np.nan
    return BoundsReport(lo, upper, n_bad, first[0] if first else None, trace.times, gap, rate, r2, trace)


def experiment_3x3_lower_bound(b0: float | Grid1D = 1.0, t_end: float = 50.0, *, k: tuple[float, float, float] = (1.0, 1.0, 1.0),
                               alpha: int = 1, J: int = 128, a0=0.5, c0=0.5, tol: float = 1e-6,
                               dt_max: float = 5e-3) -> LowerBoundReport:
    """Check ``min_x b(x, t) >= (beta^-alpha + alpha (alpha+1) k3 t)^(-1/alpha)``.

    For ``alpha = 1`` this is ``1 / (1/beta + 2 k3 t)``.  ``b0`` is a constant
    or a full initial grid; ``beta = min b0``.
    """
    net = generalized_three_by_three(alpha, *k)
    if isinstance(b0, Grid1D):
        grid0 = b0
    else:
        grid0 = Grid1D.from_functions([a0, b0, c0], J)
    beta = float(grid0.values[:, 1].min())
    if not beta > 0:
        raise ValueError("b0 must be bounded below by a positive constant")
    trace = integrate_pde(net, grid0, t_end, dt_max=dt_max)
    bound = lower_bound_curve(trace.times, beta, alpha, k[2])
    min_b = trace.mins[:, 1]
    bad = np.flatnonzero(min_b < bound - tol)
    first = (float(trace.times[bad[0]]), int(np.argmin(trace.final.values[:, 1]))) if bad.size else None
    return LowerBoundReport(beta, alpha, int(bad.size), first, trace.times, min_b, bound, trace)


def lower_bound_curve(t, beta: float, alpha: int = 1, k3: float = 1.0) -> np.ndarray:
    """Solution of the comparison ODE ``b' = -(alpha+1) k3 b^(alpha+1)`` with ``b(0) = beta``."""
    t = np.asarray(t, dtype=float)
    return (beta ** (-alpha) + alpha * (alpha + 1) * k3 * t) ** (-1.0 / alpha)


def experiment_boundary_convergence(grid0: Grid1D | None = None, *, M: float = 1.0, amplitude: float = 0.3,
                                    d_c: float = 1.0, J: int = 256, t_end: float = 0.5, dt_max: float = 1e-4,
                                    k: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> BoundaryConvergenceReport:
    """3x3 system started with ``a = b = 0`` and ``c = M + amplitude cos(pi x)``.

    ``a`` and ``b`` stay zero, ``c`` solves the heat equation and
    ``||c - M||^2`` decays like ``exp(-2 d_c pi^2 t / L^2)``.
    """
    net = three_by_three(*k, d=(1.0, 1.0, d_c))
    if grid0 is None:
        grid0 = Grid1D.from_functions([0.0, 0.0, lambda x: M + amplitude * np.cos(np.pi * x)], J)
    L = grid0.length
    c_mean = float(grid0.values[:, 2].mean())
    gaps: list[float] = []

    def observe(t, values):
        gaps.append(grid0.h * float(np.sum((values[:, 2] - c_mean) ** 2)))

    trace = integrate_pde(net, grid0, t_end, dt_max=dt_max, observer=observe)
    gaps = np.array(gaps)
    expected = 2.0 * d_c * np.pi**2 / L**2
    if gaps[0] == 0.0:
        exponent, r2 = 0.0, 1.0
    else:
        exponent, r2 = _fit_log(trace.times, gaps, 1e-20 * gaps[0])
    max_other = float(np.max(np.abs(trace.maxs[:, :2])))
    return BoundaryConvergenceReport(trace.times, gaps, exponent, expected, r2, max_other, trace)


def boundary_degeneracy(M: float = 4.0, js=range(1, 7), k: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> DegeneracyReport:
    """Entropy and dissipation at homogeneous 3x3 states ``(delta, delta, M - 3 delta)``.

    As ``delta -> 0`` the dissipation vanishes while the entropy tends to the
    positive value ``a_inf + b_inf + Psi(M; c_inf)``.
    """
    net = three_by_three(*k)
    eq = solve_positive_equilibrium(net, None, [M]).c
    deltas = np.array([10.0 ** (-j) for j in js])
    states = np.column_stack([deltas, deltas, M - 3 * deltas])
    E = np.asarray(relative_entropy(states, eq))
    D = np.asarray(dissipation_formula(net, states, eq))
    limit = float(relative_entropy(np.array([0.0, 0.0, M]), eq))
    return DegeneracyReport(deltas, E, D, limit)
