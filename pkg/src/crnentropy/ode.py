"""Adaptive Dormand-Prince integration of ``c' = R(c)`` with entropy diagnostics."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from .entropy import dissipation_formula, dissipation_logform, relative_entropy
from .equilibria import solve_positive_equilibrium
from .errors import CrnError, FitError, NonFiniteState, StepSizeUnderflow
from .network import Network, conservation_basis, reaction_vector

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

FIT_FLOOR = 1e-14


@dataclass
class OdeTrace:
    """Accepted-step samples of an ODE run.

    ``D`` is the sum-of-Psi dissipation; ``D_logform`` is NaN wherever a
    component vanishes.  ``E`` and ``D`` are NaN when no positive equilibrium
    was available.
    """

    times: np.ndarray
    states: np.ndarray
    E: np.ndarray
    D: np.ndarray
    D_logform: np.ndarray
    mass_residual: np.ndarray
    c_inf: np.ndarray | None = None
    n_rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, dest=None) -> str:
        """CSV with header ``t,E,D,mass_residual,c_1..c_N``; also written to ``dest`` if given."""
        n = self.states.shape[1]
        cols = ["t", "E", "D", "mass_residual"] + [f"c_{i + 1}" for i in range(n)]
        data = np.column_stack([self.times, self.E, self.D, self.mass_residual, self.states])
        return write_csv(cols, data, dest)


def write_csv(columns, data, dest=None) -> str:
    """Format rows with 17 significant digits and LF line endings."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in np.atleast_2d(data):
        buf.write(",".join("%.17g" % v for v in row) + "\n")
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text, encoding="utf-8", newline="\n")
    return text


def _diagnostics(net, c, c_inf, Q, M):
    mres = float(np.max(np.abs(Q @ c - M), initial=0.0)) if Q.size else 0.0
    if c_inf is None:
        return np.nan, np.nan, np.nan, mres
    E = float(relative_entropy(c, c_inf))
    D = float(dissipation_formula(net, c, c_inf))
    Dl = float(dissipation_logform(net, c, c_inf)) if np.all(c > 0) else np.nan
    return E, D, Dl, mres


def _initial_step(f, y0, f0, rtol, atol, t_span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(((f(y1) - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_span)


def integrate_ode(net: Network, c0, t_end: float, *, c_inf=None, rtol: float = 1e-8, atol: float = 1e-10,
                  max_step: float | None = None, min_step: float = 1e-14, max_steps: int = 1_000_000) -> OdeTrace:
    """Integrate the mass-action system from ``c0`` to ``t_end``.

    Dormand-Prince 5(4) with standard error control.  A step that sends a
    component below ``-atol`` is rejected and halved; smaller undershoots are
    clamped to zero.  ``c_inf`` defaults to the positive equilibrium for the
    initial masses when one can be found.

    Raises:
        StepSizeUnderflow: the step fell below ``min_step``.
        NonFiniteState: a NaN or infinity appeared.
    """
    y = np.asarray(c0, dtype=float).copy()
    if y.shape != (net.n_species,):
        raise ValueError("initial state has the wrong length")
    if np.any(y < 0):
        raise ValueError("initial state must be nonnegative")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    basis = conservation_basis(net)
    Q = basis.Q
    M = Q @ y if basis.m else np.zeros(0)
    if c_inf is None:
        try:
            if basis.m == 0 or np.all(M > 0):
                c_inf = solve_positive_equilibrium(net, basis, M).c
        except CrnError:
            c_inf = None
    else:
        c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    max_step = t_end / 500 if max_step is None else max_step

    def f(v):
        return reaction_vector(net, v)

    t = 0.0
    times, states, rows = [0.0], [y.copy()], [_diagnostics(net, y, c_inf, Q, M)]
    k1 = f(y)
    h = min(_initial_step(f, y, k1, rtol, atol, t_end), max_step)
    rejected = 0
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            raise StepSizeUnderflow(f"step budget of {max_steps} exhausted at t={t:.6g}")
        h = min(h, t_end - t)
        if h < min_step and t_end - t > min_step:
            raise StepSizeUnderflow(f"step size {h:.3e} below floor at t={t:.6g}")
        K = [k1]
        for s in range(1, 7):
            ys = y + h * sum(a * k for a, k in zip(_A[s], K) if a != 0.0)
            K.append(f(ys))
        y_new = ys  # stage 7 evaluates at the 5th-order solution (FSAL)
        if not np.all(np.isfinite(y_new)):
            if h <= min_step:
                raise NonFiniteState(f"non-finite state at t={t:.6g}")
            h *= 0.25
            rejected += 1
            continue
        err = h * np.tensordot(_E, np.array(K), axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm > 1.0:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            rejected += 1
            continue
        if np.any(y_new < -atol):
            h *= 0.5
            rejected += 1
            continue
        steps += 1
        clamped = np.any(y_new < 0)
        y_new = np.maximum(y_new, 0.0)
        t = t + h
        y = y_new
        k1 = f(y) if clamped else K[6]
        times.append(t)
        states.append(y.copy())
        rows.append(_diagnostics(net, y, c_inf, Q, M))
        fac = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        h = min(h * fac, max_step)

    diag = np.array(rows, dtype=float)
    return OdeTrace(
        times=np.array(times),
        states=np.array(states),
        E=diag[:, 0],
        D=diag[:, 1],
        D_logform=diag[:, 2],
        mass_residual=diag[:, 3],
        c_inf=c_inf,
        n_rejected=rejected,
    )


def fit_decay_rate(trace, t_start: float = 0.0, t_stop: float | None = None, *, min_samples: int = 10,
                   floor: float = FIT_FLOOR) -> tuple[float, float]:
    """Least-squares slope of ``log E`` against ``t``; returns ``(rate, r_squared)``.

    ``trace`` is an :class:`OdeTrace` (or anything with ``times`` and ``E``) or a
    ``(times, E)`` pair.  The window starts at ``t_start`` and ends at ``t_stop``
    or at the first sample where ``E`` drops below ``floor``.

    Raises:
        FitError: fewer than ``min_samples`` usable samples.
    """
    if isinstance(trace, tuple):
        t, E = (np.asarray(v, dtype=float) for v in trace)
    else:
        t, E = np.asarray(trace.times, dtype=float), np.asarray(trace.E, dtype=float)
    mask = t >= t_start
    if t_stop is not None:
        mask &= t <= t_stop
    t, E = t[mask], E[mask]
    below = np.flatnonzero(~(E >= floor))
    if below.size:
        t, E = t[: below[0]], E[: below[0]]
    if t.size < min_samples:
        raise FitError(f"only {t.size} samples with E >= {floor:g} in the fit window (need {min_samples})")
    logE = np.log(E)
    if np.ptp(t) == 0:
        raise FitError("fit window has zero length")
    if np.ptp(logE) == 0:
        return 0.0, 1.0
    res = linregress(t, logE)
    return float(-res.slope), float(res.rvalue**2)


def ktilde_bound(c0, c_inf) -> float:
    """``2 (E(c0 | c_inf) + sum_i c_inf_i)``, a uniform bound on every component along the flow."""
    c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    return 2.0 * (float(relative_entropy(c0, c_inf)) + float(np.sum(c_inf)))


def check_Ktilde(trace, c_inf, tol: float = 1e-9) -> bool:  # noqa: N802
    """True when every sampled component stays below :func:`ktilde_bound` of the first state."""
    states = np.asarray(trace.states, dtype=float)
    bound = ktilde_bound(states[0], c_inf)
    return bool(np.all(states <= bound + tol))
