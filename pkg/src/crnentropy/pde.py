"""Finite-volume reaction-diffusion on an interval with zero-flux boundaries.

Each step is a Lie splitting: an explicit RK4 reaction step on every cell,
then one backward-Euler diffusion solve per species.  Both sub-steps conserve
the discrete integrals ``Q . (h sum_j c_j)`` up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .entropy import dissipation_formula, fisher_information, pde_entropy
from .equilibria import solve_positive_equilibrium
from .errors import CrnError, NonFiniteState, StepRejected
from .grid import Grid1D
from .network import Network, conservation_basis, reaction_vector
from .ode import write_csv

MAX_HALVINGS = 30


@dataclass
class PdeTrace:
    times: np.ndarray
    means: np.ndarray
    E: np.ndarray
    D: np.ndarray
    mass_residual: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    final: Grid1D
    c_inf: np.ndarray | None = None
    snapshots: list[tuple[float, Grid1D]] = field(default_factory=list)
    clamped_mass: float = 0.0
    n_steps: int = 0

    def to_csv(self, dest=None) -> str:
        """``t,E,D,mass_residual,c_1..c_N`` (spatial means) then ``min_i,max_i`` per species."""
        n = self.means.shape[1]
        cols = ["t", "E", "D", "mass_residual"] + [f"c_{i + 1}" for i in range(n)]
        cols += [f"{kind}_{i + 1}" for i in range(n) for kind in ("min", "max")]
        mm = np.empty((len(self.times), 2 * n))
        mm[:, 0::2] = self.mins
        mm[:, 1::2] = self.maxs
        data = np.column_stack([self.times, self.E, self.D, self.mass_residual, self.means, mm])
        return write_csv(cols, data, dest)

    def write_snapshots(self, directory) -> list[Path]:
        """One ``snapshot_t<k>.csv`` per stored snapshot with ``x,c_1..c_N`` rows."""
        directory = Path(directory)
        out = []
        for k, (_, grid) in enumerate(self.snapshots):
            cols = ["x"] + [f"c_{i + 1}" for i in range(grid.n_species)]
            path = directory / f"snapshot_t{k}.csv"
            write_csv(cols, np.column_stack([grid.centers, grid.values]), path)
            out.append(path)
        return out


class _DiffusionSolver:
    """Backward Euler ``(I - dt d L) c_new = c`` with the Neumann Laplacian ``L``."""

    def __init__(self, J: int, h: float, d: np.ndarray):
        self.J, self.h, self.d = J, h, np.asarray(d, dtype=float)
        self._dt = None
        self._bands = {}

    def _banded(self, dt):
        if dt != self._dt:
            self._bands = {}
            self._dt = dt
            for di in np.unique(self.d):
                r = dt * di / self.h**2
                ab = np.zeros((3, self.J))
                ab[0, 1:] = -r
                ab[2, :-1] = -r
                ab[1, :] = 1.0 + 2.0 * r
                ab[1, 0] = ab[1, -1] = 1.0 + r
                self._bands[di] = ab
        return self._bands

    def __call__(self, c: np.ndarray, dt: float) -> np.ndarray:
        out = np.empty_like(c)
        for di, ab in self._banded(dt).items():
            cols = np.flatnonzero(self.d == di)
            out[:, cols] = solve_banded((1, 1), ab, c[:, cols])
        # the exact solve preserves each column sum; remove the solver roundoff
        out += (c.sum(axis=0) - out.sum(axis=0)) / self.J
        return out


def _jacobian_norm(net: Network, c: np.ndarray) -> float:
    """Max over cells of the row-sum norm of a forward-difference ``dR/dc``."""
    base = reaction_vector(net, c)
    total = np.zeros_like(c)
    for j in range(c.shape[1]):
        step = 1e-6 * (1.0 + np.abs(c[:, j]))
        cp = c.copy()
        cp[:, j] += step
        total += np.abs((reaction_vector(net, cp) - base) / step[:, None])
    return float(np.max(total))


def _rk4(net: Network, c: np.ndarray, dt: float, proj: np.ndarray | None = None) -> np.ndarray:
    k1 = reaction_vector(net, c)
    k2 = reaction_vector(net, c + 0.5 * dt * k1)
    k3 = reaction_vector(net, c + 0.5 * dt * k2)
    k4 = reaction_vector(net, c + dt * k3)
    inc = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if proj is not None:
        # increments lie in ker Q exactly; drop the roundoff component
        inc = inc - inc @ proj
    return c + inc


def integrate_pde(net: Network, grid0: Grid1D, t_end: float, *, c_inf=None, dt_max: float = 1e-3,
                  snapshot_times=(), clamp_budget: float = 1e-8, neg_tol: float = 1e-12,
                  observer=None) -> PdeTrace:
    """Run the split scheme to ``t_end`` and record diagnostics after every step.

    The step is ``min(dt_max, 0.5 / ||dR/dc||_inf, t_end - t)`` with the
    Jacobian norm estimated by finite differences.  A reaction sub-step that
    dips below ``-neg_tol`` is retried with half the step; smaller undershoots
    are clamped to zero and their mass accumulated.  ``observer(t, values)``,
    if given, is called with the (J, N) field after every step and at ``t = 0``.

    Raises:
        StepRejected: the clamped mass exceeds ``clamp_budget`` times the total
            mass, or the reaction step cannot be made nonnegative.
        NonFiniteState: a NaN or infinity appeared.
    """
    if grid0.n_species != net.n_species:
        raise ValueError("grid and network species counts differ")
    if np.any(grid0.values < 0):
        raise ValueError("initial field must be nonnegative")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    basis = conservation_basis(net)
    Q = basis.Q
    c = grid0.values.copy()
    h, J = grid0.h, grid0.J
    M = Q @ (h * c.sum(axis=0)) if basis.m else np.zeros(0)
    if c_inf is None:
        try:
            mean_mass = M / grid0.length
            if basis.m == 0 or np.all(mean_mass > 0):
                c_inf = solve_positive_equilibrium(net, basis, mean_mass).c
        except CrnError:
            c_inf = None
    else:
        c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    proj = Q.T @ np.linalg.solve(Q @ Q.T, Q) if basis.m else None
    diffuse = _DiffusionSolver(J, h, net.diffusion_array)
    total_mass = max(float(np.sum(np.abs(M))), 1e-300) if basis.m else max(float(h * c.sum()), 1e-300)
    snap_queue = sorted(float(s) for s in snapshot_times)
    snapshots: list[tuple[float, Grid1D]] = []

    rows = []
    times = []

    def record(t):
        g = Grid1D(grid0.x_lo, grid0.x_hi, c)
        if c_inf is not None:
            E = pde_entropy(g, c_inf)
            D = float(np.dot(net.diffusion_array, fisher_information(g))) + float(
                h * np.sum(dissipation_formula(net, c, c_inf))
            )
        else:
            E = D = np.nan
        mres = float(np.max(np.abs(Q @ (h * c.sum(axis=0)) - M), initial=0.0)) if basis.m else 0.0
        if observer is not None:
            observer(t, c)
        times.append(t)
        rows.append((E, D, mres, c.mean(axis=0), c.min(axis=0), c.max(axis=0)))

    while snap_queue and snap_queue[0] <= 0.0:
        snapshots.append((snap_queue.pop(0), grid0.copy()))
    record(0.0)
    t = 0.0
    clamped = 0.0
    steps = 0
    while t < t_end * (1 - 1e-14):
        jn = _jacobian_norm(net, c)
        dt = min(dt_max, 0.5 / jn if jn > 0 else dt_max, t_end - t)
        for _ in range(MAX_HALVINGS):
            c_r = _rk4(net, c, dt, proj)
            if np.all(np.isfinite(c_r)) and np.min(c_r) >= -neg_tol:
                break
            dt *= 0.5
        else:
            raise StepRejected(f"reaction step could not be kept nonnegative at t={t:.6g}")
        c_new = diffuse(c_r, dt)
        if not np.all(np.isfinite(c_new)):
            raise NonFiniteState(f"non-finite field at t={t:.6g}")
        neg = c_new < 0
        if np.any(neg):
            clamped += float(h * np.sum(-c_new[neg]))
            if clamped > clamp_budget * total_mass:
                raise StepRejected(f"clamped mass {clamped:.3e} exceeds budget at t={t:.6g}")
            c_new[neg] = 0.0
        c = c_new
        t += dt
        steps += 1
        record(t)
        while snap_queue and snap_queue[0] <= t + 1e-12:
            snapshots.append((snap_queue.pop(0), Grid1D(grid0.x_lo, grid0.x_hi, c.copy())))

    return PdeTrace(
        times=np.array(times),
        means=np.array([r[3] for r in rows]),
        E=np.array([r[0] for r in rows]),
        D=np.array([r[1] for r in rows]),
        mass_residual=np.array([r[2] for r in rows]),
        mins=np.array([r[4] for r in rows]),
        maxs=np.array([r[5] for r in rows]),
        final=Grid1D(grid0.x_lo, grid0.x_hi, c),
        c_inf=c_inf,
        snapshots=snapshots,
        clamped_mass=clamped,
        n_steps=steps,
    )
