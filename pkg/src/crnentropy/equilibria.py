"""Complex-balance equilibria: residuals, positive and boundary solves, classification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NonConvergence, NotComplexBalanced, SupportEnumerationTooLarge
from .network import ConservationBasis, Network, conservation_basis, reaction_rates, reaction_vector
from .networks import cyclic

ABS_TOL = 1e-12
REL_TOL = 1e-10
MAX_ITER = 200
ZERO_THRESHOLD = 1e-9

KINDS = ("detailed_balance", "complex_balance", "plain_equilibrium")


@dataclass(frozen=True)
class EquilibriumPoint:
    c: np.ndarray
    kind: str
    boundary: bool
    residuals: np.ndarray
    mass_residual: float = 0.0
    iterations: int = field(default=0, compare=False)

    @property
    def location(self) -> str:
        return "boundary" if self.boundary else "interior"


def _incidence(net: Network) -> np.ndarray:
    """(C, R) matrix: +1 where complex is the target of reaction r, -1 where it is the source."""
    inc = np.zeros((len(net.complexes), net.n_reactions))
    r = np.arange(net.n_reactions)
    inc[net.target_index, r] += 1.0
    inc[net.source_index, r] -= 1.0
    return inc


def complex_balance_residual(net: Network, c) -> np.ndarray:
    """Per-complex inflow minus outflow at ``c``, one entry per distinct complex.

    Complexes are ordered as in ``net.complexes``.  All entries vanish exactly
    at a complex-balance equilibrium.
    """
    flux = reaction_rates(net, c)
    return flux @ _incidence(net).T


def _balance_tol(net: Network, c) -> float:
    flux = reaction_rates(net, c)
    return ABS_TOL + REL_TOL * (1.0 + float(np.max(np.abs(flux), initial=0.0)))


def _is_boundary(c) -> bool:
    c = np.asarray(c, dtype=float)
    scale = float(np.sum(np.abs(c)))
    return bool(np.min(c) <= ZERO_THRESHOLD * scale) if scale > 0 else True


def classify_detailed_balance(net: Network, eq, tol: float | None = None) -> bool:
    """True when every reaction has its reverse and the paired fluxes agree at ``eq``.

    ``eq`` may be an :class:`EquilibriumPoint` or a plain state.
    """
    c = eq.c if isinstance(eq, EquilibriumPoint) else np.asarray(eq, dtype=float)
    flux = reaction_rates(net, c)
    tol = _balance_tol(net, c) if tol is None else tol
    pairs: dict[tuple[int, int], float] = {}
    for r in range(net.n_reactions):
        key = (int(net.source_index[r]), int(net.target_index[r]))
        pairs[key] = pairs.get(key, 0.0) + float(flux[r])
    for (i, j), fwd in pairs.items():
        if (j, i) not in pairs:
            return False
        if abs(fwd - pairs[(j, i)]) > tol:
            return False
    return True


def classify(net: Network, c) -> str | None:
    """Strongest applicable kind for ``c`` or ``None`` when it is not an equilibrium."""
    c = np.asarray(c, dtype=float)
    tol = _balance_tol(net, c)
    res = complex_balance_residual(net, c)
    if np.max(np.abs(res), initial=0.0) <= tol:
        return "detailed_balance" if classify_detailed_balance(net, c, tol) else "complex_balance"
    if np.max(np.abs(reaction_vector(net, c)), initial=0.0) <= tol:
        return "plain_equilibrium"
    return None


def _make_point(net, basis, M, c, iterations=0) -> EquilibriumPoint:
    res = complex_balance_residual(net, c)
    mres = float(np.max(np.abs(basis.Q @ c - M), initial=0.0)) if basis.m else 0.0
    kind = classify(net, c) or "plain_equilibrium"
    return EquilibriumPoint(np.asarray(c, dtype=float), kind, _is_boundary(c), res, mres, iterations)


def _gauss_newton(net, basis, M, support, c_start, max_iter=MAX_ITER):
    """Damped Gauss-Newton on log-concentrations over the species in ``support``.

    Species outside the support are held at zero.  Returns ``(c, status, iterations)``
    with status ``converged``, ``stalled`` (no descent from a point with nonzero
    residual), ``diverged`` or ``maxiter``.
    """
    n = net.n_species
    support = np.asarray(support, dtype=int)
    inc = _incidence(net)
    Y = net.sources.astype(float)
    Q = basis.Q
    M = np.asarray(M, dtype=float)
    u = np.log(np.maximum(np.asarray(c_start, dtype=float)[support], 1e-300))

    def state(u_):
        c = np.zeros(n)
        c[support] = np.exp(u_)
        return c

    def residual(c):
        flux = reaction_rates(net, c)
        f = inc @ flux
        if basis.m:
            f = np.concatenate([f, Q @ c - M])
        return f, flux

    def converged(c, f):
        ncx = inc.shape[0]
        ok = np.max(np.abs(f[:ncx]), initial=0.0) <= _balance_tol(net, c)
        if basis.m:
            ok = ok and np.max(np.abs(f[ncx:])) <= ABS_TOL + REL_TOL * (1.0 + np.max(np.abs(M)))
        return bool(ok)

    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        c = state(u)
        f, flux = residual(c)
        polish = 0
        for it in range(1, max_iter + 1):
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(u))):
                return c, "diverged", it
            if converged(c, f):
                polish += 1
                if polish > 2:
                    return c, "converged", it
            jac = inc @ (flux[:, None] * Y)
            if basis.m:
                jac = np.vstack([jac, Q * c])
            jac = jac[:, support]
            step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
            big = np.max(np.abs(step), initial=0.0)
            if big > 2.0:
                step *= 2.0 / big
            norm0 = np.linalg.norm(f)
            t = 1.0
            while True:
                u_new = u + t * step
                c_new = state(u_new)
                f_new, flux_new = residual(c_new)
                if np.all(np.isfinite(f_new)) and (np.linalg.norm(f_new) < norm0 or polish):
                    break
                t *= 0.5
                if t < 1e-6:
                    return c, ("converged" if converged(c, f) else "stalled"), it
            if np.max(np.abs(u_new - u), initial=0.0) <= 1e-15 and not converged(c_new, f_new):
                return c_new, "stalled", it
            u, c, f, flux = u_new, c_new, f_new, flux_new
            if np.min(u, initial=0.0) < -700:
                return c, "diverged", it
        return c, ("converged" if converged(c, f) else "maxiter"), max_iter


def _initial_guess(basis: ConservationBasis, M, n: int) -> np.ndarray:
    """Uniform state scaled onto the mass constraint."""
    if basis.m == 0:
        return np.ones(n)
    ones = np.ones(n)
    scale = basis.Q @ ones
    M = np.asarray(M, dtype=float)
    good = scale > 0
    if np.any(good):
        s = float(np.mean(M[good] / scale[good]))
        if s > 0:
            return ones * s
    return ones


def solve_positive_equilibrium(net: Network, basis: ConservationBasis | None = None, M=None, *,
                               c_guess=None, n_restarts: int = 8, seed: int = 0) -> EquilibriumPoint:
    """Strictly positive complex-balance equilibrium with ``Q c = M``.

    Damped Gauss-Newton in log-concentrations on the stacked complex-balance and
    mass residuals, started from a uniform state (or ``c_guess``) with a few
    seeded random restarts.  Raises :class:`NotComplexBalanced` when the
    residuals stall away from zero and :class:`NonConvergence` otherwise.
    """
    basis = conservation_basis(net) if basis is None else basis
    M = np.zeros(0) if M is None else np.atleast_1d(np.asarray(M, dtype=float))
    if M.shape != (basis.m,):
        raise ValueError(f"mass vector must have {basis.m} entries")
    if basis.m and np.any(M <= 0):
        raise ValueError("mass vector must be strictly positive")
    n = net.n_species
    starts = [np.asarray(c_guess, dtype=float)] if c_guess is not None else []
    starts.append(_initial_guess(basis, M, n))
    rng = np.random.default_rng(seed)
    base = starts[-1]
    for _ in range(n_restarts):
        starts.append(base * np.exp(rng.uniform(-2.0, 2.0, size=n)))
    support = np.arange(n)
    stalls = []
    for c0 in starts:
        c, status, it = _gauss_newton(net, basis, M, support, c0)
        # a near-boundary solution also zeroes the residuals; it is not the positive one
        if status == "converged" and not _is_boundary(c):
            return _make_point(net, basis, M, c, it)
        if status == "stalled" and np.all(c > 0):
            stalls.append(float(np.linalg.norm(complex_balance_residual(net, c))))
    if len(stalls) == len(starts):
        raise NotComplexBalanced(
            f"balance residuals stall at {min(stalls):.3e} from every start; "
            "the network is not complex balanced for these rates"
        )
    raise NonConvergence("positive equilibrium solve did not converge")


def solve_cyclic_equilibrium(alphas: Sequence[int], ks: Sequence[float], M: float) -> EquilibriumPoint:
    """Positive equilibrium of the reaction cycle ``alpha_1 A1 -> ... -> alpha_N AN -> alpha_1 A1``.

    Solves ``f(a1) = M`` where ``f(z) = sum_i (k1 z^alpha_1 / k_i)^(1/alpha_i) / alpha_i``
    is strictly increasing with ``f(0) = 0``, by bracketing and Brent's method,
    then back-substitutes ``a_i = (k1 a1^alpha_1 / k_i)^(1/alpha_i)``.
    """
    alphas = np.asarray(alphas, dtype=float)
    ks = np.asarray(ks, dtype=float)
    if alphas.shape != ks.shape or alphas.ndim != 1 or len(alphas) < 2:
        raise ValueError("alphas and ks must be vectors of equal length >= 2")
    if np.any(alphas < 1) or np.any(alphas != np.round(alphas)):
        raise ValueError("alphas must be integers >= 1")
    if np.any(ks <= 0) or not M > 0:
        raise ValueError("rates and mass must be positive")

    def members(z):
        return (ks[0] * z ** alphas[0] / ks) ** (1.0 / alphas)

    def f(z):
        return float(np.sum(members(z) / alphas))

    lo, hi = 0.0, 1.0
    f_prev = f(lo)
    if f_prev != 0.0:
        raise NonConvergence("cycle mass function does not vanish at zero")
    for _ in range(2000):
        f_hi = f(hi)
        if not f_hi > f_prev:
            raise NonConvergence("cycle mass function is not increasing on the bracket")
        if f_hi >= M:
            break
        lo, f_prev, hi = hi, f_hi, hi * 2.0
    else:
        raise NonConvergence("could not bracket the cycle equilibrium")
    try:
        z = brentq(lambda x: f(x) - M, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NonConvergence(str(exc)) from exc
    # one Newton correction with the analytic derivative
    a = members(z)
    df = float(np.sum(a * alphas[0] / (alphas * z))) if z > 0 else 0.0
    if df > 0:
        z_new = z - (f(z) - M) / df
        if abs(f(z_new) - M) <= abs(f(z) - M):
            z = z_new
    c = members(z)
    net = cyclic(alphas.astype(int), ks)
    basis = _cycle_basis(alphas)
    return _make_point(net, basis, np.array([M]), c)


def _cycle_basis(alphas) -> ConservationBasis:
    return ConservationBasis((tuple(Fraction(1, int(a)) for a in alphas),), len(alphas))


def boundary_equilibria(net: Network, basis: ConservationBasis | None = None, M=None, *,
                        max_species: int = 12, seed: int = 0) -> list[EquilibriumPoint]:
    """Complex-balance equilibria with at least one zero component and ``Q c = M``.

    Every proper species support (subset of nonzero species) is tried in turn;
    the restricted problem is solved by Gauss-Newton in log-concentrations.
    Exponential in the species count, hence the ``max_species`` cap.
    """
    basis = conservation_basis(net) if basis is None else basis
    M = np.zeros(0) if M is None else np.atleast_1d(np.asarray(M, dtype=float))
    if M.shape != (basis.m,):
        raise ValueError(f"mass vector must have {basis.m} entries")
    if np.any(M < 0):
        raise ValueError("mass vector must be nonnegative")
    n = net.n_species
    if n > max_species:
        raise SupportEnumerationTooLarge(f"{n} species exceeds the support enumeration cap of {max_species}")
    rng = np.random.default_rng(seed)
    found: list[EquilibriumPoint] = []

    def add(c):
        c = np.where(np.abs(c) <= ZERO_THRESHOLD * max(1.0, float(np.sum(np.abs(c)))), 0.0, c)
        for p in found:
            if np.allclose(p.c, c, rtol=1e-7, atol=1e-9):
                return
        found.append(_make_point(net, basis, M, c))

    for size in range(0, n):
        for support in itertools.combinations(range(n), size):
            support = np.array(support, dtype=int)
            if size == 0:
                c = np.zeros(n)
                if basis.m == 0 or np.max(np.abs(M)) <= ABS_TOL:
                    add(c)
                continue
            Qs = basis.Q[:, support] if basis.m else np.zeros((0, size))
            guess = np.ones(n)
            if basis.m:
                sol, *_ = np.linalg.lstsq(Qs, M, rcond=None)
                if np.all(sol > 0):
                    guess[support] = sol
                else:
                    colsum = Qs.sum(axis=0)
                    if np.any(colsum > 0):
                        guess[support] = float(np.sum(M)) / max(float(np.sum(colsum)), 1e-300)
            starts = [guess]
            for _ in range(2):
                g = guess.copy()
                g[support] *= np.exp(rng.uniform(-1.0, 1.0, size=size))
                starts.append(g)
            for g in starts:
                c, status, _ = _gauss_newton(net, basis, M, support, g)
                if status != "converged":
                    continue
                scale = max(1.0, float(np.sum(c)))
                if np.all(c[support] > ZERO_THRESHOLD * scale):
                    add(c)
                    break
    return found
