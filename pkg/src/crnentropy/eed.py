"""Entropy-dissipation ratios: constrained infima, the near-equilibrium quadratic form,
and sampled checks of the finite-dimensional functional inequalities.

Sampling is split into fixed-size chunks, each seeded from its own child of a
``numpy.random.SeedSequence``; chunks can run on ``CRN_THREADS`` threads and
results do not depend on the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, eigh, null_space
from scipy.stats import qmc

from .entropy import dissipation_formula, psi, relative_entropy
from .equilibria import solve_cyclic_equilibrium, solve_positive_equilibrium
from .errors import InfeasibleConstraint
from .network import ConservationBasis, Network, conservation_basis, monomials
from .networks import three_by_three

CHUNK = 10_000
VIOLATION_SLACK = 1e-12


def n_threads() -> int:
    """Worker count from ``CRN_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CRN_THREADS", "1")))
    except ValueError:
        return 1


def _chunked(fn: Callable[[np.random.Generator, int], dict], samples: int, seed: int) -> list[dict]:
    sizes = [CHUNK] * (samples // CHUNK) + ([samples % CHUNK] if samples % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(s), n) for s, n in zip(seqs, sizes)]
    workers = min(n_threads(), len(jobs)) or 1
    if workers == 1:
        return [fn(rng, n) for rng, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# ----------------------------------------------------------------------------
# constraint sets and the constrained infimum of D/E


@dataclass(frozen=True)
class ConstraintSet:
    """States ``xi >= 0`` with ``Q xi = M`` and ``E(xi | c_inf) <= K``."""

    basis: ConservationBasis
    M: np.ndarray
    K: float
    c_inf: np.ndarray

    def contains(self, xi, tol: float = 1e-9) -> bool:
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0):
            return False
        if self.basis.m and np.max(np.abs(self.basis.Q @ xi - self.M)) > tol * (1 + np.max(np.abs(self.M))):
            return False
        return float(relative_entropy(xi, self.c_inf)) <= self.K + tol


@dataclass
class LambdaEstimate:
    lambda_lo: float
    witness: np.ndarray
    Lambda_quadratic: float
    n_feasible: int
    n_drawn: int


def _upper_from_entropy(c_inf: np.ndarray, K: float) -> np.ndarray:
    """Largest ``x`` with ``Psi(x; c_inf_i) <= K`` per component (bisection on a monotone branch)."""
    hi = np.maximum(c_inf, 1.0) * 2.0
    while np.any(psi(hi, c_inf) < K):
        hi = np.where(psi(hi, c_inf) < K, hi * 2.0, hi)
    lo = c_inf.copy()
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = psi(mid, c_inf) <= K
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def _dissipation_ratio(net, c_inf, xi):
    E = relative_entropy(xi, c_inf)
    D = dissipation_formula(net, xi, c_inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(E > 0, D / E, np.inf)


def estimate_lambda_ode(net: Network, c_inf, cset: ConstraintSet, budget: int = 4096, *, seed: int = 0,
                        exclusion: float = 1e-6, n_starts: int = 5, max_iter: int = 200) -> LambdaEstimate:
    """Smallest sampled ``D(xi) / E(xi | c_inf)`` over ``cset``.

    Latin-hypercube points in the entropy bounding box are projected onto the
    affine slice ``Q xi = M``; infeasible points are discarded.  The best
    ``n_starts`` points then seed a projected descent with central-difference
    gradients in the slice coordinates.  A ball of radius ``exclusion`` around
    ``c_inf`` is excluded since the ratio there is governed by
    :func:`quadratic_form_Lambda`.

    Raises:
        InfeasibleConstraint: no sampled point was feasible.
    """
    c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    n = net.n_species
    Q = cset.basis.Q
    M = np.asarray(cset.M, dtype=float)
    Z = null_space(Q) if cset.basis.m else np.eye(n)
    upper = _upper_from_entropy(c_inf, cset.K)
    pts = qmc.LatinHypercube(d=n, seed=np.random.default_rng(seed)).random(budget) * upper
    if cset.basis.m:
        # orthogonal projection onto {Q xi = M}
        corr = (pts @ Q.T - M) @ np.linalg.solve(Q @ Q.T, Q)
        pts = pts - corr
    E = relative_entropy(np.maximum(pts, 0.0), c_inf)
    dist = np.linalg.norm(pts - c_inf, axis=1)
    ok = np.all(pts >= 0, axis=1) & (E <= cset.K) & (dist > exclusion)
    feas = pts[ok]
    if feas.shape[0] == 0:
        raise InfeasibleConstraint(f"no feasible point among {budget} samples")
    ratios = _dissipation_ratio(net, c_inf, feas)
    order = np.argsort(ratios, kind="stable")
    best_val = float(ratios[order[0]])
    best_xi = feas[order[0]].copy()

    def feasible(xi):
        return (np.all(xi >= 0) and float(relative_entropy(xi, c_inf)) <= cset.K
                and np.linalg.norm(xi - c_inf) > exclusion)

    def objective(theta):
        xi = c_inf + Z @ theta
        if not feasible(xi):
            return np.inf
        return float(_dissipation_ratio(net, c_inf, xi))

    for idx in order[:n_starts]:
        theta = Z.T @ (feas[idx] - c_inf)
        val = objective(theta)
        step = 0.1 * float(np.max(upper))
        for _ in range(max_iter):
            g = np.zeros_like(theta)
            for j in range(theta.size):
                hj = 1e-6 * (1.0 + abs(theta[j]))
                e = np.zeros_like(theta)
                e[j] = hj
                fp, fm = objective(theta + e), objective(theta - e)
                if np.isfinite(fp) and np.isfinite(fm):
                    g[j] = (fp - fm) / (2 * hj)
                elif np.isfinite(fp):
                    g[j] = (fp - val) / hj
                elif np.isfinite(fm):
                    g[j] = (val - fm) / hj
            gn = np.linalg.norm(g)
            if gn == 0 or not np.isfinite(gn):
                break
            improved = False
            t = step
            while t > 1e-12:
                cand = theta - t * g / gn
                cv = objective(cand)
                if cv < val:
                    theta, val, improved = cand, cv, True
                    step = min(2 * t, float(np.max(upper)))
                    break
                t *= 0.5
            if not improved:
                break
        if val < best_val:
            best_val = val
            best_xi = c_inf + Z @ theta
    lam_q = quadratic_form_Lambda(net, c_inf, cset.basis)
    return LambdaEstimate(best_val, best_xi, lam_q, int(feas.shape[0]), budget)


# ----------------------------------------------------------------------------
# near-equilibrium quadratic form


def _pencil(net: Network, c_inf: np.ndarray, weighted: bool):
    V = (net.sources - net.targets) / c_inf
    w = net.rates * (monomials(net.sources, c_inf) if weighted else 1.0)
    A = (V.T * w) @ V
    B = np.diag(1.0 / c_inf)
    return A, B


def mass_gram_is_positive_definite(basis: ConservationBasis, c_inf) -> bool:
    """Cholesky test of ``Q diag(c_inf) Q^T``."""
    if basis.m == 0:
        return True
    G = basis.Q @ np.diag(np.asarray(c_inf, dtype=float)) @ basis.Q.T
    try:
        cho_factor(G)
    except np.linalg.LinAlgError:
        return False
    return True


def rayleigh_quotient(net: Network, c_inf, mu, *, weighted: bool = True) -> float:
    """``mu^T A mu / mu^T B mu`` for the pencil of :func:`quadratic_form_Lambda`."""
    c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    A, B = _pencil(net, c_inf, weighted)
    mu = np.asarray(mu, dtype=float)
    return float(mu @ A @ mu / (mu @ B @ mu))


def quadratic_form_Lambda(net: Network, c_inf, basis: ConservationBasis | None = None, *,  # noqa: N802
                          weighted: bool = True, return_vector: bool = False):
    """Smallest generalized eigenvalue of the second-order expansion of ``D / E`` at ``c_inf``.

    Numerator ``sum_r w_r ((y_r - y'_r) . (mu / c_inf))^2`` and denominator
    ``sum_i mu_i^2 / c_inf_i``, minimized over ``Q mu = 0``.  With
    ``weighted=True`` (default) ``w_r = k_r c_inf^y_r``, which is the exact
    limit of ``D / E``; ``weighted=False`` uses ``w_r = k_r``.
    """
    c_inf = np.asarray(getattr(c_inf, "c", c_inf), dtype=float)
    if np.any(~(c_inf > 0)):
        raise ValueError("c_inf must be strictly positive")
    basis = conservation_basis(net) if basis is None else basis
    A, B = _pencil(net, c_inf, weighted)
    Z = null_space(basis.Q) if basis.m else np.eye(net.n_species)
    if Z.shape[1] == 0:
        raise ValueError("conservation laws leave no admissible direction")
    vals, vecs = eigh(Z.T @ A @ Z, Z.T @ B @ Z)
    lam = float(vals[0])
    if return_vector:
        return lam, Z @ vecs[:, 0]
    return lam


def lambda1_lsi(net: Network, length: float = 1.0, c_lsi: float | None = None) -> float:
    """Diffusive rate ``0.5 * C_LSI * min_i d_i``; ``C_LSI`` defaults to the Poincare surrogate ``pi^2 / L^2``."""
    c_lsi = np.pi**2 / length**2 if c_lsi is None else c_lsi
    return 0.5 * c_lsi * float(np.min(net.diffusion_array))


# ----------------------------------------------------------------------------
# sampled inequality suites


@dataclass
class InequalityReport:
    name: str
    samples: int
    violations: int
    min_ratio: float
    argmin: np.ndarray
    constant: float
    redraws: int = 0
    ratios: np.ndarray = field(default=None, repr=False)
    cases: np.ndarray = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_csv(self, dest=None) -> str:
        """``sample_id,ratio,case`` rows; case is empty when not classified."""
        lines = ["sample_id,ratio,case"]
        cases = self.cases if self.cases is not None else [""] * len(self.ratios)
        for i, (r, c) in enumerate(zip(self.ratios, cases)):
            lines.append(f"{i},{'%.17g' % r},{c}")
        text = "\n".join(lines) + "\n"
        if dest is not None:
            if hasattr(dest, "write"):
                dest.write(text)
            else:
                with open(dest, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
        return text

    def summary(self) -> str:
        return f"{self.name}: samples: {self.samples}, violations: {self.violations}, min_ratio: {self.min_ratio:.6g}"


def _draw_mu(rng: np.random.Generator, shape) -> np.ndarray:
    """Perturbations in ``[-1, inf)`` mixing tiny, moderate and large magnitudes."""
    kind = rng.integers(0, 4, size=shape)
    sign = rng.choice([-1.0, 1.0], size=shape)
    small = sign * 10.0 ** rng.uniform(-6, -1, size=shape)
    moderate = rng.uniform(-1.0, 1.0, size=shape)
    large = 10.0 ** rng.uniform(0, 1.5, size=shape) - 1.0
    edge = -1.0 + 10.0 ** rng.uniform(-8, -1, size=shape)
    mu = np.choose(kind, [small, moderate, large, edge])
    return np.maximum(mu, -1.0)


def _merge(parts: list[dict], name: str, constant: float, samples: int, extra=None) -> InequalityReport:
    ratios = np.concatenate([p["ratios"] for p in parts])
    cases = np.concatenate([p["cases"] for p in parts]) if "cases" in parts[0] else None
    mus = np.concatenate([p["mu"] for p in parts])
    violations = int(sum(p["violations"] for p in parts))
    redraws = int(sum(p.get("redraws", 0) for p in parts))
    finite = np.where(np.isfinite(ratios), ratios, np.inf)
    i = int(np.argmin(finite)) if ratios.size else 0
    return InequalityReport(name, samples, violations, float(finite[i]) if ratios.size else np.inf,
                            mus[i] if ratios.size else np.zeros(0), constant, redraws, ratios, cases, extra or {})


def finite_cycle_lhs(alphas, mu) -> np.ndarray:
    """``sum_i ((1+mu_i)^alpha_i - (1+mu_{i+1})^alpha_{i+1})^2`` with cyclic indexing."""
    p = (1.0 + np.asarray(mu, dtype=float)) ** np.asarray(alphas, dtype=float)
    return np.sum((p - np.roll(p, -1, axis=-1)) ** 2, axis=-1)


def verify_finite_cycle_inequality(alphas: Sequence[int], A_inf=None, samples: int = 100_000, *,  # noqa: N803
                                   seed: int = 0) -> InequalityReport:
    """Sample the cycle inequality ``LHS >= N^-N sum mu_i^2``.

    Draws ``mu`` with every ``mu_i >= -1`` and enforces
    ``sum_i A_inf_i^2 (mu_i^2 + 2 mu_i) / alpha_i = 0`` by solving for one
    randomly chosen coordinate (taking the root with ``mu_j >= -1``).  Draws
    without a real root are redrawn and counted.
    """
    alphas = np.asarray(alphas, dtype=float)
    N = alphas.size
    A_inf = np.ones(N) if A_inf is None else np.asarray(A_inf, dtype=float)
    w = A_inf**2 / alphas
    const = float(N) ** (-N)

    def run(rng, n):
        out = np.empty((0, N))
        redraws = 0
        while out.shape[0] < n:
            need = n - out.shape[0]
            mu = _draw_mu(rng, (need, N))
            j = rng.integers(0, N, size=need)
            q = (1.0 + mu) ** 2 - 1.0
            q[np.arange(need), j] = 0.0
            rhs = 1.0 - (q @ w) / w[j]
            good = rhs >= 0
            mu[np.arange(need), j] = np.sqrt(np.where(good, rhs, 0.0)) - 1.0
            redraws += int(np.sum(~good))
            out = np.vstack([out, mu[good]])
        lhs = finite_cycle_lhs(alphas, out)
        sq = np.sum(out**2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(sq > 0, lhs / sq, np.inf)
        viol = int(np.sum(lhs < const * sq - VIOLATION_SLACK))
        return {"ratios": ratio, "mu": out, "violations": viol, "redraws": redraws}

    parts = _chunked(run, samples, seed)
    return _merge(parts, f"finite-cycle N={N}", const, samples)


def g6_lhs(mu) -> np.ndarray:
    """Left-hand side of the 3x3 finite-dimensional inequality in ``(mu_A, mu_B, mu_C)``."""
    mu = np.asarray(mu, dtype=float)
    a, b, c = 1.0 + mu[..., 0], 1.0 + mu[..., 1], 1.0 + mu[..., 2]
    return (a - b**2) ** 2 + b**2 * (mu[..., 1] - mu[..., 2]) ** 2 + (b * c - a) ** 2


def g6_case(mu) -> np.ndarray:
    """Proof case: ``I`` when mu_A, mu_B differ in sign, ``II`` when both >= 0, ``III`` when both <= 0."""
    mu = np.asarray(mu, dtype=float)
    ma, mb = mu[..., 0], mu[..., 1]
    return np.where(ma * mb < 0, "I", np.where((ma >= 0) & (mb >= 0), "II", "III"))


def verify_3x3_inequality(k=(1.0, 1.0, 1.0), M: float = 4.0, epsilon: float = 0.5, samples: int = 100_000, *,
                          seed: int = 0) -> InequalityReport:
    """Sample the 3x3 inequality ``LHS >= K5 |mu|^2`` on the mass surface.

    ``K5 = min(eps^2 / b_inf, 1) / 4``.  Samples satisfy
    ``2 a_inf mu_A(mu_A+2) + b_inf mu_B(mu_B+2) + c_inf mu_C(mu_C+2) = 0``,
    every ``mu >= -1`` and ``(1+mu_B)^2 >= eps^2 / b_inf``; ``mu_A`` or ``mu_C``
    is solved from the constraint.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    eq = solve_positive_equilibrium(three_by_three(*k), None, [M]).c
    wts = np.array([2 * eq[0], eq[1], eq[2]])
    b_floor = epsilon / np.sqrt(eq[1]) - 1.0  # lower limit for mu_B
    K5 = 0.25 * min(epsilon**2 / eq[1], 1.0)

    def run(rng, n):
        out = np.empty((0, 3))
        redraws = 0
        while out.shape[0] < n:
            need = n - out.shape[0]
            mu = _draw_mu(rng, (need, 3))
            low = mu[:, 1] < b_floor
            mu[low, 1] = b_floor + 10.0 ** rng.uniform(-8, 0, size=int(low.sum()))
            j = np.where(rng.random(need) < 0.5, 0, 2)
            q = (1.0 + mu) ** 2 - 1.0
            q[np.arange(need), j] = 0.0
            rhs = 1.0 - (q @ wts) / wts[j]
            good = rhs >= 0
            mu[np.arange(need), j] = np.sqrt(np.where(good, rhs, 0.0)) - 1.0
            redraws += int(np.sum(~good))
            out = np.vstack([out, mu[good]])
        lhs = g6_lhs(out)
        sq = np.sum(out**2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(sq > 0, lhs / sq, np.inf)
        viol = int(np.sum(lhs < K5 * sq - VIOLATION_SLACK))
        return {"ratios": ratio, "mu": out, "violations": viol, "redraws": redraws, "cases": g6_case(out)}

    parts = _chunked(run, samples, seed)
    rep = _merge(parts, f"g6 eps={epsilon:g}", K5, samples, {"c_inf": eq})
    return rep


def k2_constant(alphas, a_inf, M: float) -> float:
    """``max_i Psi(M alpha_i; a_inf_i) / (sqrt(M alpha_i) - sqrt(a_inf_i))^2``."""
    alphas = np.asarray(alphas, dtype=float)
    a_inf = np.asarray(a_inf, dtype=float)
    x = M * alphas
    return float(np.max(psi(x, a_inf) / (np.sqrt(x) - np.sqrt(a_inf)) ** 2))


def verify_averaged_cyclic_inequality(alphas: Sequence[int], ks: Sequence[float], M: float, samples: int = 100_000,
                                      *, seed: int = 0) -> InequalityReport:
    """Sample homogeneous cycle states ``a`` with ``sum_i a_i / alpha_i = M``.

    With ``A_i = sqrt(a_i)`` the reported ratio is
    ``sum_i ((A_i/A_inf_i)^alpha_i - (A_{i+1}/A_inf_{i+1})^alpha_{i+1})^2 / sum_i (A_i - A_inf_i)^2``;
    its sampled minimum is ``K3_sampled``.  ``extra`` also carries the explicit
    ``K2`` and the number of samples breaking ``E(a | a_inf) <= K2 sum_i (A_i - A_inf_i)^2``
    (counted as violations).
    """
    alphas = np.asarray(alphas, dtype=float)
    N = alphas.size
    a_inf = solve_cyclic_equilibrium(alphas.astype(int), ks, M).c
    A_inf = np.sqrt(a_inf)
    K2 = k2_constant(alphas, a_inf, M)

    def run(rng, n):
        w = rng.dirichlet(np.full(N, 0.5), size=n)
        # mix in states close to equilibrium
        near = rng.random(n) < 0.3
        w_inf = a_inf / alphas / M
        scale = 10.0 ** rng.uniform(-6, 0, size=(n, 1))
        w = np.where(near[:, None], (1 - scale) * w_inf + scale * w, w)
        a = w * alphas * M
        A = np.sqrt(a)
        p = (A / A_inf) ** alphas
        lhs = np.sum((p - np.roll(p, -1, axis=1)) ** 2, axis=1)
        sq = np.sum((A - A_inf) ** 2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(sq > 0, lhs / sq, np.inf)
        E = relative_entropy(a, a_inf)
        viol = int(np.sum(E > K2 * sq * (1 + 1e-9) + VIOLATION_SLACK))
        return {"ratios": ratio, "mu": a, "violations": viol}

    parts = _chunked(run, samples, seed)
    rep = _merge(parts, f"averaged-cycle N={N}", np.nan, samples, {"K2": K2, "a_inf": a_inf})
    rep.constant = rep.min_ratio
    rep.extra["K3_sampled"] = rep.min_ratio
    return rep


__all__ = [
    "ConstraintSet",
    "InequalityReport",
    "LambdaEstimate",
    "estimate_lambda_ode",
    "finite_cycle_lhs",
    "g6_case",
    "g6_lhs",
    "k2_constant",
    "lambda1_lsi",
    "mass_gram_is_positive_definite",
    "quadratic_form_Lambda",
    "rayleigh_quotient",
    "verify_3x3_inequality",
    "verify_averaged_cyclic_inequality",
    "verify_finite_cycle_inequality",
]
