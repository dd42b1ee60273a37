"""Relative entropy and entropy dissipation for states and 1-D fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import Grid1D
from .network import Network, monomials, reaction_vector


def _as_state(c_inf) -> np.ndarray:
    # accept an EquilibriumPoint without importing it (avoids a cycle)
    return np.asarray(getattr(c_inf, "c", c_inf), dtype=float)


def psi(x, y):
    """``Psi(x, y) = x log(x/y) - x + y`` with ``Psi(0, y) = y``.

    Broadcasts over arrays.  Evaluated as ``y((1+s) log1p(s) - s)`` with
    ``s = x/y - 1`` near the diagonal to limit cancellation.

    Raises:
        DomainError: if any ``x < 0`` or ``y <= 0``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("psi requires y > 0")
    if np.any(~(x >= 0)):
        raise DomainError("psi requires x >= 0")
    t = x / y
    s = t - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        near = (1.0 + s) * np.log1p(s) - s
        far = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)) - s, 1.0)
        inner = np.where(np.abs(s) < 0.5, near, far)
    out = y * np.maximum(inner, 0.0)
    return out if out.ndim else float(out)


def relative_entropy(c, c_inf) -> float | np.ndarray:
    """``E(c | c_inf) = sum_i Psi(c_i; c_inf_i)`` over the last axis."""
    c_inf = _as_state(c_inf)
    if np.any(~(c_inf > 0)):
        raise DomainError("equilibrium must be strictly positive")
    return np.sum(psi(c, c_inf), axis=-1)


def dissipation_formula(net: Network, c, c_inf):
    """Reaction dissipation ``sum_r k_r c_inf^y_r Psi(c^y_r / c_inf^y_r; c^y'_r / c_inf^y'_r)``.

    Defined for nonnegative ``c`` (zeros allowed) and broadcasts over leading axes.
    """
    c_inf = _as_state(c_inf)
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise DomainError("state must be nonnegative")
    src_inf = monomials(net.sources, c_inf)
    tgt_inf = monomials(net.targets, c_inf)
    x = monomials(net.sources, c) / src_inf
    y = monomials(net.targets, c) / tgt_inf
    # Psi(x; 0) is only reached for boundary states; its limit is +inf unless x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y > 0, x / np.where(y > 0, y, 1.0), 1.0)
        term = np.where(
            y > 0,
            y * np.where(x > 0, ratio * np.log(np.where(x > 0, ratio, 1.0)) - ratio + 1.0, 1.0),
            np.where(x > 0, np.inf, 0.0),
        )
    term = np.maximum(term, 0.0)
    return np.sum(net.rates * src_inf * term, axis=-1)


def dissipation_logform(net: Network, c, c_inf):
    """``-R(c) . log(c / c_inf)``; needs strictly positive ``c``."""
    c_inf = _as_state(c_inf)
    c = np.asarray(c, dtype=float)
    if np.any(~(c > 0)):
        raise DomainError("log-form dissipation requires a strictly positive state")
    return -np.sum(reaction_vector(net, c) * np.log(c / c_inf), axis=-1)


@dataclass(frozen=True)
class EntropyReport:
    E: float
    D_formula: float
    D_logform: float
    identity_gap: float

    def identity_holds(self, rtol: float = 1e-9) -> bool:
        return self.identity_gap <= rtol * (1.0 + self.D_formula)


def dissipation_ode(net: Network, c, c_inf) -> EntropyReport:
    """Entropy and both forms of the reaction dissipation at a positive state.

    For a complex-balanced ``c_inf`` the two forms agree; ``identity_gap``
    measures how well they do numerically.  Arrays of states are accepted and
    give arrays in the report fields.
    """
    c = np.asarray(c, dtype=float)
    E = relative_entropy(c, c_inf)
    d1 = dissipation_formula(net, c, c_inf)
    d2 = dissipation_logform(net, c, c_inf)
    gap = np.abs(d1 - d2)
    if np.ndim(gap) == 0:
        return EntropyReport(float(E), float(d1), float(d2), float(gap))
    return EntropyReport(E, d1, d2, gap)


def pde_entropy(field: Grid1D, c_inf) -> float:
    """Midpoint-rule ``int_Omega sum_i Psi(c_i; c_inf_i) dx``."""
    return float(field.h * np.sum(relative_entropy(field.values, c_inf)))


def fisher_information(field: Grid1D) -> np.ndarray:
    """Per-species ``int |c'|^2 / c dx`` from face differences.

    Each interior face uses the arithmetic mean of its two cells; faces where
    both neighbours vanish contribute zero.  Neumann boundary faces carry no
    flux and are skipped.
    """
    v = field.values
    dc = np.diff(v, axis=0)
    face = 0.5 * (v[1:] + v[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(face > 0, dc**2 / np.where(face > 0, face, 1.0), 0.0)
    return np.sum(term, axis=0) / field.h


def pde_dissipation(net: Network, field: Grid1D, c_inf, allow_boundary: bool = False) -> float:
    """Discrete ``sum_i d_i int |c_i'|^2 / c_i + int D_reaction(c)``.

    Raises:
        DomainError: when a cell is not strictly positive, unless ``allow_boundary``.
    """
    v = field.values
    if not allow_boundary and np.any(~(v > 0)):
        raise DomainError("field must be strictly positive on every cell")
    if np.any(v < 0):
        raise DomainError("field must be nonnegative")
    diff_part = float(np.dot(net.diffusion_array, fisher_information(field)))
    react_part = float(field.h * np.sum(dissipation_formula(net, v, c_inf)))
    return diff_part + react_part


def ckp_diagnostic(c, c_inf) -> float:
    """Ratio ``E(c | c_inf) / sum_i ||c_i - c_inf_i||_1^2``.

    ``c`` may be a state (unit-volume domain) or a :class:`Grid1D`.

    Raises:
        DomainError: when ``c`` equals ``c_inf`` and the ratio is undefined.
    """
    c_inf = _as_state(c_inf)
    if isinstance(c, Grid1D):
        E = pde_entropy(c, c_inf)
        l1 = c.h * np.sum(np.abs(c.values - c_inf), axis=0)
    else:
        c = np.asarray(c, dtype=float)
        E = float(relative_entropy(c, c_inf))
        l1 = np.abs(c - c_inf)
    denom = float(np.sum(l1**2))
    if denom == 0.0:
        raise DomainError("ratio undefined at c = c_inf")
    return E / denom
