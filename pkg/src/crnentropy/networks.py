"""Builders for the reaction networks used throughout the tests and experiments."""

from __future__ import annotations

from importlib import resources
from typing import Sequence

from .network import Network, Reaction


def _unit(n, i, coeff=1):
    y = [0] * n
    y[i] = coeff
    return tuple(y)


def two_by_two(k1: float = 1.0, k2: float = 1.0, d=(1.0, 1.0)) -> Network:
    """``2A <-> A + B``; reaction-diffusion form ``a' = -k1 a^2 + k2 ab``."""
    return Network(
        ("A", "B"),
        (Reaction((2, 0), (1, 1), k1), Reaction((1, 1), (2, 0), k2)),
        tuple(d),
    )


def three_by_three(k1: float = 1.0, k2: float = 1.0, k3: float = 1.0, d=(1.0, 1.0, 1.0)) -> Network:
    """Triangle ``A -> B + C -> 2B -> A`` with rates k1, k2, k3."""
    return generalized_three_by_three(1, k1, k2, k3, d)


def generalized_three_by_three(alpha: int = 1, k1: float = 1.0, k2: float = 1.0, k3: float = 1.0,
                               d=(1.0, 1.0, 1.0)) -> Network:
    """Triangle ``A -> alpha B + C -> (alpha+1) B -> A``; ``alpha = 1`` is the plain 3x3 system."""
    if alpha < 1:
        raise ValueError("alpha must be a positive integer")
    return Network(
        ("A", "B", "C"),
        (
            Reaction((1, 0, 0), (0, alpha, 1), k1),
            Reaction((0, alpha, 1), (0, alpha + 1, 0), k2),
            Reaction((0, alpha + 1, 0), (1, 0, 0), k3),
        ),
        tuple(d),
    )


def cyclic(alphas: Sequence[int], ks: Sequence[float] | None = None, d: Sequence[float] | None = None) -> Network:
    """Cycle ``alpha_1 A1 -> alpha_2 A2 -> ... -> alpha_N AN -> alpha_1 A1``."""
    alphas = [int(a) for a in alphas]
    n = len(alphas)
    if n < 2:
        raise ValueError("a cycle needs at least two species")
    if any(a < 1 for a in alphas):
        raise ValueError("cycle coefficients must be positive integers")
    ks = [1.0] * n if ks is None else [float(k) for k in ks]
    if len(ks) != n:
        raise ValueError("one rate per species required")
    rxns = tuple(
        Reaction(_unit(n, i, alphas[i]), _unit(n, (i + 1) % n, alphas[(i + 1) % n]), ks[i]) for i in range(n)
    )
    names = tuple(f"A{i + 1}" for i in range(n))
    return Network(names, rxns, tuple(d) if d is not None else ())


def autocatalytic(k1: float = 1.0, k2: float = 1.0, d: float = 1.0) -> Network:
    """``A <-> 2A``: a single species with no conservation law."""
    return Network(("A",), (Reaction((1,), (2,), k1), Reaction((2,), (1,), k2)), (d,))


BUNDLED = ("2x2", "3x3", "cycle3", "cycle121", "gen3x3")


def bundled_text(name: str) -> str:
    """Text of a bundled ``.crn`` file."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled network {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("crnentropy").joinpath("data", f"{name}.crn").read_text(encoding="utf-8")
