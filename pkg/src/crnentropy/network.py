"""Mass-action reaction networks: structure, reaction vector and conservation laws.

A network is a list of species, a list of reactions ``y -> y'`` between
complexes (nonnegative integer vectors over the species) with positive rate
constants, and one diffusion coefficient per species.  Everything here is
immutable and side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Sequence

import numpy as np
import sympy

Complex = tuple[int, ...]


@dataclass(frozen=True)
class Reaction:
    """A single reaction ``source -> target`` with mass-action rate constant ``rate``."""

    source: Complex
    target: Complex
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(int(v) for v in self.source))
        object.__setattr__(self, "target", tuple(int(v) for v in self.target))
        object.__setattr__(self, "rate", float(self.rate))
        if len(self.source) != len(self.target):
            raise ValueError("source and target complexes have different lengths")
        if any(v < 0 for v in self.source + self.target):
            raise ValueError("stoichiometric coefficients must be nonnegative")


@dataclass(frozen=True)
class Network:
    """Chemical reaction network with mass-action kinetics and per-species diffusion.

    Construction only checks shapes.  Use :func:`validate_network` for the
    well-formedness requirements (species used, no trivial reactions,
    positive rates and diffusion coefficients).
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    diffusion: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(str(s) for s in self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        n = len(self.species)
        if len(set(self.species)) != n:
            raise ValueError("duplicate species names")
        diffusion = tuple(float(d) for d in self.diffusion) if len(self.diffusion) else (1.0,) * n
        if len(diffusion) != n:
            raise ValueError(f"expected {n} diffusion coefficients, got {len(diffusion)}")
        object.__setattr__(self, "diffusion", diffusion)
        for r, rxn in enumerate(self.reactions):
            if len(rxn.source) != n:
                raise ValueError(f"reaction {r} has complexes of length {len(rxn.source)}, expected {n}")

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @cached_property
    def sources(self) -> np.ndarray:
        """Source stoichiometry, shape (R, N)."""
        return np.array([r.source for r in self.reactions], dtype=np.int64).reshape(-1, self.n_species)

    @cached_property
    def targets(self) -> np.ndarray:
        """Target stoichiometry, shape (R, N)."""
        return np.array([r.target for r in self.reactions], dtype=np.int64).reshape(-1, self.n_species)

    @cached_property
    def rates(self) -> np.ndarray:
        return np.array([r.rate for r in self.reactions], dtype=float)

    @cached_property
    def diffusion_array(self) -> np.ndarray:
        return np.array(self.diffusion, dtype=float)

    @cached_property
    def complexes(self) -> tuple[Complex, ...]:
        """Distinct complexes in order of first appearance (sources and targets interleaved)."""
        seen: dict[Complex, None] = {}
        for rxn in self.reactions:
            seen.setdefault(rxn.source)
            seen.setdefault(rxn.target)
        return tuple(seen)

    @cached_property
    def complex_matrix(self) -> np.ndarray:
        """Distinct complexes stacked as rows, shape (C, N)."""
        return np.array(self.complexes, dtype=np.int64).reshape(-1, self.n_species)

    @cached_property
    def source_index(self) -> np.ndarray:
        index = {y: j for j, y in enumerate(self.complexes)}
        return np.array([index[r.source] for r in self.reactions], dtype=np.int64)

    @cached_property
    def target_index(self) -> np.ndarray:
        index = {y: j for j, y in enumerate(self.complexes)}
        return np.array([index[r.target] for r in self.reactions], dtype=np.int64)

    def species_index(self, name: str) -> int:
        return self.species.index(name)

    def with_rates(self, rates: Sequence[float]) -> "Network":
        rates = list(rates)
        if len(rates) != self.n_reactions:
            raise ValueError("one rate per reaction required")
        rxns = tuple(Reaction(r.source, r.target, k) for r, k in zip(self.reactions, rates))
        return Network(self.species, rxns, self.diffusion)

    def with_diffusion(self, diffusion: Sequence[float]) -> "Network":
        return Network(self.species, self.reactions, tuple(diffusion))

    def equivalent(self, other: "Network") -> bool:
        """Structural equality up to a permutation of species names.

        Reactions are compared as an ordered list of (source, target, rate)
        after mapping both networks onto the same species names.
        """
        if set(self.species) != set(other.species) or self.n_reactions != other.n_reactions:
            return False
        perm = [other.species.index(s) for s in self.species]

        def remap(y):
            return tuple(y[p] for p in perm)

        for a, b in zip(self.reactions, other.reactions):
            if a.source != remap(b.source) or a.target != remap(b.target) or a.rate != b.rate:
                return False
        dif = dict(zip(other.species, other.diffusion))
        return all(dif[s] == d for s, d in zip(self.species, self.diffusion))


@dataclass(frozen=True)
class Violation:
    """One failed well-formedness requirement."""

    code: str
    message: str
    index: int | None = None

    def __str__(self):
        return self.message


def validate_network(net: Network) -> list[Violation]:
    """Return every well-formedness violation of ``net``; empty means valid."""
    out: list[Violation] = []
    if net.n_reactions == 0:
        out.append(Violation("no_reactions", "network has no reactions (requirement 3: every complex must take part in a reaction)"))
    used = np.zeros(net.n_species, dtype=bool)
    for y in net.complexes:
        used |= np.asarray(y) > 0
    for i, name in enumerate(net.species):
        if not used[i]:
            out.append(Violation(
                "unused_species",
                f"species {name} unused (requirement 1: every species needs a positive coefficient in some complex)",
                i,
            ))
    for r, rxn in enumerate(net.reactions):
        if rxn.source == rxn.target:
            out.append(Violation(
                "trivial_reaction",
                f"trivial reaction at index {r} (requirement 2: no reaction y -> y)",
                r,
            ))
        if not rxn.rate > 0:
            out.append(Violation("nonpositive_rate", f"rate must be positive (reaction {r} has rate {rxn.rate!r})", r))
    for i, d in enumerate(net.diffusion):
        if not d > 0:
            out.append(Violation(
                "nonpositive_diffusion",
                f"diffusion coefficient of {net.species[i]} must be positive (got {d!r})",
                i,
            ))
    return out


def _check_state(net: Network, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != net.n_species:
        raise ValueError(f"state has {c.shape[-1]} components, network has {net.n_species} species")
    return c


def monomials(stoich: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``c**y`` for every row ``y`` of ``stoich``; broadcasts over leading axes of ``c``.

    Uses ``0**0 == 1`` so species absent from a complex never contribute.
    """
    c = np.asarray(c, dtype=float)
    return np.prod(np.power(c[..., None, :], stoich), axis=-1)


def reaction_rates(net: Network, c) -> np.ndarray:
    """Per-reaction fluxes ``k_r c**y_r``, shape (..., R)."""
    c = _check_state(net, c)
    return net.rates * monomials(net.sources, c)


def reaction_vector(net: Network, c) -> np.ndarray:
    """Mass-action right-hand side ``sum_r k_r c**y_r (y_r' - y_r)``.

    ``c`` may carry leading batch axes (e.g. one row per grid cell).
    """
    c = _check_state(net, c)
    return reaction_rates(net, c) @ (net.targets - net.sources).astype(float)


def wegscheider_matrix(net: Network) -> np.ndarray:
    """Integer matrix whose row ``r`` is ``y_r' - y_r``."""
    return (net.targets - net.sources).reshape(net.n_reactions, net.n_species)


@dataclass(frozen=True)
class ConservationBasis:
    """Basis of the conservation laws ``Q c = const``.

    ``exact`` keeps the rational rows; ``Q`` is the float copy used for numerics.
    Rows are primitive integer vectors obtained from the reduced row echelon
    form, so the basis is canonical for a given species order but not unique
    in general when ``m > 1``.
    """

    exact: tuple[tuple[Fraction, ...], ...]
    n_species: int

    @property
    def m(self) -> int:
        return len(self.exact)

    @cached_property
    def Q(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.exact], dtype=float).reshape(self.m, self.n_species)

    def rank(self) -> int:
        if self.m == 0:
            return 0
        return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in self.exact]).rank()

    def mass(self, c0) -> np.ndarray:
        return mass_vector(self, c0)


def _primitive_row(row) -> tuple[Fraction, ...]:
    fr = [Fraction(int(v.p), int(v.q)) for v in row]
    den = lcm(*(f.denominator for f in fr)) if fr else 1
    ints = [int(f * den) for f in fr]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    g = g or 1
    ints = [v // g for v in ints]
    if sum(ints) < 0:
        ints = [-v for v in ints]
    return tuple(Fraction(v) for v in ints)


def conservation_basis(net: Network) -> ConservationBasis:
    """Exact rational basis of ``ker(W)`` (conservation laws) of ``net``.

    The nullspace is computed over the rationals, reduced to row echelon form
    and each row scaled to a primitive integer vector whose entries sum to a
    nonnegative number.
    """
    W = sympy.Matrix(wegscheider_matrix(net).tolist()) if net.n_reactions else sympy.zeros(0, net.n_species)
    if net.n_reactions:
        null = W.nullspace()
    else:
        null = [sympy.eye(net.n_species)[:, i] for i in range(net.n_species)]
    if not null:
        return ConservationBasis((), net.n_species)
    B = sympy.Matrix.hstack(*null).T
    R, _ = B.rref()
    rows = [_primitive_row(R.row(i)) for i in range(R.rows) if any(v != 0 for v in R.row(i))]
    return ConservationBasis(tuple(rows), net.n_species)


def mass_vector(basis: ConservationBasis, c0) -> np.ndarray:
    """Conserved quantities ``Q c0`` (shape (m,); empty when there are no conservation laws)."""
    c0 = np.asarray(c0, dtype=float)
    if c0.shape[-1] != basis.n_species:
        raise ValueError("state length does not match the conservation basis")
    return c0 @ basis.Q.T
