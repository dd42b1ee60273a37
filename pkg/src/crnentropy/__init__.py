"""Mass-action reaction networks with entropy diagnostics.

Core objects live in :mod:`crnentropy.network`; equilibria, entropy functionals,
ODE/PDE simulation and the entropy-dissipation inequality checks each have
their own module.
"""

from .entropy import EntropyReport, ckp_diagnostic, dissipation_ode, pde_dissipation, pde_entropy, psi, relative_entropy
from .equilibria import (
    EquilibriumPoint,
    boundary_equilibria,
    classify_detailed_balance,
    complex_balance_residual,
    solve_cyclic_equilibrium,
    solve_positive_equilibrium,
)
from .errors import (
    CrnError,
    DomainError,
    FitError,
    InfeasibleConstraint,
    NonConvergence,
    NonFiniteState,
    NotComplexBalanced,
    StepRejected,
    StepSizeUnderflow,
    SupportEnumerationTooLarge,
)
from .grid import Grid1D
from .netparse import load_network, parse_network, serialize_network
from .network import (
    ConservationBasis,
    Network,
    Reaction,
    conservation_basis,
    mass_vector,
    reaction_vector,
    validate_network,
    wegscheider_matrix,
)
from .ode import OdeTrace, fit_decay_rate, integrate_ode
from .pde import PdeTrace, integrate_pde

__all__ = [
    "ConservationBasis", "CrnError", "DomainError", "EntropyReport", "EquilibriumPoint", "FitError", "Grid1D",
    "InfeasibleConstraint", "Network", "NonConvergence", "NonFiniteState", "NotComplexBalanced", "OdeTrace",
    "PdeTrace", "Reaction", "StepRejected", "StepSizeUnderflow", "SupportEnumerationTooLarge",
    "boundary_equilibria", "ckp_diagnostic", "classify_detailed_balance", "complex_balance_residual",
    "conservation_basis", "dissipation_ode", "fit_decay_rate", "integrate_ode", "integrate_pde", "load_network",
    "mass_vector", "parse_network", "pde_dissipation", "pde_entropy", "psi", "reaction_vector",
    "relative_entropy", "serialize_network", "solve_cyclic_equilibrium", "solve_positive_equilibrium",
    "validate_network", "wegscheider_matrix",
]

__version__ = "0.1.0"
