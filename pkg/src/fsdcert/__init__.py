"""Finite-state dynamics on graphs, certificates for bounded-time convergence,
and the gadget instances behind the certificate-size lower bounds."""

from .fsd import (
    BudgetExceeded,
    Dynamics,
    Graph,
    StateAlphabet,
    StructuredFunction,
    TableFunction,
    apply_global,
    converges_within,
    orbit,
)
from .convergence_pls import honest_prover, make_verifier, verify_node

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "Dynamics", "Graph", "StateAlphabet", "StructuredFunction", "TableFunction",
    "apply_global", "converges_within", "orbit", "honest_prover", "make_verifier", "verify_node",
]
