"""Analog quench ansatze: phases, expressivity and loss-landscape flatness."""

from quenchscape.core import (
    DensityMatrix,
    Spectrum,
    ValidationError,
    diagonalize,
    evolve,
    expectation,
    fidelity,
    reduced_density,
    von_neumann_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "Spectrum",
    "ValidationError",
    "diagonalize",
    "evolve",
    "expectation",
    "fidelity",
    "reduced_density",
    "von_neumann_entropy",
    "__version__",
]
