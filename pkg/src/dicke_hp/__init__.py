"""Dicke model in the S_x-axis Holstein-Primakoff picture.

Exact diagonalization and evolution on truncated spin-boson spaces, the
strong-coupling series built on displaced number states, and the
finite-N studies that check it.
"""
from .errors import (CutoffError, DickeError, DimensionError, NotHermitianError,
                     ResonanceError, SolverError, ValidationError)
from .hilbert import (CatParams, HilbertSpec, ModelParams, StateVector, cat_state,
                      coherent_state, fock_state, product_state, required_cutoff)
from .operators import (OperatorMatrix, SpectrumResult, diagonalize, dicke_hamiltonian,
                        spin_operators)

__version__ = "0.1.0"

__all__ = [
    "CatParams", "CutoffError", "DickeError", "DimensionError", "HilbertSpec", "ModelParams",
    "NotHermitianError", "OperatorMatrix", "ResonanceError", "SolverError", "SpectrumResult",
    "StateVector", "ValidationError", "cat_state", "coherent_state", "diagonalize",
    "dicke_hamiltonian", "fock_state", "product_state", "required_cutoff", "spin_operators",
]
