"""Dissipative remote-state preparation on spin lattices.

Library layers:
  lattice   -- site/graph geometry
  algebra   -- Pauli matrices, operator embedding, partial trace, fidelity, Bloch map
  models    -- Hamiltonians (permutation / XXZ / Ising) and one-site dissipator designs
  superop   -- Liouvillian superoperator: sparse assembly, matrix-free action, symmetry sectors
  solvers   -- steady states, spectral gaps, operator-algebra span check, time evolution
  analysis  -- two-qubit reachability formula, power-law fits, scaling collapse, diagonality check
  cli       -- `spinprep run` / `spinprep reproduce` command-line front end
"""

from .lattice import LatticeSpec, chain
from .algebra import (
    pauli,
    embed,
    partial_trace,
    fidelity,
    bloch_vector,
    bloch_state,
)
from .models import (
    LindbladTerm,
    DissipatorSpec,
    permutation_hamiltonian,
    xxz_hamiltonian,
    heisenberg_hamiltonian,
    ising_hamiltonian,
    target_dissipator,
    deformed_raising_dissipator,
    alternating_initial_state,
)
from .superop import Liouvillian, assemble, vectorize, devectorize
from .solvers import (
    steady_state,
    spectral_gap,
    uniqueness_dimension,
    evans_span_check,
    evolve,
    Trajectory,
    SpectralResult,
)
from . import analysis

__version__ = "0.1.0"
