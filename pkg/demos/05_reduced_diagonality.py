"""Why arbitrary remote targets need the right coupling.

Couple the last qubit to an arbitrarily-driven block only through sz sz and
the last site's reduced asymptotic state is always diagonal in the sz basis,
no matter what Hamiltonian or jump operators act on the block: a diagonal
coupling cannot transport coherence.  Swap in the isotropic Heisenberg
coupling and generic off-diagonals appear immediately.

A companion algebraic test -- closing {jump ops, their adjoints, H} under
products -- shows the same dichotomy for steady-state uniqueness: the
Heisenberg coupling spans the full operator space, the Ising one does not.
"""

from spinprep import chain, evans_span_check
from spinprep.analysis import theorem2_check
from spinprep.models import (
    heisenberg_hamiltonian, ising_hamiltonian, target_dissipator,
)
import numpy as np

n = 3
for coupling in ("ising", "heisenberg"):
    res = theorem2_check(n, trials=20, seed=7, coupling=coupling)
    print(f"{coupling:10s} coupling: max |off-diagonal| of the last-site state "
          f"over 20 random draws = {res.max_offdiag:.2e}")

print()
pure0 = np.diag([1.0, 0.0]).astype(complex)
diss = target_dissipator(pure0, site=1)
for name, h in (("heisenberg", heisenberg_hamiltonian(n)),
                ("ising", ising_hamiltonian(n))):
    spans, reached = evans_span_check(diss, chain(n), h)
    print(f"{name:10s} chain: operator-algebra closure reaches {reached}/"
          f"{4 ** n} dimensions -> steady state {'unique' if spans else 'NOT unique'}")
