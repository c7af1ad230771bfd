"""Relaxation time vs chain length: the n^3 law.

The spectral gap g of the Liouvillian sets the asymptotic relaxation rate;
its inverse tau = 1/g is the preparation time.  For the edge-site raising
dissipator on a Heisenberg chain tau grows like n^3 -- polynomial, not
exponential, which is what makes dissipative remote preparation practical.

Sizes 4 and 6 run in seconds.  Pass --large to include n = 8 (about two
minutes: the solver switches to sparse magnetization-sector blocks and
restarted Arnoldi iterations).
"""

import sys

import numpy as np

from spinprep import chain, heisenberg_hamiltonian, target_dissipator, assemble
from spinprep.solvers import spectral_gap
from spinprep.analysis import fit_power_law

sizes = [4, 6, 8] if "--large" in sys.argv[1:] else [4, 6]
pure0 = np.diag([1.0, 0.0]).astype(complex)

taus = []
for n in sizes:
    lat = chain(n)
    liouv = assemble(heisenberg_hamiltonian(n), target_dissipator(pure0, site=1), lat)
    res = spectral_gap(liouv)
    taus.append(1.0 / res.gap)
    lam = res.eigenvalues[0]
    print(f"n = {n:2d}: gap = {res.gap:.5f}  tau = {taus[-1]:8.2f}  "
          f"(gap mode at {lam.real:+.4f} {lam.imag:+.3f}i, "
          f"method {res.diagnostics['method']})")

if len(taus) >= 3:
    fit = fit_power_law(sizes, taus)
    print(f"\npower-law fit: tau ~ n^{fit.exponent:.2f} "
          f"(prefactor {fit.prefactor:.3f}, rms log-residual {fit.residual:.3f})")
else:
    ratio = taus[1] / taus[0]
    print(f"\ntau(6)/tau(4) = {ratio:.2f}  vs  (6/4)^3 = {(6 / 4) ** 3:.2f}")
