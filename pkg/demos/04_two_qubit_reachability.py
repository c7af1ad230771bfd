"""Which states can be prepared at the uncontrolled qubit of an XXZ pair?

One qubit carries a rotated, deformed raising dissipator of strength q3 with
deformation ratio k = q3/q2; the other is reached only through the XXZ
coupling (anisotropy Delta).  In the strong-dissipation limit the reduced
steady state at the free qubit lies in the xz plane at angle phi with Bloch
length r given by a closed-form curve r^2(k, Delta, phi).

This demo sweeps the dissipator angle beta and compares the numerical steady
states against that curve.  At k = 1, Delta = 1 every point has r = 1/2: the
whole Bloch sphere surface is reachable.
"""

import numpy as np

from spinprep.analysis import r2_analytic, reachability_sweep

betas = np.linspace(0.0, np.pi, 13)

for delta, k in ((1.0, 1.0), (0.5, 1.0), (2.0, 0.1)):
    pts = reachability_sweep(delta, k, betas, q3=1e6)
    worst = max(abs(p.r ** 2 - r2_analytic(k, delta, p.phi)) for p in pts)
    print(f"Delta = {delta}, k = {k}: max |r^2 - analytic| = {worst:.2e}")
    for p in pts[:: len(pts) // 4]:
        print(f"   beta = {p.beta:5.2f}  ->  phi = {p.phi:+5.2f}, r = {p.r:.4f} "
              f"(analytic r = {np.sqrt(r2_analytic(k, delta, p.phi)):.4f})")

# the calibration point: pure states everywhere on the sphere
pts = reachability_sweep(1.0, 1.0, betas, q3=1e6)
rs = [p.r for p in pts]
print(f"\nk = 1, Delta = 1: r in [{min(rs):.6f}, {max(rs):.6f}]  "
      "(pure-state radius 1/2 at every angle)")
