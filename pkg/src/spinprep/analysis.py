"""Reachability formula, theorem-level verifiers, power-law fits, scaling collapse.

The two-qubit study: with the XXZ coupling and the rotated deformed raising
dissipator at infinite strength (q2 = q3/k, q3 -> inf) the reduced steady
state at site 2 has Bloch length r with

    r^2 = k (Delta^2 + tan^2 phi)(1 + tan^2 phi)
          / [k (Delta^2 + tan^2 phi) + 1 + tan^2 phi]^2,

which `r2_analytic` evaluates in a form stable at phi = +-pi/2.  The numerical
sweep `reachability_sweep` must approach this curve as q3 grows.  Bloch radii
here use the pure-state-radius-1/2 convention throughout; the k = 1, Delta = 1
case (pure product steady state, r = 1/2, r^2 = 1/4) calibrates the match.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import PchipInterpolator

from .lattice import chain
from .algebra import pauli, partial_trace, bloch_vector
from .models import xxz_hamiltonian, deformed_raising_dissipator
from .superop import assemble, devectorize


# ---------- analytic two-qubit reachability ----------

def r2_analytic(k: float, delta: float, phi: float) -> float:
    """Squared Bloch length of the stabilizable state at angle phi in the xz plane.

    Stable rewrite with c = cos(phi), s = sin(phi):
    r^2 = k (Delta^2 c^2 + s^2) / [k (Delta^2 c^2 + s^2) + 1]^2,
    giving the limit k/(k+1)^2 at phi -> +-pi/2 automatically.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    c2 = np.cos(phi) ** 2
    s2 = np.sin(phi) ** 2
    a = delta * delta * c2 + s2
    return float(k * a / (k * a + 1.0) ** 2)


@dataclass(frozen=True)
class ReachabilityPoint:
    delta: float
    k: float
    beta: float
    r: float
    phi: float


def reachability_sweep(delta: float, k: float, betas, q3: float = 1e6) -> list[ReachabilityPoint]:
    """Numerical steady-state Bloch vectors at site 2 for a grid of dissipator angles.

    For each beta, builds the deformed raising operator with q2 = q3/k at site 1
    of a two-qubit XXZ chain, solves the steady state, reduces to site 2 and
    records (r, phi) folded into the xz plane (phi in (-pi/2, pi/2]).
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    lat = chain(2)
    h = xxz_hamiltonian(2, delta)
    points = []
    for beta in np.atleast_1d(betas):
        diss = deformed_raising_dissipator(q2=q3 / k, q3=q3, beta=float(beta), site=1)
        liouv = assemble(h, diss, lat)
        rho = _dense_nullspace_state(liouv.matrix().toarray())
        r2 = partial_trace(rho, {2}, lat)
        rx, ry, rz = bloch_vector(r2)
        r_perp = float(np.hypot(rx, ry))
        r = float(np.sqrt(r_perp ** 2 + rz ** 2))
        if r_perp < 1e-12 * max(1.0, abs(rz)):
            phi = np.pi / 2
            r = abs(rz)
        else:
            phi = float(np.arctan2(rz, r_perp))
        points.append(ReachabilityPoint(delta=delta, k=k, beta=float(beta), r=r, phi=phi))
    return points


def _dense_nullspace_state(m: np.ndarray, tol: float | None = None):
    """Unique trace-one Hermitian null vector of a dense superoperator."""
    _, s, vh = np.linalg.svd(m)
    if tol is None:
        # roundoff-scaled: survives generators with hugely disparate rate scales
        tol = s.max() * max(m.shape) * np.finfo(float).eps * 10
    null = s < tol
    if null.sum() != 1:
        raise ValueError(f"null-space dimension {int(null.sum())}, expected 1")
    rho = devectorize(vh[-1].conj())
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho)


def _kernel_projection_state(m: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Asymptotic state lim_t exp(m t) vec(rho0), via spectral projection onto ker(m).

    Works for degenerate kernels: with right null basis R and left null basis L
    (both from the SVD), the projector onto the kernel along the decaying part
    is P = R (L+ R)^{-1} L+, assuming no Jordan block at zero (generic; a
    near-singular L+ R raises ValueError so the caller can redraw).
    """
    u, s, vh = np.linalg.svd(m)
    tol = s.max() * max(m.shape) * np.finfo(float).eps * 10
    null = s < tol
    k = int(null.sum())
    if k == 0:
        raise ValueError("superoperator has no kernel within tolerance")
    right = vh[null].conj().T          # columns span ker(m)
    left = u[:, null]                  # columns span ker(m+)
    overlap = left.conj().T @ right
    if np.linalg.cond(overlap) > 1e8:
        raise ValueError("defective (near-Jordan) zero eigenvalue")
    from .superop import vectorize
    coeff = np.linalg.solve(overlap, left.conj().T @ vectorize(rho0))
    rho = devectorize(right @ coeff)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho)


# ---------- diagonality of the reduced steady state under product coupling ----------

@dataclass
class DiagonalityResult:
    offdiagonals: np.ndarray
    max_offdiag: float
    redraws: int
    coupling: str


def theorem2_check(n: int, trials: int = 50, seed: int = 42,
                   coupling: str = "ising", n_jumps: int = 2) -> DiagonalityResult:
    """Max |off-diagonal| of the site-n reduced asymptotic state over random A-side generators.

    A = sites 1..n-1 carries a random Hermitian Hamiltonian and `n_jumps` random
    traceless jump operators (complex Gaussian entries, fixed seed).  The last
    site couples through sz_{n-1} sz_n ('ising'), for which the reduction must
    be diagonal in the sz_n eigenbasis; 'heisenberg' swaps in the isotropic
    coupling as a control where off-diagonals are generically nonzero.

    With the diagonal coupling sz_n commutes with everything, so the kernel is
    degenerate by construction; the asymptotic state is therefore obtained by
    spectrally projecting the maximally mixed initial state onto the kernel
    rather than by demanding a unique null vector.
    """
    if n < 2:
        raise ValueError("need at least two sites")
    lat = chain(n)
    da = 2 ** (n - 1)
    eye_n = sp.identity(2, format="csr", dtype=complex)
    sz = sp.csr_matrix(pauli("z"))
    if coupling == "ising":
        coup = sp.kron(sp.kron(sp.identity(2 ** (n - 2), dtype=complex), sz), sz)
    elif coupling == "heisenberg":
        coup = sp.csr_matrix((lat.dim, lat.dim), dtype=complex)
        left = sp.identity(2 ** (n - 2), dtype=complex)
        for w in ("x", "y", "z"):
            p = sp.csr_matrix(pauli(w))
            coup = coup + sp.kron(sp.kron(left, p), p)
    else:
        raise ValueError(f"unknown coupling {coupling!r}")

    rng = np.random.default_rng(seed)
    offs = []
    redraws = 0
    while len(offs) < trials:
        g = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
        h_a = 0.5 * (g + g.conj().T)
        h_full = sp.kron(sp.csr_matrix(h_a), eye_n) + coup
        jumps = []
        for _ in range(n_jumps):
            l_a = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
            l_a -= np.trace(l_a) / da * np.eye(da)
            jumps.append(sp.kron(sp.csr_matrix(l_a), eye_n))
        liouv = assemble(h_full, jumps, lat)
        rho0 = np.eye(lat.dim, dtype=complex) / lat.dim
        try:
            rho = _kernel_projection_state(liouv.matrix().toarray(), rho0)
        except ValueError:
            redraws += 1
            if redraws > 10 * trials:
                raise RuntimeError("too many ill-conditioned steady-state draws")
            continue
        r_n = partial_trace(rho, {n}, lat)
        offs.append(abs(r_n[0, 1]))
    offs = np.asarray(offs)
    return DiagonalityResult(offdiagonals=offs, max_offdiag=float(offs.max()),
                             redraws=redraws, coupling=coupling)


# ---------- power-law fit and finite-size scaling collapse ----------

@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    residual: float
    points: int


def fit_power_law(sizes, values) -> ScalingFit:
    """Least-squares fit value = prefactor * size^exponent on log-log data."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.size < 3:
        raise ValueError("need at least 3 points for a power-law fit")
    if np.any(sizes <= 0) or np.any(values <= 0):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(sizes), np.log(values)
    coef = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, lx) - ly) ** 2)))
    return ScalingFit(exponent=float(coef[0]), prefactor=float(np.exp(coef[1])),
                      residual=resid, points=int(sizes.size))


@dataclass
class CollapseResult:
    nu: float
    residual: float
    nu_grid: np.ndarray
    residuals: np.ndarray


def scaling_collapse(curves: dict, nu_grid, n_samples: int = 80) -> CollapseResult:
    """Best exponent nu collapsing n^nu * (1 - F^2) against t / n^3.

    `curves` maps system size n to (times, one_minus_F2).  Each curve is
    interpolated (monotone cubic, log-log) onto a common log-spaced grid of
    scaled times within the overlapping range; the collapse residual for a
    candidate nu is the rms inter-curve spread of log[n^nu (1-F^2)].
    """
    if len(curves) < 3:
        raise ValueError("need at least 3 system sizes")
    interps = {}
    ranges = []
    for n, (t, y) in curves.items():
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        x = t / n ** 3
        ok = (x > 0) & (y > 0)
        x, y = x[ok], y[ok]
        if x.size < 4:
            raise ValueError(f"curve n={n} has too few usable points")
        interps[n] = PchipInterpolator(np.log(x), np.log(y))
        ranges.append((x.min(), x.max()))
    lo = max(r[0] for r in ranges)
    hi = min(r[1] for r in ranges)
    if hi <= lo:
        raise ValueError("scaled-time ranges do not overlap")
    xs = np.log(np.geomspace(lo, hi, n_samples))
    ns = sorted(curves)
    logy = np.array([interps[n](xs) for n in ns])           # (curves, samples)
    logn = np.log(np.asarray(ns, dtype=float))[:, None]
    nu_grid = np.asarray(nu_grid, dtype=float)
    residuals = np.empty(nu_grid.size)
    for i, nu in enumerate(nu_grid):
        shifted = logy + nu * logn
        residuals[i] = float(np.sqrt(np.mean(np.var(shifted, axis=0))))
    best = int(np.argmin(residuals))
    return CollapseResult(nu=float(nu_grid[best]), residual=float(residuals[best]),
                          nu_grid=nu_grid, residuals=residuals)


def fixed_precision_time(times, values, thresholds) -> dict:
    """First times at which a decaying curve crosses each threshold (linear interp).

    Thresholds never reached within the horizon map to None.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    out = {}
    for thr in thresholds:
        below = np.nonzero(values <= thr)[0]
        if below.size == 0:
            out[thr] = None
            continue
        i = int(below[0])
        if i == 0:
            out[thr] = float(times[0])
        else:
            v0, v1 = values[i - 1], values[i]
            t0, t1 = times[i - 1], times[i]
            out[thr] = float(t0 + (v0 - thr) * (t1 - t0) / (v0 - v1))
    return out


# ---------- CSV emitters ----------

def write_gap_csv(path, rows) -> None:
    """rows: iterable of (n, gap); emits n, gap, tau = 1/gap."""
    with open(path, "w") as fh:
        fh.write("# schema=gap-v1\n")
        fh.write("n,gap,tau\n")
        for n, g in rows:
            fh.write(f"{n},{g:.12e},{1.0 / g:.12e}\n")


def write_reachability_csv(path, points, r2_reference: bool = True) -> None:
    with open(path, "w") as fh:
        fh.write("# schema=reachability-v1\n")
        fh.write("delta,k,beta,r,phi,r2_numeric,r2_analytic\n")
        for p in points:
            ra = r2_analytic(p.k, p.delta, p.phi) if r2_reference else float("nan")
            fh.write(f"{p.delta:.12g},{p.k:.12g},{p.beta:.12g},{p.r:.12e},"
                     f"{p.phi:.12e},{p.r ** 2:.12e},{ra:.12e}\n")


def write_collapse_csv(path, curves: dict, nu: float) -> None:
    with open(path, "w") as fh:
        fh.write("# schema=collapse-v1\n")
        fh.write("n,t,t_scaled,one_minus_F2,scaled_value\n")
        for n in sorted(curves):
            t, y = curves[n]
            for ti, yi in zip(np.asarray(t), np.asarray(y)):
                fh.write(f"{n},{ti:.12g},{ti / n ** 3:.12e},{yi:.12e},"
                         f"{n ** nu * yi:.12e}\n")
