"""Operator and state primitives on spin lattices.

Conventions pinned here and used everywhere else:
  * site 1 is the leftmost (most significant) tensor factor;
  * sigma^+ = |0><1| (maps the excited |1> to the target |0>);
  * Bloch map rho = 1/2 * I + r . sigma, so pure qubit states have |r| = 1/2
    and r_a = tr(rho sigma_a) / 2.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeSpec

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

# ---------- Pauli matrices ----------

_PAULI = {
    "id": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),   # |0><1|
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),  # |1><0|
}


def pauli(which: str) -> np.ndarray:
    """Return a 2x2 Pauli-type matrix: 'x', 'y', 'z', 'plus', 'minus' or 'id'."""
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}; choose from {sorted(_PAULI)}")


# ---------- embedding and partial trace ----------

def embed(local, site: int, lattice: LatticeSpec) -> sp.csr_matrix:
    """Embed a local d x d operator at `site`: I^(site-1) (x) local (x) I^(n-site)."""
    d, n = lattice.d, lattice.n
    if not (1 <= site <= n):
        raise ValueError(f"site {site} out of range 1..{n}")
    loc = sp.csr_matrix(local)
    if loc.shape != (d, d):
        raise ValueError(f"local operator shape {loc.shape} != ({d},{d})")
    left = sp.identity(d ** (site - 1), format="csr", dtype=complex)
    right = sp.identity(d ** (n - site), format="csr", dtype=complex)
    out = sp.kron(sp.kron(left, loc, format="csr"), right, format="csr")
    out.eliminate_zeros()
    return out.astype(complex)


def partial_trace(rho: np.ndarray, keep, lattice: LatticeSpec) -> np.ndarray:
    """Trace out all sites not in `keep`; kept sites stay in ascending order."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    if any(not (1 <= s <= lattice.n) for s in keep):
        raise ValueError(f"keep sites {keep} out of range 1..{lattice.n}")
    d, n = lattice.d, lattice.n
    rho = np.asarray(rho)
    if rho.shape != (d ** n, d ** n):
        raise ValueError(f"state shape {rho.shape} != ({d**n},{d**n})")

    tens = rho.reshape((d,) * (2 * n))
    # einsum index letters: row index of site s is axis s-1, column index axis n+s-1
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise ValueError("system too large for partial trace")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in range(1, n + 1):
        if s not in keep:
            col[s - 1] = row[s - 1]  # contract
    out_idx = "".join(row[s - 1] for s in keep) + "".join(col[s - 1] for s in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out_idx, tens)
    dk = d ** len(keep)
    reduced = reduced.reshape(dk, dk)
    # enforce exact Hermiticity of the accumulation
    return 0.5 * (reduced + reduced.conj().T)


# ---------- state validity ----------

def check_density_matrix(rho: np.ndarray, *, herm_tol: float = HERMITICITY_TOL,
                         trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and PSD within tolerance."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise ValueError("density matrix not Hermitian within tolerance")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"trace {np.trace(rho)} != 1 within tolerance")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -psd_tol:
        raise ValueError(f"state not PSD within tolerance (min eigenvalue {w.min():.3e})")


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    check_density_matrix(rho, herm_tol=1e-9, trace_tol=1e-9)
    check_density_matrix(sigma, herm_tol=1e-9, trace_tol=1e-9)
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    f = np.sqrt(np.clip(w, 0.0, None)).sum()
    return float(min(max(f.real, 0.0), 1.0))


# ---------- Bloch map (pure-state radius 1/2) ----------

def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """Bloch vector r with rho = I/2 + r.sigma, i.e. r_a = tr(rho sigma_a)/2."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError("bloch_vector needs a 2x2 state")
    return np.array([
        0.5 * np.trace(rho @ _PAULI["x"]).real,
        0.5 * np.trace(rho @ _PAULI["y"]).real,
        0.5 * np.trace(rho @ _PAULI["z"]).real,
    ])


def bloch_state(r) -> np.ndarray:
    """Inverse of bloch_vector: rho = I/2 + r.sigma; requires |r| <= 1/2."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have 3 real components")
    if np.linalg.norm(r) > 0.5 + 1e-12:
        raise ValueError(f"|r| = {np.linalg.norm(r)} exceeds 1/2")
    return (0.5 * _PAULI["id"]
            + r[0] * _PAULI["x"] + r[1] * _PAULI["y"] + r[2] * _PAULI["z"])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Trace distance (1/2) ||rho - sigma||_1."""
    w = np.linalg.eigvalsh(np.asarray(rho) - np.asarray(sigma))
    return 0.5 * float(np.abs(w).sum())
