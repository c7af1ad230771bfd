"""Hamiltonians and one-site dissipator designs.

Hamiltonians: permutation model H_P = sum_edges P_{j,k} on arbitrary graphs
and any local dimension; XXZ and Ising chains for d = 2.

Dissipators: given an arbitrary target qubit state, `target_dissipator`
returns jump operators whose single-site evolution fixes exactly that state;
`deformed_raising_dissipator` is the rotated deformed raising operator used
in the two-qubit reachability study.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeSpec, chain
from .algebra import pauli, embed, check_density_matrix

TRACELESS_TOL = 1e-12


@dataclass(frozen=True)
class LindbladTerm:
    """One jump operator: a traceless local d x d matrix acting at `site`.

    The overall rate is absorbed into the scale of `op`.
    """

    site: int
    op: np.ndarray

    def __post_init__(self):
        op = np.asarray(self.op, dtype=complex)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"jump operator must be square, got {op.shape}")
        if abs(np.trace(op)) > TRACELESS_TOL * max(1.0, np.abs(op).max()):
            raise ValueError(f"jump operator must be traceless, tr = {np.trace(op)}")
        object.__setattr__(self, "op", op)


@dataclass(frozen=True)
class DissipatorSpec:
    """A labelled collection of one-site jump operators."""

    terms: tuple[LindbladTerm, ...]
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def embedded(self, lattice: LatticeSpec) -> list[sp.csr_matrix]:
        """Jump operators embedded into the full Hilbert space."""
        return [embed(t.op, t.site, lattice) for t in self.terms]


# ---------- Hamiltonians ----------

def _swap_permutation(lattice: LatticeSpec, j: int, k: int) -> np.ndarray:
    """Global basis permutation induced by swapping the digits of sites j and k."""
    d, n = lattice.d, lattice.n
    idx = np.arange(d ** n)
    # digit of site s (1-based, site 1 most significant) at position n - s
    pj = d ** (n - j)
    pk = d ** (n - k)
    aj = (idx // pj) % d
    ak = (idx // pk) % d
    return idx + (ak - aj) * pj + (aj - ak) * pk


def permutation_hamiltonian(lattice: LatticeSpec) -> sp.csr_matrix:
    """H_P = sum over edges of the two-site permutation P_{j,k}."""
    dim = lattice.dim
    cols = np.arange(dim)
    rows = []
    for (j, k) in lattice.edges:
        rows.append(_swap_permutation(lattice, j, k))
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    r = np.concatenate(rows)
    c = np.tile(cols, len(lattice.edges))
    data = np.ones(r.size, dtype=complex)
    return sp.coo_matrix((data, (r, c)), shape=(dim, dim)).tocsr()


def xxz_hamiltonian(n: int, delta: float) -> sp.csr_matrix:
    """Open XXZ chain: sum_j sx_j sx_{j+1} + sy_j sy_{j+1} + delta * sz_j sz_{j+1}."""
    lat = chain(n, d=2)
    h = sp.csr_matrix((lat.dim, lat.dim), dtype=complex)
    for j in range(1, n):
        for which, w in (("x", 1.0), ("y", 1.0), ("z", delta)):
            h = h + w * (embed(pauli(which), j, lat) @ embed(pauli(which), j + 1, lat))
    h.eliminate_zeros()
    return h.tocsr()


def heisenberg_hamiltonian(n: int) -> sp.csr_matrix:
    """Isotropic Heisenberg chain (XXZ at delta = 1), equal to sum_j [2 P_{j,j+1} - 1]."""
    return xxz_hamiltonian(n, 1.0)


def ising_hamiltonian(n: int) -> sp.csr_matrix:
    """Ising chain sum_j sz_j sz_{j+1}; diagonal in the computational basis."""
    lat = chain(n, d=2)
    idx = np.arange(lat.dim)
    diag = np.zeros(lat.dim)
    for j in range(1, n):
        zj = 1.0 - 2.0 * ((idx >> (n - j)) & 1)
        zk = 1.0 - 2.0 * ((idx >> (n - j - 1)) & 1)
        diag += zj * zk
    return sp.diags(diag.astype(complex)).tocsr()


# ---------- dissipator designs ----------

def target_dissipator(rho_star: np.ndarray, gamma: float = 1.0, site: int = 1) -> DissipatorSpec:
    """Jump operators on one site whose unique fixed point is the qubit state rho_star.

    Diagonalize rho_star = p|u><u| + (1-p)|v><v| with p >= 1/2.  A pure target
    needs the single raising-type operator sqrt(gamma)|u><v|; a mixed target gets
    the detailed-balance pair sqrt(gamma p)|u><v|, sqrt(gamma (1-p))|v><u|, whose
    rates fix the populations at p and 1-p.
    """
    rho_star = np.asarray(rho_star, dtype=complex)
    if rho_star.shape != (2, 2):
        raise ValueError("target must be a 2x2 qubit state")
    check_density_matrix(rho_star)
    if gamma <= 0:
        raise ValueError(f"rate gamma must be positive, got {gamma}")

    w, vecs = np.linalg.eigh(rho_star)
    p, u, v = w[1], vecs[:, 1], vecs[:, 0]
    if abs(p - 0.5) < 1e-12:
        # maximally mixed target: eigenbasis arbitrary, pin the computational one
        u = np.array([1.0, 0.0], dtype=complex)
        v = np.array([0.0, 1.0], dtype=complex)
        p = 0.5
    up = np.outer(u, v.conj())  # |u><v|
    if p > 1.0 - 1e-12:
        terms = (LindbladTerm(site, np.sqrt(gamma) * up),)
    else:
        terms = (
            LindbladTerm(site, np.sqrt(gamma * p) * up),
            LindbladTerm(site, np.sqrt(gamma * (1.0 - p)) * up.conj().T),
        )
    return DissipatorSpec(terms, label="target-state")


def deformed_raising_dissipator(q2: float, q3: float, beta: float,
                                site: int = 1) -> DissipatorSpec:
    """Rotated deformed raising operator
    L = (1/(2 sqrt 2)) (sqrt(q3) (sz cos(beta) - sx sin(beta)) - i sqrt(q2) sy).
    """
    if q2 < 0 or q3 < 0:
        raise ValueError(f"q2, q3 must be non-negative, got {q2}, {q3}")
    op = (np.sqrt(q3) * (pauli("z") * np.cos(beta) - pauli("x") * np.sin(beta))
          - 1j * np.sqrt(q2) * pauli("y")) / (2.0 * np.sqrt(2.0))
    return DissipatorSpec((LindbladTerm(site, op),), label="deformed-raising")


# ---------- initial states ----------

def alternating_initial_ket(n: int) -> np.ndarray:
    """Product ket with (|0>+|1>)/sqrt2 on odd sites, (|0>-|1>)/sqrt2 on even sites."""
    if n < 1:
        raise ValueError("need at least one site")
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    psi = np.array([1.0], dtype=complex)
    for s in range(1, n + 1):
        psi = np.kron(psi, plus if s % 2 == 1 else minus)
    return psi


def alternating_initial_state(n: int) -> np.ndarray:
    """Density matrix of the alternating |+>/|-> product state."""
    psi = alternating_initial_ket(n)
    return np.outer(psi, psi.conj())


def random_product_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Pure product state with Haar-random single-qubit kets (for convergence tests)."""
    psi = np.array([1.0], dtype=complex)
    for _ in range(n):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        psi = np.kron(psi, v)
    return np.outer(psi, psi.conj())
