"""Liouvillian superoperator: drho/dt = i[rho, H] + sum_k (2 L rho L+ - rho L+L - L+L rho).

Column-stacking vectorization throughout: vec(A X B) = (B^T kron A) vec(X).
The assembled sparse matrix is

    M = i (H^T kron 1 - 1 kron H)
        + sum_k [ 2 conj(L_k) kron L_k - 1 kron (L_k+ L_k) - (L_k+ L_k)^T kron 1 ],

built only below a configurable dimension cap; the matrix-free action computes
the same map from the (D, D) matrix form of the state without Kronecker products.

For Hamiltonians conserving the total digit sum (magnetization for d = 2) and
digit-sum-homogeneous jump operators, the superoperator is block diagonal in
sectors labelled by m = charge(row) - charge(column) of the operator basis
|i><j|.  `sector_matrix` assembles one block directly as a sparse matrix,
which is what makes gaps at n = 10 and trajectories at n = 11 affordable.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .lattice import LatticeSpec
from .models import DissipatorSpec

DEFAULT_ASSEMBLE_CAP = 4 ** 8
HERMITICITY_TOL = 1e-12


# ---------- vectorization ----------

def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a D x D matrix into a length D^2 vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F")


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of vectorize."""
    v = np.asarray(v).ravel()
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


# ---------- the Liouvillian ----------

class Liouvillian:
    """Lindblad generator for a Hamiltonian plus a set of global jump operators."""

    def __init__(self, h, jump_ops, lattice: LatticeSpec | None = None,
                 assemble_cap: int = DEFAULT_ASSEMBLE_CAP):
        h = sp.csr_matrix(h, dtype=complex)
        if h.shape[0] != h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {h.shape}")
        if h.nnz:
            scale = max(1.0, abs(h).max())
            if abs(h - h.conj().T).max() > HERMITICITY_TOL * scale:
                raise ValueError("Hamiltonian not Hermitian within tolerance")
        self.h = h
        self.h_t = h.T.tocsr()
        self.lattice = lattice
        self.assemble_cap = assemble_cap
        self.jumps: list[sp.csr_matrix] = []
        self._jump_data = []
        for L in jump_ops:
            L = sp.csr_matrix(L, dtype=complex)
            if L.shape != h.shape:
                raise ValueError(f"jump operator shape {L.shape} != {h.shape}")
            g = (L.conj().T @ L).tocsr()
            self.jumps.append(L)
            # (L, conj(L) for right-mult by L+, G = L+L, G^T)
            self._jump_data.append((L, L.conj().tocsr(), g, g.T.tocsr()))
        self._matrix = None

    @property
    def hilbert_dim(self) -> int:
        return self.h.shape[0]

    @property
    def dim(self) -> int:
        """Superoperator dimension D^2."""
        return self.h.shape[0] ** 2

    # -- action --

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) on the D x D matrix form; rho need not be Hermitian."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != self.h.shape:
            raise ValueError(f"state shape {rho.shape} != {self.h.shape}")
        # i[rho, H] = i (rho H - H rho); rho H computed as (H^T rho^T)^T
        out = 1j * ((self.h_t @ rho.T).T - self.h @ rho)
        for L, L_conj, g, g_t in self._jump_data:
            t = L @ rho
            out += 2.0 * (L_conj @ t.T).T          # 2 L rho L+
            out -= (g_t @ rho.T).T                 # rho L+L
            out -= g @ rho                         # L+L rho
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-free action on a vectorized state."""
        v = np.asarray(v).ravel()
        if v.size != self.dim:
            raise ValueError(f"vector length {v.size} != {self.dim}")
        d = self.hilbert_dim
        return vectorize(self.apply_matrix(v.reshape(d, d, order="F")))

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.apply, dtype=complex)

    # -- assembly --

    def matrix(self, force: bool = False) -> sp.csr_matrix:
        """Assembled sparse superoperator (cached); refuses above the dimension cap."""
        if self._matrix is not None:
            return self._matrix
        if self.dim > self.assemble_cap and not force:
            raise ValueError(
                f"superoperator dimension {self.dim} exceeds assembly cap "
                f"{self.assemble_cap}; use the matrix-free action or force=True")
        d = self.hilbert_dim
        eye = sp.identity(d, format="csr", dtype=complex)
        m = 1j * (sp.kron(self.h_t, eye) - sp.kron(eye, self.h))
        for L, L_conj, g, g_t in self._jump_data:
            m = m + 2.0 * sp.kron(L_conj, L) - sp.kron(eye, g) - sp.kron(g_t, eye)
        m = m.tocsr()
        m.eliminate_zeros()
        self._matrix = m
        return m

    def export_coo(self, path) -> None:
        """Write the assembled matrix as 'row,col,re,im' text for cross-tool checks."""
        m = self.matrix().tocoo()
        with open(path, "w") as fh:
            fh.write("# row,col,re,im\n")
            for r, c, v in zip(m.row, m.col, m.data):
                fh.write(f"{r},{c},{v.real:.17g},{v.imag:.17g}\n")

    # -- digit-sum (magnetization) sectors --

    def charges(self) -> np.ndarray:
        """Digit sum of every basis state (total magnetization label for d = 2)."""
        if self.lattice is None:
            raise ValueError("sector machinery needs a LatticeSpec")
        d, n = self.lattice.d, self.lattice.n
        idx = np.arange(self.hilbert_dim)
        c = np.zeros(self.hilbert_dim, dtype=np.int64)
        for s in range(n):
            c += (idx // d ** s) % d
        return c

    def sector_compatible(self) -> bool:
        """True when H conserves the digit sum and each jump shifts it uniformly."""
        try:
            ch = self.charges()
        except ValueError:
            return False
        if _charge_degree(self.h, ch) != 0:
            return False
        return all(_charge_degree(L, ch) is not None for L in self.jumps)

    def sector_pairs(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Basis pairs (i, j) with charge(i) - charge(j) = m, lexicographic order."""
        ch = self.charges()
        by_charge = {}
        for c in np.unique(ch):
            by_charge[int(c)] = np.nonzero(ch == c)[0]
        rows, cols = [], []
        for cj, jidx in sorted(by_charge.items()):
            iidx = by_charge.get(cj + m)
            if iidx is None:
                continue
            rows.append(np.repeat(iidx, jidx.size))
            cols.append(np.tile(jidx, iidx.size))
        if not rows:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        return np.concatenate(rows), np.concatenate(cols)

    def sector_matrix(self, m: int) -> tuple[sp.csr_matrix, np.ndarray]:
        """Sparse block of the superoperator on sector m.

        Returns (block, global_indices) where global_indices[p] = i + D*j maps
        the p-th sector coordinate to its position in the full vectorized state.
        """
        if not self.sector_compatible():
            raise ValueError("model does not have digit-sum sector structure")
        ch = self.charges()
        D = self.hilbert_dim
        I, J = self.sector_pairs(m)
        pos = _position_lookup(I, J, D)
        nm = I.size
        block = 1j * (_right_block(self.h, I, J, pos, nm, D)
                      - _left_block(self.h, I, J, pos, nm, D))
        for L, _, g, _ in self._jump_data:
            dk = _charge_degree(L, ch)
            Ik, Jk = self.sector_pairs(m + dk)
            pos_k = _position_lookup(Ik, Jk, D)
            lift = _left_block(L, I, J, pos_k, Ik.size, D)           # m -> m+dk
            drop = _right_block(L.conj().T.tocsr(), Ik, Jk, pos, nm, D)  # m+dk -> m
            block = block + 2.0 * (drop @ lift)
            block = block - _right_block(g, I, J, pos, nm, D)
            block = block - _left_block(g, I, J, pos, nm, D)
        block = block.tocsr()
        block.eliminate_zeros()
        return block, I + D * J


def assemble(h, dissipators, lattice: LatticeSpec,
             assemble_cap: int = DEFAULT_ASSEMBLE_CAP) -> Liouvillian:
    """Build the Liouvillian from a Hamiltonian and a DissipatorSpec
    (or an explicit list of global jump matrices)."""
    if isinstance(dissipators, DissipatorSpec):
        jumps = dissipators.embedded(lattice)
    else:
        jumps = list(dissipators)
    return Liouvillian(h, jumps, lattice=lattice, assemble_cap=assemble_cap)


# ---------- sector assembly helpers ----------

def _charge_degree(a: sp.spmatrix, charges: np.ndarray):
    """charge(row) - charge(col), identical over all nonzeros; None if inhomogeneous."""
    coo = a.tocoo()
    if coo.nnz == 0:
        return 0
    degs = charges[coo.row] - charges[coo.col]
    d0 = int(degs[0])
    return d0 if (degs == d0).all() else None


def _position_lookup(I: np.ndarray, J: np.ndarray, D: int) -> np.ndarray:
    pos = np.full(D * D, -1, dtype=np.int64)
    pos[I + D * J] = np.arange(I.size)
    return pos


def _ragged_gather(ptr: np.ndarray, keys: np.ndarray):
    """For each key, the index range ptr[key]:ptr[key+1]; returns (flat, owner)."""
    ptr = np.asarray(ptr, dtype=np.int64)
    lens = ptr[keys + 1] - ptr[keys]
    total = int(lens.sum())
    owner = np.repeat(np.arange(keys.size), lens)
    starts = np.repeat(ptr[keys], lens)
    shift = np.repeat(np.cumsum(lens) - lens, lens)
    flat = starts + (np.arange(total) - shift)
    return flat, owner


def _left_block(a: sp.spmatrix, I, J, pos_to, n_to: int, D: int) -> sp.csr_matrix:
    """Sector block of rho -> A rho, from pairs (I, J) into the target sector."""
    a_csc = a.tocsc()
    flat, owner = _ragged_gather(a_csc.indptr, I)
    rows = pos_to[a_csc.indices[flat] + D * J[owner]]
    if rows.size and rows.min() < 0:
        raise ValueError("left-multiplication leaves the expected sector")
    return sp.coo_matrix((a_csc.data[flat], (rows, owner)),
                         shape=(n_to, I.size)).tocsr()


def _right_block(b: sp.spmatrix, I, J, pos_to, n_to: int, D: int) -> sp.csr_matrix:
    """Sector block of rho -> rho B, from pairs (I, J) into the target sector."""
    b_csr = b.tocsr()
    flat, owner = _ragged_gather(b_csr.indptr, J)
    rows = pos_to[I[owner] + D * b_csr.indices[flat]]
    if rows.size and rows.min() < 0:
        raise ValueError("right-multiplication leaves the expected sector")
    return sp.coo_matrix((b_csr.data[flat], (rows, owner)),
                         shape=(n_to, I.size)).tocsr()
