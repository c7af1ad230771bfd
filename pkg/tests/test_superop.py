"""Vectorization, Liouvillian action and assembly, digit-sum sector blocks."""

import numpy as np
import pytest
import scipy.sparse as sp

from spinprep import chain, pauli, embed
from spinprep.models import (
    xxz_hamiltonian, heisenberg_hamiltonian, ising_hamiltonian,
    target_dissipator, random_product_state,
)
from spinprep.superop import Liouvillian, assemble, vectorize, devectorize

PURE0 = np.diag([1.0, 0.0]).astype(complex)


def _random_state(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_vectorize_roundtrip_and_order():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3))
    v = vectorize(a)
    assert np.allclose(devectorize(v), a)
    # column stacking: entry (i, j) lands at index i + D*j
    assert v[1 + 3 * 2] == a[1, 2]


def test_matrix_free_matches_assembled():
    rng = np.random.default_rng(1)
    for n in (2, 3):
        lat = chain(n)
        liouv = assemble(heisenberg_hamiltonian(n), target_dissipator(PURE0), lat)
        m = liouv.matrix()
        for _ in range(5):
            rho = _random_state(rng, lat.dim)
            ref = devectorize(m @ vectorize(rho))
            assert np.abs(liouv.apply_matrix(rho) - ref).max() < 1e-13


def test_action_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(2)
    lat = chain(3)
    liouv = assemble(xxz_hamiltonian(3, 1.5), target_dissipator(PURE0, site=2), lat)
    for _ in range(5):
        rho = _random_state(rng, 8)
        out = liouv.apply_matrix(rho)
        assert abs(np.trace(out)) < 1e-12
        assert np.abs(out - out.conj().T).max() < 1e-12


def test_rejects_non_hermitian_hamiltonian():
    bad = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        Liouvillian(bad, [])


def test_assembly_cap():
    lat = chain(3)
    liouv = assemble(heisenberg_hamiltonian(3), target_dissipator(PURE0), lat,
                     assemble_cap=16)
    with pytest.raises(ValueError):
        liouv.matrix()
    assert liouv.matrix(force=True).shape == (64, 64)


def test_export_coo_roundtrip(tmp_path):
    lat = chain(2)
    liouv = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    path = tmp_path / "m.txt"
    liouv.export_coo(path)
    rows, cols, vals = [], [], []
    with open(path) as fh:
        assert fh.readline().startswith("#")
        for line in fh:
            r, c, re_, im_ = line.split(",")
            rows.append(int(r)); cols.append(int(c))
            vals.append(float(re_) + 1j * float(im_))
    m = sp.coo_matrix((vals, (rows, cols)), shape=(16, 16))
    assert np.abs((m - liouv.matrix()).toarray()).max() < 1e-15


def test_sector_compatibility_detection():
    lat = chain(2)
    good = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    assert good.sector_compatible()
    # a sigma-x jump mixes digit-sum sectors
    bad = assemble(heisenberg_hamiltonian(2), [embed(pauli("x"), 1, lat)], lat)
    assert not bad.sector_compatible()
    # a non-conserving Hamiltonian also breaks it
    h_bad = embed(pauli("x"), 1, lat)
    assert not assemble(h_bad, target_dissipator(PURE0), lat).sector_compatible()


def test_sector_blocks_reproduce_full_matrix():
    lat = chain(3)
    liouv = assemble(xxz_hamiltonian(3, 0.8), target_dissipator(PURE0), lat)
    m = liouv.matrix().toarray()
    covered = 0
    for sector in range(-3, 4):
        block, idx = liouv.sector_matrix(sector)
        covered += idx.size
        assert np.abs(block.toarray() - m[np.ix_(idx, idx)]).max() < 1e-14
        # the block must be exactly the full matrix restricted to the sector:
        # no couplings may leave it
        other = np.setdiff1d(np.arange(64), idx)
        assert np.abs(m[np.ix_(other, idx)]).max() < 1e-14
    assert covered == 64


def test_sector_spectra_union_is_full_spectrum():
    lat = chain(2)
    liouv = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    full = np.linalg.eigvals(liouv.matrix().toarray())
    parts = []
    for sector in range(-2, 3):
        block, idx = liouv.sector_matrix(sector)
        if idx.size:
            parts.append(np.linalg.eigvals(block.toarray()))
    union = np.concatenate(parts)
    assert union.size == full.size
    # greedy nearest-neighbour matching (eigenvalue sets, possibly degenerate)
    remaining = list(union)
    for lam in full:
        j = int(np.argmin(np.abs(np.asarray(remaining) - lam)))
        assert abs(remaining[j] - lam) < 1e-10
        remaining.pop(j)
