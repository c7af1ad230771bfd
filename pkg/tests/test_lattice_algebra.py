"""Lattice bookkeeping and single/multi-site operator algebra."""

import numpy as np
import pytest

from spinprep import (
    LatticeSpec, chain, pauli, embed, partial_trace,
    fidelity, bloch_vector, bloch_state,
)
from spinprep.algebra import trace_distance, check_density_matrix


def test_chain_edges_and_dim():
    lat = chain(4)
    assert lat.n == 4 and lat.d == 2
    assert lat.edges == ((1, 2), (2, 3), (3, 4))
    assert lat.dim == 16
    assert chain(3, d=3).dim == 27


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeSpec(n=2, d=2, edges=((1, 1),))          # self loop
    with pytest.raises(ValueError):
        LatticeSpec(n=2, d=2, edges=((1, 2), (2, 1)))   # duplicate after normalization
    with pytest.raises(ValueError):
        LatticeSpec(n=2, d=2, edges=((1, 3),))          # out of range


def test_pauli_algebra():
    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    assert np.allclose(sx @ sy - sy @ sx, 2j * sz)
    assert np.allclose(sx @ sx, np.eye(2))
    # raising operator maps |1> (index 1) to |0> (index 0)
    sp_ = pauli("plus")
    assert np.allclose(sp_, np.array([[0, 1], [0, 0]]))
    assert np.allclose(pauli("minus"), sp_.conj().T)


def test_embed_site_placement():
    lat = chain(3)
    sz = pauli("z")
    # site 1 is the leftmost (most significant) tensor factor
    m1 = embed(sz, 1, lat).toarray()
    assert np.allclose(m1, np.kron(sz, np.eye(4)))
    m3 = embed(sz, 3, lat).toarray()
    assert np.allclose(m3, np.kron(np.eye(4), sz))
    with pytest.raises(ValueError):
        embed(sz, 4, lat)


def test_partial_trace_product_state():
    rng = np.random.default_rng(3)
    lat = chain(3)
    locals_ = []
    for _ in range(3):
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        locals_.append(np.outer(psi, psi.conj()))
    rho = np.kron(np.kron(locals_[0], locals_[1]), locals_[2])
    for s in (1, 2, 3):
        red = partial_trace(rho, {s}, lat)
        assert np.allclose(red, locals_[s - 1], atol=1e-13)
    red12 = partial_trace(rho, {1, 2}, lat)
    assert np.allclose(red12, np.kron(locals_[0], locals_[1]), atol=1e-13)


def test_partial_trace_preserves_density_matrix():
    rng = np.random.default_rng(11)
    lat = chain(3)
    for _ in range(5):
        g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        red = partial_trace(rho, {2}, lat)
        check_density_matrix(red)


def test_fidelity_and_trace_distance():
    rho = np.diag([1.0, 0.0]).astype(complex)
    sig = np.diag([0.0, 1.0]).astype(complex)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(rho, sig) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(rho, sig) == pytest.approx(1.0, abs=1e-12)
    # pure-state fidelity reduces to the overlap
    psi = np.array([1.0, 1.0]) / np.sqrt(2)
    plus = np.outer(psi, psi)
    assert fidelity(rho, plus) == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_bloch_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(20):
        r = rng.normal(size=3)
        r *= rng.uniform(0, 0.5) / np.linalg.norm(r)
        rho = bloch_state(r)
        check_density_matrix(rho)
        assert np.allclose(bloch_vector(rho), r, atol=1e-13)
    # pure states sit at radius 1/2
    assert np.linalg.norm(bloch_vector(np.diag([1.0, 0.0]))) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bloch_state([0.6, 0.0, 0.0])
