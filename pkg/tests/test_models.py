"""Hamiltonian builders, dissipator designs, initial states."""

import numpy as np
import pytest

from spinprep import chain, pauli, embed, bloch_state
from spinprep.algebra import check_density_matrix
from spinprep.models import (
    LindbladTerm, DissipatorSpec,
    permutation_hamiltonian, xxz_hamiltonian, heisenberg_hamiltonian,
    ising_hamiltonian, target_dissipator, deformed_raising_dissipator,
    alternating_initial_ket, alternating_initial_state, random_product_state,
)
from spinprep.superop import assemble
from spinprep.solvers import steady_state

SWAP = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)


def test_permutation_hamiltonian_is_swap():
    h = permutation_hamiltonian(chain(2)).toarray()
    assert np.allclose(h, SWAP)
    # qutrit version permutes digit pairs the same way
    h3 = permutation_hamiltonian(chain(2, d=3)).toarray()
    assert np.allclose(h3 @ h3, np.eye(9))
    assert h3.trace() == pytest.approx(3.0)


def test_heisenberg_equals_shifted_permutation():
    # on qubits: P_{j,k} = (1 + sx sx + sy sy + sz sz)/2
    n = 3
    hp = permutation_hamiltonian(chain(n)).toarray()
    hh = heisenberg_hamiltonian(n).toarray()
    assert np.allclose(hh, 2 * hp - (n - 1) * np.eye(2 ** n))


def test_xxz_explicit():
    lat = chain(3)
    h = xxz_hamiltonian(3, 0.7).toarray()
    ref = np.zeros((8, 8), dtype=complex)
    for j in (1, 2):
        for w, c in (("x", 1.0), ("y", 1.0), ("z", 0.7)):
            ref += c * (embed(pauli(w), j, lat) @ embed(pauli(w), j + 1, lat)).toarray()
    assert np.allclose(h, ref)
    assert np.abs(h - h.conj().T).max() < 1e-14


def test_ising_diagonal():
    h = ising_hamiltonian(3).toarray()
    assert np.allclose(h, np.diag(np.diag(h)))
    # |000>: both bonds aligned -> energy 2; |010>: both anti-aligned -> -2
    assert h[0, 0] == pytest.approx(2.0)
    assert h[2, 2] == pytest.approx(-2.0)


def test_lindblad_term_rejects_traceful():
    with pytest.raises(ValueError):
        LindbladTerm(1, np.eye(2))


def test_target_dissipator_pure_vs_mixed():
    pure = target_dissipator(np.diag([1.0, 0.0]).astype(complex))
    assert len(pure.terms) == 1
    assert np.allclose(pure.terms[0].op, pauli("plus"))
    mixed = target_dissipator(bloch_state([0.0, 0.0, 0.3]))
    assert len(mixed.terms) == 2


def test_target_dissipator_fixes_target():
    rng = np.random.default_rng(5)
    lat = chain(1)
    for _ in range(10):
        r = rng.normal(size=3)
        r *= rng.uniform(0.0, 0.5) / np.linalg.norm(r)
        rho_star = bloch_state(r)
        diss = target_dissipator(rho_star, gamma=rng.uniform(0.5, 3.0))
        liouv = assemble(ising_hamiltonian(1), diss, lat)
        assert np.abs(liouv.apply_matrix(rho_star)).max() < 1e-12
        rho = steady_state(liouv)
        assert np.abs(rho - rho_star).max() < 1e-10


def test_deformed_raising_limits():
    # q2 = q3 = 2, beta = 0 gives (sz - i sy)/2 = |1><0| + ... check explicitly
    d = deformed_raising_dissipator(q2=2.0, q3=2.0, beta=0.0)
    op = d.terms[0].op
    ref = (pauli("z") - 1j * pauli("y")) / 2.0
    assert np.allclose(op, ref)
    assert abs(np.trace(op)) < 1e-14
    with pytest.raises(ValueError):
        deformed_raising_dissipator(q2=-1.0, q3=1.0, beta=0.0)


def test_alternating_initial_state():
    psi = alternating_initial_ket(3)
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    ref = np.kron(np.kron(plus, minus), plus)
    assert np.allclose(psi, ref)
    rho = alternating_initial_state(3)
    check_density_matrix(rho)
    assert np.trace(rho @ rho) == pytest.approx(1.0)


def test_random_product_state_valid():
    rng = np.random.default_rng(9)
    for _ in range(5):
        rho = random_product_state(3, rng)
        check_density_matrix(rho)
        assert np.trace(rho @ rho).real == pytest.approx(1.0)


def test_dissipator_embedding_site():
    lat = chain(3)
    diss = target_dissipator(np.diag([1.0, 0.0]).astype(complex), site=2)
    (L,) = diss.embedded(lat)
    ref = np.kron(np.kron(np.eye(2), pauli("plus")), np.eye(2))
    assert np.allclose(L.toarray(), ref)
