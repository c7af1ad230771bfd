"""Steady states, spectra, span closure, Krylov propagation, trajectories."""

import numpy as np
import pytest
from scipy.linalg import expm

from spinprep import chain
from spinprep.algebra import trace_distance, check_density_matrix
from spinprep.models import (
    heisenberg_hamiltonian, xxz_hamiltonian, ising_hamiltonian,
    permutation_hamiltonian, target_dissipator,
    alternating_initial_state, random_product_state,
)
from spinprep.superop import assemble, vectorize, devectorize
from spinprep.solvers import (
    steady_state, uniqueness_dimension, spectral_gap, evans_span_check,
    krylov_expmv, evolve, evolve_populations,
    ConvergenceError, DegenerateSteadyStateError,
)

PURE0 = np.diag([1.0, 0.0]).astype(complex)


def _product_power(rho, n):
    out = rho
    for _ in range(n - 1):
        out = np.kron(out, rho)
    return out


def test_steady_state_direct_null_product_fixed_point():
    from spinprep import bloch_state
    rho_star = bloch_state([0.1, -0.15, 0.2])
    lat = chain(3)
    liouv = assemble(permutation_hamiltonian(lat), target_dissipator(rho_star), lat)
    rho = steady_state(liouv, method="direct-null")
    assert np.abs(rho - _product_power(rho_star, 3)).max() < 1e-10
    check_density_matrix(rho)


def test_steady_state_methods_agree():
    lat = chain(3)
    liouv = assemble(xxz_hamiltonian(3, 1.3), target_dissipator(PURE0), lat)
    a = steady_state(liouv, method="direct-null")
    b = steady_state(liouv, method="evolve-to-fixpoint", tol=1e-10,
                     rho0=alternating_initial_state(3))
    assert trace_distance(a, b) < 1e-8


def test_uniqueness_dimension():
    lat = chain(2)
    liouv = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    assert uniqueness_dimension(liouv) == 1
    # pure Hamiltonian dynamics: every eigenprojector is steady -> nullity = dim
    free = assemble(heisenberg_hamiltonian(2), [], lat)
    assert uniqueness_dimension(free) > 1


def test_degenerate_detection():
    # dissipation on the middle site of an even Ising chain leaves the edges free
    lat = chain(2)
    liouv = assemble(ising_hamiltonian(2), target_dissipator(PURE0, site=1), lat)
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(liouv, method="direct-null", check_unique=True)


def test_single_site_spectrum():
    lat = chain(1)
    liouv = assemble(ising_hamiltonian(1), target_dissipator(PURE0), lat)
    w = np.sort(np.linalg.eigvals(liouv.matrix().toarray()).real)
    assert np.allclose(w, [-2.0, -1.0, -1.0, 0.0], atol=1e-12)
    res = spectral_gap(liouv)
    assert res.gap == pytest.approx(1.0, abs=1e-10)
    assert res.zero_modes == 1


def test_spectral_gap_dense_vs_sector():
    lat = chain(4)
    liouv = assemble(heisenberg_hamiltonian(4), target_dissipator(PURE0), lat)
    dense = spectral_gap(liouv)                 # dim 256 -> dense path
    sector = spectral_gap(liouv, sectors=(0, 1, 2))
    assert dense.gap == pytest.approx(sector.gap, rel=1e-8)


def test_evans_span_check():
    lat = chain(2)
    diss = target_dissipator(PURE0)
    spans, reached = evans_span_check(diss, lat, heisenberg_hamiltonian(2))
    assert spans and reached == 16
    # Ising coupling does not transport the dissipation: closure stays strict
    spans_bad, reached_bad = evans_span_check(diss, lat, ising_hamiltonian(2))
    assert not spans_bad and reached_bad < 16


def test_krylov_expmv_matches_dense():
    rng = np.random.default_rng(12)
    for _ in range(5):
        a = rng.normal(size=(20, 20))
        a -= 1.2 * np.eye(20) * np.abs(a).max()   # push spectrum leftwards
        v = rng.normal(size=20) + 1j * rng.normal(size=20)
        for t in (0.3, 2.0):
            w, err, stats = krylov_expmv(lambda x: a @ x, v, t, tol=1e-10)
            ref = expm(t * a) @ v
            assert np.abs(w - ref).max() < 1e-8
            assert stats["steps"] >= 1


def test_krylov_expmv_rejects_bad_tolerance():
    with pytest.raises(ConvergenceError):
        # m_max too small to represent the propagant at any usable step size
        a = np.diag(np.arange(50.0)) - 25.0 * np.eye(50)
        v = np.ones(50) / np.sqrt(50)
        krylov_expmv(lambda x: a @ x, v, 1.0, tol=1e-30, m_max=3)


def test_evolve_matches_dense_expm():
    lat = chain(2)
    liouv = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    m = liouv.matrix().toarray()
    rho0 = alternating_initial_state(2)
    times = np.array([0.4, 1.1, 3.0])
    traj = evolve(liouv, rho0, times, tol=1e-12, keep_states=True)
    for t, vec in zip(times, traj.states):
        ref = expm(t * m) @ vectorize(rho0)
        assert np.abs(vec - ref).max() < 1e-10


def test_evolve_methods_agree():
    lat = chain(3)
    liouv = assemble(xxz_hamiltonian(3, 0.5), target_dissipator(PURE0), lat)
    rho0 = random_product_state(3, np.random.default_rng(4))
    times = np.array([0.5, 2.0])
    a = evolve(liouv, rho0, times, tol=1e-10, keep_states=True, method="krylov")
    b = evolve(liouv, rho0, times, tol=1e-10, keep_states=True, method="rk")
    for va, vb in zip(a.states, b.states):
        assert np.abs(va - vb).max() < 1e-7


def test_evolve_reduced_and_fidelity():
    lat = chain(3)
    liouv = assemble(heisenberg_hamiltonian(3), target_dissipator(PURE0), lat)
    times = np.geomspace(0.5, 60.0, 6)
    traj = evolve(liouv, alternating_initial_state(3), times, tol=1e-10,
                  observables=[3], target=PURE0)
    f = traj.fidelity_to_target[3]
    assert np.all(np.diff(f[-3:]) > -1e-6)         # relaxing onto the target
    assert f[-1] > 0.99
    for r in traj.reduced[3]:
        check_density_matrix(r, psd_tol=1e-8)


def test_evolve_populations_matches_full_evolution():
    lat = chain(4)
    liouv = assemble(heisenberg_hamiltonian(4), target_dissipator(PURE0), lat)
    rho0 = alternating_initial_state(4)
    times = np.array([1.0, 5.0, 20.0])
    t_out, pops = evolve_populations(liouv, rho0, times, sites=[2, 4], tol=1e-10)
    traj = evolve(liouv, rho0, times, tol=1e-10, observables=[2, 4])
    for s in (2, 4):
        ref = np.array([r[0, 0].real for r in traj.reduced[s]])
        assert np.abs(pops[s] - ref).max() < 1e-9


def test_trajectory_export(tmp_path):
    lat = chain(2)
    liouv = assemble(heisenberg_hamiltonian(2), target_dissipator(PURE0), lat)
    traj = evolve(liouv, alternating_initial_state(2), np.array([0.5, 1.0]),
                  observables=[2], target=PURE0)
    path = tmp_path / "traj.csv"
    traj.export_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=trajectory-v1"
    assert lines[1].startswith("time,site,")
    assert len(lines) == 2 + 2  # two times x one site
