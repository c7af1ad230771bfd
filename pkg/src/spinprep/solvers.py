"""Steady states, spectral gaps, uniqueness checks and time evolution.

The gap solver works on the rightmost part of the non-Hermitian spectrum.
Whenever the model has digit-sum sector structure (Sz-conserving H with
homogeneous jumps) the search runs per sector on directly assembled sparse
blocks; otherwise it falls back to ARPACK on the matrix-free action or to a
dense decomposition for small systems.

Time evolution uses an adaptive Krylov (Arnoldi) approximation of the matrix
exponential action; an adaptive explicit Runge-Kutta mode is available for
cross-validation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import expm as dense_expm
from scipy.integrate import solve_ivp

from .lattice import LatticeSpec
from .algebra import partial_trace, fidelity, check_density_matrix
from .models import DissipatorSpec
from .superop import Liouvillian, vectorize, devectorize

ZERO_MODE_TOL = 1e-9
SHIFT_INVERT_CAP = 20000      # sparse-LU shift-invert only below this block size
SHIFT_INVERT_SIGMA = 0.01     # real shift placing the origin nearest to sigma
DENSE_EIG_CAP = 4100          # largest superoperator dimension for dense eig
TRACE_DEV_LIMIT = 1e-9
MIN_EIG_LIMIT = -1e-8


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance within budget."""


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space has dimension > 1; no unique steady state."""


class InvariantViolation(RuntimeError):
    """A state left the physical manifold beyond tolerance (instability signal)."""


# ---------- steady states ----------

def _liouvillian_scale(liouv: Liouvillian) -> float:
    s = abs(liouv.h).max() if liouv.h.nnz else 0.0
    for L in liouv.jumps:
        s += 2.0 * float(abs(L).max()) ** 2
    return max(s, 1.0)


def _finalize_state(x: np.ndarray, psd_tol: float = 1e-8) -> np.ndarray:
    rho = devectorize(x)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise ConvergenceError("candidate steady state has vanishing trace")
    rho = rho / tr
    w = np.linalg.eigvalsh(rho)
    if w.min() < -psd_tol:
        raise InvariantViolation(
            f"steady-state candidate not PSD (min eigenvalue {w.min():.3e})")
    return rho


def steady_state(liouv: Liouvillian, method: str = "direct-null", tol: float = 1e-10,
                 check_unique: bool | None = None, rho0: np.ndarray | None = None,
                 max_doublings: int = 60) -> np.ndarray:
    """Solve L(rho) = 0 with tr(rho) = 1.

    direct-null: sparse solve of the assembled matrix with one equation replaced
    by the trace normalization.  evolve-to-fixpoint: Krylov propagation with a
    doubling horizon until the residual drops below tolerance.
    """
    scale = _liouvillian_scale(liouv)
    if method == "direct-null":
        m = liouv.matrix()
        D = liouv.hilbert_dim
        trace_row = sp.csr_matrix(
            (np.ones(D), (np.zeros(D, dtype=int), np.arange(D) * (D + 1))),
            shape=(1, D * D), dtype=complex)
        k = sp.vstack([trace_row, m[1:, :]]).tocsc()
        b = np.zeros(D * D, dtype=complex)
        b[0] = 1.0
        with warnings.catch_warnings():
            # a singular factorization is handled by the residual check below
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            x = spla.spsolve(k, b)
        resid = np.linalg.norm(m @ x) / max(np.linalg.norm(x), 1e-300)
        if not np.isfinite(resid) or resid > tol * scale:
            # the replaced equation may have been essential; retry via least squares
            x = spla.lsqr(k, b, atol=1e-14, btol=1e-14, iter_lim=20000)[0]
            resid = np.linalg.norm(m @ x) / max(np.linalg.norm(x), 1e-300)
            if not np.isfinite(resid) or resid > tol * scale:
                raise ConvergenceError(
                    f"direct-null residual {resid:.3e} above {tol * scale:.3e}")
        if check_unique is None:
            check_unique = liouv.dim <= 1024
        if check_unique:
            nullity = uniqueness_dimension(liouv)
            if nullity != 1:
                raise DegenerateSteadyStateError(
                    f"null space dimension {nullity}, steady state not unique")
        return _finalize_state(x)

    if method == "evolve-to-fixpoint":
        if rho0 is None:
            D = liouv.hilbert_dim
            rho0 = np.eye(D, dtype=complex) / D
        v = vectorize(np.asarray(rho0, dtype=complex))
        horizon = 1.0 / scale
        for _ in range(max_doublings):
            v = krylov_expmv(liouv.apply, v, horizon, tol=min(tol, 1e-10))[0]
            resid = np.linalg.norm(liouv.apply(v)) / max(np.linalg.norm(v), 1e-300)
            if resid <= tol * scale:
                return _finalize_state(v)
            horizon *= 2.0
        raise ConvergenceError(
            f"evolve-to-fixpoint residual {resid:.3e} above {tol * scale:.3e} "
            f"after {max_doublings} horizon doublings")

    raise ValueError(f"unknown steady-state method {method!r}")


def uniqueness_dimension(liouv: Liouvillian, tol: float = ZERO_MODE_TOL) -> int:
    """Null-space dimension of the assembled Liouvillian (dense eigenvalues)."""
    if liouv.dim > DENSE_EIG_CAP:
        raise ValueError(
            f"uniqueness_dimension needs dense eigenvalues; dimension {liouv.dim} "
            f"exceeds cap {DENSE_EIG_CAP}")
    w = np.linalg.eigvals(liouv.matrix().toarray())
    scale = max(np.abs(w.real).max(), 1e-300)
    return int(np.count_nonzero(np.abs(w) < tol * scale))


# ---------- spectral gap ----------

@dataclass
class SpectralResult:
    """Rightmost Liouvillian eigenvalues and the spectral gap g = -Re(lambda_1)."""

    eigenvalues: np.ndarray
    gap: float
    zero_modes: int
    diagnostics: dict = field(default_factory=dict)


def _rightmost_eigs(mat_or_op, dim: int, k: int, ncv: int | None,
                    maxiter: int | None) -> np.ndarray:
    if dim <= DENSE_EIG_CAP and sp.issparse(mat_or_op):
        return np.linalg.eigvals(mat_or_op.toarray())
    k_eff = min(k, dim - 2)
    if ncv is None:
        ncv = min(dim, max(40, 4 * k_eff))
    vals = spla.eigs(mat_or_op, k=k_eff, which="LR", ncv=ncv,
                     maxiter=maxiter, return_eigenvectors=False, tol=0)
    return vals


def spectral_gap(liouv: Liouvillian, count: int = 6, tol: float = ZERO_MODE_TOL,
                 ncv: int | None = None, sectors=None,
                 maxiter: int | None = None) -> SpectralResult:
    """Gap g = -Re(lambda_1), lambda_1 the eigenvalue with largest nonzero real part.

    `count` rightmost eigenvalues are retained (per sector when sector structure
    is available).  The steady eigenvalue is identified by |lambda| < tol * scale
    and deflated before reading off the gap.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    diagnostics: dict = {}
    all_vals = []
    sectorable = liouv.lattice is not None and liouv.sector_compatible()
    if liouv.dim <= 1024 or (liouv.dim <= DENSE_EIG_CAP and not sectorable):
        all_vals.append(np.linalg.eigvals(liouv.matrix(force=True).toarray()))
        diagnostics["method"] = "dense"
    elif sectorable:
        if sectors is None:
            sectors = (0, 1, 2)
        diagnostics["method"] = "sector-arpack"
        diagnostics["sectors"] = tuple(sectors)
        for m in sectors:
            block, idx = liouv.sector_matrix(m)
            if block.shape[0] == 0:
                continue
            if block.shape[0] <= DENSE_EIG_CAP:
                vals = np.linalg.eigvals(block.toarray())
            else:
                vals = _rightmost_eigs(block, block.shape[0], count, ncv, maxiter)
                if m == 0:
                    # restarted Arnoldi with which='LR' reliably finds the
                    # large-|Im| modes near the spectral hull but can skip the
                    # small-magnitude rightmost ones (including the steady
                    # zero mode); resolve the neighbourhood of the origin by
                    # shift-invert when a factorization is affordable
                    D = liouv.hilbert_dim
                    w = (idx % D == idx // D).astype(complex)
                    diagnostics["trace_functional_residual"] = float(
                        np.abs(block.T @ w).max())
                    if block.shape[0] <= SHIFT_INVERT_CAP:
                        near0 = spla.eigs(block.tocsc(), k=min(count, 4),
                                          sigma=SHIFT_INVERT_SIGMA, which="LM",
                                          return_eigenvectors=False)
                        vals = np.concatenate([vals, near0])
            all_vals.append(vals)
            diagnostics[f"sector_{m}_rightmost"] = complex(
                vals[np.argmax(vals.real)])
    else:
        diagnostics["method"] = "full-arpack"
        try:
            op = liouv.matrix()
        except ValueError:
            op = liouv.as_linear_operator()
        all_vals.append(_rightmost_eigs(op, liouv.dim, count + 4, ncv, maxiter))

    vals = np.concatenate(all_vals)
    tol0 = tol * _liouvillian_scale(liouv)
    zero_mask = np.abs(vals) < tol0
    n_zero = int(zero_mask.sum())
    if n_zero == 0:
        # the eigensolver may not have resolved the steady mode; accept its
        # existence when trace preservation holds exactly (tr L(rho) = 0 for
        # random rho), which pins a zero eigenvalue analytically
        rng = np.random.default_rng(0)
        D = liouv.hilbert_dim
        tr_dev = 0.0
        for _ in range(3):
            g = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
            rho = g @ g.conj().T
            rho /= np.trace(rho)
            tr_dev = max(tr_dev, abs(np.trace(liouv.apply_matrix(rho))))
        if tr_dev < tol0:
            n_zero = 1
            diagnostics["zero_mode_verified_by_trace_preservation"] = True
        else:
            raise ConvergenceError(
                "no zero mode found; assembly is not trace preserving or the "
                "eigensolver missed the steady state")
    nonzero = vals[~zero_mask]
    order = np.argsort(-nonzero.real)
    top = nonzero[order[:count]]
    gap = -float(top[0].real)
    diagnostics["separation_ok"] = bool(abs(top[0]) > 10.0 * tol0)
    diagnostics["zero_tolerance"] = tol0
    return SpectralResult(eigenvalues=top, gap=gap, zero_modes=n_zero,
                          diagnostics=diagnostics)


# ---------- operator-algebra span check (steady-state uniqueness criterion) ----------

def evans_span_check(dissipators, lattice: LatticeSpec, h,
                     tol: float = 1e-10, max_dim: int = 4096):
    """Closure of {L_k, L_k+, H} under products and sums as a linear subspace.

    Returns (spans, reached_dimension): the steady state is unique exactly when
    the closure is the whole d^(2n)-dimensional operator space.  The recursion
    that transports site-m operators down the chain via H is realized here as a
    breadth-first product closure.
    """
    D = lattice.dim
    full = D * D
    if full > max_dim:
        raise ValueError(f"operator space dimension {full} exceeds cap {max_dim}")
    if isinstance(dissipators, DissipatorSpec):
        ops = [mat.toarray() for mat in dissipators.embedded(lattice)]
    else:
        ops = [np.asarray(sp.csr_matrix(o, dtype=complex).toarray()) for o in dissipators]
    gens = []
    for L in ops:
        gens.append(L)
        gens.append(L.conj().T)
    h = sp.csr_matrix(h, dtype=complex).toarray()
    gens.append(h)
    gens = [g / np.linalg.norm(g) for g in gens if np.linalg.norm(g) > 0]

    basis_vecs = np.zeros((0, full), dtype=complex)
    basis_mats: list[np.ndarray] = []

    def try_add(mat: np.ndarray) -> bool:
        nonlocal basis_vecs
        v = mat.ravel()
        nrm = np.linalg.norm(v)
        if nrm < tol:
            return False
        v = v / nrm
        if len(basis_mats):
            for _ in range(2):  # re-orthogonalize for stability
                v = v - basis_vecs.T @ (basis_vecs.conj() @ v)
        res = np.linalg.norm(v)
        if res < tol:
            return False
        v = v / res
        basis_vecs = np.vstack([basis_vecs, v])
        basis_mats.append(v.reshape(D, D))
        return True

    frontier = []
    for g in gens:
        if try_add(g):
            frontier.append(basis_mats[-1])
    while frontier and len(basis_mats) < full:
        new_frontier = []
        for b in frontier:
            for g in gens:
                for prod in (b @ g, g @ b):
                    if try_add(prod):
                        new_frontier.append(basis_mats[-1])
        frontier = new_frontier
    reached = len(basis_mats)
    return reached == full, reached


# ---------- time evolution ----------

def krylov_expmv(matvec, v: np.ndarray, t: float, tol: float = 1e-8,
                 m_max: int = 30, first_step: float = 0.01):
    """exp(t*A) v by adaptive-step Arnoldi projection.

    Returns (w, accumulated_error_estimate, stats).  Local steps are accepted
    when the difference between the order-m and order-(m-2) Krylov propagants
    is below the per-step share of `tol`; rejected steps halve tau (the Arnoldi
    basis is reused, only the small exponential is recomputed).
    """
    v = np.asarray(v, dtype=complex)
    if t == 0:
        return v.copy(), 0.0, {"steps": 0, "matvecs": 0}
    n = v.size
    remaining = float(t)
    tau = min(first_step, remaining)
    err_total = 0.0
    steps = 0
    matvecs = 0
    while remaining > 1e-14 * t:
        beta = np.linalg.norm(v)
        if beta == 0.0:
            break
        m_used = min(m_max, n)
        V = np.empty((m_used + 1, n), dtype=complex)
        H = np.zeros((m_used + 1, m_used), dtype=complex)
        V[0] = v / beta
        happy = False
        m = m_used
        for j in range(m_used):
            w = np.asarray(matvec(V[j]))
            matvecs += 1
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w -= H[i, j] * V[i]
            # one re-orthogonalization pass
            corr = V[: j + 1].conj() @ w
            H[: j + 1, j] += corr
            w -= corr @ V[: j + 1]
            hn = np.linalg.norm(w)
            H[j + 1, j] = hn
            if hn < 1e-14 * max(1.0, abs(H).max()):
                happy = True
                m = j + 1
                break
            V[j + 1] = w / hn
        # adaptive acceptance loop over tau (Arnoldi basis reused)
        while True:
            tau = min(tau, remaining)
            x_m = dense_expm(tau * H[:m, :m])[:, 0]
            if happy or m <= 2:
                err = 0.0
            else:
                x_lo = dense_expm(tau * H[:m - 2, :m - 2])[:, 0]
                diff = x_m.copy()
                diff[:m - 2] -= x_lo
                err = beta * np.linalg.norm(diff)
            loc_tol = tol * beta * (tau / t)
            if err <= max(loc_tol, 1e-16 * beta) or happy:
                v = beta * (x_m @ V[:m])
                remaining -= tau
                err_total += err
                steps += 1
                if err < 0.1 * loc_tol:
                    tau *= 1.5
                break
            tau *= 0.5
            if tau < 1e-12 * t:
                raise ConvergenceError("Krylov step size underflow")
    return v, err_total, {"steps": steps, "matvecs": matvecs}


@dataclass
class Trajectory:
    """Sampled Lindblad evolution: states and/or requested one-site reductions."""

    times: np.ndarray
    states: list | None = None                 # vectorized full states
    reduced: dict | None = None                # site -> list of d x d states
    fidelity_to_target: dict | None = None     # site -> array, if target given
    step_errors: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def export_csv(self, path) -> None:
        """CSV: time, site, re(rho00), re(rho01), im(rho01), re(rho11), fidelity_to_target."""
        if self.reduced is None:
            raise ValueError("trajectory holds no reduced states to export")
        with open(path, "w") as fh:
            fh.write("# schema=trajectory-v1\n")
            fh.write("time,site,re_rho00,re_rho01,im_rho01,re_rho11,fidelity_to_target\n")
            for site, mats in sorted(self.reduced.items()):
                fids = (self.fidelity_to_target or {}).get(site)
                for i, (t, r) in enumerate(zip(self.times, mats)):
                    f = fids[i] if fids is not None else float("nan")
                    fh.write(f"{t:.12g},{site},{r[0, 0].real:.12e},{r[0, 1].real:.12e},"
                             f"{r[0, 1].imag:.12e},{r[1, 1].real:.12e},{f:.12e}\n")


def evolve(liouv: Liouvillian, rho0: np.ndarray, times, tol: float = 1e-8,
           observables=None, target: np.ndarray | None = None,
           method: str = "krylov", m_max: int = 30,
           keep_states: bool | None = None) -> Trajectory:
    """Propagate rho(t) = exp(L t) rho0 and sample at the given times.

    `observables` is a list of sites whose reduced states are recorded;
    `target` additionally records the Uhlmann fidelity of each reduction to it.
    method='rk' switches to an adaptive explicit Runge-Kutta integrator for
    cross-validation of the default Krylov stepper.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be a strictly increasing non-negative array")
    rho0 = np.asarray(rho0, dtype=complex)
    check_density_matrix(rho0, herm_tol=1e-10, trace_tol=1e-10)
    lattice = liouv.lattice
    if observables and lattice is None:
        raise ValueError("reduced-state observables need a LatticeSpec")
    if keep_states is None:
        keep_states = not observables

    v = vectorize(rho0)
    samples: list[np.ndarray] = []
    step_errors = []
    if method == "rk":
        sol = solve_ivp(lambda t, y: liouv.apply(y), (0.0, float(times[-1])), v,
                        t_eval=times, method="DOP853", rtol=tol, atol=tol * 1e-2)
        if not sol.success:
            raise ConvergenceError(f"RK integration failed: {sol.message}")
        samples = [sol.y[:, i] for i in range(times.size)]
        step_errors = [np.nan] * times.size
    elif method == "krylov":
        t_cur = 0.0
        for t_s in times:
            if t_s > t_cur:
                v, err, _ = krylov_expmv(liouv.apply, v, t_s - t_cur,
                                         tol=tol, m_max=m_max)
                t_cur = t_s
            else:
                err = 0.0
            samples.append(v.copy())
            step_errors.append(err)
    else:
        raise ValueError(f"unknown evolve method {method!r}")

    reduced = {s: [] for s in (observables or [])}
    fids = {s: [] for s in (observables or [])} if target is not None else None
    check_psd = liouv.hilbert_dim <= 512
    for w in samples:
        rho = devectorize(w)
        tr_dev = abs(np.trace(rho) - 1.0)
        if tr_dev > max(TRACE_DEV_LIMIT, 10.0 * tol):
            raise InvariantViolation(f"trace deviation {tr_dev:.3e} signals instability")
        if check_psd:
            w_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
            if w_min < min(MIN_EIG_LIMIT, -10.0 * tol):
                raise InvariantViolation(f"negativity {w_min:.3e} signals instability")
        for s in (observables or []):
            r = partial_trace(rho, {s}, lattice)
            reduced[s].append(r)
            if target is not None:
                fids[s].append(fidelity(target, r / np.trace(r).real))
    return Trajectory(
        times=times,
        states=samples if keep_states else None,
        reduced=reduced if observables else None,
        fidelity_to_target={s: np.array(f) for s, f in fids.items()} if fids else None,
        step_errors=np.asarray(step_errors),
        diagnostics={"method": method, "tol": tol,
                     "psd_checked": bool(check_psd)},
    )


def evolve_populations(liouv: Liouvillian, rho0: np.ndarray, times, sites,
                       tol: float = 1e-8, m_max: int = 30):
    """Fast path for site populations <0|rho_k(t)|0> using the m = 0 sector only.

    Valid whenever the model is sector compatible: populations never couple to
    the coherence sectors.  For a pure target |0><0| at site k the fidelity is
    F^2 = <0|rho_k|0>, so this path drives the scaling-collapse pipeline.
    Returns (times, {site: population array}).
    """
    if not liouv.sector_compatible():
        raise ValueError("population fast path needs digit-sum sector structure")
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be strictly increasing and non-negative")
    lattice = liouv.lattice
    d, n = lattice.d, lattice.n
    if d != 2:
        raise ValueError("population fast path is qubit-only")
    block, idx = liouv.sector_matrix(0)
    v_full = vectorize(np.asarray(rho0, dtype=complex))
    v = v_full[idx]
    D = liouv.hilbert_dim
    I = idx % D   # diagonal-difference sector stores pairs (i, j); i = idx mod D
    J = idx // D
    diag = I == J
    weights = {}
    for s in sites:
        bit = (I >> (n - s)) & 1
        weights[s] = (diag & (bit == 0)).astype(float)
    pops = {s: [] for s in sites}
    t_cur = 0.0
    for t_s in times:
        if t_s > t_cur:
            v, _, _ = krylov_expmv(lambda x: block @ x, v, t_s - t_cur,
                                   tol=tol, m_max=m_max)
            t_cur = t_s
        tr = float((v[diag]).sum().real)
        if abs(tr - 1.0) > max(TRACE_DEV_LIMIT, 10.0 * tol):
            raise InvariantViolation(f"trace deviation {tr - 1.0:.3e} in sector evolution")
        for s in sites:
            pops[s].append(float((weights[s] @ v).real))
    return times, {s: np.asarray(p) for s, p in pops.items()}
