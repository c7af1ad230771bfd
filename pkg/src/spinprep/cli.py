"""Command-line front end: `spinprep run` and `spinprep reproduce`.

Experiments are described by a JSON config (plus repeatable --set key=value
overrides with dotted paths).  Every run writes one or more CSV data files and
a JSON metadata file carrying the fully resolved config, solver diagnostics,
wall time and the library version.  Exit codes: 0 success, 2 config error,
3 solver non-convergence, 4 state-invariant violation.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import __version__, analysis
from .lattice import LatticeSpec, chain
from .algebra import bloch_state, bloch_vector, partial_trace, fidelity
from .models import (
    permutation_hamiltonian, xxz_hamiltonian, ising_hamiltonian,
    target_dissipator, deformed_raising_dissipator,
    alternating_initial_state, random_product_state, DissipatorSpec, LindbladTerm,
)
from .superop import assemble
from . import solvers as sv

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4

DESK_GAP_MAX_N = 10
DESK_EVOLVE_MAX_N = 11

EXPERIMENTS = ("steady", "gap", "evolve", "collapse", "reach2q",
               "theorem1", "theorem2", "span")
RANDOMIZED = ("theorem1", "theorem2")


class ConfigError(ValueError):
    pass


# ---------- config handling ----------

_ALLOWED = {
    "experiment": None,
    "seed": None,
    "output": None,
    "lattice": {"n", "d", "geometry", "edges"},
    "hamiltonian": {"kind", "delta"},
    "dissipator": {"kind", "bloch", "rate", "site", "q2", "q3", "beta", "matrix",
                   "target"},
    "solver": {"tol", "count", "ncv", "times", "method", "sizes", "site_mode",
               "nu_min", "nu_max", "nu_points", "x_min", "x_max", "x_points",
               "thresholds", "horizon_scale", "trials", "coupling", "k",
               "delta", "q3", "betas", "beta_points", "observables",
               "initial_state", "sites"},
}

_DEFAULTS = {
    "seed": None,
    "output": None,
    "lattice": {"n": 4, "d": 2, "geometry": "chain", "edges": None},
    "hamiltonian": {"kind": "heisenberg", "delta": 1.0},
    "dissipator": {"kind": "target-state", "bloch": [0.0, 0.0, 0.5],
                   "rate": 1.0, "site": 1, "q2": 1.0, "q3": 1.0, "beta": 0.0,
                   "matrix": None, "target": None},
    "solver": {"tol": 1e-8, "count": 6, "ncv": None, "times": None,
               "method": None, "sizes": None, "site_mode": "end",
               "nu_min": 0.0, "nu_max": 4.0, "nu_points": 81,
               "x_min": 0.02, "x_max": 0.6, "x_points": 30,
               "thresholds": [1e-1, 1e-2, 1e-3], "horizon_scale": 1.0,
               "trials": 50, "coupling": "ising", "k": 1.0, "delta": 1.0,
               "q3": 1e6, "betas": None, "beta_points": 25,
               "observables": None, "initial_state": "alternating",
               "sites": None},
}


def _validate_keys(cfg: dict) -> None:
    for key, val in cfg.items():
        if key not in _ALLOWED:
            raise ConfigError(f"unknown config key {key!r}")
        sub = _ALLOWED[key]
        if sub is not None:
            if not isinstance(val, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for k in val:
                if k not in sub:
                    raise ConfigError(f"unknown key {key}.{k!r}")


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _apply_override(cfg: dict, key: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {key!r}")
    node[parts[-1]] = value


def resolve_config(raw: dict) -> dict:
    """Validate keys, merge defaults, and sanity-check the experiment field."""
    _validate_keys(raw)
    if "experiment" not in raw:
        raise ConfigError("config must declare an 'experiment'")
    if raw["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {raw['experiment']!r}; "
                          f"choose from {EXPERIMENTS}")
    cfg = _deep_merge(_DEFAULTS, raw)
    if cfg["experiment"] in RANDOMIZED and cfg.get("seed") is None:
        raise ConfigError(f"experiment {cfg['experiment']!r} is randomized; "
                          "a seed is mandatory")
    return cfg


# ---------- model construction from config ----------

def _build_lattice(cfg: dict) -> LatticeSpec:
    lc = cfg["lattice"]
    n, d = int(lc["n"]), int(lc["d"])
    if lc.get("edges"):
        return LatticeSpec(n=n, d=d, edges=tuple(tuple(e) for e in lc["edges"]))
    if lc.get("geometry", "chain") != "chain":
        raise ConfigError("geometry must be 'chain' or explicit edges")
    return chain(n, d)


def _build_hamiltonian(cfg: dict, lat: LatticeSpec):
    hc = cfg["hamiltonian"]
    kind = hc["kind"]
    if kind == "heisenberg":
        return xxz_hamiltonian(lat.n, 1.0) if lat.d == 2 else \
            2 * permutation_hamiltonian(lat)
    if kind == "xxz":
        return xxz_hamiltonian(lat.n, float(hc["delta"]))
    if kind == "ising":
        return ising_hamiltonian(lat.n)
    if kind == "permutation":
        return permutation_hamiltonian(lat)
    raise ConfigError(f"unknown hamiltonian kind {kind!r}")


def _parse_matrix(entry) -> np.ndarray:
    # nested lists; complex entries as [re, im] pairs or plain numbers
    def cell(x):
        if isinstance(x, (list, tuple)):
            return complex(x[0], x[1])
        return complex(x)
    return np.array([[cell(x) for x in row] for row in entry])


def _build_dissipator(cfg: dict, lat: LatticeSpec) -> DissipatorSpec:
    dc = cfg["dissipator"]
    kind = dc["kind"]
    site = int(dc.get("site", 1))
    if kind == "target-state":
        rho_star = bloch_state(np.asarray(dc["bloch"], dtype=float))
        return target_dissipator(rho_star, gamma=float(dc.get("rate", 1.0)), site=site)
    if kind == "deformed":
        return deformed_raising_dissipator(q2=float(dc["q2"]), q3=float(dc["q3"]),
                                           beta=float(dc["beta"]), site=site)
    if kind == "custom":
        if dc.get("matrix") is None:
            raise ConfigError("custom dissipator needs a 'matrix'")
        return DissipatorSpec((LindbladTerm(site, _parse_matrix(dc["matrix"])),),
                              label="custom")
    raise ConfigError(f"unknown dissipator kind {kind!r}")


def _target_state(cfg: dict):
    dc = cfg["dissipator"]
    if dc["kind"] == "target-state":
        return bloch_state(np.asarray(dc["bloch"], dtype=float))
    if dc.get("target") is not None:
        return bloch_state(np.asarray(dc["target"], dtype=float))
    return None


def _check_desk_caps(cfg: dict) -> None:
    n = int(cfg["lattice"]["n"])
    exp = cfg["experiment"]
    if exp in ("gap", "steady", "span", "theorem1", "theorem2") and n > DESK_GAP_MAX_N:
        raise ConfigError(f"n = {n} exceeds the desk-scale cap {DESK_GAP_MAX_N} "
                          "for this experiment; larger sizes need methods outside "
                          "this package")
    if exp in ("evolve", "collapse") and n > DESK_EVOLVE_MAX_N:
        raise ConfigError(f"n = {n} exceeds the desk-scale evolution cap "
                          f"{DESK_EVOLVE_MAX_N}")


# ---------- experiment runners (return dict of csv name -> rows written) ----------

def _run_steady(cfg, outdir, prefix):
    lat = _build_lattice(cfg)
    liouv = assemble(_build_hamiltonian(cfg, lat), _build_dissipator(cfg, lat), lat)
    method = cfg["solver"]["method"] or "direct-null"
    rho = sv.steady_state(liouv, method=method, tol=min(cfg["solver"]["tol"], 1e-9))
    path = os.path.join(outdir, f"{prefix}.csv")
    with open(path, "w") as fh:
        fh.write("# schema=steady-v1\n")
        fh.write("site,re_rho00,re_rho01,im_rho01,re_rho11,bloch_x,bloch_y,bloch_z\n")
        for s in range(1, lat.n + 1):
            r = partial_trace(rho, {s}, lat)
            b = bloch_vector(r) if lat.d == 2 else [float("nan")] * 3
            fh.write(f"{s},{r[0, 0].real:.12e},{r[0, 1].real:.12e},"
                     f"{r[0, 1].imag:.12e},{r[1, 1].real:.12e},"
                     f"{b[0]:.12e},{b[1]:.12e},{b[2]:.12e}\n")
    resid = float(np.abs(liouv.apply_matrix(rho)).max())
    return [path], {"residual_max": resid, "method": method}


def _run_gap(cfg, outdir, prefix):
    lat = _build_lattice(cfg)
    liouv = assemble(_build_hamiltonian(cfg, lat), _build_dissipator(cfg, lat), lat)
    res = sv.spectral_gap(liouv, count=int(cfg["solver"]["count"]),
                          ncv=cfg["solver"]["ncv"])
    path = os.path.join(outdir, f"{prefix}.csv")
    analysis.write_gap_csv(path, [(lat.n, res.gap)])
    meta = {"gap": res.gap, "tau": 1.0 / res.gap, "zero_modes": res.zero_modes,
            "eigenvalues": [[z.real, z.imag] for z in res.eigenvalues],
            "diagnostics": _jsonable(res.diagnostics)}
    return [path], meta


def _initial_state(cfg, lat, rng):
    which = cfg["solver"]["initial_state"]
    if which == "alternating":
        return alternating_initial_state(lat.n)
    if which == "random-product":
        if rng is None:
            raise ConfigError("random-product initial state needs a seed")
        return random_product_state(lat.n, rng)
    if which == "maximally-mixed":
        return np.eye(lat.dim, dtype=complex) / lat.dim
    raise ConfigError(f"unknown initial_state {which!r}")


def _run_evolve(cfg, outdir, prefix, rng):
    lat = _build_lattice(cfg)
    liouv = assemble(_build_hamiltonian(cfg, lat), _build_dissipator(cfg, lat), lat)
    times = cfg["solver"]["times"]
    if not times:
        raise ConfigError("evolve experiment needs solver.times")
    sites = cfg["solver"]["observables"] or [lat.n]
    target = _target_state(cfg)
    traj = sv.evolve(liouv, _initial_state(cfg, lat, rng), np.asarray(times, float),
                     tol=float(cfg["solver"]["tol"]), observables=sites,
                     target=target, method=cfg["solver"]["method"] or "krylov")
    path = os.path.join(outdir, f"{prefix}.csv")
    traj.export_csv(path)
    return [path], {"sites": list(sites),
                    "accumulated_error": float(np.nansum(traj.step_errors)),
                    "diagnostics": _jsonable(traj.diagnostics)}


def _collapse_site(n: int, mode: str) -> int:
    if mode == "end":
        return n
    if mode == "middle":
        return (n + 1) // 2
    raise ConfigError(f"unknown site_mode {mode!r}")


def _fidelity_curves(cfg, sizes, site_mode):
    """1 - F^2 curves against the pure |0><0| target for several chain sizes."""
    sol = cfg["solver"]
    xs = np.geomspace(float(sol["x_min"]), float(sol["x_max"]), int(sol["x_points"]))
    curves = {}
    for n in sizes:
        if n > DESK_EVOLVE_MAX_N:
            raise ConfigError(f"n = {n} exceeds the desk-scale evolution cap "
                              f"{DESK_EVOLVE_MAX_N}")
        lat = chain(int(n))
        rho_star = np.diag([1.0, 0.0]).astype(complex)
        liouv = assemble(xxz_hamiltonian(lat.n, 1.0),
                         target_dissipator(rho_star, site=1), lat)
        site = _collapse_site(lat.n, site_mode)
        times = xs * lat.n ** 3
        _, pops = sv.evolve_populations(liouv, alternating_initial_state(lat.n),
                                        times, sites=[site],
                                        tol=float(sol["tol"]))
        curves[int(n)] = (times, 1.0 - pops[site])
    return curves


def _run_collapse(cfg, outdir, prefix):
    sol = cfg["solver"]
    sizes = sol["sizes"] or [5, 7, 9]
    curves = _fidelity_curves(cfg, sizes, sol["site_mode"])
    nu_grid = np.linspace(float(sol["nu_min"]), float(sol["nu_max"]),
                          int(sol["nu_points"]))
    result = analysis.scaling_collapse(curves, nu_grid)
    path = os.path.join(outdir, f"{prefix}.csv")
    analysis.write_collapse_csv(path, curves, result.nu)
    return [path], {"best_nu": result.nu, "residual": result.residual,
                    "site_mode": sol["site_mode"], "sizes": [int(s) for s in sizes]}


def _run_reach2q(cfg, outdir, prefix):
    sol = cfg["solver"]
    betas = sol["betas"]
    if betas is None:
        betas = np.linspace(0.0, np.pi, int(sol["beta_points"]))
    pts = analysis.reachability_sweep(float(sol["delta"]), float(sol["k"]),
                                      betas, q3=float(sol["q3"]))
    path = os.path.join(outdir, f"{prefix}.csv")
    analysis.write_reachability_csv(path, pts)
    errs = [abs(p.r ** 2 - analysis.r2_analytic(p.k, p.delta, p.phi)) for p in pts]
    return [path], {"max_abs_error_vs_analytic": float(max(errs)),
                    "delta": float(sol["delta"]), "k": float(sol["k"]),
                    "q3": float(sol["q3"])}


def _run_theorem1(cfg, outdir, prefix, rng):
    lat = _build_lattice(cfg)
    if cfg["dissipator"]["kind"] == "target-state" and cfg["dissipator"]["bloch"] == "random":
        r = rng.normal(size=3)
        r *= rng.uniform(0, 0.5) / np.linalg.norm(r)
        cfg["dissipator"]["bloch"] = [float(x) for x in r]
    rho_star = bloch_state(np.asarray(cfg["dissipator"]["bloch"], dtype=float))
    diss = target_dissipator(rho_star, gamma=float(cfg["dissipator"]["rate"]),
                             site=int(cfg["dissipator"]["site"]))
    liouv = assemble(permutation_hamiltonian(lat), diss, lat)
    rho_inf = rho_star
    for _ in range(lat.n - 1):
        rho_inf = np.kron(rho_inf, rho_star)
    resid = float(np.abs(liouv.apply_matrix(rho_inf)).max())
    nullity = sv.uniqueness_dimension(liouv) if liouv.dim <= sv.DENSE_EIG_CAP else None
    path = os.path.join(outdir, f"{prefix}.csv")
    with open(path, "w") as fh:
        fh.write("# schema=theorem1-v1\n")
        fh.write("n,residual_max,null_dimension\n")
        fh.write(f"{lat.n},{resid:.12e},{'' if nullity is None else nullity}\n")
    return [path], {"residual_max": resid, "null_dimension": nullity,
                    "bloch": list(cfg["dissipator"]["bloch"])}


def _run_theorem2(cfg, outdir, prefix):
    sol = cfg["solver"]
    res = analysis.theorem2_check(int(cfg["lattice"]["n"]),
                                  trials=int(sol["trials"]),
                                  seed=int(cfg["seed"]),
                                  coupling=sol["coupling"])
    path = os.path.join(outdir, f"{prefix}.csv")
    with open(path, "w") as fh:
        fh.write("# schema=theorem2-v1\n")
        fh.write("trial,offdiagonal\n")
        for i, v in enumerate(res.offdiagonals):
            fh.write(f"{i},{v:.12e}\n")
    return [path], {"max_offdiag": res.max_offdiag, "redraws": res.redraws,
                    "coupling": res.coupling}


def _run_span(cfg, outdir, prefix):
    lat = _build_lattice(cfg)
    spans, reached = sv.evans_span_check(_build_dissipator(cfg, lat), lat,
                                         _build_hamiltonian(cfg, lat))
    path = os.path.join(outdir, f"{prefix}.csv")
    with open(path, "w") as fh:
        fh.write("# schema=span-v1\n")
        fh.write("n,spans,reached_dimension,full_dimension\n")
        fh.write(f"{lat.n},{int(spans)},{reached},{lat.dim ** 2}\n")
    return [path], {"spans": bool(spans), "reached_dimension": int(reached)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def run_experiment(cfg: dict, outdir: str) -> dict:
    """Dispatch one resolved config; returns the metadata dict (also written)."""
    _check_desk_caps(cfg)
    os.makedirs(outdir, exist_ok=True)
    prefix = cfg.get("output") or cfg["experiment"]
    rng = np.random.default_rng(cfg["seed"]) if cfg.get("seed") is not None else None
    t0 = time.time()
    exp = cfg["experiment"]
    if exp == "steady":
        paths, meta = _run_steady(cfg, outdir, prefix)
    elif exp == "gap":
        paths, meta = _run_gap(cfg, outdir, prefix)
    elif exp == "evolve":
        paths, meta = _run_evolve(cfg, outdir, prefix, rng)
    elif exp == "collapse":
        paths, meta = _run_collapse(cfg, outdir, prefix)
    elif exp == "reach2q":
        paths, meta = _run_reach2q(cfg, outdir, prefix)
    elif exp == "theorem1":
        paths, meta = _run_theorem1(cfg, outdir, prefix, rng)
    elif exp == "theorem2":
        paths, meta = _run_theorem2(cfg, outdir, prefix)
    elif exp == "span":
        paths, meta = _run_span(cfg, outdir, prefix)
    else:  # unreachable after resolve_config
        raise ConfigError(f"unknown experiment {exp!r}")
    meta_full = {
        "config": _jsonable(cfg),
        "results": _jsonable(meta),
        "csv_files": [os.path.basename(p) for p in paths],
        "wall_time_s": time.time() - t0,
        "version": __version__,
    }
    meta_path = os.path.join(outdir, f"{prefix}.meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta_full, fh, indent=2, sort_keys=True)
    return meta_full


# ---------- figure reproduction bundles ----------

_PAPER_SIZES = {
    "fig2a": [4, 6, 8, 10],
    "fig2b": [10],
    "fig3a": [7, 9, 11],
    "fig3b": [4, 6, 8, 10],
    "fig4": None,
}


def reproduce(figure: str, scale: str, outdir: str, overrides: dict) -> dict:
    if scale == "full":
        raise ConfigError(
            "full scale reproduces the paper's tensor-network sizes (n up to 13), "
            "which exceed desk-scale exact methods; rerun with --scale desk")
    if scale != "desk":
        raise ConfigError(f"unknown scale {scale!r}")
    os.makedirs(outdir, exist_ok=True)
    t0 = time.time()
    meta: dict = {"figure": figure, "scale": scale,
                  "paper_sizes": _PAPER_SIZES.get(figure)}
    ov_solver = overrides.get("solver", {})
    tol = float(ov_solver.get("tol", 1e-8))
    paths: list[str] = []

    if figure == "fig2a":
        sizes = overrides.get("sizes", _PAPER_SIZES["fig2a"])
        targets = {"pure": [0.0, 0.0, 0.5], "mixed": [0.0, 0.0, 0.4]}
        fits = {}
        for label, bloch in targets.items():
            rows = []
            for n in sizes:
                cfgn = resolve_config({"experiment": "gap",
                                       "lattice": {"n": int(n)},
                                       "dissipator": {"kind": "target-state",
                                                      "bloch": bloch}})
                lat = _build_lattice(cfgn)
                liouv = assemble(_build_hamiltonian(cfgn, lat),
                                 _build_dissipator(cfgn, lat), lat)
                res = sv.spectral_gap(liouv)
                rows.append((int(n), res.gap))
            path = os.path.join(outdir, f"fig2a_{label}.csv")
            analysis.write_gap_csv(path, rows)
            paths.append(path)
            if len(rows) >= 3:
                fit = analysis.fit_power_law([r[0] for r in rows[-3:]],
                                             [1.0 / r[1] for r in rows[-3:]])
                fits[label] = {"exponent": fit.exponent, "residual": fit.residual}
            meta[f"tau_{label}"] = {str(r[0]): 1.0 / r[1] for r in rows}
        meta["fits_tau_vs_n"] = fits

    elif figure == "fig2b":
        n = int(overrides.get("n", 10))
        lat = chain(n)
        rho_star = np.diag([1.0, 0.0]).astype(complex)
        liouv = assemble(xxz_hamiltonian(n, 1.0), target_dissipator(rho_star, site=1), lat)
        times = np.geomspace(0.5, 0.7 * n ** 3, int(overrides.get("n_times", 40)))
        sites = list(range(1, n + 1))
        _, pops = sv.evolve_populations(liouv, alternating_initial_state(n),
                                        times, sites=sites, tol=tol)
        path = os.path.join(outdir, "fig2b.csv")
        with open(path, "w") as fh:
            fh.write("# schema=fidelity-v1\n")
            fh.write("time,site,one_minus_F2\n")
            for s in sites:
                for t, p in zip(times, pops[s]):
                    fh.write(f"{t:.12g},{s},{1.0 - p:.12e}\n")
        paths.append(path)
        meta["n"] = n

    elif figure == "fig3a":
        sizes = [int(s) for s in overrides.get("sizes", _PAPER_SIZES["fig3a"])]
        xs = np.geomspace(float(ov_solver.get("x_min", 0.02)),
                          float(ov_solver.get("x_max", 0.6)),
                          int(ov_solver.get("x_points", 30)))
        # one evolution per size records both target sites at once
        curves = {"middle": {}, "end": {}}
        rho_star = np.diag([1.0, 0.0]).astype(complex)
        for n in sizes:
            if n > DESK_EVOLVE_MAX_N:
                raise ConfigError(f"n = {n} exceeds the desk-scale evolution "
                                  f"cap {DESK_EVOLVE_MAX_N}")
            lat = chain(n)
            liouv = assemble(xxz_hamiltonian(n, 1.0),
                             target_dissipator(rho_star, site=1), lat)
            mid = (n + 1) // 2
            times = xs * n ** 3
            _, pops = sv.evolve_populations(liouv, alternating_initial_state(n),
                                            times, sites=[mid, n], tol=tol)
            curves["middle"][n] = (times, 1.0 - pops[mid])
            curves["end"][n] = (times, 1.0 - pops[n])
        nu_grid = np.linspace(0.0, 4.0, 161)
        out = {}
        for mode in ("middle", "end"):
            res = analysis.scaling_collapse(curves[mode], nu_grid)
            path = os.path.join(outdir, f"fig3a_{mode}.csv")
            analysis.write_collapse_csv(path, curves[mode], res.nu)
            paths.append(path)
            out[mode] = {"best_nu": res.nu, "residual": res.residual,
                         "sizes": sizes}
        meta["collapse"] = out

    elif figure == "fig3b":
        sizes = overrides.get("sizes", _PAPER_SIZES["fig3b"])
        thresholds = [1e-1, 1e-2, 1e-3]
        rows = []
        for n in sizes:
            n = int(n)
            lat = chain(n)
            rho_star = np.diag([1.0, 0.0]).astype(complex)
            liouv = assemble(xxz_hamiltonian(n, 1.0),
                             target_dissipator(rho_star, site=1), lat)
            horizon = float(overrides.get("horizon_scale", 1.0)) * 0.9 * n ** 3
            times = np.geomspace(0.5, horizon, int(overrides.get("n_times", 120)))
            _, pops = sv.evolve_populations(liouv, alternating_initial_state(n),
                                            times, sites=[n], tol=tol)
            crossings = analysis.fixed_precision_time(times, 1.0 - pops[n], thresholds)
            rows.append((n, crossings))
        path = os.path.join(outdir, "fig3b.csv")
        with open(path, "w") as fh:
            fh.write("# schema=crossing-v1\n")
            fh.write("n,threshold,time\n")
            for n, cr in rows:
                for thr in thresholds:
                    t = cr[thr]
                    fh.write(f"{n},{thr:g},{'' if t is None else format(t, '.12e')}\n")
        paths.append(path)
        meta["thresholds"] = thresholds

    elif figure == "fig4":
        deltas = overrides.get("deltas", [0.5, 1.0, 2.0])
        ks = overrides.get("ks", [1.0] + [10.0 ** u for u in (0.5, 1.0, 1.5, 2.0)]
                           + [10.0 ** u for u in (-2.0, -1.5, -1.0, -0.5)])
        beta_points = int(overrides.get("beta_points", 25))
        q3 = float(overrides.get("q3", 1e6))
        betas = np.linspace(0.0, np.pi, beta_points)
        all_pts = []
        for delta in deltas:
            for k in ks:
                all_pts.extend(analysis.reachability_sweep(float(delta), float(k),
                                                           betas, q3=q3))
        path = os.path.join(outdir, "fig4.csv")
        analysis.write_reachability_csv(path, all_pts)
        paths.append(path)
        meta["deltas"] = list(map(float, deltas))
        meta["ks"] = list(map(float, ks))
        meta["q3"] = q3

    else:
        raise ConfigError(f"unknown figure {figure!r}; choose from "
                          f"{sorted(_PAPER_SIZES)}")

    meta["csv_files"] = [os.path.basename(p) for p in paths]
    meta["wall_time_s"] = time.time() - t0
    meta["version"] = __version__
    meta["overrides"] = _jsonable(overrides)
    with open(os.path.join(outdir, f"{figure}.meta.json"), "w") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
    return meta


# ---------- entry point ----------

def _add_common(p):
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry (dotted path, JSON value)")
    p.add_argument("--out", default=None, help="output directory "
                   "(default: $SPINPREP_OUT or current directory)")
    p.add_argument("--workers", type=int, default=1,
                   help="bound on internal parallelism (1 = deterministic mode)")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinprep",
                                 description="dissipative remote-state preparation engine")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment from a config file")
    runp.add_argument("--config", required=True)
    _add_common(runp)
    rep = sub.add_parser("reproduce", help="emit the data behind one paper figure")
    rep.add_argument("figure", choices=sorted(_PAPER_SIZES))
    rep.add_argument("--scale", choices=["desk", "full"], default="desk")
    _add_common(rep)
    return ap


def _limit_workers(workers: int) -> None:
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=workers)
    except ImportError:
        pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outdir = args.out or os.environ.get("SPINPREP_OUT") or "."
    _limit_workers(args.workers)
    try:
        if args.command == "run":
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}")
            for kv in args.set:
                if "=" not in kv:
                    raise ConfigError(f"--set expects KEY=VALUE, got {kv!r}")
                _apply_override(raw, *kv.split("=", 1))
            if args.seed is not None:
                raw["seed"] = args.seed
            cfg = resolve_config(raw)
            run_experiment(cfg, outdir)
        else:
            overrides = {}
            for kv in args.set:
                if "=" not in kv:
                    raise ConfigError(f"--set expects KEY=VALUE, got {kv!r}")
                _apply_override(overrides, *kv.split("=", 1))
            reproduce(args.figure, args.scale, outdir, overrides)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sv.ConvergenceError, sv.DegenerateSteadyStateError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except sv.InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
