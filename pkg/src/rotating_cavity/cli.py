"""Command-line front end.

Usage::

    rotating-cavity <spectrum|darkstates|scan|lici|propagate|bench> --config run.yaml --out results/

Exit codes: 0 success, 1 numeric failure or failed check, 2 invalid
configuration, 3 no LICI crossing in the window, 4 propagation instability.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analytic
from .arrowhead import benchmark_scaling, eigensolve_arrowhead, scaling_exponent, write_benchmark_csv
from .atom_cavity import (
    CavitySpec,
    EnsembleSpec,
    RotationSpec,
    build_ensemble,
    build_ensemble_full,
    build_nonrotating,
)
from .config import ConfigError, RunConfig, grid_values, load_config
from .core import CavityError, cluster_levels, eigenvalues_dense
from .dynamics import (
    CHANNELS,
    TRAJECTORY_COLUMNS,
    Frame,
    FrozenAngleConfig,
    Propagator,
    RadialGrid,
    StabilityViolation,
    assemble_hamiltonian_reduced,
    eigenstate_wavepacket,
    frame_transform,
    gaussian_wavepacket,
    propagate,
)
from .molecule import (
    NoCrossing,
    ShiftDegenerate,
    adiabatic_scan,
    compare_with_oracle,
    distinct_r_values,
    find_licis,
    write_scan_csv,
)

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_NO_CROSSING, EXIT_UNSTABLE = 0, 1, 2, 3, 4
SWEEP_PARAMS = ("omega", "g", "omega_c", "n_atoms")
LEVEL_RTOL = 1e-8


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else fmt(x) for x in row) + "\n")


def parse_sweep(sweep) -> tuple[str, np.ndarray] | None:
    if not sweep:
        return None
    param, rng = sweep
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"--sweep: unknown parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    try:
        start, stop, count = rng.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ConfigError(f"--sweep: expected start:stop:count, got {rng!r}") from exc
    if param == "n_atoms":
        if np.any(values < 1):
            raise ConfigError("--sweep n_atoms: values must be >= 1")
        values = np.unique(np.rint(values).astype(int))
    if param in ("omega", "g") and np.any(values < 0):
        raise ConfigError(f"--sweep {param}: values must be >= 0")
    if param == "omega_c" and np.any(values <= 0):
        raise ConfigError("--sweep omega_c: values must be > 0")
    return param, values


# -- atom / ensemble spectra ------------------------------------------------


def _require(cfg: RunConfig, systems, *sections):
    if cfg.system not in systems:
        raise ConfigError(f"system {cfg.system!r} not valid here; expected one of {', '.join(systems)}")
    for s in sections:
        if getattr(cfg, s) is None:
            raise ConfigError(f"missing section {s!r}")


def _point(cfg: RunConfig, param=None, value=None):
    cav = cfg.cavity.model_dump()
    rot = cfg.rotation.build()
    n = cfg.n_atoms
    if param == "omega":
        rot = RotationSpec(rot.axis, float(value))
    elif param in ("g", "omega_c"):
        cav[param] = float(value)
    elif param == "n_atoms":
        n = int(value)
    return CavitySpec(**cav), rot, n


def solve_ensemble(cavity: CavitySpec, rot: RotationSpec, n: int) -> dict:
    """Analytic, arrowhead and dense spectra of one configuration."""
    pred = analytic.predict_spectrum(cavity, rot, n)
    ens = EnsembleSpec(n)
    if rot.omega == 0.0:
        arrow = build_nonrotating(cavity, ens)
        decoupled = [(cavity.excitation, 2 * n)]
        decoupled_label = "dark_decoupled"
    else:
        arrow = build_ensemble(cavity, rot, ens)
        decoupled = [(cavity.excitation, n)] if rot.is_planar else []
        decoupled_label = "dark_entangled"
    sol = eigensolve_arrowhead(arrow)
    arrow_all = np.sort(np.concatenate([sol.eigenvalues] + [np.full(m, e) for e, m in decoupled]))
    dense = eigenvalues_dense(build_ensemble_full(cavity, rot, ens))
    scale = max(cavity.omega_c + rot.omega, cavity.g * math.sqrt(n), 1.0)
    return {
        "prediction": pred,
        "solution": sol,
        "decoupled": decoupled,
        "decoupled_label": decoupled_label,
        "arrowhead_multiset": arrow_all,
        "dense": dense,
        "scale": scale,
    }


def spectrum_rows(res: dict):
    pred = res["prediction"]
    rows = []
    for k, e in enumerate(pred.branch_energies):
        rows.append((f"branch_{k}", e, 1, "analytic"))
    for e, m in pred.dark_levels:
        rows.append(("dark_collective", e, m, "analytic"))
    for e, m in pred.decoupled:
        rows.append((res["decoupled_label"], e, m, "analytic"))
    sol = res["solution"]
    for k, e in enumerate(sol.roots):
        rows.append((f"root_{k}", e, 1, "arrowhead"))
    for e, m in sorted(sol.dark_multiplicities.items()):
        rows.append(("dark_collective", e, m, "arrowhead"))
    for e, m in res["decoupled"]:
        rows.append((res["decoupled_label"], e, m, "arrowhead"))
    for k, (e, m) in enumerate(cluster_levels(res["dense"], LEVEL_RTOL * res["scale"])):
        rows.append((f"level_{k}", e, m, "dense"))
    return rows


def spectrum_diffs(res: dict) -> dict:
    a = res["prediction"].multiset()
    b = res["arrowhead_multiset"]
    d = res["dense"]
    if not (a.size == b.size == d.size):
        return {"analytic_vs_dense": math.inf, "arrowhead_vs_dense": math.inf, "analytic_vs_arrowhead": math.inf}
    return {
        "analytic_vs_dense": float(np.max(np.abs(a - d))),
        "arrowhead_vs_dense": float(np.max(np.abs(b - d))),
        "analytic_vs_arrowhead": float(np.max(np.abs(a - b))),
    }


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_spectrum(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    _require(cfg, ("atom", "ensemble"))
    sw = parse_sweep(sweep)
    points = [(None, None)] if sw is None else [(sw[0], v) for v in sw[1]]
    specs = [_point(cfg, p, v) for p, v in points]
    results = _map(lambda s: solve_ensemble(*s), specs, threads)

    out.mkdir(parents=True, exist_ok=True)
    worst = {"analytic_vs_dense": 0.0, "arrowhead_vs_dense": 0.0, "analytic_vs_arrowhead": 0.0}
    passed = True
    per_point = []
    rows = []
    for (param, value), res in zip(points, results):
        diffs = spectrum_diffs(res)
        ok = all(v <= cfg.tolerance * res["scale"] for v in diffs.values())
        passed &= ok
        for k in worst:
            worst[k] = max(worst[k], diffs[k])
        if param is None:
            rows.extend(spectrum_rows(res))
        else:
            rows.extend((value, *r) for r in spectrum_rows(res))
            per_point.append({param: float(value), **diffs, "pass": ok})
    if sw is None:
        _write_csv(out / "spectrum.csv", ("label", "energy", "multiplicity", "source"), rows)
    else:
        _write_csv(out / "spectrum_sweep.csv", (sw[0], "label", "energy", "multiplicity", "source"), rows)
    report = {**worst, "tolerance": cfg.tolerance, "pass": passed}
    if per_point:
        report["points"] = per_point
    _write_json(out / "spectrum_diff.json", report)
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_darkstates(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    _require(cfg, ("atom", "ensemble"))
    cavity, rot, n = _point(cfg)
    res = solve_ensemble(cavity, rot, n)
    pred = res["prediction"]
    if rot.omega == 0.0:
        case = "nonrotating"
    else:
        case = analytic.XY if rot.is_planar else analytic.GENERAL
    dark = [list(x) for x in pred.dark_levels]
    decoupled = [list(x) for x in pred.decoupled]
    if cfg.darkstates.inject_mismatch:
        target = dark if dark else decoupled
        if target:
            target[0][1] += 1
        else:
            dark.append([cavity.omega_c, 1])
    predicted = list(pred.branch_energies)
    for e, m in dark + decoupled:
        predicted.extend([e] * m)
    atol = LEVEL_RTOL * res["scale"]
    pred_levels = cluster_levels(predicted, atol)
    dense_levels = cluster_levels(res["dense"], atol)
    match = len(pred_levels) == len(dense_levels) and all(
        m1 == m2 and abs(e1 - e2) <= cfg.tolerance * res["scale"]
        for (e1, m1), (e2, m2) in zip(pred_levels, dense_levels)
    )
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "darkstates.json",
        {
            "case": case,
            "n_atoms": n,
            "dimension": 3 * n + 1,
            "branches": list(pred.branch_energies),
            "census": {"collective": dark, "decoupled": decoupled},
            "arrowhead_dark": [[e, m] for e, m in sorted(res["solution"].dark_multiplicities.items())],
            "predicted_levels": [[e, m] for e, m in pred_levels],
            "dense_levels": [[e, m] for e, m in dense_levels],
            "match": match,
        },
    )
    return EXIT_OK if match else EXIT_NUMERIC


# -- molecule ---------------------------------------------------------------


def _molecule(cfg: RunConfig, base: Path):
    _require(cfg, ("diatomic",), "molecule")
    return cfg.molecule.build(cfg.cavity.build(), base), cfg.rotation.build()


def cmd_scan(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    _require(cfg, ("diatomic",), "scan")
    model, rot = _molecule(cfg, base)
    grids = [grid_values(g) for g in (cfg.scan.r, cfg.scan.theta, cfg.scan.phi)]
    try:
        model.check_domain(grids[0])
    except ValueError as exc:
        raise ConfigError(f"scan.r: {exc}") from exc
    scan = adiabatic_scan(model, rot, *grids, max_points=cfg.scan.max_points, threads=threads)
    norot = adiabatic_scan(model, None, *grids, max_points=cfg.scan.max_points, threads=threads)
    e = scan.energies
    theta0 = np.flatnonzero(scan.theta == 0.0)
    sigma_exact = None
    if theta0.size:
        target = model.v_sigma(scan.r) + model.cavity.omega_c
        hit = np.any(e[:, theta0[0], :, :] == target[:, None, None], axis=-1)
        sigma_exact = bool(np.all(hit))
    out.mkdir(parents=True, exist_ok=True)
    write_scan_csv(scan, out / "scan.csv")
    _write_json(
        out / "scan_summary.json",
        {
            "shape": list(e.shape[:3]),
            "max_jump_r_theta_phi": list(scan.max_jumps()),
            "phi_spread_max": float(np.max(np.ptp(e, axis=2))) if e.shape[2] > 1 else 0.0,
            "rotating_vs_nonrotating_max_abs_diff": float(np.max(np.abs(e - norot.energies))),
            "theta0_sigma_surface_exact": sigma_exact,
        },
    )
    return EXIT_OK


def cmd_lici(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    _require(cfg, ("diatomic",), "lici")
    model, rot = _molecule(cfg, base)
    lc = cfg.lici
    try:
        model.check_domain(lc.r_window)
    except ValueError as exc:
        raise ConfigError(f"lici.r_window: {exc}") from exc
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "lici_oracle.json", compare_with_oracle(rot, *lc.oracle_grid))
    import warnings

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ShiftDegenerate)
        try:
            licis = find_licis(model, rot, lc.r_window, lc.samples, lc.phi_points, lc.tolerance)
        except NoCrossing as exc:
            _write_json(out / "lici.json", {"error": "NoCrossing", "message": str(exc), "r_window": list(lc.r_window)})
            return EXIT_NO_CROSSING
    degenerate = any(issubclass(w.category, ShiftDegenerate) for w in caught)
    r_values = distinct_r_values(licis)
    report = {
        "licis": [l.record() for l in licis],
        "r_values": r_values,
        "shift_degenerate": degenerate,
        "all_seams_certified": all(l.seam.certified for l in licis),
    }
    ok = report["all_seams_certified"]
    if lc.expected_count is not None:
        report["expected_count"] = lc.expected_count
        ok &= len(r_values) == lc.expected_count
    report["pass"] = ok
    _write_json(out / "lici.json", report)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_propagate(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    _require(cfg, ("diatomic",), "propagation")
    model, rot = _molecule(cfg, base)
    pc = cfg.propagation
    try:
        grid = RadialGrid(model.r_min, model.r_max, pc.n_points, model.reduced_mass)
        frozen = FrozenAngleConfig(pc.theta, pc.phi, pc.include_centrifugal, pc.angular_momentum)
    except ValueError as exc:
        raise ConfigError(f"propagation: {exc}") from exc
    h = assemble_hamiltonian_reduced(model, rot, grid, frozen, pc.max_dr)
    init = pc.initial
    if init.kind == "eigenstate" and init.index >= h.dim:
        raise ConfigError(f"propagation.initial.index must be < {h.dim}")
    prop = Propagator(h)
    if init.kind == "eigenstate":
        psi0, _ = eigenstate_wavepacket(h, grid, init.index, prop)
    else:
        psi0 = gaussian_wavepacket(grid, init.center, init.width, init.momentum, CHANNELS.index(init.channel))
    out.mkdir(parents=True, exist_ok=True)
    summary = {"dt": pc.dt, "n_steps": pc.n_steps, "n_points": pc.n_points}
    try:
        traj = propagate(h, psi0, pc.dt, pc.n_steps, grid, prop)
    except StabilityViolation as exc:
        summary.update(error="StabilityViolation", message=str(exc))
        _write_json(out / "summary.json", summary)
        return EXIT_UNSTABLE
    _write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, traj.rows())
    final = traj.final
    lab = frame_transform(final, rot, final.time, Frame.LAB, pc.theta, pc.phi)
    back = frame_transform(lab, rot, final.time, Frame.ROTATING, pc.theta, pc.phi)
    summary.update(
        norm_drift=traj.norm_drift,
        energy_drift=traj.energy_drift,
        final_populations=[float(x) for x in final.populations()],
        frame_round_trip_fidelity=abs(final.overlap(back)),
    )
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_bench(cfg: RunConfig, base: Path, out: Path, sweep, threads: int) -> int:
    bc = cfg.bench
    if bc is None:
        from .config import BenchConfig

        bc = BenchConfig()
    if sorted(bc.sizes) != list(bc.sizes):
        raise ConfigError("bench.sizes must be ascending")
    rows = benchmark_scaling(bc.sizes, cfg.seed, dense_limit=bc.dense_limit, repeats=bc.repeats)
    out.mkdir(parents=True, exist_ok=True)
    write_benchmark_csv(rows, out / "bench.csv")
    diffs = [r["max_abs_eig_diff"] for r in rows if math.isfinite(r["max_abs_eig_diff"])]
    _write_json(
        out / "bench_summary.json",
        {
            "sizes": [r["n"] for r in rows],
            "max_abs_eig_diff": max(diffs) if diffs else None,
            "scaling_exponent": scaling_exponent(rows) if len(rows) > 1 else None,
        },
    )
    ok = all(d <= cfg.tolerance * 2.0 for d in diffs)
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "spectrum": cmd_spectrum,
    "darkstates": cmd_darkstates,
    "scan": cmd_scan,
    "lici": cmd_lici,
    "propagate": cmd_propagate,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--sweep", nargs=2, metavar=("PARAM", "START:STOP:COUNT"), help="parameter sweep (spectrum only)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps and scans")
    parser = argparse.ArgumentParser(
        prog="rotating-cavity",
        description="Polaritons of atoms and diatomics in a rotating cavity. "
        "All energies share one unit with hbar = 1; rotation.omega is hbar*Omega.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, base = load_config(args.config)
        if args.sweep and args.command != "spectrum":
            raise ConfigError("--sweep is only supported by the spectrum command")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](cfg, base, Path(args.out), args.sweep, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CavityError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
