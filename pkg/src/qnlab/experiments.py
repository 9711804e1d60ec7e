"""Experiment orchestration: single solver runs, (eps, hbar) sweeps against
the Euler reference flow, and N-particle Monte-Carlo statistics.

Sweep points are independent and run on a process pool sized by --jobs; every
failure becomes a machine-readable error record instead of a crash, and the
remaining points still produce rows.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import reports
from .config import ExperimentConfig
from .energy import modulated_total, weak_distances
from .euler import EulerState, euler_constants, normalize_log_density, run_euler
from .grid import RealField, TorusGrid, gradient, integrate
from .initial_data import WellPreparedSpec, well_prepared
from .nbody import mc_uniform_stats
from .poisson_boltzmann import solve_pb, validate_elliptic_bounds
from .schrodinger import density, run


@dataclass
class ExperimentOutcome:
    status: int
    out_dir: Path
    summary: dict
    errors: list


def _cos_profiles(grid: TorusGrid, rho0_amp: float, u0_amp: float):
    """The standard data family: rho0 ~ exp(amp cos), U0 = amp sin/(2 pi)."""
    coords = grid.coords()
    phase = sum(np.cos(2.0 * np.pi * c) for c in coords)
    rho0 = np.exp(rho0_amp * phase)
    rho0 /= rho0.mean()
    u0pot = u0_amp * sum(np.sin(2.0 * np.pi * c) for c in coords) / (2.0 * np.pi)
    return RealField(grid, rho0), RealField(grid, u0pot)


def _sample_indices(big_t: float, dt: float, sample_every: int) -> list:
    """Step indices the Schrodinger run snapshots, mirrored for Euler."""
    if big_t == 0:
        return [0]
    n_steps = max(1, int(round(big_t / dt)))
    return [0] + [i for i in range(1, n_steps + 1)
                  if i % sample_every == 0 or i == n_steps]


def _error_record(exc: Exception, stage: str, **context) -> dict:
    rec = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    rec.update(context)
    return rec


def _sweep_point(task: dict) -> dict:
    """One (eps, hbar) sweep point; returns rows + per-point summary, or an
    error record. Plain-dict in and out so a process pool can ship it."""
    eps, hbar = task["eps"], task["hbar"]
    stage = "prepare"
    try:
        grid = TorusGrid(task["dim"], task["n"])
        rho0, u0pot = _cos_profiles(grid, task["rho0_amp"], task["u0_amp"])
        w0 = well_prepared(WellPreparedSpec(rho0, u0pot, eps, hbar))
        e0 = EulerState(normalize_log_density(RealField(grid, np.log(rho0.values))),
                        list(gradient(u0pot)))

        stage = "schrodinger"
        straj = run(w0, task["T"], task["dt"], sample_every=task["sample_every"],
                    mode=task["mode"])
        stage = "euler"
        etraj = run_euler(e0, task["T"], task["dt"])
        idx = _sample_indices(task["T"], task["dt"], task["sample_every"])
        esamp = [etraj[i] for i in idx]

        stage = "diagnostics"
        x = grid.axis_points()
        fields = [RealField(grid, np.ones(grid.shape))]
        if grid.dim == 1:
            fields += [RealField(grid, np.sin(2 * np.pi * x)),
                       RealField(grid, np.cos(2 * np.pi * x))]
        rows = []
        currents_ok = True
        sup_bound_ok = True
        mass_defect = 0.0
        f0 = straj.diagnostics[0].conserved_total
        drift = 0.0
        for (t, w, split), est in zip(straj.snapshots, esamp):
            rep = modulated_total(w, split, est)
            wd = weak_distances(w, est, test_fields=fields, split=split)
            currents_ok &= all(c["passed"] for c in wd["currents"])
            current_err = max(abs(c["value"]) for c in wd["currents"])
            v = split.potential().values
            sup_bound_ok &= eps * float(np.max(np.abs(v))) <= 1.0 + 1e-9
            mass_defect = max(mass_defect, abs(integrate(split.background()) - 1.0))
            drift = max(drift, abs(rep.conserved_total - f0) / (1.0 + abs(f0)))
            rows.append({
                "eps": float(eps),
                "hbar": float(hbar),
                "time": float(t),
                "kinetic_modulated": float(rep.kinetic_modulated),
                "field_energy": float(rep.field_energy),
                "relative_entropy": float(rep.relative_entropy),
                "total_modulated": float(rep.total_modulated),
                "conserved_total": float(rep.conserved_total),
                "h_minus1_density_error": float(wd["h_minus1_density"]),
                "l1_entropy_error": float(wd["l1_background"]),
                "current_weak_error": float(current_err),
            })
        gronwall = {k: float(v) for k, v in euler_constants(esamp).items()}
        numeric = [f for f in reports.SWEEP_FIELDS if f not in ("eps", "hbar", "time")]
        maxima = {f: float(max(row[f] for row in rows)) for f in numeric}
        checks = {
            "total_modulated_nonnegative": bool(all(r["total_modulated"] >= -1e-12 for r in rows)),
            "current_bounds": bool(currents_ok),
            "potential_sup_bound": bool(sup_bound_ok),
            "background_mass": bool(mass_defect <= 1e-8),
        }
        return {
            "eps": float(eps),
            "hbar": float(hbar),
            "status": "ok",
            "rows": rows,
            "maxima": maxima,
            "conserved_drift_max": float(drift),
            "gronwall": gronwall,
            "checks": checks,
        }
    except Exception as exc:  # noqa: BLE001 - every failure becomes a record
        return {
            "eps": float(eps),
            "hbar": float(hbar),
            "status": "error",
            "error": _error_record(exc, stage, eps=float(eps), hbar=float(hbar)),
        }


def _run_sweep(cfg: ExperimentConfig, summary: dict, out_dir: Path) -> tuple[list, list]:
    tasks = [{
        "eps": eps, "hbar": hbar, "dim": cfg.grid_dim, "n": cfg.grid_n,
        "T": cfg.big_t, "dt": cfg.dt, "mode": cfg.mode,
        "sample_every": cfg.sample_every,
        "rho0_amp": cfg.rho0_amp, "u0_amp": cfg.u0_amp,
    } for eps, hbar in zip(cfg.eps, cfg.hbar)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(tasks))) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    rows, errors, points = [], [], []
    for res in results:
        if res["status"] == "ok":
            rows.extend(res["rows"])
            points.append({k: res[k] for k in
                           ("eps", "hbar", "status", "maxima",
                            "conserved_drift_max", "gronwall", "checks")})
        else:
            errors.append(res["error"])
            points.append({k: res[k] for k in ("eps", "hbar", "status", "error")})
    summary["points"] = points
    ok_points = [p for p in points if p["status"] == "ok"]
    sup_totals = [p["maxima"]["total_modulated"] for p in ok_points]
    summary["sweep"] = {
        "complete": len(ok_points) == len(points),
        "sup_total_modulated": sup_totals,
        "strictly_decreasing": bool(
            len(sup_totals) == len(points) > 1
            and all(a > b for a, b in zip(sup_totals, sup_totals[1:]))),
    }
    reports.emit_sweep_csv(out_dir, rows)
    reports.emit_plotdata(out_dir, rows)
    return rows, errors


def _run_pb(cfg: ExperimentConfig, summary: dict, out_dir: Path) -> list:
    grid = TorusGrid(cfg.grid_dim, cfg.grid_n)
    h, _ = _cos_profiles(grid, cfg.rho0_amp, 0.0)
    try:
        split = solve_pb(h, cfg.eps[0])
    except Exception as exc:  # noqa: BLE001
        return [_error_record(exc, "pb_solve", eps=float(cfg.eps[0]))]
    v = split.potential()
    validation = validate_elliptic_bounds(split, h)
    summary["pb"] = {
        "eps": float(cfg.eps[0]),
        "newton_iterations": int(split.info["iterations"]),
        "final_residual": float(split.info["residuals"][-1]),
        "tolerance": float(split.info["tolerance"]),
        "cg_failures": int(split.info["cg_failures"]),
        "sup_v": float(np.max(np.abs(v.values))),
        "background_mass": float(integrate(split.background())),
        "checks": {name: bool(block["passed"]) for name, block in validation.items()},
    }
    if grid.dim == 1:
        reports.emit_csv(out_dir / "plotdata" / "potential.csv",
                         ("x", "v", "background"),
                         zip(grid.axis_points(), v.values, split.background().values))
    return []


def _run_euler(cfg: ExperimentConfig, summary: dict, out_dir: Path) -> list:
    grid = TorusGrid(cfg.grid_dim, cfg.grid_n)
    rho0, u0pot = _cos_profiles(grid, cfg.rho0_amp, cfg.u0_amp)
    e0 = EulerState(normalize_log_density(RealField(grid, np.log(rho0.values))),
                    list(gradient(u0pot)))
    try:
        traj = run_euler(e0, cfg.big_t, cfg.dt)
    except Exception as exc:  # noqa: BLE001
        return [_error_record(exc, "euler")]
    idx = _sample_indices(cfg.big_t, cfg.dt, cfg.sample_every)
    idx = [i for i in idx if i < len(traj)]
    samp = [traj[i] for i in idx]
    rows = []
    for s in samp:
        rho = s.rho()
        rows.append((float(s.time), float(abs(integrate(rho) - 1.0)),
                     float(max(np.max(np.abs(c.values)) for c in s.u)),
                     float(np.min(rho.values)), float(np.max(rho.values))))
    reports.emit_csv(out_dir / "plotdata" / "euler.csv",
                     ("time", "mass_defect", "sup_u", "min_rho", "max_rho"), rows)
    summary["euler"] = {k: float(v) for k, v in euler_constants(samp).items()}
    summary["euler"]["mass_defect_max"] = float(max(r[1] for r in rows))
    return []


def _run_schrodinger(cfg: ExperimentConfig, summary: dict, out_dir: Path) -> list:
    grid = TorusGrid(cfg.grid_dim, cfg.grid_n)
    rho0, u0pot = _cos_profiles(grid, cfg.rho0_amp, cfg.u0_amp)
    stage = "prepare"
    try:
        w0 = well_prepared(WellPreparedSpec(rho0, u0pot, cfg.eps[0], cfg.hbar[0]))
        stage = "schrodinger"
        traj = run(w0, cfg.big_t, cfg.dt, sample_every=cfg.sample_every, mode=cfg.mode)
    except Exception as exc:  # noqa: BLE001
        return [_error_record(exc, stage, eps=float(cfg.eps[0]), hbar=float(cfg.hbar[0]))]
    f0 = traj.diagnostics[0].conserved_total
    rows = []
    for (t, w, _split), rep in zip(traj.snapshots, traj.diagnostics):
        mass = integrate(density(w))
        rows.append((float(t), float(rep.conserved_total),
                     float(abs(rep.conserved_total - f0) / (1.0 + abs(f0))),
                     float(abs(mass - 1.0))))
    reports.emit_csv(out_dir / "plotdata" / "conserved_total.csv",
                     ("time", "conserved_total", "relative_drift", "mass_defect"), rows)
    summary["schrodinger"] = {
        "eps": float(cfg.eps[0]),
        "hbar": float(cfg.hbar[0]),
        "conserved_drift_max": float(max(r[2] for r in rows)),
        "mass_defect_max": float(max(r[3] for r in rows)),
    }
    return []


def _run_nbody(cfg: ExperimentConfig, summary: dict, out_dir: Path) -> list:
    seed0 = cfg.seeds[0]
    rows = []
    points = []
    for n_particles in cfg.n_particles:
        rng = np.random.default_rng([seed0, n_particles])
        stats = mc_uniform_stats(n_particles, cfg.n_configs, rng)
        expected = 1.0 / (12.0 * n_particles)
        within = bool(abs(stats["mean_energy"] - expected) <= 3.0 * stats["se_energy"])
        rows.append((int(n_particles), float(stats["mean_energy"]),
                     float(stats["se_energy"]), float(expected),
                     float(stats["mean_w1"]), float(stats["mean_w1_squared"])))
        points.append({
            "n_particles": int(n_particles),
            "mean_energy": float(stats["mean_energy"]),
            "se_energy": float(stats["se_energy"]),
            "expected_mean": float(expected),
            "mean_w1": float(stats["mean_w1"]),
            "mean_w1_squared": float(stats["mean_w1_squared"]),
            "energy_within_3se": within,
        })
    reports.emit_csv(out_dir / "plotdata" / "nbody.csv",
                     ("n_particles", "mean_energy", "se_energy", "expected_mean",
                      "mean_w1", "mean_w1_squared"), rows)
    exponent = None
    if len(rows) > 1:
        logn = np.log([r[0] for r in rows])
        logw = np.log([max(r[5], 1e-300) for r in rows])
        exponent = float(-np.polyfit(logn, logw, 1)[0])
    summary["nbody"] = {
        "points": points,
        "n_configs": int(cfg.n_configs),
        "w1sq_decay_exponent": exponent,
        "energy_within_3se": bool(all(p["energy_within_3se"] for p in points)),
    }
    return []


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Execute one configured experiment; artifacts land in cfg.output_dir."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "kind": cfg.kind,
        "grid": {"dim": int(cfg.grid_dim), "n": int(cfg.grid_n)},
        "mode": cfg.mode,
        "physics": {"T": float(cfg.big_t), "dt": float(cfg.dt),
                    "eps": [float(v) for v in cfg.eps],
                    "hbar": [float(v) for v in cfg.hbar]},
        "initial": {"rho0_amp": float(cfg.rho0_amp), "u0_amp": float(cfg.u0_amp)},
        "seeds": [int(s) for s in cfg.seeds],
    }
    if cfg.kind == "quasineutral_sweep":
        _, errors = _run_sweep(cfg, summary, out_dir)
    elif cfg.kind == "pb_solve":
        errors = _run_pb(cfg, summary, out_dir)
    elif cfg.kind == "euler_run":
        errors = _run_euler(cfg, summary, out_dir)
    elif cfg.kind == "schrodinger_run":
        errors = _run_schrodinger(cfg, summary, out_dir)
    else:
        errors = _run_nbody(cfg, summary, out_dir)
    summary["errors"] = errors
    reports.emit_summary(out_dir, summary)
    reports.emit_error_records(out_dir, errors)
    return ExperimentOutcome(status=1 if errors else 0, out_dir=out_dir,
                             summary=summary, errors=errors)
