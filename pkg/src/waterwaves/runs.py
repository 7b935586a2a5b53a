"""
Run orchestration behind the command line: simulate, verify, converge,
selftest. Each returns data plus an exit status; only this module and
:mod:`waterwaves.cli` touch the filesystem.
"""

import json
import time
from dataclasses import replace

import numpy as np

from . import records
from .config import load_custom_ic
from .elliptic import SolverConfig, dno_apply, dno_flat_symbol
from .errors import NumericalAbort, ValidationError
from .evolution import (
    EvolutionParams,
    SurfaceState,
    compute_BV,
    conserved_mass,
    hamiltonian,
    initial_state,
    rk4_step,
)
from .geometry import MapParams, build_domain_map, check_separation
from .reconstruct import (
    euler_residual,
    reconstruct_bulk,
    taylor_coefficient,
    verify_trajectory,
)
from .spectral import Grid, apply_multiplier, inner, l2_norm, spectral_derivative

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def initial_condition(cfg, p):
    if cfg.ic_kind == "custom_file":
        eta, psi = load_custom_ic(cfg.ic_file, cfg.n_x)
        return SurfaceState(0.0, eta, psi)
    return initial_state(p, cfg.ic_kind, cfg.ic_amplitude, cfg.ic_wavenumber)


def step_count(p):
    return max(1, int(round(p.t_end / p.dt)))


def run_simulate(cfg):
    """Integrate the configured run and stream snapshots to ``cfg.output_path``.

    Returns the exit status: 0 on success, 3 on a numerical abort (after
    writing an error record that carries the last good state).
    """
    p = cfg.evolution_params()
    state = initial_condition(cfg, p)
    with records.StreamWriter(cfg.output_path) as out:
        try:
            check_separation(state.eta, MapParams(h_b=p.h_b, n_z=p.n_z))
        except NumericalAbort as exc:
            out.write(records.error_record(exc, 0, None))
            return EXIT_ABORT

        p = p.resolved(state.eta)
        n_steps = step_count(p)
        out.write(
            {
                "record": "header",
                "config": cfg.to_dict(),
                "delta": p.delta,
                "dt": p.dt,
                "n_steps": n_steps,
            }
        )
        start = time.perf_counter()
        step, last_good = 0, state
        h0 = m0 = None
        max_h = max_m = 0.0
        try:
            while True:
                if step % cfg.snapshot_stride == 0:
                    bulk_file = None
                    if cfg.bulk_output != "none":
                        snap = reconstruct_bulk(state, p)
                        g_psi = snap.d_eta
                        bulk_file = records.write_bulk(cfg.output_path, step, snap, cfg.bulk_output)
                    else:
                        m = build_domain_map(state.eta, p.grid, p.map_params())
                        g_psi = dno_apply(state.eta, state.psi, m, p.solver)
                    h = hamiltonian(state, p, g_psi)
                    mass = conserved_mass(state, p.grid)
                    if h0 is None:
                        h0, m0 = h, mass
                    max_h = max(max_h, abs(h - h0) / (abs(h0) if h0 else 1.0))
                    max_m = max(max_m, abs(mass - m0))
                    out.write(records.snapshot_record(step, state, h, mass, bulk_file))
                if step == n_steps:
                    break
                state = rk4_step(state, p)
                step += 1
                last_good = state
        except NumericalAbort as exc:
            out.write(records.error_record(exc, step, last_good))
            return EXIT_ABORT
        out.write(
            {
                "record": "summary",
                "steps": n_steps,
                "wall_time": time.perf_counter() - start,
                "max_hamiltonian_drift": max_h,
                "max_mass_drift": max_m,
            }
        )
    return EXIT_OK


def run_verify(input_path, cfg, report_path=None):
    """Rebuild bulk fields for every snapshot of a stream and write a report.

    Returns ``(report, exit_status)``; the status is 1 if any check fails.
    """
    states, header = records.load_snapshots(input_path, n_x=cfg.n_x)
    p = cfg.evolution_params()
    if header is not None and header.get("delta") is not None and cfg.delta is None:
        p = replace(p, delta=header["delta"])
    p = p.resolved(states[0].eta)
    report = verify_trajectory(states, p, cfg.threshold)
    document = {
        "schema": records.SCHEMA_VERSION,
        "input": str(input_path),
        "config": cfg.to_dict(),
        "effective": {"delta": p.delta, "dt": p.dt, "snapshots": len(states)},
        "passed": report.passed,
        "report": report.to_dict(),
    }
    if report_path is None:
        report_path = f"{input_path}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report, EXIT_OK if report.passed else EXIT_CHECK


def fitted_slope(spacings, values):
    """Least-squares slope of log(value) against log(spacing)."""
    spacings, values = np.asarray(spacings, float), np.asarray(values, float)
    return float(np.polyfit(np.log(spacings), np.log(values), 1)[0])


def flat_dno_error(n_x, n_z, h_b=1.0, k=3.0, length=2.0 * np.pi, cfg=SolverConfig()):
    """Relative sup error of the discrete operator against |k| tanh(h_b |k|) for cos(k x)."""
    grid = Grid(n_x, length)
    m = build_domain_map(np.zeros(n_x), grid, MapParams(h_b=h_b, delta=0.0, n_z=n_z))
    psi = np.cos(k * grid.x)
    exact = dno_flat_symbol(psi, grid, h_b)
    approx = dno_apply(np.zeros(n_x), psi, m, cfg)
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


def _trajectory(cfg, p):
    state = initial_condition(cfg, p)
    p = p.resolved(state.eta)
    states = [state]
    for step in range(1, step_count(p) + 1):
        state = rk4_step(state, p)
        if step % cfg.snapshot_stride == 0:
            states.append(state)
    return states, p


def run_converge(cfg, levels, vary="nz"):
    """Repeat simulate + verify while doubling n_z (``vary="nz"``) or halving
    dt (``vary="dt"``), and fit log-log slopes of every residual."""
    if levels < 2:
        raise ValidationError("levels", f"must be >= 2, got {levels}")
    if vary not in ("nz", "dt"):
        raise ValidationError("vary", f"must be 'nz' or 'dt', got {vary!r}")
    rows = []
    base = cfg.evolution_params()
    base_dt = base.resolved(initial_condition(cfg, base).eta).dt
    k = cfg.ic_wavenumber if cfg.ic_wavenumber > 0 else 3.0
    for level in range(levels):
        if vary == "nz":
            p = replace(base, n_z=cfg.n_z * 2**level)
            spacing = 1.0 / (p.n_z - 1)
        else:
            p = replace(base, dt=base_dt / 2**level)
            spacing = p.dt
        states, p = _trajectory(cfg, p)
        report = verify_trajectory(states, p, cfg.threshold)
        row = {
            "level": level,
            "n_z": p.n_z,
            "dt": p.dt,
            "spacing": spacing,
            "bernoulli": report.bernoulli_residual_l2,
            "euler": report.euler_residual_l2,
            "div": report.div_residual,
            "curl": report.curl_residual,
            "b_trace": report.trace_errors["b_trace"],
            "v_trace": report.trace_errors["v_trace"],
        }
        if vary == "nz":
            row["dno_flat"] = flat_dno_error(p.n_x, p.n_z, p.h_b, k, p.length, p.solver)
        rows.append(row)
    keys = [key for key in rows[0] if key not in ("level", "n_z", "dt", "spacing")]
    slopes = {}
    for key in keys:
        values = [r[key] for r in rows]
        if all(v > 0 and np.isfinite(v) for v in values):
            slopes[key] = fitted_slope([r["spacing"] for r in rows], values)
    return {"vary": vary, "rows": rows, "slopes": slopes}


def _random_smooth(rng, grid, modes=16):
    k = np.arange(1, modes + 1)
    a = rng.standard_normal(modes) / k
    b = rng.standard_normal(modes) / k
    x = grid.x
    return rng.standard_normal() + np.cos(np.outer(x, k)) @ a + np.sin(np.outer(x, k)) @ b


def run_selftest(seed=0, inject_cg_tol=None, n_x=64, n_z=32, pairs=20):
    """Invariant suite on a small grid.

    Returns a list of ``(name, value, tolerance, passed)`` rows. The
    tolerances stay at their nominal values when ``inject_cg_tol``
    replaces the solver tolerance.
    """
    nominal = SolverConfig()
    tol = 10.0 * nominal.cg_tol
    solver = nominal if inject_cg_tol is None else SolverConfig.unvalidated(inject_cg_tol)
    rng = np.random.default_rng(seed)
    grid = Grid(n_x)
    x = grid.x
    rows = []

    def check(name, value, limit, ok=None):
        rows.append((name, float(value), float(limit), bool(value <= limit) if ok is None else ok))

    f = _random_smooth(rng, grid)
    check("multiplier_identity", np.max(np.abs(apply_multiplier(f, grid, lambda k: np.ones_like(k)) - f)), 1e-12)
    g2 = _random_smooth(rng, grid)
    sym = lambda k: k * np.tanh(k)
    lhs = apply_multiplier(2.0 * f - 3.0 * g2, grid, sym)
    rhs = 2.0 * apply_multiplier(f, grid, sym) - 3.0 * apply_multiplier(g2, grid, sym)
    check("multiplier_linearity", np.max(np.abs(lhs - rhs)), 1e-12)
    check("derivative_cos3x", np.max(np.abs(spectral_derivative(np.cos(3 * x), grid) + 3 * np.sin(3 * x))), 1e-12)

    for label, eta in (("flat", np.zeros(n_x)), ("wavy", 0.1 * np.cos(x))):
        m = build_domain_map(eta, grid, MapParams(h_b=1.0, delta=0.04, n_z=n_z))
        worst_sym = worst_mean = worst_lin = 0.0
        lowest = np.inf
        for _ in range(pairs):
            phi, psi = _random_smooth(rng, grid), _random_smooth(rng, grid)
            g_phi = dno_apply(eta, phi, m, solver)
            g_psi = dno_apply(eta, psi, m, solver)
            scale = l2_norm(phi, grid) * l2_norm(psi, grid)
            worst_sym = max(worst_sym, abs(inner(phi, g_psi, grid) - inner(psi, g_phi, grid)) / scale)
            lowest = min(lowest, inner(psi, g_psi, grid) / l2_norm(psi, grid) ** 2)
            worst_mean = max(worst_mean, abs(np.mean(g_psi)) / l2_norm(psi, grid))
            g_mix = dno_apply(eta, 2.0 * phi - 0.5 * psi, m, solver)
            worst_lin = max(worst_lin, l2_norm(g_mix - 2.0 * g_phi + 0.5 * g_psi, grid) / scale ** 0.5)
        check(f"dno_self_adjoint[{label}]", worst_sym, tol)
        check(f"dno_nonnegative[{label}]", max(0.0, -lowest), tol)
        check(f"dno_mean_flux[{label}]", worst_mean, 1e-8)
        check(f"dno_linearity[{label}]", worst_lin, tol)

    eta, psi = 0.1 * np.cos(x), np.sin(x)
    m = build_domain_map(eta, grid, MapParams(h_b=1.0, delta=0.04, n_z=n_z))
    g_psi = dno_apply(eta, psi, m, solver)
    b, v = compute_BV(eta, psi, g_psi, grid)
    check("bv_identity", np.max(np.abs(g_psi - (b - spectral_derivative(eta, grid) * v))), 1e-12)

    p = EvolutionParams(n_x=n_x, n_z=n_z, delta=0.04, dt=0.05)
    rest = SurfaceState(0.0, np.zeros(n_x), np.zeros(n_x))
    after = rk4_step(rest, p)
    check("rest_fixed_point", max(np.max(np.abs(after.eta)), np.max(np.abs(after.psi))), 1e-15)
    snaps = [reconstruct_bulk(SurfaceState(t, rest.eta, rest.psi), p) for t in (0.0, 0.05, 0.1)]
    mid = snaps[1]
    res = euler_residual(*snaps)
    check("hydrostatic_pressure", np.max(np.abs(mid.P + p.g * mid.map.rho)), tol)
    check("hydrostatic_momentum", max(res.momentum_sup, res.div_sup, res.curl_sup), tol)
    check("hydrostatic_taylor", np.max(np.abs(taylor_coefficient(mid) - p.g)), 1e-8)
    return rows


def format_selftest(rows):
    width = max(len(r[0]) for r in rows)
    lines = [f"{'check':<{width}}  {'value':>12}  {'tolerance':>10}  result"]
    for name, value, limit, ok in rows:
        lines.append(f"{name:<{width}}  {value:12.3e}  {limit:10.1e}  {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines)
