"""
Rebuild the bulk flow (potential, pressure, velocity) from surface data and
measure how well it satisfies the free-surface Euler equations.

For a surface state (eta, psi):

    Phi : harmonic, Phi = psi on the surface, Neumann on the bottom
    Q   : harmonic, Q = g eta + (B^2 + V^2) / 2 on the surface
    v   = grad Phi,  P = Q - g y - |v|^2 / 2

All fields are stored pulled back to the straightened grid. Time
derivatives at fixed physical (x, y) are taken from three snapshots at
fixed (x, z) plus the moving-grid correction

    dt f(x, y) = dt f~(x, z) - dt(rho) d/dy f.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .elliptic import solve_dirichlet, surface_flux, surface_gradients
from .errors import GridMismatch, InsufficientSnapshots
from .evolution import compute_BV, conserved_mass, hamiltonian
from .geometry import build_domain_map, lambda_apply, rho_time_derivative
from .spectral import l2_norm, spectral_derivative

EDGE_LAYERS = 2
INTERIOR = (-0.9, -0.1)


@dataclass(frozen=True, eq=False)
class BulkSnapshot:
    t: float
    eta: np.ndarray
    psi: np.ndarray
    map: object
    Phi: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    B: np.ndarray
    V: np.ndarray
    d_eta: np.ndarray
    dt_rho: np.ndarray
    g: float


def reconstruct_bulk(state, p):
    """Solve for Phi and Q at one instant and assemble P and v.

    On the surface row the velocity is set to the surface traces (V, B),
    so P vanishes there by construction.
    """
    m = build_domain_map(state.eta, p.grid, p.map_params())
    phi = solve_dirichlet(state.psi, m, p.solver)
    d_eta = surface_flux(phi, m)
    b, v = compute_BV(state.eta, state.psi, d_eta, p.grid)
    q = solve_dirichlet(p.g * state.eta + 0.5 * (b**2 + v**2), m, p.solver)
    vx = lambda_apply(phi, m, 2)
    vy = lambda_apply(phi, m, 1)
    vx[-1] = v
    vy[-1] = b
    pressure = q - p.g * m.rho - 0.5 * (vx**2 + vy**2)
    return BulkSnapshot(
        t=state.t,
        eta=state.eta,
        psi=state.psi,
        map=m,
        Phi=phi,
        Q=q,
        P=pressure,
        vx=vx,
        vy=vy,
        B=b,
        V=v,
        d_eta=d_eta,
        dt_rho=rho_time_derivative(m, d_eta),
        g=p.g,
    )


def interior_mask(z, layers=EDGE_LAYERS, band=INTERIOR):
    """Rows kept in residual norms: inside ``band`` and at least ``layers``
    rows away from each z-boundary."""
    z = np.asarray(z)
    keep = (z >= band[0] - 1e-12) & (z <= band[1] + 1e-12)
    keep[:layers] = False
    keep[len(z) - layers :] = False
    return keep


def _bulk_norms(f, m, layers=EDGE_LAYERS, edge=False):
    keep = interior_mask(m.z, layers)
    rows = f[~keep] if edge else f[keep]
    l2 = float(np.sqrt(m.grid.dx * m.dz * np.sum(rows**2)))
    sup = float(np.max(np.abs(rows))) if rows.size else 0.0
    return l2, sup


def _check_triple(prev, mid, nxt):
    for s in (prev, nxt):
        if not mid.map.same_grid(s.map):
            raise GridMismatch("snapshots live on different grids")
    left, right = mid.t - prev.t, nxt.t - mid.t
    if not (left > 0 and right > 0) or abs(left - right) > 1e-9 * max(left, right):
        raise ValueError(f"snapshots are not equally spaced: {prev.t}, {mid.t}, {nxt.t}")
    return nxt.t - prev.t


def _physical_dt(f_prev, f_mid, f_next, span, mid):
    return (f_next - f_prev) / span - mid.dt_rho * lambda_apply(f_mid, mid.map, 1)


def bernoulli_check(prev, mid, nxt, form="Q", layers=EDGE_LAYERS):
    """Interior L2 norm of dt Phi + Q (``form="Q"``) or of
    dt Phi + |v|^2 / 2 + P + g y (``form="pressure"``) at the middle snapshot.
    """
    span = _check_triple(prev, mid, nxt)
    dt_phi = _physical_dt(prev.Phi, mid.Phi, nxt.Phi, span, mid)
    if form == "Q":
        residual = dt_phi + mid.Q
    elif form == "pressure":
        residual = dt_phi + 0.5 * (mid.vx**2 + mid.vy**2) + mid.P + mid.g * mid.map.rho
    else:
        raise ValueError(f"form must be 'Q' or 'pressure', got {form!r}")
    return _bulk_norms(residual, mid.map, layers)[0]


@dataclass(frozen=True)
class ResidualReport:
    momentum_x_l2: float
    momentum_x_sup: float
    momentum_y_l2: float
    momentum_y_sup: float
    div_l2: float
    div_sup: float
    curl_l2: float
    curl_sup: float
    edge_momentum_l2: float = float("nan")

    @property
    def momentum_l2(self):
        return float(np.hypot(self.momentum_x_l2, self.momentum_y_l2))

    @property
    def momentum_sup(self):
        return max(self.momentum_x_sup, self.momentum_y_sup)


def euler_residual(prev, mid, nxt, layers=EDGE_LAYERS):
    """Residuals of momentum balance, incompressibility and irrotationality.

    Norms cover the rows selected by :func:`interior_mask`; the momentum
    residual on the excluded rows is kept separately in ``edge_momentum_l2``.
    """
    span = _check_triple(prev, mid, nxt)
    m = mid.map

    def d_y(f):
        return lambda_apply(f, m, 1)

    def d_x(f):
        return lambda_apply(f, m, 2)

    vx, vy = mid.vx, mid.vy
    dvx_y, dvx_x = d_y(vx), d_x(vx)
    dvy_y, dvy_x = d_y(vy), d_x(vy)
    mom_x = (
        (nxt.vx - prev.vx) / span - mid.dt_rho * dvx_y
        + vx * dvx_x + vy * dvx_y + d_x(mid.P)
    )
    mom_y = (
        (nxt.vy - prev.vy) / span - mid.dt_rho * dvy_y
        + vx * dvy_x + vy * dvy_y + d_y(mid.P) + mid.g
    )
    div = dvx_x + dvy_y
    curl = dvy_x - dvx_y
    return ResidualReport(
        *_bulk_norms(mom_x, m, layers),
        *_bulk_norms(mom_y, m, layers),
        *_bulk_norms(div, m, layers),
        *_bulk_norms(curl, m, layers),
        float(np.hypot(_bulk_norms(mom_x, m, layers, edge=True)[0], _bulk_norms(mom_y, m, layers, edge=True)[0])),
    )


@dataclass(frozen=True)
class TraceErrors:
    v_trace: float
    b_trace: float
    p_surface: float
    kinematic: float


def trace_checks(snap, state, d_eta):
    """Surface identities: traces of grad Phi against (V, B), P on the surface,
    and the kinematic condition dt eta = B - dx(eta) V."""
    grid = snap.map.grid
    b_s, v_s = surface_gradients(snap.Phi, snap.map)
    eta_x = spectral_derivative(state.eta, grid)
    return TraceErrors(
        v_trace=l2_norm(v_s - snap.V, grid),
        b_trace=l2_norm(b_s - snap.B, grid),
        p_surface=l2_norm(snap.P[-1], grid),
        kinematic=l2_norm(np.asarray(d_eta) - (snap.B - eta_x * snap.V), grid),
    )


def taylor_coefficient(snap):
    """a = -dy P on the free surface.

    With P = Q - g y - |v|^2 / 2 this is g - dy Q + dy |v|^2 / 2. Only dy Q
    uses the one-sided second-order z-stencil; the velocity gradient on the
    surface follows from div v = curl v = 0 and the tangential derivatives
    of (V, B), which are spectral.
    """
    m = snap.map
    grid = m.grid
    qz = (3.0 * snap.Q[-1] - 4.0 * snap.Q[-2] + snap.Q[-3]) / (2.0 * m.dz)
    q_y = qz / m.d_z_rho[-1]
    eta_x = spectral_derivative(snap.eta, grid)
    dv, db = spectral_derivative(snap.V, grid), spectral_derivative(snap.B, grid)
    norm = 1.0 + eta_x**2
    vx_x = (dv - eta_x * db) / norm
    vx_y = (db + eta_x * dv) / norm
    # dy |v|^2 / 2 = vx dy vx + vy dy vy, with dy vy = -dx vx
    return snap.g - q_y + snap.V * vx_y - snap.B * vx_x


@dataclass
class VerificationReport:
    euler_residual_l2: float
    euler_residual_sup: float
    edge_residual_l2: float
    bernoulli_residual_l2: float
    div_residual: float
    curl_residual: float
    trace_errors: dict
    taylor_min: float
    taylor_threshold: float
    hamiltonian_drift: float
    mass_drift: float
    observed_orders: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    per_snapshot: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return asdict(self)


def _order(coarse, fine, ratio=2.0):
    return float(np.log(coarse / fine) / np.log(ratio))


def verify_trajectory(states, p, taylor_threshold=None):
    """Reconstruct every snapshot of a trajectory and aggregate the checks.

    Residuals that need a time derivative use consecutive triples; with at
    least five snapshots the same centres are also evaluated with doubled
    spacing, which gives a two-level estimate of the time-differencing
    order for the Bernoulli and momentum residuals.
    """
    states = list(states)
    if len(states) < 3:
        raise InsufficientSnapshots(len(states))
    threshold = 0.5 * p.g if taylor_threshold is None else float(taylor_threshold)
    snaps = [reconstruct_bulk(s, p) for s in states]
    for s in snaps[1:]:
        if not snaps[0].map.same_grid(s.map):
            raise GridMismatch("snapshots live on different grids")

    rows = []
    h0 = hamiltonian(states[0], p, snaps[0].d_eta)
    m0 = conserved_mass(states[0], p.grid)
    for state, snap in zip(states, snaps):
        tr = trace_checks(snap, state, snap.d_eta)
        h = hamiltonian(state, p, snap.d_eta)
        rows.append(
            {
                "t": state.t,
                "taylor_min": float(np.min(taylor_coefficient(snap))),
                "hamiltonian": h,
                "mass": conserved_mass(state, p.grid),
                **asdict(tr),
            }
        )

    tol = 10.0 * p.cg_tol
    bern, euler = [], []
    for i in range(1, len(snaps) - 1):
        bern.append(bernoulli_check(snaps[i - 1], snaps[i], snaps[i + 1]))
        euler.append(euler_residual(snaps[i - 1], snaps[i], snaps[i + 1]))

    orders = {}
    if len(snaps) >= 5:
        centres = range(2, len(snaps) - 2)
        b1 = [bernoulli_check(snaps[i - 1], snaps[i], snaps[i + 1]) for i in centres]
        b2 = [bernoulli_check(snaps[i - 2], snaps[i], snaps[i + 2]) for i in centres]
        e1 = [euler_residual(snaps[i - 1], snaps[i], snaps[i + 1]).momentum_l2 for i in centres]
        e2 = [euler_residual(snaps[i - 2], snaps[i], snaps[i + 2]).momentum_l2 for i in centres]
        for name, fine, coarse in (("bernoulli", b1, b2), ("euler", e1, e2)):
            fine, coarse = np.sqrt(np.mean(np.square(fine))), np.sqrt(np.mean(np.square(coarse)))
            if coarse > tol and fine > 0:
                orders[name] = _order(coarse, fine)

    def worst(key):
        return max(r[key] for r in rows)

    h_scale = abs(h0) if h0 != 0 else 1.0
    report = VerificationReport(
        euler_residual_l2=max(e.momentum_l2 for e in euler),
        euler_residual_sup=max(e.momentum_sup for e in euler),
        edge_residual_l2=max(e.edge_momentum_l2 for e in euler),
        bernoulli_residual_l2=max(bern),
        div_residual=max(e.div_l2 for e in euler),
        curl_residual=max(e.curl_l2 for e in euler),
        trace_errors={k: worst(k) for k in ("p_surface", "v_trace", "b_trace", "kinematic")},
        taylor_min=min(r["taylor_min"] for r in rows),
        taylor_threshold=threshold,
        hamiltonian_drift=max(abs(r["hamiltonian"] - h0) for r in rows) / h_scale,
        mass_drift=max(abs(r["mass"] - m0) for r in rows),
        observed_orders=orders,
        per_snapshot=rows,
    )
    report.checks = {
        "p_surface": report.trace_errors["p_surface"] <= tol,
        "kinematic": report.trace_errors["kinematic"] <= 1e-12,
        "taylor_positivity": report.taylor_min >= threshold,
        "finite": all(
            np.isfinite(v)
            for v in (
                report.euler_residual_l2,
                report.bernoulli_residual_l2,
                report.div_residual,
                report.curl_residual,
                report.hamiltonian_drift,
                report.mass_drift,
            )
        ),
    }
    return report
