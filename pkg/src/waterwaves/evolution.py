"""
Time stepping of the surface system

    dt eta = G(eta) psi
    dt psi = -g eta - |dx psi|^2 / 2 + (dx eta dx psi + G(eta) psi)^2 / (2 (1 + |dx eta|^2))

with classical RK4, plus the surface diagnostics (B, V, energy, mass).
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .elliptic import SolverConfig, dno_apply
from .geometry import MapParams, build_domain_map, check_separation, default_delta
from .spectral import Grid, dealias, integrate, spectral_derivative


@dataclass(frozen=True)
class SurfaceState:
    t: float
    eta: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if eta.shape != psi.shape or eta.ndim != 1:
            raise ValueError(f"eta and psi must be 1-D of equal length, got {eta.shape}, {psi.shape}")
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(psi))):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class EvolutionParams:
    """Physical and numerical parameters of a run.

    ``delta`` and ``dt`` may be left as ``None``; :meth:`resolved` fills
    them from the initial elevation and the grid.
    """

    n_x: int = 128
    n_z: int = 64
    length: float = 2.0 * np.pi
    g: float = 1.0
    h_b: float = 1.0
    delta: float | None = None
    dt: float | None = None
    t_end: float = 1.0
    dealias_on: bool = True
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    strip_margin: float | None = None
    _grid: Grid = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.dt is not None and not self.dt >= 0:
            raise ValueError(f"dt must be non-negative, got {self.dt}")
        object.__setattr__(self, "_grid", Grid(self.n_x, self.length))

    @property
    def grid(self):
        return self._grid

    @cached_property
    def solver(self):
        return SolverConfig(self.cg_tol, self.cg_max_iter)

    def map_params(self):
        if self.delta is None:
            raise ValueError("delta is unresolved; call resolved(eta0) first")
        return MapParams(h_b=self.h_b, delta=self.delta, n_z=self.n_z, margin=self.strip_margin)

    def default_dt(self):
        k = self.grid.k_max
        return 0.25 / np.sqrt(self.g * k * np.tanh(k * self.h_b))

    def resolved(self, eta0):
        """Copy with ``delta`` and ``dt`` fixed for the whole run."""
        delta = default_delta(eta0, self.grid) if self.delta is None else self.delta
        dt = self.default_dt() if self.dt is None else self.dt
        return replace(self, delta=delta, dt=dt)


def compute_BV(eta, psi, g_psi, grid):
    """Surface velocity components from (eta, psi, G(eta) psi).

    Returns
    -------
    B, V : ndarray
        Vertical and horizontal velocity on the free surface.
    """
    eta_x = spectral_derivative(eta, grid)
    psi_x = spectral_derivative(psi, grid)
    b = (eta_x * psi_x + g_psi) / (1.0 + eta_x**2)
    v = psi_x - b * eta_x
    return b, v


def _map(eta, p):
    return build_domain_map(eta, p.grid, p.map_params())


def dno(eta, psi, p):
    return dno_apply(eta, psi, _map(eta, p), p.solver)


def zakharov_rhs(state, p, g_psi=None):
    """Right-hand sides (d_eta, d_psi) of the surface system.

    ``g_psi`` may be passed in when G(eta) psi is already known.
    """
    grid = p.grid
    eta, psi = state.eta, state.psi
    if g_psi is None:
        g_psi = dno(eta, psi, p)
    eta_x = spectral_derivative(eta, grid)
    psi_x = spectral_derivative(psi, grid)
    grad2 = psi_x**2
    flux2 = (eta_x * psi_x + g_psi) ** 2
    slope2 = eta_x**2
    if p.dealias_on:
        grad2 = dealias(grad2, grid)
        flux2 = dealias(flux2, grid)
        slope2 = dealias(slope2, grid)
    quotient = flux2 / (1.0 + slope2)
    if p.dealias_on:
        quotient = dealias(quotient, grid)
    d_psi = -p.g * eta - 0.5 * grad2 + 0.5 * quotient
    return g_psi, d_psi


def rk4_step(state, p):
    """One classical fourth-order Runge-Kutta step of size ``p.dt``.

    The straightening map is rebuilt from the stage elevation at every
    stage; a stage that leaves the strip raises :class:`StripViolation`.
    """
    dt = p.dt
    if dt == 0:
        return state

    def stage(s, k, c):
        return SurfaceState(s.t + c * dt, s.eta + c * dt * k[0], s.psi + c * dt * k[1])

    k1 = zakharov_rhs(state, p)
    k2 = zakharov_rhs(stage(state, k1, 0.5), p)
    k3 = zakharov_rhs(stage(state, k2, 0.5), p)
    k4 = zakharov_rhs(stage(state, k3, 1.0), p)
    eta = state.eta + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    psi = state.psi + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return SurfaceState(state.t + dt, eta, psi)


def hamiltonian(state, p, g_psi=None):
    """H = 1/2 int (psi G(eta) psi + g eta^2) dx."""
    if g_psi is None:
        g_psi = dno(state.eta, state.psi, p)
    return 0.5 * integrate(state.psi * g_psi + p.g * state.eta**2, p.grid)


def conserved_mass(state, grid):
    return integrate(state.eta, grid)


def linear_frequency(k, g=1.0, h_b=1.0):
    return np.sqrt(g * k * np.tanh(k * h_b))


def initial_state(p, kind="standing_wave", amplitude=1e-3, wavenumber=2.0):
    """Linear standing or travelling wave on the grid of ``p``."""
    x = p.grid.x
    k = float(wavenumber)
    eta = amplitude * np.cos(k * x)
    if kind == "standing_wave" or k == 0:
        psi = np.zeros_like(x)
    elif kind == "traveling_wave_linear":
        psi = p.g * amplitude / linear_frequency(k, p.g, p.h_b) * np.sin(k * x)
    else:
        raise ValueError(f"unknown initial condition kind {kind!r}")
    return SurfaceState(0.0, eta, psi)


def simulate(state, p, n_steps, stride=1, callback=None):
    """Advance ``n_steps`` RK4 steps, yielding every ``stride``-th state (including the first)."""
    check_separation(state.eta, p.map_params())
    yield state
    for step in range(1, n_steps + 1):
        state = rk4_step(state, p)
        if callback is not None:
            callback(step, state)
        if step % stride == 0:
            yield state
