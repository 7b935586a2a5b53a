"""
Boundary-straightening map for a fluid layer over a flat bottom.

The fluid domain {-h_b < y < eta(x)} is pulled back to the fixed strip
z in [-1, 0] by

    rho(x, z) = (1 + z) exp(delta z <D>) eta(x) + z h_b,

so that rho(x, 0) = eta(x) and rho(x, -1) = -h_b. Physical derivatives of
a field f(x, y) are recovered from its pullback f~(x, z) = f(x, rho(x, z))
through

    d/dy = (1 / dz rho) d/dz                          (lambda_apply(..., 1))
    d/dx = d/dx - (dx rho / dz rho) d/dz              (lambda_apply(..., 2))

Bulk fields are arrays of shape (n_z, n_x); row 0 is the bottom (z = -1)
and row n_z - 1 the free surface (z = 0).
"""

from dataclasses import dataclass

import numpy as np

from .errors import SeparationViolation, StripViolation
from .spectral import Grid, apply_multiplier, japanese_bracket, spectral_derivative


def w1inf_norm(eta, grid):
    eta = np.asarray(eta, dtype=float)
    return float(np.max(np.abs(eta)) + np.max(np.abs(spectral_derivative(eta, grid))))


def default_delta(eta, grid):
    """Smoothing parameter used when none is given: small against ||eta||_{W^1,inf}."""
    return min(0.05 / max(1.0, w1inf_norm(eta, grid)), 0.5)


@dataclass(frozen=True)
class MapParams:
    """Parameters of the straightening map.

    ``margin`` is the minimum strip height accepted by
    :func:`build_domain_map`; ``None`` means ``h_b / 10``.
    """

    h_b: float = 1.0
    delta: float = 0.05
    n_z: int = 64
    margin: float | None = None

    def __post_init__(self):
        if not self.h_b > 0:
            raise ValueError(f"h_b must be positive, got {self.h_b}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if int(self.n_z) != self.n_z or self.n_z < 8:
            raise ValueError(f"n_z must be an integer >= 8, got {self.n_z}")
        if self.margin is not None and self.margin < 0:
            raise ValueError(f"margin must be non-negative, got {self.margin}")

    @property
    def z(self):
        return np.linspace(-1.0, 0.0, int(self.n_z))

    @property
    def dz(self):
        return 1.0 / (int(self.n_z) - 1)

    @property
    def strip_margin(self):
        return self.h_b / 10.0 if self.margin is None else float(self.margin)


@dataclass(frozen=True, eq=False)
class DomainMap:
    """Tabulated straightening map and its first derivatives.

    ``d_z_rho`` is the finite-difference z-derivative of the tabulated
    ``rho`` (the same stencil used by :func:`lambda_apply`, which makes
    ``lambda_apply(rho, m, 1) == 1`` exactly); ``d_z_rho_exact`` is the
    closed-form derivative that the separation bound is checked against.
    """

    grid: Grid
    params: MapParams
    eta: np.ndarray
    rho: np.ndarray
    d_z_rho: np.ndarray
    d_z_rho_exact: np.ndarray
    grad_x_rho: np.ndarray
    strip_height: float
    separation: float

    @property
    def z(self):
        return self.params.z

    @property
    def dz(self):
        return self.params.dz

    @property
    def shape(self):
        return (int(self.params.n_z), self.grid.n_x)

    @property
    def separation_bound(self):
        return min(self.strip_height / 3.0, 1.0)

    def same_grid(self, other):
        return (
            self.grid == other.grid
            and int(self.params.n_z) == int(other.params.n_z)
            and self.params.h_b == other.params.h_b
        )


def check_separation(eta, p):
    """Height of the strip between the free surface and the bottom.

    Raises
    ------
    StripViolation
        If the surface touches or crosses y = -h_b.
    """
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise StripViolation(np.nan, 0.0)
    h = float(np.min(eta)) + p.h_b
    if h <= 0:
        raise StripViolation(h, 0.0)
    return h


def smoothing_symbol(z, delta, rk):
    """exp(delta z <k>) for each level z (rows) and wavenumber (columns)."""
    return np.exp(delta * np.outer(z, japanese_bracket(rk)))


def smooth_extend(f, grid, p):
    """(x, z) -> exp(delta z <D>) f, one row per z level; the top row is f itself."""
    f = np.asarray(f, dtype=float)
    out = apply_multiplier(
        np.broadcast_to(f, (int(p.n_z), grid.n_x)), grid, smoothing_symbol(p.z, p.delta, grid.rk)
    )
    out[-1] = f
    return out


def build_domain_map(eta, grid, p):
    """Tabulate rho and its derivatives on the (z, x) collocation grid.

    Raises
    ------
    StripViolation
        If the strip height does not exceed ``p.strip_margin``.
    SeparationViolation
        If dz(rho) < min(h / 3, 1) at some node, h being the strip height.
    ValueError
        If ``delta * ||eta||_{W^1,inf} > 0.1``.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (grid.n_x,):
        raise ValueError(f"eta must have shape ({grid.n_x},), got {eta.shape}")
    h = check_separation(eta, p)
    if h <= p.strip_margin:
        raise StripViolation(h, p.strip_margin)
    if p.delta * w1inf_norm(eta, grid) > 0.1 + 1e-12:
        raise ValueError(
            f"delta * ||eta||_W1inf = {p.delta * w1inf_norm(eta, grid):.3g} exceeds 0.1"
        )

    z = p.z[:, None]
    smoothed = smooth_extend(eta, grid, p)
    d_smoothed = apply_multiplier(
        smoothed, grid, p.delta * japanese_bracket(grid.rk)
    )
    rho = (1.0 + z) * smoothed + z * p.h_b
    rho[-1] = eta
    rho[0] = -p.h_b

    dz_exact = smoothed + (1.0 + z) * d_smoothed + p.h_b
    dz_discrete = np.gradient(rho, p.dz, axis=0, edge_order=2)
    grad_x = spectral_derivative(rho, grid)

    bound = min(h / 3.0, 1.0)
    lowest = float(np.min(dz_exact))
    if lowest < bound:
        raise SeparationViolation(lowest, bound)
    if np.min(dz_discrete) <= 0:
        raise SeparationViolation(float(np.min(dz_discrete)), bound)

    return DomainMap(
        grid=grid,
        params=p,
        eta=eta.copy(),
        rho=rho,
        d_z_rho=dz_discrete,
        d_z_rho_exact=dz_exact,
        grad_x_rho=grad_x,
        strip_height=h,
        separation=lowest,
    )


def d_dz(f, dz):
    """Second-order z-derivative: centred inside, three-point one-sided at both ends."""
    return np.gradient(f, dz, axis=0, edge_order=2)


def lambda_apply(f, m, which):
    """Physical derivative of a pulled-back field.

    ``which=1`` gives d/dy, ``which=2`` gives d/dx.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != m.shape:
        raise ValueError(f"field shape {f.shape} does not match map shape {m.shape}")
    fz = d_dz(f, m.dz)
    if which == 1:
        return fz / m.d_z_rho
    if which == 2:
        return spectral_derivative(f, m.grid) - m.grad_x_rho / m.d_z_rho * fz
    raise ValueError(f"which must be 1 or 2, got {which}")


def rho_time_derivative(m, d_eta):
    """dt(rho) = (1 + z) exp(delta z <D>) dt(eta) for the flat-bottom map."""
    return (1.0 + m.z[:, None]) * smooth_extend(d_eta, m.grid, m.params)
