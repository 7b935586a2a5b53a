"""
Variational Laplace solver on the straightened strip and the
Dirichlet-Neumann operator.

The Dirichlet energy of a field U(x, y) pulled back to (x, z) is

    a(U, W) = int int  J Ux Wx - s (Ux Wz + Uz Wx) + K Uz Wz  dx dz,

with J = dz(rho), s = dx(rho), K = (1 + s^2) / J. It is discretized with
piecewise-linear elements in z (one cell between consecutive levels,
midpoint quadrature) and Fourier collocation in x (trapezoid quadrature).
Writing the form as ``M^T W M`` keeps the discrete operator symmetric
positive semi-definite; the only null vector is the constant, removed by
the Dirichlet row at z = 0. No flux term is assembled at z = -1, so the
bottom Neumann condition is natural.

The Dirichlet-Neumann operator is the discrete co-normal flux: the residual
of the assembled operator on the surface row, divided by the x-quadrature
weight. This makes ``<phi, G psi>`` equal to the (symmetric) energy of the
two discrete harmonic extensions.
"""

import weakref
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .spectral import apply_multiplier, japanese_bracket


@dataclass(frozen=True)
class SolverConfig:
    cg_tol: float = 1e-10
    max_iter: int | None = None

    def __post_init__(self):
        if not (0 < self.cg_tol <= 1e-4):
            raise ValueError(f"cg_tol must lie in (0, 1e-4], got {self.cg_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    @classmethod
    def unvalidated(cls, cg_tol, max_iter=None):
        """Bypass range checks; used to inject faults into the self-test."""
        cfg = object.__new__(cls)
        object.__setattr__(cfg, "cg_tol", float(cg_tol))
        object.__setattr__(cfg, "max_iter", max_iter)
        return cfg

    def iterations_for(self, shape):
        if self.max_iter is not None:
            return int(self.max_iter)
        return 10 * shape[0] * shape[1]


class EnergyOperator:
    """Matrix-free discrete Dirichlet energy on one :class:`DomainMap`.

    ``apply(U)`` acts on full bulk arrays (n_z, n_x); ``matvec(u)`` is the
    restriction to the unknowns below the surface (rows 0 .. n_z - 2)
    with the surface row held at zero.
    """

    def __init__(self, m):
        grid = m.grid
        self.shape = m.shape
        self.dz = m.dz
        self.weight = grid.dx * m.dz
        self._ik = 1j * grid.rk
        self._ik[-1] = 0.0
        self._n_x = grid.n_x

        self.jac = np.diff(m.rho, axis=0) / m.dz
        self.slope = 0.5 * (m.grad_x_rho[1:] + m.grad_x_rho[:-1])
        self.kzz = (1.0 + self.slope**2) / self.jac
        self._factor_preconditioner(grid)

    def _dx(self, f):
        return np.fft.irfft(np.fft.rfft(f, axis=-1) * self._ik, n=self._n_x, axis=-1)

    def fluxes(self, U):
        """Horizontal and vertical cell fluxes (already quadrature-weighted)."""
        ux = self._dx(U)
        ux_c = 0.5 * (ux[1:] + ux[:-1])
        uz_c = np.diff(U, axis=0) / self.dz
        fx = self.weight * (self.jac * ux_c - self.slope * uz_c)
        fz = self.weight * (self.kzz * uz_c - self.slope * ux_c)
        return fx, fz

    def apply(self, U):
        fx, fz = self.fluxes(U)
        # transpose of the antisymmetric x-derivative is -dx
        gx = -0.5 * self._dx(fx)
        out = np.zeros(self.shape)
        out[:-1] += gx - fz / self.dz
        out[1:] += gx + fz / self.dz
        return out

    def energy(self, U, W=None):
        W = U if W is None else W
        return float(np.sum(W * self.apply(U)))

    def matvec(self, u):
        U = np.zeros(self.shape)
        U[:-1] = u
        return self.apply(U)[:-1]

    def _factor_preconditioner(self, grid):
        # x-averaged coefficients; the mean of dx(rho) vanishes, so the cross term drops
        jbar = self.jac.mean(axis=1)
        kbar = self.kzz.mean(axis=1)
        k2 = grid.rk**2
        k2[-1] = 0.0
        n = self.shape[0] - 1
        mass = 0.25 * self.dz * np.outer(jbar, k2)
        stiff = (kbar / self.dz)[:, None]
        cell = grid.dx * (mass + stiff)
        off = grid.dx * (mass - stiff)[: n - 1]
        diag = cell.copy()
        diag[1:] += cell[:-1]

        cprime = np.zeros_like(off)
        denom = np.empty_like(diag)
        denom[0] = diag[0]
        for j in range(n - 1):
            cprime[j] = off[j] / denom[j]
            denom[j + 1] = diag[j + 1] - off[j] * cprime[j]
        self._lower = off
        self._cprime = cprime
        self._denom = denom

    def precondition(self, r):
        """Exact inverse of the x-averaged operator, one tridiagonal solve per mode."""
        rh = np.fft.rfft(r, axis=-1)
        n = rh.shape[0]
        d = np.empty_like(rh)
        d[0] = rh[0] / self._denom[0]
        for j in range(1, n):
            d[j] = (rh[j] - self._lower[j - 1] * d[j - 1]) / self._denom[j]
        for j in range(n - 2, -1, -1):
            d[j] -= self._cprime[j] * d[j + 1]
        return np.fft.irfft(d, n=self._n_x, axis=-1)


_operators = weakref.WeakKeyDictionary()


def assemble_energy(m):
    """The (cached) discrete energy operator of a domain map."""
    op = _operators.get(m)
    if op is None:
        op = EnergyOperator(m)
        _operators[m] = op
    return op


def pcg(matvec, b, precondition, tol, max_iter):
    """Preconditioned conjugate gradient; stops on ||r|| <= tol ||b||.

    Returns ``(x, iterations)``. The recursively updated residual is
    checked against the true residual before returning.
    """
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0
    r = b.copy()
    it = 0
    res = 1.0
    while it < max_iter:
        z = precondition(r)
        p = z
        rz = np.vdot(r, z).real
        while it < max_iter:
            it += 1
            ap = matvec(p)
            alpha = rz / np.vdot(p, ap).real
            x += alpha * p
            r -= alpha * ap
            res = np.linalg.norm(r) / bnorm
            if res <= tol:
                break
            z = precondition(r)
            rz_new = np.vdot(r, z).real
            p = z + (rz_new / rz) * p
            rz = rz_new
        r = b - matvec(x)
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it
    raise NoConvergence(it, res)


def chi(z):
    """Quintic smoothstep: 0 for z <= -1, 1 for z >= -1/2."""
    t = np.clip((np.asarray(z, dtype=float) + 1.0) / 0.5, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def lift_trace(psi, m):
    """Extension chi(z) exp(z <D>) psi of surface data into the strip."""
    psi = np.asarray(psi, dtype=float)
    z = m.z
    symbol = np.exp(np.outer(z, japanese_bracket(m.grid.rk)))
    lifted = chi(z)[:, None] * apply_multiplier(
        np.broadcast_to(psi, m.shape), m.grid, symbol
    )
    lifted[-1] = psi
    lifted[0] = 0.0
    return lifted


def solve_dirichlet(boundary, m, cfg=SolverConfig()):
    """Discrete harmonic field with the given surface values and a Neumann bottom.

    Solves a(u, w) = -a(lift, w) for all w vanishing on the surface and
    returns u + lift.

    Raises
    ------
    NoConvergence
        If PCG does not reach ``cfg.cg_tol``.
    """
    boundary = np.asarray(boundary, dtype=float)
    if boundary.shape != (m.grid.n_x,):
        raise ValueError(f"boundary must have shape ({m.grid.n_x},), got {boundary.shape}")
    op = assemble_energy(m)
    lifted = lift_trace(boundary, m)
    rhs = -op.apply(lifted)[:-1]
    u, _ = pcg(op.matvec, rhs, op.precondition, cfg.cg_tol, cfg.iterations_for(m.shape))
    phi = lifted
    phi[:-1] += u
    return phi


def surface_flux(phi, m):
    """Discrete co-normal derivative dy(Phi) - dx(eta) dx(Phi) on the surface."""
    return assemble_energy(m).apply(phi)[-1] / m.grid.dx


def dno_apply(eta, psi, m, cfg=SolverConfig()):
    """Dirichlet-Neumann operator G(eta) psi on the x-grid."""
    if not np.array_equal(np.asarray(eta, dtype=float), m.eta):
        raise ValueError("domain map was built from a different surface elevation")
    return surface_flux(solve_dirichlet(psi, m, cfg), m)


def dno_flat_symbol(psi, grid, h_b=1.0, depth="finite"):
    """Exact flat-surface operator: |k| tanh(h_b |k|), or |k| for infinite depth."""
    if depth == "finite":
        return apply_multiplier(psi, grid, lambda k: k * np.tanh(h_b * k))
    if depth == "infinite":
        return apply_multiplier(psi, grid, lambda k: k)
    raise ValueError(f"depth must be 'finite' or 'infinite', got {depth!r}")


def surface_gradients(phi, m):
    """Surface traces (dy Phi, dx Phi) from one-sided second-order z-differences.

    Returns ``(B_surface, V_surface)``.
    """
    phi = np.asarray(phi, dtype=float)
    fz = (3.0 * phi[-1] - 4.0 * phi[-2] + phi[-3]) / (2.0 * m.dz)
    jac = m.d_z_rho[-1]
    b = fz / jac
    v = np.fft.irfft(
        np.fft.rfft(phi[-1]) * _odd_symbol(m.grid), n=m.grid.n_x
    ) - m.grad_x_rho[-1] / jac * fz
    return b, v


def _odd_symbol(grid):
    ik = 1j * grid.rk
    ik[-1] = 0.0
    return ik
