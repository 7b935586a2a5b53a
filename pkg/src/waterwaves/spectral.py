"""
Periodic Fourier toolbox on a uniform 1-D grid.

Fields are plain real ``numpy`` arrays whose last axis has length ``n_x``;
leading axes (e.g. the vertical levels of a bulk field) are carried along,
so every routine here acts row-wise on 2-D arrays as well.

Conventions
-----------
    x_j = j * L / n_x,              j = 0, ..., n_x - 1
    k_j = 2 pi j / L,               j = -n_x/2, ..., n_x/2 - 1
    <xi> = sqrt(1 + xi^2)           (Japanese bracket)

Transforms are ``numpy.fft.rfft``/``irfft`` along the last axis.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, length).

    Parameters
    ----------
    n_x : int
        Number of collocation points. Must be an even power of two, >= 8.
    length : float
        Domain period L.
    """

    n_x: int
    length: float = 2.0 * np.pi
    x: np.ndarray = field(init=False, repr=False, compare=False)
    rk: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n_x)
        if n < 8 or n % 2 or (n & (n - 1)):
            raise ValueError(f"n_x must be a power of two >= 8, got {self.n_x}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n_x", n)
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "x", np.arange(n) * self.dx)
        rk = 2.0 * np.pi / self.length * np.arange(n // 2 + 1)
        rk.setflags(write=False)
        self.x.setflags(write=False)
        object.__setattr__(self, "rk", rk)

    @property
    def dx(self):
        return self.length / self.n_x

    @property
    def wavenumbers(self):
        """All n_x wavenumbers in ascending order, -n_x/2 ... n_x/2 - 1."""
        j = np.arange(-self.n_x // 2, self.n_x // 2)
        return 2.0 * np.pi / self.length * j

    @property
    def k_max(self):
        return np.pi * self.n_x / self.length


def japanese_bracket(xi):
    return np.sqrt(1.0 + np.asarray(xi) ** 2)


def _check_finite(f):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")
    return f


def _check_length(f, grid):
    if f.shape[-1] != grid.n_x:
        raise ValueError(f"last axis has length {f.shape[-1]}, grid has n_x = {grid.n_x}")


def forward(f, grid):
    """Real-to-half-complex transform along the last axis."""
    f = np.asarray(f, dtype=float)
    _check_length(f, grid)
    return np.fft.rfft(f, axis=-1)


def inverse(fh, grid):
    return np.fft.irfft(fh, n=grid.n_x, axis=-1)


def spectral_derivative(f, grid, order=1):
    """Fourier-collocation derivative of the given order along x.

    The Nyquist coefficient is dropped for odd orders so that the
    derivative of a real field stays real and the first-derivative
    matrix is exactly antisymmetric.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    f = _check_finite(f)
    fh = forward(f, grid)
    symbol = (1j * grid.rk) ** int(order)
    if order % 2:
        symbol[-1] = 0.0
    return inverse(fh * symbol, grid)


def apply_multiplier(f, grid, m):
    """Apply the Fourier multiplier ``m(k)`` along the last axis.

    ``m`` is either a callable evaluated on the non-negative wavenumbers
    ``grid.rk`` or an array broadcastable against ``rfft(f)``. The symbol
    is taken to be even in ``k``, which keeps the output real.
    """
    f = _check_finite(f)
    symbol = m(grid.rk) if callable(m) else m
    symbol = np.asarray(symbol)
    if np.iscomplexobj(symbol) or not np.all(np.isfinite(symbol)):
        raise ValueError("multiplier must be real and finite on the grid wavenumbers")
    return inverse(forward(f, grid) * symbol, grid)


def dealias_mask(grid):
    return grid.rk <= (2.0 / 3.0) * grid.k_max + 1e-12 * grid.k_max


def dealias(f, grid):
    """Zero all modes with |k| > (2/3) k_max (the 2/3 rule)."""
    f = np.asarray(f, dtype=float)
    return inverse(forward(f, grid) * dealias_mask(grid), grid)


def l2_norm(f, grid):
    """Discrete L2 norm, sqrt(dx * sum f^2), over the last axis and all others."""
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(grid.dx * np.sum(f * f)))


def spectral_l2_norm(f, grid):
    """The same norm computed from Fourier coefficients (Parseval)."""
    fh = forward(f, grid) / grid.n_x
    weight = np.full(fh.shape[-1], 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0
    return float(np.sqrt(grid.length * np.sum(weight * np.abs(fh) ** 2)))


def inner(f, g, grid):
    """Discrete L2 inner product (trapezoid rule, spectrally exact for periodic data)."""
    return float(grid.dx * np.sum(np.asarray(f) * np.asarray(g)))


def integrate(f, grid):
    return float(grid.dx * np.sum(f))
