"""
Uniform 1-D position grid, its conjugate momentum grid, and the quadrature
primitives every other module builds on.

Conventions (natural units, hbar = m = 1):

* samples are left-closed, right-open: x_j = x_min + j*dx, j = 0..n-1
* integrals are plain Riemann sums with weight dx
* momenta follow the standard DFT layout, p_k = 2*pi*fftfreq(n, dx)
* forward transform is unnormalized, inverse carries 1/n, so that
  sum |psi_j|^2 dx == sum |F[psi]_k|^2 * dx / n
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

MIN_POINTS = 8


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or isinstance(self.n_points, bool):
            raise ConfigurationError(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < MIN_POINTS or not _is_power_of_two(int(self.n_points)):
            raise ConfigurationError(
                f"n_points must be a power of two >= {MIN_POINTS}, got {self.n_points}"
            )
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise ConfigurationError(
                f"need x_max > x_min, got x_min={self.x_min}, x_max={self.x_max}"
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(self.x_min + np.arange(self.n_points) * self.dx)

    @cached_property
    def p(self) -> np.ndarray:
        return _frozen(momentum_samples(self.n_points, self.dx))

    @property
    def p_max(self) -> float:
        """Largest representable |p|, pi/dx (the Nyquist momentum)."""
        return np.pi / self.dx

    def covers(self, a: float, b: float | None = None) -> bool:
        hi = a if b is None else b
        return self.x_min <= a and hi <= self.x_max

    def interval_mask(self, a: float, b: float) -> np.ndarray:
        """Boolean mask of samples with a <= x_j < b."""
        x = self.x
        return (x >= a) & (x < b)

    def nearest_index(self, x0: float) -> int:
        """Index of the sample nearest to x0; ties resolve to the smaller index."""
        return int(np.argmin(np.abs(self.x - x0)))


def momentum_samples(n: int, dx: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, d=dx)


def make_grid(x_min: float, x_max: float, n_points: int) -> SpatialGrid:
    """Build a grid; raises ConfigurationError on a bad extent or point count."""
    return SpatialGrid(float(x_min), float(x_max), n_points)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples psi(x_j) on a grid. Immutable; transforms return new objects."""

    grid: SpatialGrid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"amplitudes shape {amps.shape} does not match grid of {self.grid.n_points} points"
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes)

    def scaled(self, factor: complex) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes * factor)

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        _same_grid(self, other)
        return WaveFunction(self.grid, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        _same_grid(self, other)
        return WaveFunction(self.grid, self.amplitudes - other.amplitudes)


def zeros(grid: SpatialGrid) -> WaveFunction:
    return WaveFunction(grid, np.zeros(grid.n_points, dtype=np.complex128))


def _same_grid(phi: WaveFunction, psi: WaveFunction) -> None:
    if phi.grid != psi.grid:
        raise ValueError("wavefunctions live on different grids")


def norm_squared(psi: WaveFunction) -> float:
    """Riemann-sum norm, sum_j |psi_j|^2 dx."""
    return float(np.sum(psi.density) * psi.grid.dx)


def overlap(phi: WaveFunction, psi: WaveFunction) -> complex:
    """Inner product <phi|psi> = sum_j conj(phi_j) psi_j dx."""
    _same_grid(phi, psi)
    return complex(np.vdot(phi.amplitudes, psi.amplitudes) * phi.grid.dx)


def probability_in(psi: WaveFunction, a: float, b: float) -> float:
    """Probability of finding the particle in [a, b), summed on grid samples."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    mask = psi.grid.interval_mask(a, b)
    return float(np.sum(psi.density[mask]) * psi.grid.dx)


def momentum_norm_squared(psi: WaveFunction) -> float:
    """Norm evaluated in momentum space; equals norm_squared by Parseval."""
    spectrum = np.fft.fft(psi.amplitudes)
    return float(np.sum(np.abs(spectrum) ** 2) * psi.grid.dx / psi.grid.n_points)


def expectation_x(psi: WaveFunction) -> float:
    w = psi.density
    return float(np.sum(psi.grid.x * w) / np.sum(w))


def variance_x(psi: WaveFunction) -> float:
    w = psi.density
    mean = np.sum(psi.grid.x * w) / np.sum(w)
    return float(np.sum((psi.grid.x - mean) ** 2 * w) / np.sum(w))


def expectation_p(psi: WaveFunction) -> float:
    spectrum = np.abs(np.fft.fft(psi.amplitudes)) ** 2
    return float(np.sum(psi.grid.p * spectrum) / np.sum(spectrum))
