"""
Gaussian wave packets and their closed-form free evolution.

All quantities are in natural units of a harmonic trap of frequency omega:
time t0 = 1/omega, length l0 = sqrt(hbar/(m omega)), energy E0 = hbar omega,
with hbar = m = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PacketEscapesGrid
from .grid import SpatialGrid, WaveFunction, norm_squared

# Support margins in units of the (time-dependent) width parameter.
SOFT_MARGIN = 8.0
HARD_MARGIN = 5.0


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    mass: float = 1.0
    time_unit: str = "t0"
    length_unit: str = "l0"
    energy_unit: str = "E0"


UNITS = UnitSystem()


class PacketSupportWarning(UserWarning):
    """Packet closer to the grid edge than the recommended margin."""


@dataclass(frozen=True)
class GaussianSpec:
    """One packet: mean position x0, mean momentum p0, width sigma0, complex weight."""

    x0: float
    p0: float
    sigma0: float = 1.0
    weight: complex = 1.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")

    def center(self, t: float) -> float:
        return self.x0 + self.p0 * t / UNITS.mass

    def width(self, t: float) -> float:
        s = self.sigma0
        return s * np.sqrt(1.0 + (UNITS.hbar * t / (UNITS.mass * s * s)) ** 2)


@dataclass(frozen=True)
class InitialState:
    packets: tuple[GaussianSpec, ...]

    def __init__(self, packets: Sequence[GaussianSpec]):
        packets = tuple(packets)
        if not packets:
            raise ValueError("an initial state needs at least one packet")
        object.__setattr__(self, "packets", packets)

    @classmethod
    def single(cls, x0: float, p0: float, sigma0: float = 1.0) -> "InitialState":
        return cls([GaussianSpec(x0, p0, sigma0)])


def check_support(spec: GaussianSpec, grid: SpatialGrid, t: float = 0.0) -> None:
    """Raise PacketEscapesGrid below the hard margin; warn below the soft one."""
    c, w = spec.center(t), spec.width(t)
    margin = min(c - grid.x_min, grid.x_max - c) / w
    if margin < HARD_MARGIN:
        raise PacketEscapesGrid(
            f"packet escapes grid: at t={t:g} the packet centred at {c:g} with width {w:g} "
            f"sits {margin:.2f} widths from the edge of [{grid.x_min:g}, {grid.x_max:g}); "
            f"need at least {HARD_MARGIN:g}"
        )
    if margin < SOFT_MARGIN:
        warnings.warn(
            f"packet at t={t:g} is only {margin:.2f} widths from the grid edge "
            f"(recommended {SOFT_MARGIN:g})",
            PacketSupportWarning,
            stacklevel=3,
        )


def gaussian_amplitude(spec: GaussianSpec, x: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Closed-form freely evolved Gaussian psi(x, t), unit weight, no renormalisation.

    At t = 0 this is (pi sigma0^2)^(-1/4) exp(-(x-x0)^2/(2 sigma0^2) + i p0 (x-x0)).
    """
    x = np.asarray(x, dtype=float)
    s, x0, p0 = spec.sigma0, spec.x0, spec.p0
    hbar, m = UNITS.hbar, UNITS.mass
    spread = 1.0 + 1j * hbar * t / (m * s * s)
    shifted = x - x0 - p0 * t / m
    envelope = np.exp(-(shifted**2) / (2.0 * s * s * spread))
    carrier = np.exp(1j * p0 / hbar * (x - x0 - p0 * t / (2.0 * m)))
    prefactor = 1.0 / np.sqrt(np.sqrt(np.pi) * (s + 1j * hbar * t / (m * s)))
    return prefactor * envelope * carrier


def make_gaussian(spec: GaussianSpec, grid: SpatialGrid) -> WaveFunction:
    """Sample a t = 0 packet and renormalise it on the grid (weight is ignored)."""
    check_support(spec, grid, 0.0)
    psi = WaveFunction(grid, gaussian_amplitude(spec, grid.x, 0.0))
    return psi.scaled(1.0 / np.sqrt(norm_squared(psi)))


def make_superposition(state: InitialState, grid: SpatialGrid) -> WaveFunction:
    """Weighted sum of grid-normalised packets, rescaled so the total has unit norm.

    Interference cross terms are included in the normalisation.
    """
    amps = np.zeros(grid.n_points, dtype=np.complex128)
    for spec in state.packets:
        amps += spec.weight * make_gaussian(spec, grid).amplitudes
    psi = WaveFunction(grid, amps)
    n2 = norm_squared(psi)
    if n2 == 0.0:
        raise ValueError("packet weights cancel to a zero state")
    return psi.scaled(1.0 / np.sqrt(n2))


def analytic_free_evolution(spec: GaussianSpec, t: float, grid: SpatialGrid) -> WaveFunction:
    check_support(spec, grid, t)
    return WaveFunction(grid, gaussian_amplitude(spec, grid.x, t))


def superposition_scale(state: InitialState, grid: SpatialGrid) -> float:
    """Normalisation constant of the weighted analytic sum, fixed at t = 0 on the grid.

    Free evolution is unitary, so the same constant is valid at every time.
    """
    amps = sum(spec.weight * gaussian_amplitude(spec, grid.x, 0.0) for spec in state.packets)
    n2 = float(np.sum(np.abs(amps) ** 2) * grid.dx)
    if n2 == 0.0:
        raise ValueError("packet weights cancel to a zero state")
    return 1.0 / np.sqrt(n2)


def superposition_amplitude(
    state: InitialState, x: np.ndarray, t: float, scale: float
) -> np.ndarray:
    """Evaluate the normalised analytic superposition at arbitrary positions."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=np.complex128)
    for spec in state.packets:
        out += spec.weight * gaussian_amplitude(spec, x, t)
    return scale * out


def analytic_superposition_evolution(
    state: InitialState, t: float, grid: SpatialGrid
) -> WaveFunction:
    for spec in state.packets:
        check_support(spec, grid, t)
    scale = superposition_scale(state, grid)
    return WaveFunction(grid, superposition_amplitude(state, grid.x, t, scale))
