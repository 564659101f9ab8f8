"""
Free-particle evolution by the spectral method.

One step multiplies the momentum-space amplitudes by exp(-i p^2 dt / 2), which
is exact for H = p^2/2 on the periodic grid. To keep the DFT's periodicity from
feeding outgoing amplitude back into the domain, each step runs on a
zero-padded copy of the state and the result is cut back to the working grid.
Whatever lands in the pad has left the working window; it is reported as
escaped probability rather than silently dropped.

The wrap-around guard watches the periodic seam of the transform domain (the
outermost samples of the padded array). Amplitude there has either just
wrapped or is about to, and the step is refused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, WrapAroundError
from .grid import SpatialGrid, WaveFunction, _is_power_of_two, momentum_samples

DEFAULT_LEAK_TOLERANCE = 1e-6
DENSE_ORACLE_MAX_POINTS = 256
SEAM_FRACTION = 64
MAX_PADDED_POINTS = 1 << 22


def auto_pad_points(grid: SpatialGrid, dt: float) -> int:
    """Smallest padding n*(2**k - 1), k >= 1, whose half-width covers p_max * dt.

    The fastest representable component then cannot cross a whole pad within
    one step, so nothing that leaves the working grid can wrap back into it.
    """
    n = grid.n_points
    reach = grid.p_max * dt
    padded = 2 * n
    while (padded - n) / 2 * grid.dx < reach and padded < MAX_PADDED_POINTS:
        padded *= 2
    return padded - n


@lru_cache(maxsize=64)
def _phase_table(n_padded: int, dx: float, dt: float) -> np.ndarray:
    p = momentum_samples(n_padded, dx)
    table = np.exp(-0.5j * p * p * dt)
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class SpectralPropagator:
    grid: SpatialGrid
    dt: float
    pad_points: int
    leak_tolerance: float | None = DEFAULT_LEAK_TOLERANCE
    phases: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_padded = self.grid.n_points + self.pad_points
        object.__setattr__(self, "phases", _phase_table(n_padded, self.grid.dx, float(self.dt)))

    @property
    def n_padded(self) -> int:
        return self.grid.n_points + self.pad_points

    @property
    def left_pad(self) -> int:
        return self.pad_points // 2

    @property
    def seam_width(self) -> int:
        return max(1, self.n_padded // SEAM_FRACTION)


class StepResult(NamedTuple):
    psi: WaveFunction
    escaped: float
    seam_mass: float


def make_propagator(
    grid: SpatialGrid,
    dt: float,
    pad_points: int | None = None,
    leak_tolerance: float | None = DEFAULT_LEAK_TOLERANCE,
) -> SpectralPropagator:
    """Build a reusable propagator for steps of length dt.

    Parameters
    ----------
    grid : SpatialGrid
        Working grid the states live on.
    dt : float
        Step length in t0; must be >= 0.
    pad_points : int, optional
        Total number of zero samples added around the state for each step,
        split evenly between the two sides. ``n_points + pad_points`` must be
        a power of two. ``None`` picks ``auto_pad_points``: at least
        ``n_points`` (doubling), more for long steps. ``0`` gives the plain
        periodic step.
    leak_tolerance : float or None
        Largest probability allowed on the periodic seam after a step before
        WrapAroundError is raised. ``None`` disables the guard.
    """
    if not np.isfinite(dt) or dt < 0:
        raise ConfigurationError(f"dt must be finite and >= 0, got {dt}")
    if pad_points is None:
        pad_points = auto_pad_points(grid, dt)
    if not isinstance(pad_points, (int, np.integer)) or pad_points < 0:
        raise ConfigurationError(f"pad_points must be a non-negative integer, got {pad_points!r}")
    if not _is_power_of_two(grid.n_points + int(pad_points)):
        raise ConfigurationError(
            f"n_points + pad_points = {grid.n_points + pad_points} is not a power of two"
        )
    if pad_points % 2:
        raise ConfigurationError("pad_points must be even")
    return SpectralPropagator(grid, float(dt), int(pad_points), leak_tolerance)


def advance(prop: SpectralPropagator, amplitudes: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Array-level step: returns (new amplitudes, escaped mass, seam mass)."""
    n, dx = prop.grid.n_points, prop.grid.dx
    if prop.pad_points == 0:
        out = np.fft.ifft(prop.phases * np.fft.fft(amplitudes))
        escaped = 0.0
        padded = out
    else:
        lo = prop.left_pad
        work = np.zeros(prop.n_padded, dtype=np.complex128)
        work[lo : lo + n] = amplitudes
        padded = np.fft.ifft(prop.phases * np.fft.fft(work))
        out = padded[lo : lo + n].copy()
        outside = np.abs(padded[:lo]) ** 2
        escaped = float((outside.sum() + np.sum(np.abs(padded[lo + n :]) ** 2)) * dx)
    w = prop.seam_width
    seam = float((np.sum(np.abs(padded[:w]) ** 2) + np.sum(np.abs(padded[-w:]) ** 2)) * dx)
    if prop.leak_tolerance is not None and seam > prop.leak_tolerance:
        raise WrapAroundError(
            f"wrap-around guard tripped: probability {seam:.3e} on the periodic seam after a "
            f"step of dt={prop.dt:g} (tolerance {prop.leak_tolerance:.1e}); "
            f"enlarge the grid or increase pad_points (currently {prop.pad_points})"
        )
    return out, escaped, seam


def step_report(prop: SpectralPropagator, psi: WaveFunction) -> StepResult:
    if psi.grid != prop.grid:
        raise ValueError("state and propagator live on different grids")
    out, escaped, seam = advance(prop, psi.amplitudes)
    return StepResult(WaveFunction(prop.grid, out), escaped, seam)


def step(prop: SpectralPropagator, psi: WaveFunction) -> WaveFunction:
    """Evolve psi freely by prop.dt; amplitude pushed into the pad is cut off."""
    return step_report(prop, psi).psi


def evolve(prop: SpectralPropagator, psi: WaveFunction, n_steps: int) -> StepResult:
    """Apply n_steps steps, accumulating escaped mass and the worst seam reading."""
    amps = psi.amplitudes
    escaped = 0.0
    worst = 0.0
    for _ in range(n_steps):
        amps, e, s = advance(prop, amps)
        escaped += e
        worst = max(worst, s)
    return StepResult(WaveFunction(prop.grid, amps), escaped, worst)


def dense_propagator_matrix(grid: SpatialGrid, dt: float) -> np.ndarray:
    """Full n x n free propagator built from explicit DFT synthesis matrices."""
    n = grid.n_points
    if n > DENSE_ORACLE_MAX_POINTS:
        raise ValueError(
            f"dense oracle limited to {DENSE_ORACLE_MAX_POINTS} points, grid has {n}"
        )
    j = np.arange(n)
    analysis = np.exp(-2j * np.pi * np.outer(j, j) / n)
    synthesis = analysis.conj().T / n
    k = np.where(j < n // 2, j, j - n)
    p = 2.0 * np.pi * k / (n * grid.dx)
    return synthesis @ np.diag(np.exp(-0.5j * p * p * dt)) @ analysis


def dense_oracle_step(grid: SpatialGrid, dt: float, psi: WaveFunction) -> WaveFunction:
    """Brute-force periodic step by direct matrix-vector product (n <= 256)."""
    if psi.grid != grid:
        raise ValueError("state does not live on the given grid")
    return WaveFunction(grid, dense_propagator_matrix(grid, dt) @ psi.amplitudes)
