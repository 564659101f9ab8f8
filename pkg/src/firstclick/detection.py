"""Detector geometry and the click / no-click projectors."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .grid import SpatialGrid, WaveFunction


class DetectorKind(str, Enum):
    FINITE = "finite"
    POINT = "point"


@dataclass(frozen=True)
class DetectorSpec:
    """Detector on [a, b) with an optional time resolution delta_t.

    A point-like detector reads the density at ``a`` only; ``b`` is kept so the
    width b - a can still be reported.
    """

    a: float
    b: float
    kind: DetectorKind = DetectorKind.FINITE
    delta_t: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        if not self.a < self.b:
            raise ConfigurationError(f"detector needs a < b, got a={self.a}, b={self.b}")
        if self.delta_t is not None and not self.delta_t > 0:
            raise ConfigurationError(f"delta_t must be positive, got {self.delta_t}")

    @property
    def width(self) -> float:
        return self.b - self.a

    def as_point(self) -> "DetectorSpec":
        return DetectorSpec(self.a, self.b, DetectorKind.POINT, self.delta_t)

    def as_finite(self) -> "DetectorSpec":
        return DetectorSpec(self.a, self.b, DetectorKind.FINITE, self.delta_t)


def click_mask(det: DetectorSpec, grid: SpatialGrid) -> np.ndarray:
    if det.kind is not DetectorKind.FINITE:
        raise ValueError("projectors need a finite-size detector")
    if not grid.covers(det.a, det.b):
        raise ConfigurationError(
            f"detector [{det.a:g}, {det.b:g}) lies outside grid [{grid.x_min:g}, {grid.x_max:g})"
        )
    return grid.interval_mask(det.a, det.b)


def apply_k1(det: DetectorSpec, psi: WaveFunction) -> WaveFunction:
    """Click projector: keep amplitudes inside [a, b), zero the rest. Not renormalised."""
    mask = click_mask(det, psi.grid)
    return psi.with_amplitudes(np.where(mask, psi.amplitudes, 0.0))


def apply_k0(det: DetectorSpec, psi: WaveFunction) -> WaveFunction:
    """No-click projector, the complement of apply_k1. Not renormalised."""
    mask = click_mask(det, psi.grid)
    return psi.with_amplitudes(np.where(mask, 0.0, psi.amplitudes))


def point_index(det: DetectorSpec, grid: SpatialGrid) -> int:
    if not grid.x_min <= det.a < grid.x_max:
        raise ConfigurationError(
            f"point detector at {det.a:g} lies outside grid [{grid.x_min:g}, {grid.x_max:g})"
        )
    return grid.nearest_index(det.a)


def point_density(det: DetectorSpec, psi: WaveFunction) -> float:
    """|psi|^2 at the grid sample nearest to a, in 1/l0."""
    if det.kind is not DetectorKind.POINT:
        raise ValueError("point_density needs a point-like detector")
    return float(np.abs(psi.amplitudes[point_index(det, psi.grid)]) ** 2)
