"""Memoryless and first-click time-of-arrival distributions for 1-D wave packets."""

__version__ = "0.1.0"

from .detection import DetectorKind, DetectorSpec, apply_k0, apply_k1, point_density
from .distributions import (
    DistributionStats,
    FirstClickResult,
    PropagationConfig,
    TimeWindow,
    ToaDistribution,
    first_click_distribution,
    memoryless_distribution,
    resolution_sweep,
    stats,
    survival_state,
)
from .errors import (
    ConfigParseError,
    ConfigurationError,
    ConservationError,
    DetectorNotReached,
    PacketEscapesGrid,
    PhysicsConsistencyError,
    WrapAroundError,
)
from .grid import SpatialGrid, WaveFunction, make_grid, norm_squared, overlap, probability_in
from .propagator import SpectralPropagator, dense_oracle_step, make_propagator, step
from .wavepackets import (
    GaussianSpec,
    InitialState,
    analytic_free_evolution,
    analytic_superposition_evolution,
    make_gaussian,
    make_superposition,
)
