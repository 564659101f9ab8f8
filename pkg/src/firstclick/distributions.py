"""
Time-of-arrival engines.

``memoryless_distribution`` is the Bayes-conditioned arrival density

    p(t | x in D) = P_D(t) / integral_T P_D(t') dt',

where P_D(t) is the probability inside D (finite detector) or the density at
a (point-like detector) of the freely evolving state. Repeated detections
have no effect on the state.

``first_click_distribution`` probes the detector at t_i = t_start + i*dt.
Each probe splits the state into a click branch K1 psi and a no-click branch
K0 psi; only the no-click branch continues, so the click weight at attempt f
is

    w_f = || K1 [U(dt) K0]^f psi(t_start) ||^2.

Branches are never renormalised, so the weights are joint probabilities and
sum, together with the never-clicked (survival) branch, to one.

Packets are specified at clock time t = 0; a window starting at t_start < 0
begins from the analytically back-evolved state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import peak_prominences

from .detection import DetectorKind, DetectorSpec, click_mask, point_index
from .errors import ConfigurationError, ConservationError, DetectorNotReached
from .grid import SpatialGrid, WaveFunction, norm_squared
from .propagator import DEFAULT_LEAK_TOLERANCE, advance, make_propagator
from .wavepackets import (
    InitialState,
    analytic_superposition_evolution,
    check_support,
    superposition_amplitude,
    superposition_scale,
)

log = logging.getLogger(__name__)

DEFAULT_TIME_SAMPLES = 2048
MIN_TIME_SAMPLES = 16
CONSERVATION_TOLERANCE = 1e-8
NEVER_REACHED = 1e-15
PROMINENCE_FRACTION = 0.05


@dataclass(frozen=True)
class TimeWindow:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ConfigurationError(
                f"time window needs t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )

    @classmethod
    def centered(cls, duration: float) -> "TimeWindow":
        return cls(-duration / 2.0, duration / 2.0)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def attempt_count(self, delta_t: float) -> int:
        """Number of attempts n = T/dt; T must be a whole multiple of dt."""
        ratio = self.duration / delta_t
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(
                f"window length {self.duration:g} is not a multiple of delta_t={delta_t:g}"
            )
        return int(n)

    def extended_to_multiple(self, delta_t: float) -> "TimeWindow":
        """Round T up to the nearest multiple of delta_t by moving t_end."""
        ratio = self.duration / delta_t
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            n = math.ceil(ratio)
        n = max(n, 1)
        return TimeWindow(self.t_start, self.t_start + n * delta_t)


@dataclass(frozen=True)
class PropagationConfig:
    grid: SpatialGrid
    pad_points: int | None = None
    leak_tolerance: float | None = DEFAULT_LEAK_TOLERANCE


@dataclass(frozen=True, eq=False)
class ToaDistribution:
    times: np.ndarray
    density: np.ndarray
    normalization_integral: float
    label: str = ""

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def integral(self) -> float:
        return float(np.sum(self.density) * self.dt)


@dataclass(frozen=True, eq=False)
class FirstClickResult:
    attempt_times: np.ndarray
    click_weights: np.ndarray
    survival_probability: float
    delta_t: float
    window: TimeWindow
    initial_norm: float = 1.0
    escaped_probability: float = 0.0
    survival_cumulative: np.ndarray | None = None
    conditioned_states: tuple[WaveFunction, ...] | None = field(default=None, repr=False)
    final_state: WaveFunction | None = field(default=None, repr=False)
    final_escaped: float = 0.0

    @property
    def total_click_probability(self) -> float:
        return float(np.sum(self.click_weights))

    @property
    def conditional_pmf(self) -> np.ndarray:
        total = self.total_click_probability
        if total <= 0.0:
            return np.zeros_like(self.click_weights)
        return self.click_weights / total

    @property
    def conditional_density(self) -> np.ndarray:
        return self.conditional_pmf / self.delta_t

    @property
    def conservation_residual(self) -> float:
        return self.total_click_probability + self.survival_probability - self.initial_norm

    @property
    def mean_arrival(self) -> float:
        if self.total_click_probability <= 0.0:
            return float("nan")
        return float(np.sum(self.attempt_times * self.conditional_pmf))

    def as_distribution(self) -> ToaDistribution:
        return ToaDistribution(
            self.attempt_times,
            self.conditional_density,
            self.total_click_probability * self.delta_t,
            label="first-click",
        )


@dataclass(frozen=True)
class DistributionStats:
    peak_time: float
    peak_height: float
    fwhm: float
    mean_arrival: float
    local_maxima_count: int
    maxima_times: tuple[float, ...] = ()
    maxima_heights: tuple[float, ...] = ()

    @property
    def early_late_ratio(self) -> float:
        """Height of the earliest prominent maximum over that of the latest."""
        if not self.maxima_heights:
            return float("nan")
        return self.maxima_heights[0] / self.maxima_heights[-1]


def _state_at_start(state, window: TimeWindow, grid: SpatialGrid) -> WaveFunction:
    if isinstance(state, WaveFunction):
        if state.grid != grid:
            raise ValueError("initial wavefunction is not on the propagation grid")
        return state
    psi = analytic_superposition_evolution(state, window.t_start, grid)
    return psi.scaled(1.0 / math.sqrt(norm_squared(psi)))


def _check_window_support(state: InitialState, window: TimeWindow, grid: SpatialGrid) -> None:
    # center moves linearly and the width grows with |t|: the window ends are the extremes
    for spec in state.packets:
        check_support(spec, grid, window.t_start)
        check_support(spec, grid, window.t_end)


def memoryless_distribution(
    state: InitialState,
    det: DetectorSpec,
    window: TimeWindow,
    grid: SpatialGrid,
    time_samples: int = DEFAULT_TIME_SAMPLES,
    method: str = "analytic",
    pad_points: int | None = None,
) -> ToaDistribution:
    """Memoryless arrival density on ``time_samples`` uniform left-Riemann times.

    Parameters
    ----------
    state : InitialState
        Gaussian superposition specified at t = 0.
    det : DetectorSpec
        Finite-size detectors sum the probability on [a, b); point-like ones
        read |psi|^2 at the sample nearest to a.
    window : TimeWindow
    grid : SpatialGrid
    time_samples : int
        At least 16.
    method : {"analytic", "spectral"}
        ``"analytic"`` evaluates the closed-form evolution directly at the
        detector samples. ``"spectral"`` is a cross-check that propagates the
        gridded state with the spectral propagator instead.
    """
    if time_samples < MIN_TIME_SAMPLES:
        raise ConfigurationError(f"need at least {MIN_TIME_SAMPLES} time samples")
    dt = window.duration / time_samples
    times = window.t_start + dt * np.arange(time_samples)
    _check_window_support(state, window, grid)
    if det.kind is DetectorKind.POINT:
        idx = np.array([point_index(det, grid)])
        weight = 1.0
    else:
        idx = np.flatnonzero(click_mask(det, grid))
        weight = grid.dx

    if method == "analytic":
        scale = superposition_scale(state, grid)
        xs = grid.x[idx]
        numer = np.empty(time_samples)
        for k, t in enumerate(times):
            amps = superposition_amplitude(state, xs, t, scale)
            numer[k] = np.sum(np.abs(amps) ** 2) * weight
    elif method == "spectral":
        prop = make_propagator(grid, dt, pad_points)
        amps = analytic_superposition_evolution(state, window.t_start, grid).amplitudes
        numer = np.empty(time_samples)
        for k in range(time_samples):
            numer[k] = np.sum(np.abs(amps[idx]) ** 2) * weight
            if k < time_samples - 1:
                amps, _, _ = advance(prop, amps)
    else:
        raise ValueError(f"unknown method {method!r}")

    denom = float(np.sum(numer) * dt)
    if denom <= NEVER_REACHED:
        raise DetectorNotReached(
            f"particle never reaches detector [{det.a:g}, {det.b:g}) in the window "
            f"(Bayes denominator {denom:.2e})"
        )
    label = "memoryless-point" if det.kind is DetectorKind.POINT else "memoryless-finite"
    return ToaDistribution(times, numer / denom, denom, label=label)


def first_click_distribution(
    state: InitialState | WaveFunction,
    det: DetectorSpec,
    window: TimeWindow,
    config: PropagationConfig,
    delta_t: float | None = None,
    keep_states: bool = False,
) -> FirstClickResult:
    """First-click weights for projective attempts every ``delta_t``.

    ``state`` may be an InitialState (specified at t = 0 and evolved
    analytically to ``window.t_start``) or a WaveFunction taken as the state at
    ``window.t_start`` as-is.

    With ``keep_states`` the click-branch snapshots K1 psi at every attempt
    are kept, and the never-clicked branch is evolved over the last interval
    to ``window.t_end`` (see ``survival_state``).
    """
    if det.kind is not DetectorKind.FINITE:
        raise ValueError("first-click runs need a finite-size detector")
    delta_t = det.delta_t if delta_t is None else delta_t
    if delta_t is None:
        raise ConfigurationError("first-click run needs a time resolution delta_t")
    if not delta_t > 0:
        raise ConfigurationError(f"delta_t must be positive, got {delta_t}")
    grid = config.grid
    n = window.attempt_count(delta_t)
    if isinstance(state, InitialState):
        # later times need no check: outgoing amplitude is tracked as escaped mass
        for spec in state.packets:
            check_support(spec, grid, window.t_start)
    psi0 = _state_at_start(state, window, grid)

    mask = click_mask(det, grid)
    inside = np.flatnonzero(mask)
    lo, hi = (int(inside[0]), int(inside[-1]) + 1) if inside.size else (0, 0)
    dx = grid.dx
    prop = make_propagator(grid, delta_t, config.pad_points, config.leak_tolerance)

    amps = np.array(psi0.amplitudes)
    initial_norm = float(np.sum(np.abs(amps) ** 2) * dx)
    weights = np.empty(n)
    cumulative = np.empty(n)
    snapshots = [] if keep_states else None
    escaped = 0.0
    for i in range(n):
        clicked = amps[lo:hi]
        weights[i] = np.sum(np.abs(clicked) ** 2) * dx
        if keep_states:
            k1 = np.zeros_like(amps)
            k1[lo:hi] = clicked
            snapshots.append(WaveFunction(grid, k1))
        amps = amps.copy()
        amps[lo:hi] = 0.0
        cumulative[i] = np.sum(np.abs(amps) ** 2) * dx + escaped
        if i < n - 1:
            amps, e, _ = advance(prop, amps)
            escaped += e

    # the no-click branch norm is invariant under the final free interval
    survival = float(cumulative[-1])
    final_state = None
    final_escaped = escaped
    if keep_states:
        last, e, _ = advance(prop, amps)
        final_state = WaveFunction(grid, last)
        final_escaped = escaped + e

    result = FirstClickResult(
        attempt_times=window.t_start + delta_t * np.arange(n),
        click_weights=weights,
        survival_probability=survival,
        delta_t=float(delta_t),
        window=window,
        initial_norm=initial_norm,
        escaped_probability=escaped,
        survival_cumulative=cumulative,
        conditioned_states=tuple(snapshots) if keep_states else None,
        final_state=final_state,
        final_escaped=final_escaped,
    )
    residual = result.conservation_residual
    if abs(residual) > CONSERVATION_TOLERANCE:
        raise ConservationError(
            f"click weights + survival = {initial_norm + residual:.12f}, expected "
            f"{initial_norm:.12f} (residual {residual:.2e}); escaped mass {escaped:.3e}"
        )
    log.debug(
        "first-click dt=%g: %d attempts, total click %.6f, escaped %.3e, residual %.1e",
        delta_t, n, result.total_click_probability, escaped, residual,
    )
    return result


def survival_state(result: FirstClickResult) -> WaveFunction:
    """Never-clicked branch at window.t_end, unnormalised.

    Its norm plus the probability that escaped the grid equals
    ``result.survival_probability``.
    """
    if result.final_state is None:
        raise ValueError("run first_click_distribution with keep_states=True to get the survival state")
    return result.final_state


def stats(times: np.ndarray, density: np.ndarray) -> DistributionStats:
    """Peak, FWHM, mean arrival and prominent local maxima of a sampled density.

    FWHM interpolates the half-maximum crossings linearly on each side of the
    global peak; a side that never drops below half counts up to the window
    edge. Local maxima are samples strictly above both neighbours whose
    prominence is at least 5% of the peak height.
    """
    times = np.asarray(times, dtype=float)
    density = np.asarray(density, dtype=float)
    if times.shape != density.shape or times.ndim != 1:
        raise ValueError("times and density must be 1-D arrays of equal length")
    if times.size < 3:
        raise ValueError("stats need at least 3 samples")
    if not np.any(density > 0):
        raise ValueError("density is zero everywhere")

    i_peak = int(np.argmax(density))
    height = float(density[i_peak])
    half = 0.5 * height

    left = i_peak
    while left > 0 and density[left - 1] >= half:
        left -= 1
    if left == 0:
        t_left = times[0]
    else:
        d0, d1 = density[left - 1], density[left]
        t_left = times[left - 1] + (half - d0) * (times[left] - times[left - 1]) / (d1 - d0)

    right = i_peak
    last = times.size - 1
    while right < last and density[right + 1] >= half:
        right += 1
    if right == last:
        t_right = times[last]
    else:
        d0, d1 = density[right], density[right + 1]
        t_right = times[right] + (d0 - half) * (times[right + 1] - times[right]) / (d0 - d1)

    mean = float(np.sum(times * density) / np.sum(density))

    interior = np.flatnonzero((density[1:-1] > density[:-2]) & (density[1:-1] > density[2:])) + 1
    if interior.size:
        prominence = peak_prominences(density, interior)[0]
        keep = interior[prominence >= PROMINENCE_FRACTION * height]
    else:
        keep = interior
    return DistributionStats(
        peak_time=float(times[i_peak]),
        peak_height=height,
        fwhm=float(t_right - t_left),
        mean_arrival=mean,
        local_maxima_count=int(keep.size),
        maxima_times=tuple(float(t) for t in times[keep]),
        maxima_heights=tuple(float(d) for d in density[keep]),
    )


def distribution_stats(dist: ToaDistribution) -> DistributionStats:
    return stats(dist.times, dist.density)


@dataclass(frozen=True, eq=False)
class SweepEntry:
    delta_t: float
    result: FirstClickResult
    stats: DistributionStats | None


def resolution_sweep(
    state: InitialState,
    det: DetectorSpec,
    window: TimeWindow,
    delta_ts: Sequence[float],
    config: PropagationConfig,
) -> list[SweepEntry]:
    """Independent first-click runs, one per resolution.

    The window is extended per entry so its length is a whole multiple of
    delta_t; t_start is kept. Entries with fewer than 3 attempts, or with no
    click probability at all, carry ``stats=None``.
    """
    entries = []
    for dt in delta_ts:
        w = window.extended_to_multiple(dt)
        result = first_click_distribution(state, det, w, config, delta_t=dt)
        st = None
        if result.attempt_times.size >= 3 and result.total_click_probability > 0:
            st = stats(result.attempt_times, result.conditional_density)
        else:
            log.warning(
                "delta_t=%g leaves %d attempt(s) with total click probability %.2e; no stats",
                dt, result.attempt_times.size, result.total_click_probability,
            )
        entries.append(SweepEntry(float(dt), result, st))
    return entries
