"""
Named, parameter-complete scenarios and the runner that turns one into a report.

The figure scenarios are shipped as config files under ``firstclick/data`` and
loaded through the same strict parser the CLI uses.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .detection import DetectorSpec
from .distributions import (
    DEFAULT_TIME_SAMPLES,
    DistributionStats,
    FirstClickResult,
    PropagationConfig,
    TimeWindow,
    first_click_distribution,
    memoryless_distribution,
    stats,
)
from .grid import SpatialGrid
from .wavepackets import InitialState

ENGINES = ("memoryless-point", "memoryless-finite", "first-click")


@dataclass(frozen=True)
class Scenario:
    name: str
    initial_state: InitialState
    detector: DetectorSpec
    window: TimeWindow
    grid: SpatialGrid
    delta_ts: tuple[float, ...]
    engines: tuple[str, ...] = ENGINES
    pad_points: int | None = None
    time_samples: int = DEFAULT_TIME_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "delta_ts", tuple(float(d) for d in self.delta_ts))
        object.__setattr__(self, "engines", tuple(self.engines))
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ValueError(f"unknown engines {sorted(unknown)}; choose from {ENGINES}")
        if "first-click" in self.engines and not self.delta_ts:
            raise ValueError("first-click engine needs at least one delta_t")

    @property
    def propagation(self) -> PropagationConfig:
        return PropagationConfig(self.grid, self.pad_points)


@dataclass(frozen=True, eq=False)
class Curve:
    key: str
    engine: str
    times: np.ndarray
    density: np.ndarray
    stats: DistributionStats | None
    delta_t: float | None = None
    first_click: FirstClickResult | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class ScenarioReport:
    scenario: Scenario
    curves: tuple[Curve, ...]
    metadata: dict

    def curve(self, key: str) -> Curve:
        for c in self.curves:
            if c.key == key:
                return c
        raise KeyError(key)

    def first_click_curves(self) -> list[Curve]:
        return [c for c in self.curves if c.engine == "first-click"]


def _load(name: str) -> Scenario:
    from .config import parse_config

    return parse_config(packaged_config_text(name)).scenario


def packaged_config_text(name: str) -> str:
    return resources.files("firstclick").joinpath("data", f"{name}.toml").read_text("utf-8")


def scenario_fig1() -> Scenario:
    """Single packet x0 = 5, p0 = 7, sigma0 = 1; detector [10, 11]; dt = 1."""
    return _load("fig1")


def scenario_fig2() -> Scenario:
    """fig1 packet with resolutions dt in {dL/p0 = 1/7, 1, 70}."""
    return _load("fig2")


def scenario_fig3() -> Scenario:
    """Overtaking pair (-30, 10) and (-45, 15) on detector [0, 1]."""
    return _load("fig3")


SCENARIOS = {"fig1": scenario_fig1, "fig2": scenario_fig2, "fig3": scenario_fig3}


def first_click_key(index: int, count: int) -> str:
    return "first-click" if count == 1 else f"first-click-{index}"


def run_scenario(s: Scenario, keep_states: bool = False) -> ScenarioReport:
    """Run every engine of the scenario. Pure function of ``s``: no clock, no RNG."""
    curves = []
    for engine in ("memoryless-point", "memoryless-finite"):
        if engine not in s.engines:
            continue
        det = s.detector.as_point() if engine == "memoryless-point" else s.detector.as_finite()
        dist = memoryless_distribution(s.initial_state, det, s.window, s.grid, s.time_samples)
        curves.append(
            Curve(engine, engine, dist.times, dist.density, stats(dist.times, dist.density))
        )
    if "first-click" in s.engines:
        det = s.detector.as_finite()
        count = len(s.delta_ts)
        for i, dt in enumerate(s.delta_ts):
            window = s.window.extended_to_multiple(dt)
            res = first_click_distribution(
                s.initial_state, det, window, s.propagation, delta_t=dt, keep_states=keep_states
            )
            density = res.conditional_density
            st = None
            if res.attempt_times.size >= 3 and res.total_click_probability > 0:
                st = stats(res.attempt_times, density)
            curves.append(
                Curve(first_click_key(i, count), "first-click", res.attempt_times, density, st, dt, res)
            )
    from .config import dump_config, RunConfig

    digest = hashlib.sha256(dump_config(RunConfig(s)).encode("utf-8")).hexdigest()
    metadata = {"package_version": __version__, "scenario": s.name, "config_sha256": digest}
    return ScenarioReport(s, tuple(curves), metadata)
