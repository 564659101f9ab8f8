"""Built-in invariant suite behind ``firstclick check``. Seeded, so output is reproducible."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .detection import DetectorSpec, apply_k0, apply_k1
from .distributions import PropagationConfig, TimeWindow, first_click_distribution
from .grid import SpatialGrid, WaveFunction, norm_squared
from .propagator import advance, dense_propagator_matrix, evolve, make_propagator, step
from .scenarios import scenario_fig1, scenario_fig3
from .wavepackets import GaussianSpec, analytic_free_evolution, make_gaussian

SEED = 20240601


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def random_state(grid: SpatialGrid, rng: np.random.Generator) -> WaveFunction:
    amps = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    psi = WaveFunction(grid, amps)
    return psi.scaled(1.0 / math.sqrt(norm_squared(psi)))


def fig1_packet_state(grid: SpatialGrid) -> WaveFunction:
    return make_gaussian(GaussianSpec(5.0, 7.0, 1.0), grid)


def check_propagator_fidelity() -> CheckResult:
    grid = SpatialGrid(-60.0, 120.0, 8192)
    spec = GaussianSpec(5.0, 7.0, 1.0)
    psi = analytic_free_evolution(spec, 0.0, grid)
    out = evolve(make_propagator(grid, 0.05), psi, 20).psi
    err = float(np.max(np.abs(out.amplitudes - analytic_free_evolution(spec, 1.0, grid).amplitudes)))
    return CheckResult("propagator fidelity vs analytic", bool(err < 1e-8), f"max error {err:.2e}")


def check_dense_oracle() -> CheckResult:
    grid = SpatialGrid(-10.0, 10.0, 128)
    rng = np.random.default_rng(SEED)
    prop = make_propagator(grid, 0.3, pad_points=0, leak_tolerance=None)
    matrix = dense_propagator_matrix(grid, 0.3)
    worst = 0.0
    for _ in range(25):
        psi = random_state(grid, rng)
        diff = step(prop, psi).amplitudes - matrix @ psi.amplitudes
        worst = max(worst, math.sqrt(float(np.sum(np.abs(diff) ** 2) * grid.dx)))
    return CheckResult("spectral step vs dense oracle", worst < 1e-10, f"worst L2 {worst:.2e}")


def check_unitarity() -> CheckResult:
    grid = SpatialGrid(-60.0, 120.0, 8192)
    psi = fig1_packet_state(grid)
    prop = make_propagator(grid, 0.001)
    amps = psi.amplitudes
    for _ in range(1000):
        amps, _, _ = advance(prop, amps)
    drift = abs(float(np.sum(np.abs(amps) ** 2) * grid.dx) - 1.0)
    return CheckResult("unitarity over 1000 steps", drift < 1e-9, f"norm drift {drift:.2e}")


def check_kraus() -> CheckResult:
    grid = SpatialGrid(-10.0, 10.0, 128)
    det = DetectorSpec(-1.0, 2.5)
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    exact = True
    for _ in range(100):
        psi = random_state(grid, rng)
        k1, k0 = apply_k1(det, psi), apply_k0(det, psi)
        exact &= np.array_equal((k1 + k0).amplitudes, psi.amplitudes)
        exact &= np.array_equal(apply_k1(det, k1).amplitudes, k1.amplitudes)
        exact &= not np.any(apply_k1(det, k0).amplitudes)
        worst = max(worst, abs(norm_squared(k0) + norm_squared(k1) - norm_squared(psi)))
    ok = bool(exact) and worst <= 1e-12
    return CheckResult("Kraus projector algebra", ok, f"norm split error {worst:.1e}")


def check_conservation() -> CheckResult:
    worst = 0.0
    for scenario, dt in ((scenario_fig1(), 1 / 7), (scenario_fig1(), 1.0), (scenario_fig3(), 1.0)):
        window = scenario.window.extended_to_multiple(dt)
        res = first_click_distribution(
            scenario.initial_state, scenario.detector, window, scenario.propagation, delta_t=dt
        )
        worst = max(worst, abs(res.total_click_probability + res.survival_probability - 1.0))
    return CheckResult("first-click probability conservation", worst < 1e-10, f"worst residual {worst:.1e}")


def check_two_attempts() -> CheckResult:
    grid = SpatialGrid(-20.0, 20.0, 128)
    det = DetectorSpec(2.0, 4.0, delta_t=0.5)
    psi = make_gaussian(GaussianSpec(0.0, 3.0, 1.0), grid)
    res = first_click_distribution(
        psi, det, TimeWindow(0.0, 1.0), PropagationConfig(grid, pad_points=0, leak_tolerance=None)
    )
    u = dense_propagator_matrix(grid, 0.5)
    m = grid.interval_mask(2.0, 4.0)
    a = psi.amplitudes
    w0 = np.sum(np.abs(a[m]) ** 2) * grid.dx
    b = u @ np.where(m, 0, a)
    w1 = np.sum(np.abs(b[m]) ** 2) * grid.dx
    surv = np.sum(np.abs(np.where(m, 0, b)) ** 2) * grid.dx
    err = max(abs(res.click_weights[0] - w0), abs(res.click_weights[1] - w1),
              abs(res.survival_probability - surv))
    return CheckResult("two-attempt brute force", bool(err < 1e-10), f"max error {err:.1e}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_propagator_fidelity,
    check_dense_oracle,
    check_unitarity,
    check_kraus,
    check_conservation,
    check_two_attempts,
)


def run_checks() -> list[CheckResult]:
    return [check() for check in CHECKS]
