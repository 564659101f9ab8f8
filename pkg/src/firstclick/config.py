"""
Strict TOML run configuration.

Sections and keys (all physical quantities in natural units t0, l0, hbar/l0)::

    [run]        name, engines, time_samples, csv, svg, snapshots, output_dir
    [packet.N]   x0, p0, sigma0, weight, weight_imag        (N = 0, 1, ...)
    [detector]   a, b, delta_t (list of resolutions)
    [window]     t_start, t_end
    [grid]       x_min, x_max, n_points, pad_points

Unknown sections or keys are rejected; every error names the key and line.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detection import DetectorSpec
from .distributions import DEFAULT_TIME_SAMPLES, MIN_TIME_SAMPLES, TimeWindow
from .errors import ConfigParseError, ConfigurationError
from .grid import SpatialGrid
from .scenarios import ENGINES, Scenario
from .wavepackets import GaussianSpec, InitialState

_REQUIRED = {
    "run": {"name"},
    "packet": {"x0", "p0", "sigma0"},
    "detector": {"a", "b"},
    "window": {"t_start", "t_end"},
    "grid": {"x_min", "x_max", "n_points"},
}
_OPTIONAL = {
    "run": {"engines", "time_samples", "csv", "svg", "snapshots", "output_dir"},
    "packet": {"weight", "weight_imag"},
    "detector": {"delta_t"},
    "window": set(),
    "grid": {"pad_points"},
}


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    csv: bool = True
    svg: bool = True
    snapshots: bool = False
    output_dir: str | None = None

    def with_delta_ts(self, delta_ts) -> "RunConfig":
        return replace(self, scenario=replace(self.scenario, delta_ts=tuple(delta_ts)))


class _Lines:
    """Maps (section, key) to 1-based line numbers of the source text."""

    _header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
    _key = re.compile(r"^\s*([A-Za-z0-9_\-\"']+)\s*=")

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = ""
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                current = m.group(1).replace('"', "").replace("'", "")
                self.sections.setdefault(current, lineno)
                continue
            m = self._key.match(line)
            if m:
                self.keys.setdefault((current, m.group(1).strip("\"'")), lineno)

    def of(self, section: str, key: str | None = None) -> int | None:
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def _tomllib_line(exc: Exception) -> int | None:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


class _Reader:
    def __init__(self, lines: _Lines):
        self.lines = lines

    def fail(self, section, key, message):
        raise ConfigParseError(message, key=f"{section}.{key}" if key else section,
                               line=self.lines.of(section, key))

    def check_keys(self, section: str, kind: str, table) -> None:
        if not isinstance(table, dict):
            self.fail(section, None, "expected a table")
        for key in table:
            if key not in _REQUIRED[kind] | _OPTIONAL[kind]:
                allowed = ", ".join(sorted(_REQUIRED[kind] | _OPTIONAL[kind]))
                self.fail(section, key, f"unknown key (allowed: {allowed})")
        for key in sorted(_REQUIRED[kind] - table.keys()):
            self.fail(section, key, "missing required key")

    def number(self, section, table, key, default=None):
        if key not in table:
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(section, key, f"expected a number, got {v!r}")
        return float(v)

    def integer(self, section, table, key, default=None):
        if key not in table:
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(section, key, f"expected an integer, got {v!r}")
        return v

    def boolean(self, section, table, key, default):
        if key not in table:
            return default
        v = table[key]
        if not isinstance(v, bool):
            self.fail(section, key, f"expected true or false, got {v!r}")
        return v


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; raises ConfigParseError."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"malformed TOML: {exc}", line=_tomllib_line(exc)) from None
    lines = _Lines(text)
    r = _Reader(lines)

    for section in data:
        if section not in _REQUIRED:
            r.fail(section, None, f"unknown section (allowed: {', '.join(sorted(_REQUIRED))})")
    for section in ("run", "detector", "window", "grid", "packet"):
        if section not in data:
            raise ConfigParseError("missing required section", key=section)

    run = data["run"]
    r.check_keys("run", "run", run)
    name = run["name"]
    if not isinstance(name, str) or not name:
        r.fail("run", "name", "expected a non-empty string")
    engines = run.get("engines", list(ENGINES))
    if not isinstance(engines, list) or not engines or not all(isinstance(e, str) for e in engines):
        r.fail("run", "engines", "expected a non-empty list of engine names")
    for e in engines:
        if e not in ENGINES:
            r.fail("run", "engines", f"unknown engine {e!r} (choose from {', '.join(ENGINES)})")
    time_samples = r.integer("run", run, "time_samples", DEFAULT_TIME_SAMPLES)
    if time_samples < MIN_TIME_SAMPLES:
        r.fail("run", "time_samples", f"must be at least {MIN_TIME_SAMPLES}")
    output_dir = run.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        r.fail("run", "output_dir", "expected a string path")

    packets_table = data["packet"]
    if not isinstance(packets_table, dict) or not packets_table:
        r.fail("packet", None, "need at least one [packet.N] section")
    indices = []
    for label in packets_table:
        if not label.isdigit():
            r.fail(f"packet.{label}", None, "packet sections must be numbered [packet.0], [packet.1], ...")
        indices.append(int(label))
    if sorted(indices) != list(range(len(indices))):
        r.fail("packet", None, "packet sections must be numbered consecutively from 0")
    packets = []
    for idx in sorted(indices):
        section = f"packet.{idx}"
        table = packets_table[str(idx)]
        r.check_keys(section, "packet", table)
        x0 = r.number(section, table, "x0")
        p0 = r.number(section, table, "p0")
        sigma0 = r.number(section, table, "sigma0")
        if not sigma0 > 0:
            r.fail(section, "sigma0", f"must be positive, got {sigma0}")
        weight = complex(r.number(section, table, "weight", 1.0),
                         r.number(section, table, "weight_imag", 0.0))
        if weight == 0:
            r.fail(section, "weight", "packet weight must be non-zero")
        packets.append(GaussianSpec(x0, p0, sigma0, weight))

    det = data["detector"]
    r.check_keys("detector", "detector", det)
    a = r.number("detector", det, "a")
    b = r.number("detector", det, "b")
    if not a < b:
        r.fail("detector", "b", f"need a < b, got a={a}, b={b}")
    delta_ts = det.get("delta_t", [])
    if isinstance(delta_ts, (int, float)) and not isinstance(delta_ts, bool):
        delta_ts = [delta_ts]
    if not isinstance(delta_ts, list) or any(
        isinstance(d, bool) or not isinstance(d, (int, float)) for d in delta_ts
    ):
        r.fail("detector", "delta_t", "expected a number or a list of numbers")
    for d in delta_ts:
        if not d > 0:
            r.fail("detector", "delta_t", f"must be positive, got {d}")
    delta_ts = tuple(float(d) for d in delta_ts)
    if "first-click" in engines and not delta_ts:
        r.fail("detector", "delta_t", "required by the first-click engine")

    win = data["window"]
    r.check_keys("window", "window", win)
    t_start = r.number("window", win, "t_start")
    t_end = r.number("window", win, "t_end")
    if not t_end > t_start:
        r.fail("window", "t_end", f"need t_end > t_start, got [{t_start}, {t_end}]")

    g = data["grid"]
    r.check_keys("grid", "grid", g)
    x_min = r.number("grid", g, "x_min")
    x_max = r.number("grid", g, "x_max")
    n_points = r.integer("grid", g, "n_points")
    pad_points = r.integer("grid", g, "pad_points")
    try:
        grid = SpatialGrid(x_min, x_max, n_points)
    except ConfigurationError as exc:
        key = "n_points" if "n_points" in str(exc) else "x_max"
        r.fail("grid", key, str(exc))
    if pad_points is not None:
        total = n_points + pad_points
        if pad_points < 0 or pad_points % 2 or total & (total - 1):
            r.fail("grid", "pad_points", "must be even, >= 0, and make n_points + pad_points a power of two")
    if not (grid.x_min <= a and b <= grid.x_max):
        r.fail("detector", "a", f"detector [{a}, {b}) lies outside the grid [{x_min}, {x_max})")

    scenario = Scenario(
        name=name,
        initial_state=InitialState(packets),
        detector=DetectorSpec(a, b, delta_t=delta_ts[0] if delta_ts else None),
        window=TimeWindow(t_start, t_end),
        grid=grid,
        delta_ts=delta_ts,
        engines=tuple(engines),
        pad_points=pad_points,
        time_samples=time_samples,
    )
    return RunConfig(
        scenario,
        csv=r.boolean("run", run, "csv", True),
        svg=r.boolean("run", run, "svg", True),
        snapshots=r.boolean("run", run, "snapshots", False),
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigParseError(f"config file {path} is not valid UTF-8") from None
    return parse_config(text)


def _num(v: float) -> str:
    return repr(float(v))


def _str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg: RunConfig) -> str:
    """Serialise a RunConfig; ``parse_config(dump_config(c)) == c`` exactly."""
    s = cfg.scenario
    out = ["[run]", f"name = {_str(s.name)}"]
    out.append("engines = [" + ", ".join(_str(e) for e in s.engines) + "]")
    out.append(f"time_samples = {s.time_samples}")
    out.append(f"csv = {str(cfg.csv).lower()}")
    out.append(f"svg = {str(cfg.svg).lower()}")
    out.append(f"snapshots = {str(cfg.snapshots).lower()}")
    if cfg.output_dir is not None:
        out.append(f"output_dir = {_str(cfg.output_dir)}")
    for i, p in enumerate(s.initial_state.packets):
        w = complex(p.weight)
        out += ["", f"[packet.{i}]", f"x0 = {_num(p.x0)}", f"p0 = {_num(p.p0)}",
                f"sigma0 = {_num(p.sigma0)}", f"weight = {_num(w.real)}"]
        if w.imag != 0:
            out.append(f"weight_imag = {_num(w.imag)}")
    out += ["", "[detector]", f"a = {_num(s.detector.a)}", f"b = {_num(s.detector.b)}"]
    if s.delta_ts:
        out.append("delta_t = [" + ", ".join(_num(d) for d in s.delta_ts) + "]")
    out += ["", "[window]", f"t_start = {_num(s.window.t_start)}", f"t_end = {_num(s.window.t_end)}"]
    out += ["", "[grid]", f"x_min = {_num(s.grid.x_min)}", f"x_max = {_num(s.grid.x_max)}",
            f"n_points = {s.grid.n_points}"]
    if s.pad_points is not None:
        out.append(f"pad_points = {s.pad_points}")
    return "\n".join(out) + "\n"
