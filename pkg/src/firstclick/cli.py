"""
Command-line front end.

    firstclick run CONFIG [-o DIR]
    firstclick repro {fig1,fig2,fig3} [-o DIR]
    firstclick sweep CONFIG --dt 0.25,0.5,1 [-o DIR]
    firstclick check

Exit status: 0 on success, 1 on a physics-consistency failure, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, parse_config
from .errors import ConfigurationError, DetectorNotReached, PhysicsConsistencyError
from .output import emit_csv, emit_snapshots, emit_svg, fmt
from .scenarios import SCENARIOS, ScenarioReport, packaged_config_text, run_scenario

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_CONFIG = 2

log = logging.getLogger("firstclick")


def _parse_dt_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("delta_t values must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firstclick",
        description="Memoryless and first-click time-of-arrival distributions (natural units).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the scenario described by a config file")
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("-o", "--output-dir", help="output directory (overrides [run] output_dir)")

    p = sub.add_parser("repro", help="reproduce a figure scenario from the shipped configs")
    p.add_argument("figure", choices=sorted(SCENARIOS))
    p.add_argument("-o", "--output-dir", help="output directory (default: ./<figure>)")
    p.add_argument("--show-config", action="store_true", help="print the shipped config and exit")

    p = sub.add_parser("sweep", help="first-click runs over a list of time resolutions")
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--dt", required=True, type=_parse_dt_list,
                   help="comma-separated resolutions delta_t in t0, e.g. 0.25,0.5,1")
    p.add_argument("-o", "--output-dir", help="output directory (overrides [run] output_dir)")

    sub.add_parser("check", help="run the built-in invariant suite and print pass/fail")
    return parser


def _output_dir(cfg: RunConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(cfg.scenario.name)


def print_summary(report: ScenarioReport, out=None) -> None:
    out = sys.stdout if out is None else out
    print(f"scenario {report.scenario.name}", file=out)
    print(f"{'curve':<22}{'delta_t':>10}{'peak_time':>12}{'peak_height':>13}{'fwhm':>10}"
          f"{'mean':>10}{'maxima':>8}{'P(click)':>11}", file=out)
    for c in report.curves:
        st, fc = c.stats, c.first_click
        cells = [f"{c.delta_t:.6g}" if c.delta_t else "-"]
        if st:
            cells += [f"{st.peak_time:.4f}", f"{st.peak_height:.4f}", f"{st.fwhm:.4f}",
                      f"{st.mean_arrival:.4f}", str(st.local_maxima_count)]
        else:
            cells += ["-"] * 5
        cells.append(f"{fc.total_click_probability:.6f}" if fc else "-")
        widths = (10, 12, 13, 10, 10, 8, 11)
        print(f"{c.key:<22}" + "".join(f"{v:>{w}}" for v, w in zip(cells, widths)), file=out)


def execute(cfg: RunConfig, out_dir: Path) -> ScenarioReport:
    report = run_scenario(cfg.scenario, keep_states=cfg.snapshots)
    written = []
    if cfg.csv:
        written += emit_csv(report, out_dir)
    if cfg.svg:
        written.append(emit_svg(report, out_dir))
    if cfg.snapshots:
        written += emit_snapshots(report, out_dir)
    print_summary(report)
    for path in written:
        log.info("wrote %s", path)
    return report


def _run(args) -> int:
    if args.command == "check":
        from .checks import run_checks

        results = run_checks()
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_PHYSICS

    if args.command == "repro":
        text = packaged_config_text(args.figure)
        if args.show_config:
            sys.stdout.write(text)
            return EXIT_OK
        cfg = parse_config(text)
    else:
        cfg = load_config(args.config)
        if args.command == "sweep":
            cfg = cfg.with_delta_ts(args.dt)
            if "first-click" not in cfg.scenario.engines:
                raise ConfigurationError("sweep needs the first-click engine in [run] engines")
    execute(cfg, _output_dir(cfg, args.output_dir))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except PhysicsConsistencyError as exc:
        print(f"firstclick: physics consistency failure: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ConfigurationError, DetectorNotReached, ValueError) as exc:
        print(f"firstclick: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"firstclick: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
