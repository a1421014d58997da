"""Command line entry point: ``rotkick {simulate,interfere,scan,optimize,analyze}``."""
from __future__ import annotations

import argparse
import io
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    estimate_abundances,
    estimate_revival_period,
    format_report,
    format_table,
    predict_interference_times,
    resolve_isotopologue_peaks,
)
from .config import RunConfig, load_config
from .control import optimize_delay, report_table_rows, scan_delay
from .ensemble import mixture_fwm_signal, read_trace, time_grid, write_trace
from .errors import ConfigError, InvalidArgumentError, RotkickError
from .rotor_core import load_molecule_library, revival_time

log = logging.getLogger("rotkick")


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"rotkick {__version__} {command}", *cfg.echo()]


def _commented(lines) -> str:
    return "".join(f"# {line}\n" for line in lines)


def cmd_simulate(cfg: RunConfig, args) -> str:
    grid = time_grid(cfg.t_start, cfg.t_end, cfg.dt)
    trace = mixture_fwm_signal(
        cfg.mixture,
        cfg.pulses,
        cfg.temperature,
        grid,
        decay_tau=cfg.decay_tau,
        jmax=cfg.jmax,
        threads=args.threads,
        normalize=cfg.normalize,
    )
    buf = io.StringIO()
    write_trace(trace, buf, _header(cfg, "simulate"))
    return buf.getvalue()


def cmd_interfere(cfg: RunConfig, args) -> str:
    if len(cfg.mixture) < 2:
        raise ConfigError("interfere needs at least two species")
    tol = (cfg.analysis or {}).get("tolerance", 0.1)
    rows = []
    for a, b in itertools.combinations(cfg.specs, 2):
        for ev in predict_interference_times(a, b, cfg.t_end, tol=tol):
            rows.append([a.name, b.name, ev.time, ev.kind, ev.multiple_a, ev.multiple_b])
    table = format_table(["species_a", "species_b", "time_ps", "kind", "multiple_a", "multiple_b"], rows)
    return _commented(_header(cfg, "interfere")) + table


def _two_pulse_setup(cfg: RunConfig):
    if len(cfg.pulses) != 2 or cfg.pulses.times[0] != 0.0:
        raise ConfigError("scan/optimize need exactly two [pulse] sections, the first at time 0")
    ctl = cfg.control
    if not ctl or ctl.get("delay_min") is None or ctl.get("delay_max") is None:
        raise ConfigError("scan/optimize need a [control] section with delay_min and delay_max")
    p1, p2 = (p for _, p in cfg.pulses)
    t_max = max(revival_time(s) for s in cfg.specs)
    horizon = ctl.get("horizon") or ctl["delay_max"] + 3 * t_max
    return p1, p2, horizon


def cmd_scan(cfg: RunConfig, args) -> str:
    p1, p2, horizon = _two_pulse_setup(cfg)
    ctl = cfg.control
    step = ctl.get("delay_step")
    if not step or step <= 0:
        raise ConfigError("scan needs delay_step > 0")
    delays = time_grid(ctl["delay_min"], ctl["delay_max"], step)
    reports = scan_delay(
        cfg.mixture, p1, p2, delays, cfg.temperature, horizon, jmax=cfg.jmax, target=ctl.get("target"),
        threads=args.threads,
    )
    header, rows = report_table_rows(reports)
    meta = [f"horizon_ps: {horizon!r}"]
    if reports[0].flag:
        meta.append(f"flag: {reports[0].flag}")
    return _commented(_header(cfg, "scan") + meta) + format_table(header, rows)


def cmd_optimize(cfg: RunConfig, args) -> str:
    p1, p2, horizon = _two_pulse_setup(cfg)
    ctl = cfg.control
    res = optimize_delay(
        cfg.mixture,
        p1,
        p2,
        (ctl["delay_min"], ctl["delay_max"]),
        cfg.temperature,
        horizon,
        objective=ctl.get("objective", "selectivity"),
        jmax=cfg.jmax,
        target=ctl.get("target"),
        resolution=ctl.get("resolution") or 1e-3,
        threads=args.threads,
    )
    header, rows = report_table_rows([res.report])
    meta = [
        f"horizon_ps: {horizon!r}",
        f"objective: {ctl.get('objective', 'selectivity')}",
        f"best_delay_ps: {res.delay!r}",
        f"objective_value: {res.value!r}",
    ]
    return _commented(_header(cfg, "optimize") + meta) + format_table(header, rows)


def cmd_analyze(cfg: RunConfig, args) -> str:
    path = args.input or (cfg.analysis or {}).get("input")
    if not path:
        raise ConfigError("analyze needs an input trace ([analysis] input = PATH or --input)")
    try:
        with open(path) as fh:
            trace = read_trace(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read trace {path}: {exc.strerror}") from None
    items = [("input", str(path))]
    if len(trace.chi) >= 2:
        # a mixture has no single period; report each species' own comb
        for name in trace.chi:
            est = estimate_revival_period(trace, species=name)
            items.append((f"period_ps.{name}", est.period))
            items.append((f"period_uncertainty_ps.{name}", est.uncertainty))
            items.append((f"comb_teeth.{name}", est.n_teeth))
    else:
        est = estimate_revival_period(trace)
        items += [
            ("period_ps", est.period),
            ("period_uncertainty_ps", est.uncertainty),
            ("comb_source", est.source),
            ("comb_contrast", est.contrast),
            ("comb_teeth", est.n_teeth),
        ]
    indices = (cfg.analysis or {}).get("revival_index") or []
    if indices and len(trace.chi) >= 2:
        lib = load_molecule_library(cfg.library)
        missing = [n for n in trace.chi if n not in lib]
        if missing:
            raise InvalidArgumentError(f"trace species not in library: {missing}")
        specs = [lib[n] for n in trace.chi]
        t_kick = cfg.pulses.times[0] if len(cfg.pulses) else 0.0
        for n in indices:
            peaks = resolve_isotopologue_peaks(trace, specs, n, t_kick=t_kick)
            ab = estimate_abundances(peaks)
            for p in peaks:
                items.append((f"peak[{n!r}].{p.species}.time_ps", p.time))
                items.append((f"peak[{n!r}].{p.species}.amplitude", p.amplitude))
            for name, f in ab.fractions.items():
                items.append((f"abundance[{n!r}].{name}", f))
            if ab.excluded:
                items.append((f"abundance[{n!r}].excluded", " ".join(ab.excluded)))
    return _commented(_header(cfg, "analyze")) + format_report(items)


COMMANDS = {
    "simulate": cmd_simulate,
    "interfere": cmd_interfere,
    "scan": cmd_scan,
    "optimize": cmd_optimize,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotkick", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rotkick {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--out", help="output file (default: config 'output', else stdout)")
    parser.add_argument("--jmax", type=int, help="override basis truncation")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for M blocks / delay grids")
    parser.add_argument("--input", help="trace file for 'analyze'")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.jmax is not None:
            cfg.jmax = args.jmax
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        for line in cfg.echo():
            log.info("config: %s", line)
        text = COMMANDS[args.command](cfg, args)
        out = args.out or cfg.output
        if out:
            Path(out).write_text(text)
            log.info("wrote %s", out)
        else:
            sys.stdout.write(text)
    except RotkickError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: NUMERICAL_FAILURE: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
