"""Two-pulse control: response metrics, delay scans and delay optimization."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import PulseSequence
from .ensemble import boltzmann_weights, choose_jmax, evolve_ensemble, extend_evolution, time_grid
from .errors import InvalidArgumentError, NoOptimumError
from .rotor_core import IsotopologueSpec, revival_time

WINDOW_START = 0.05  # metric window opens this many T_rev after the last kick
SAMPLE_DT = 0.01
INV_PHI = (math.sqrt(5) - 1) / 2


def as_mixture(mixture):
    """Accept a spec, a list of specs or a list of (spec, fraction) pairs."""
    if isinstance(mixture, IsotopologueSpec):
        return [(mixture, 1.0)]
    out = []
    for item in mixture:
        if isinstance(item, IsotopologueSpec):
            out.append((item, item.abundance))
        else:
            spec, frac = item
            out.append((spec, float(frac)))
    if not out:
        raise InvalidArgumentError("empty mixture")
    return out


@lru_cache(maxsize=64)
def _ensemble(spec, T, total_strength, jmax):
    if jmax is None:
        jmax = choose_jmax(spec, T, total_strength)
    return boltzmann_weights(spec, T, jmax)


@lru_cache(maxsize=64)
def _single_kick(ens, P1):
    return evolve_ensemble(ens, PulseSequence(((0.0, P1),)))


def prompt_peak_width(evo, dt: float = 0.002) -> float:
    """FWHM (ps) of the first alignment peak after the first kick."""
    t1 = evo.pulses.times[0]
    grid = t1 + dt * np.arange(1, int(0.25 * revival_time(evo.ensemble.spec) / dt))
    chi = evo.alignment(grid) - 1.0 / 3.0
    i = int(np.argmax(chi))
    half = 0.5 * chi[i]
    lo = i
    while lo > 0 and chi[lo - 1] >= half:
        lo -= 1
    hi = i
    while hi < len(chi) - 1 and chi[hi + 1] >= half:
        hi += 1
    return (hi - lo + 1) * dt


@dataclass
class SelectivityReport:
    """Per-species metrics over ``window`` after the second kick.

    ``rms`` is the rms of chi_s = <cos^2> - 1/3 with both kicks and
    ``rms_single`` the same quantity with the first kick only; ``dE`` and
    ``dE_single`` are the corresponding rotational energy gains (cm^-1)
    over the thermal ensemble.  ``selectivity`` is rms(target)/rms(other).
    """

    delay: float
    species: list
    window: tuple
    rms: dict
    rms_single: dict
    dE: dict
    dE_single: dict
    selectivity: float
    flag: str | None = None
    traces: dict = field(default_factory=dict, repr=False)

    def enhancement(self, name) -> float:
        return self.rms[name] / self.rms_single[name]


def two_pulse_response(
    mixture,
    P1: float,
    P2: float,
    delay: float,
    T: float,
    horizon: float,
    jmax: int | None = None,
    target: str | None = None,
    keep_traces: bool = False,
    dt: float = SAMPLE_DT,
) -> SelectivityReport:
    """Kick at 0 with ``P1`` and at ``delay`` with ``P2``; metrics over [delay + 0.05 T_rev, horizon]."""
    mix = as_mixture(mixture)
    if not delay > 0:
        raise InvalidArgumentError(f"delay must be > 0, got {delay}")
    t_max = max(revival_time(s) for s, _ in mix)
    if not horizon > delay + 2 * t_max:
        raise InvalidArgumentError(f"horizon {horizon} must exceed delay + 2 T_rev = {delay + 2 * t_max:.6g}")
    window = (delay + WINDOW_START * t_max, horizon)
    grid = time_grid(window[0], window[1], dt)

    names = [s.name for s, _ in mix]
    rms, rms1, de, de1, traces = {}, {}, {}, {}, {}
    for spec, _ in mix:
        ens = _ensemble(spec, T, P1 + P2, jmax)
        e0 = ens.mean_energy()
        evo1 = _single_kick(ens, float(P1))
        chi1 = evo1.alignment(grid) - 1.0 / 3.0
        if P2 == 0:
            evo2, chi2 = evo1, chi1
        else:
            evo2 = extend_evolution(evo1, PulseSequence(((delay, P2),)))
            chi2 = evo2.alignment(grid) - 1.0 / 3.0
        rms[spec.name] = float(np.sqrt(np.mean(chi2 * chi2)))
        rms1[spec.name] = float(np.sqrt(np.mean(chi1 * chi1)))
        de[spec.name] = evo2.energies[-1] - e0
        de1[spec.name] = evo1.energies[-1] - e0
        if keep_traces:
            traces[spec.name] = (grid, chi1, chi2)

    if target is not None and target not in names:
        raise InvalidArgumentError(f"target {target!r} not in mixture {names}")
    flag = None
    if len(names) == 1:
        selectivity, flag = 1.0, "single-species: selectivity undefined"
    else:
        target = target or names[0]
        others = [n for n in names if n != target]
        denom = max(rms[n] for n in others)
        selectivity = rms[target] / denom if denom > 0 else math.inf
    return SelectivityReport(delay, names, window, rms, rms1, de, de1, selectivity, flag, traces)


def scan_delay(mixture, P1, P2, delays, T, horizon, jmax=None, target=None, threads: int = 1):
    """One report per delay; entries are computed independently and returned in grid order."""
    delays = [float(d) for d in delays]
    if any(b < a for a, b in zip(delays, delays[1:])):
        raise InvalidArgumentError("delay grid must be sorted")
    mix = as_mixture(mixture)

    def one(d):
        return two_pulse_response(mix, P1, P2, d, T, horizon, jmax=jmax, target=target)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, delays))
    return [one(d) for d in delays]


def objective_value(report: SelectivityReport, objective: str) -> float:
    """Value to maximize."""
    if objective == "selectivity":
        return report.selectivity
    if objective == "suppression":
        name = report.species[0]
        return -report.rms[name] / report.rms_single[name]
    raise InvalidArgumentError(f"unknown objective {objective!r}")


def golden_section_max(f, a, b, tol):
    """Maximize a unimodal ``f`` on [a, b]; returns the abscissa."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass
class OptimizationResult:
    delay: float
    value: float
    report: SelectivityReport
    coarse: list  # (delay, objective) pairs from the pre-scan


def optimize_delay(
    mixture,
    P1,
    P2,
    bracket,
    T,
    horizon,
    objective: str = "selectivity",
    jmax=None,
    target=None,
    coarse_step: float | None = None,
    resolution: float = 1e-3,
    threads: int = 1,
) -> OptimizationResult:
    """Coarse delay grid over ``bracket`` then golden-section refinement to ``resolution`` ps."""
    lo, hi = map(float, bracket)
    if not hi > lo > 0:
        raise InvalidArgumentError(f"bad bracket {bracket}")
    mix = as_mixture(mixture)
    if objective == "selectivity" and len(mix) == 1:
        raise NoOptimumError("selectivity of a single species against itself is flat")
    if coarse_step is None:
        # T_rev/40 alone can step over the sub-100 fs selectivity peak
        widths = [prompt_peak_width(_single_kick(_ensemble(s, T, P1 + P2, jmax), float(P1))) for s, _ in mix]
        coarse_step = min(min(revival_time(s) for s, _ in mix) / 40, min(widths) / 3)
    n = int(math.floor((hi - lo) / coarse_step)) + 1
    grid = [lo + i * coarse_step for i in range(n)]
    if grid[-1] < hi:
        grid.append(hi)
    reports = scan_delay(mix, P1, P2, grid, T, horizon, jmax=jmax, target=target, threads=threads)
    values = [objective_value(r, objective) for r in reports]
    spread = max(values) - min(values)
    scale = max(abs(v) for v in values)
    if scale == 0 or spread / scale < 1e-6:
        raise NoOptimumError(f"objective {objective!r} is flat over {bracket}")
    best = int(np.argmax(values))

    def f(d):
        return objective_value(two_pulse_response(mix, P1, P2, d, T, horizon, jmax=jmax, target=target), objective)

    a = max(lo, grid[best] - coarse_step)
    b = min(hi, grid[best] + coarse_step)
    d_opt = golden_section_max(f, a, b, resolution)
    report = two_pulse_response(mix, P1, P2, d_opt, T, horizon, jmax=jmax, target=target)
    value = objective_value(report, objective)
    if value < values[best]:
        d_opt, report, value = grid[best], reports[best], values[best]
    return OptimizationResult(d_opt, value, report, list(zip(grid, values)))


def report_table_rows(reports):
    names = reports[0].species
    header = ["delay_ps", *(f"rms_{n}" for n in names), *(f"dE_{n}" for n in names), "selectivity"]
    rows = [[r.delay, *(r.rms[n] for n in names), *(r.dE[n] for n in names), r.selectivity] for r in reports]
    return header, rows
