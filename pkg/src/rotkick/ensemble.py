"""Thermal ensembles, ensemble-averaged alignment and mixture FWM signals.

The thermal average over initial |J0, M0> states is carried as one density
matrix per M block: a kick acts as rho -> U rho U^H and free rotation only
rephases coherences, so the weighted sum over initial states is identical
to summing individually evolved trajectories.  Between kicks the
alignment is a constant plus one oscillating term per (J, J+2) coherence,
which the kernels evaluate on the sample grid.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PulseSequence, check_sorted, evaluate_terms, split_samples
from .errors import InvalidArgumentError, JmaxTooSmallError
from .rotor_core import (
    OMEGA_PER_CM,
    IsotopologueSpec,
    build_cos2_block,
    revival_time,
    rotational_energies,
    spin_weights,
)

log = logging.getLogger(__name__)

KB_CM_PER_K = 0.6950348
THERMAL_TAIL_TOL = 1e-6
KICKED_TAIL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ThermalEnsemble:
    """Boltzmann ensemble over |J0, M0>, J0 <= jmax.

    ``level_weights[J0]`` is the total weight of shell J0; every M0 in the
    shell carries ``level_weights[J0] / (2 J0 + 1)``.
    """

    spec: IsotopologueSpec
    T: float
    jmax: int
    level_weights: np.ndarray

    def weight(self, J0: int, M0: int) -> float:
        if abs(M0) > J0 or J0 > self.jmax:
            return 0.0
        return float(self.level_weights[J0] / (2 * J0 + 1))

    def pairs(self):
        """(J0, M0, weight) in ascending J0 then M0."""
        for j in range(self.jmax + 1):
            for m in range(-j, j + 1):
                yield j, m, self.weight(j, m)

    def mean_energy(self) -> float:
        return float(self.level_weights @ rotational_energies(self.spec, self.jmax))


def _raw_boltzmann(spec, T, jmax):
    e = rotational_energies(spec, jmax)
    j = np.arange(jmax + 1)
    w = spin_weights(spec, jmax) * (2 * j + 1) * np.exp(-(e - e[0]) / (KB_CM_PER_K * T))
    return w / math.fsum(w)


def thermal_jmax(spec: IsotopologueSpec, T: float, tail: float = 1e-9) -> int:
    """Smallest J with Boltzmann weight above J below ``tail``."""
    guess = int(math.sqrt(KB_CM_PER_K * T / spec.B)) + 5
    while True:
        w = _raw_boltzmann(spec, T, 4 * guess)
        beyond = np.cumsum(w[::-1])[::-1]
        idx = np.nonzero(beyond < tail)[0]
        if len(idx) and idx[0] < 4 * guess:
            return max(int(idx[0]) - 1, 0)
        guess *= 2


def boltzmann_weights(spec: IsotopologueSpec, T: float, jmax: int) -> ThermalEnsemble:
    if not T > 0:
        raise InvalidArgumentError(f"temperature must be > 0, got {T}")
    w = _raw_boltzmann(spec, T, jmax)
    top = float(w[-2:].sum())
    if top >= THERMAL_TAIL_TOL:
        raise JmaxTooSmallError(
            f"{spec.name} at {T} K: top two J shells hold weight {top:.3g}", thermal_jmax(spec, T) + 2
        )
    w.setflags(write=False)
    return ThermalEnsemble(spec, float(T), int(jmax), w)


# -- ensemble evolution ----------------------------------------------------


@dataclass
class Segment:
    """Alignment between two kicks: offset + sum Re(coeffs exp(1j omega (t - t0)))."""

    t0: float
    offset: float
    coeffs: np.ndarray
    omega: np.ndarray

    def evaluate(self, times) -> np.ndarray:
        return evaluate_terms(np.asarray(times, dtype=float) - self.t0, self.offset, self.coeffs, self.omega)


@dataclass
class EnsembleEvolution:
    """Thermally averaged evolution through a pulse sequence.

    ``segments[k]`` describes the alignment after ``k`` kicks; ``energies[k]``
    is the ensemble rotational energy (cm^-1) after ``k`` kicks.
    """

    ensemble: ThermalEnsemble
    pulses: PulseSequence
    t_start: float
    segments: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    top_population: float = 0.0
    block_states: list = field(default_factory=list, repr=False)

    def alignment(self, samples) -> np.ndarray:
        samples = check_sorted(samples, self.pulses, self.t_start)
        out = np.empty(len(samples))
        for seg, s in zip(split_samples(samples, self.pulses.times), self.segments):
            out[seg] = s.evaluate(samples[seg])
        return out

    @property
    def energy_gain(self) -> float:
        return self.energies[-1] - self.energies[0]


def _block_terms(rho, c, e):
    offset = float(np.einsum("ii,ii->", rho, c).real)
    k = np.arange(len(e) - 2)
    coeffs = 2.0 * c[k, k + 2] * rho[k, k + 2]
    energy = float(np.real(np.diagonal(rho)) @ e)
    return offset, coeffs, energy


def _evolve_block(spec, M, jmax, rho, t, pulses):
    """Evolve one M block from density ``rho`` at time ``t`` through ``pulses``.

    Returns per-segment (offset, coeffs, energy), the top-two-shell
    population and the final density matrix.
    """
    block = build_cos2_block(M, jmax)
    e = rotational_energies(spec, jmax)[M:]
    out = []
    for t_k, p_k in pulses:
        ph = np.exp(-1j * OMEGA_PER_CM * e * (t_k - t))
        rho = (ph[:, None] * rho) * ph.conj()[None, :]
        u = block.kick_unitary(p_k)
        rho = u @ rho @ u.conj().T
        t = t_k
        out.append(_block_terms(rho, block.matrix, e))
    top = float(np.real(np.diagonal(rho))[-2:].sum())
    return out, top, rho


def _reduce(ensemble, per_block, n_segments, t_starts, evo):
    """Sum block results in ascending M (M > 0 stands for +-M)."""
    spec, jmax = ensemble.spec, ensemble.jmax
    e = rotational_energies(spec, jmax)
    omega = OMEGA_PER_CM * (e[2:] - e[:-2])
    for k in range(n_segments):
        offset = 0.0
        coeffs = np.zeros(max(jmax - 1, 0), dtype=complex)
        energy = 0.0
        for m, terms in enumerate(per_block):
            mult = 1.0 if m == 0 else 2.0
            off_m, c_m, e_m = terms[k]
            offset += mult * off_m
            coeffs[m : m + len(c_m)] += mult * c_m
            energy += mult * e_m
        evo.segments.append(Segment(float(t_starts[k]), offset, coeffs, omega))
        evo.energies.append(energy)


def _run_blocks(ensemble, rhos, t, pulses, threads):
    spec, jmax = ensemble.spec, ensemble.jmax

    def work(m):
        return _evolve_block(spec, m, jmax, rhos[m], t, pulses)

    ms = range(jmax + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(work, ms))
    return [work(m) for m in ms]


def _check_top(evo):
    if evo.top_population > THERMAL_TAIL_TOL:
        spec = evo.ensemble.spec
        raise JmaxTooSmallError(
            f"{spec.name}: population {evo.top_population:.3g} reached the top of the basis", evo.ensemble.jmax + 10
        )


def evolve_ensemble(
    ensemble: ThermalEnsemble, pulses: PulseSequence, t_start: float = 0.0, threads: int = 1
) -> EnsembleEvolution:
    """Propagate the thermal density matrix through ``pulses``.

    M blocks may be evolved on several threads; the reduction over blocks
    always runs in ascending M so results do not depend on ``threads``.
    """
    if len(pulses) and pulses.times[0] < t_start:
        raise InvalidArgumentError("pulses precede the start time")
    spec, jmax = ensemble.spec, ensemble.jmax
    j = np.arange(jmax + 1)
    per_m = ensemble.level_weights / (2 * j + 1)
    rhos = [np.diag(per_m[m:]).astype(complex) for m in range(jmax + 1)]
    e = rotational_energies(spec, jmax)
    initial = [[_block_terms(rhos[m], build_cos2_block(m, jmax).matrix, e[m:])] for m in range(jmax + 1)]
    results = _run_blocks(ensemble, rhos, t_start, pulses, threads)

    evo = EnsembleEvolution(ensemble, pulses, float(t_start))
    per_block = [init + res[0] for init, res in zip(initial, results)]
    _reduce(ensemble, per_block, len(pulses) + 1, [t_start, *pulses.times], evo)
    evo.top_population = sum((1.0 if m == 0 else 2.0) * r[1] for m, r in enumerate(results))
    evo.block_states = [r[2] for r in results]
    _check_top(evo)
    return evo


def extend_evolution(evo: EnsembleEvolution, pulses: PulseSequence, threads: int = 1) -> EnsembleEvolution:
    """Continue ``evo`` through further kicks, all later than its last kick."""
    last = evo.pulses.times[-1] if len(evo.pulses) else evo.t_start
    if len(pulses) and pulses.times[0] <= last:
        raise InvalidArgumentError("extension pulses must follow the existing ones")
    results = _run_blocks(evo.ensemble, evo.block_states, last, pulses, threads)
    combined = PulseSequence(evo.pulses.events + pulses.events)
    out = EnsembleEvolution(evo.ensemble, combined, evo.t_start)
    out.segments = list(evo.segments)
    out.energies = list(evo.energies)
    _reduce(evo.ensemble, [r[0] for r in results], len(pulses), pulses.times, out)
    out.top_population = sum((1.0 if m == 0 else 2.0) * r[1] for m, r in enumerate(results))
    out.block_states = [r[2] for r in results]
    _check_top(out)
    return out


def choose_jmax(spec: IsotopologueSpec, T: float, total_strength: float) -> int:
    """Basis size for a thermal ensemble kicked with total strength ``total_strength``.

    Starts at J_thermal + ceil(4 P) + 10 and grows until a single kick of the
    total strength leaves < 1e-8 of the population in the top two shells.
    """
    jmax = thermal_jmax(spec, T) + math.ceil(4 * total_strength) + 10
    while True:
        ens = boltzmann_weights(spec, T, jmax)
        probe = PulseSequence(((0.0, total_strength),)) if total_strength > 0 else PulseSequence()
        try:
            evo = evolve_ensemble(ens, probe)
        except JmaxTooSmallError:
            evo = None
        if evo is not None and evo.top_population < KICKED_TAIL_TOL:
            return jmax
        jmax += 5


# -- traces ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlignmentTrace:
    """Thermally averaged <cos^2>(t) per species on a common time grid."""

    times: np.ndarray
    alignment: dict  # species name -> A_s(t)

    @property
    def species(self) -> list[str]:
        return list(self.alignment)

    def chi(self, name: str) -> np.ndarray:
        return self.alignment[name] - 1.0 / 3.0


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Mixture FWM signal S(t) = [sum_s f_s chi_s(t) env(t)]^2 / norm."""

    times: np.ndarray
    signal: np.ndarray
    chi: dict  # species name -> chi_s(t), not fraction weighted
    fractions: dict
    decay_tau: float | None = None
    norm: float = 1.0

    def composite_chi(self) -> np.ndarray:
        """sum_s f_s chi_s(t) env(t)."""
        total = np.zeros(len(self.times))
        for name, f in self.fractions.items():
            total += f * self.chi[name]
        return total * decay_envelope(self.times, self.decay_tau)

    def component_signal(self, name: str) -> np.ndarray:
        """Signal the named component would give alone at its fraction."""
        env = decay_envelope(self.times, self.decay_tau)
        return (self.fractions[name] * self.chi[name] * env) ** 2 / self.norm


def decay_envelope(times, decay_tau):
    times = np.asarray(times, dtype=float)
    if decay_tau is None:
        return np.ones(len(times))
    return np.exp(-times / decay_tau)


def ensemble_alignment(
    ensemble: ThermalEnsemble, pulses: PulseSequence, samples, threads: int = 1
) -> AlignmentTrace:
    samples = np.asarray(samples, dtype=float)
    t0 = min(float(samples[0]) if len(samples) else 0.0, pulses.times[0] if len(pulses) else 0.0)
    evo = evolve_ensemble(ensemble, pulses, t0, threads)
    return AlignmentTrace(samples, {ensemble.spec.name: evo.alignment(samples)})


def default_ensemble(spec, T, pulses: PulseSequence, jmax=None) -> ThermalEnsemble:
    if jmax is None:
        jmax = choose_jmax(spec, T, pulses.total_strength)
    return boltzmann_weights(spec, T, jmax)


def _fractions(components):
    names = [s.name for s, _ in components]
    if len(set(names)) != len(names):
        raise InvalidArgumentError(f"duplicate species in mixture: {names}")
    total = math.fsum(f for _, f in components)
    if abs(total - 1.0) > 1e-9:
        raise InvalidArgumentError(f"mixture fractions sum to {total!r}, not 1")
    if any(f < 0 for _, f in components):
        raise InvalidArgumentError("mixture fractions must be >= 0")
    return {s.name: float(f) for s, f in components}


def mixture_fwm_signal(
    components,
    pulses: PulseSequence,
    T: float,
    samples,
    decay_tau: float | None = None,
    jmax: int | None = None,
    threads: int = 1,
    normalize: bool = False,
) -> SignalTrace:
    """FWM signal of a mixture given as ``[(spec, fraction), ...]``.

    With ``normalize`` the signal is divided by the first post-kick peak of
    the first component run on its own (fraction 1).
    """
    fractions = _fractions(components)
    if decay_tau is not None and not decay_tau > 0:
        raise InvalidArgumentError(f"decay_tau must be > 0, got {decay_tau}")
    samples = np.asarray(samples, dtype=float)
    t0 = min(float(samples[0]) if len(samples) else 0.0, pulses.times[0] if len(pulses) else 0.0)
    chi = {}
    norm = 1.0
    for i, (spec, _) in enumerate(components):
        ens = default_ensemble(spec, T, pulses, jmax)
        evo = evolve_ensemble(ens, pulses, t0, threads)
        chi[spec.name] = evo.alignment(samples) - 1.0 / 3.0
        if normalize and i == 0 and len(pulses):
            norm = first_peak_height(evo, spec)
    total = np.zeros(len(samples))
    for name, f in fractions.items():
        total += f * chi[name]
    total *= decay_envelope(samples, decay_tau)
    return SignalTrace(samples, total * total / norm, chi, fractions, decay_tau, norm)


def first_peak_height(evo: EnsembleEvolution, spec: IsotopologueSpec, dt: float = 0.001) -> float:
    """Max of chi^2 within a quarter revival after the first kick."""
    t1 = evo.pulses.times[0]
    grid = t1 + dt * np.arange(1, int(0.25 * revival_time(spec) / dt))
    if len(evo.pulses) > 1:
        grid = grid[grid <= evo.pulses.times[1]]
    chi = evo.alignment(grid) - 1.0 / 3.0
    return float(np.max(chi * chi))


def time_grid(t_start: float, t_end: float, dt: float) -> np.ndarray:
    if not dt > 0 or not t_end > t_start:
        raise InvalidArgumentError(f"bad time grid ({t_start}, {t_end}, {dt})")
    n = int(math.floor((t_end - t_start) / dt + 1e-9)) + 1
    return t_start + dt * np.arange(n)


# -- trace files -------------------------------------------------------------


def format_number(x: float) -> str:
    return f"{x:.17g}"


def write_trace(trace: SignalTrace, fh, header_lines=()) -> None:
    """Comma-delimited trace: time_ps, chi_<species>..., signal.

    Lines starting with '#' before the column header carry metadata.
    """
    for line in header_lines:
        fh.write(f"# {line}\n")
    fh.write(f"# norm: {format_number(trace.norm)}\n")
    fh.write(f"# decay_tau_ps: {'none' if trace.decay_tau is None else format_number(trace.decay_tau)}\n")
    for name, f in trace.fractions.items():
        fh.write(f"# fraction {name}: {format_number(f)}\n")
    names = list(trace.chi)
    fh.write(",".join(["time_ps", *(f"chi_{n}" for n in names), "signal"]) + "\n")
    cols = [trace.times, *(trace.chi[n] for n in names), trace.signal]
    for row in zip(*cols):
        fh.write(",".join(format_number(v) for v in row) + "\n")


def read_trace(fh) -> SignalTrace:
    """Inverse of ``write_trace``.  Missing metadata defaults to fraction 1/n, norm 1."""
    meta_fracs, norm, decay = {}, 1.0, None
    header = None
    rows = []
    for raw in fh:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("fraction "):
                name, val = body[len("fraction ") :].rsplit(":", 1)
                meta_fracs[name.strip()] = float(val)
            elif body.startswith("norm:"):
                norm = float(body.split(":", 1)[1])
            elif body.startswith("decay_tau_ps:"):
                val = body.split(":", 1)[1].strip()
                decay = None if val == "none" else float(val)
            continue
        if header is None:
            header = line.split(",")
            if header[0] != "time_ps" or header[-1] != "signal":
                raise InvalidArgumentError(f"not a trace file header: {line}")
            continue
        rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise InvalidArgumentError("trace file has no header row")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    names = [h[len("chi_") :] for h in header[1:-1]]
    chi = {n: data[:, i + 1] for i, n in enumerate(names)}
    fracs = {n: meta_fracs.get(n, 1.0 / len(names)) for n in names} if names else {}
    return SignalTrace(data[:, 0], data[:, -1], chi, fracs, decay, norm)
