"""Single wave-packet evolution under delta kicks and free rotation."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, NumericalFailure
from .rotor_core import OMEGA_PER_CM, IsotopologueSpec, build_cos2_block, rotational_energies

NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WavepacketState:
    """Amplitudes a_J for J = |M|..Jmax at fixed M, at time ``t`` (ps)."""

    spec: IsotopologueSpec
    M: int
    amplitudes: np.ndarray
    t: float = 0.0

    @property
    def jmin(self) -> int:
        return abs(self.M)

    @property
    def jmax(self) -> int:
        return abs(self.M) + len(self.amplitudes) - 1

    @property
    def j_values(self) -> np.ndarray:
        return np.arange(self.jmin, self.jmax + 1)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    @classmethod
    def eigenstate(cls, spec, J, M, jmax, t=0.0):
        if not abs(M) <= J <= jmax:
            raise InvalidArgumentError(f"need |M| <= J <= Jmax, got J={J}, M={M}, Jmax={jmax}")
        a = np.zeros(jmax - abs(M) + 1, dtype=complex)
        a[J - abs(M)] = 1.0
        return cls(spec, M, a, t)


@dataclass(frozen=True)
class PulseSequence:
    """Kicks as ``(time_ps, strength)`` pairs with strictly increasing times."""

    events: tuple = ()

    def __post_init__(self):
        events = tuple((float(t), float(p)) for t, p in self.events)
        object.__setattr__(self, "events", events)
        times = [t for t, _ in events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidArgumentError(f"pulse times must be strictly increasing: {times}")
        if any(p < 0 for _, p in events):
            raise InvalidArgumentError("kick strengths must be >= 0")

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.events]

    @property
    def total_strength(self) -> float:
        return sum(p for _, p in self.events)

    def shifted(self, dt: float) -> "PulseSequence":
        return PulseSequence(tuple((t + dt, p) for t, p in self.events))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def _check_norm(amps, where):
    drift = abs(np.vdot(amps, amps).real - 1.0)
    if drift > NORM_TOL:
        raise NumericalFailure(f"{where}: norm drift {drift:.3g}")


def apply_kick(state: WavepacketState, P: float) -> WavepacketState:
    """Sudden kick: a <- exp(i P cos^2) a.  Time is unchanged."""
    if P < 0:
        raise InvalidArgumentError(f"kick strength must be >= 0, got {P}")
    _check_norm(state.amplitudes, "apply_kick input")
    block = build_cos2_block(state.M, state.jmax)
    v = block.eigenvectors
    amps = v @ (np.exp(1j * P * block.eigenvalues) * (v.T @ state.amplitudes))
    _check_norm(amps, "apply_kick")
    return replace(state, amplitudes=amps)


def _level_energies(spec, j_values):
    return rotational_energies(spec, int(j_values[-1]))[j_values]


def free_propagate(state: WavepacketState, dt: float) -> WavepacketState:
    if dt < 0:
        raise InvalidArgumentError(f"propagation time must be >= 0, got {dt}")
    e = _level_energies(state.spec, state.j_values)
    amps = state.amplitudes * np.exp(-1j * OMEGA_PER_CM * e * dt)
    return replace(state, amplitudes=amps, t=state.t + dt)


def expectation_cos2(state: WavepacketState) -> float:
    c = build_cos2_block(state.M, state.jmax).matrix
    a = state.amplitudes
    val = float(np.vdot(a, c @ a).real)
    if not -1e-10 <= val <= 1.0 + 1e-10:
        raise NumericalFailure(f"<cos^2> = {val} outside [0, 1]")
    return val


def expectation_energy(state: WavepacketState) -> float:
    e = _level_energies(state.spec, state.j_values)
    return float(np.abs(state.amplitudes) ** 2 @ e)


def coherence_terms(rho: np.ndarray, M: int, jmax: int, spec: IsotopologueSpec):
    """Decompose Tr(rho(t) cos^2) for one M block into offset + oscillating terms.

    Returns ``(offset, coeffs, omega)`` with
    ``Tr(rho(t0 + tau) C) = offset + sum_k Re(coeffs_k exp(1j omega_k tau))``
    where ``rho`` is the block density matrix at ``t0``.  ``coeffs[k]``
    belongs to the J, J+2 coherence with J = |M| + k.
    """
    block = build_cos2_block(M, jmax)
    c = block.matrix
    offset = float(np.einsum("ii,ii->", rho, c).real)
    if block.size < 3:
        return offset, np.zeros(0, dtype=complex), np.zeros(0)
    k = np.arange(block.size - 2)
    coeffs = 2.0 * c[k, k + 2] * rho[k, k + 2]
    e = _level_energies(spec, block.j_values)
    omega = OMEGA_PER_CM * (e[2:] - e[:-2])
    return offset, coeffs, omega


def evaluate_terms(taus, offset, coeffs, omega) -> np.ndarray:
    """Evaluate an offset + coherence sum at elapsed times ``taus``."""
    taus = np.asarray(taus, dtype=float)
    n = len(taus)
    if n == 0:
        return np.zeros(0)
    if n >= 3:
        dt = (taus[-1] - taus[0]) / (n - 1)
        if dt > 0 and np.max(np.abs(np.diff(taus) - dt)) <= 1e-9 * dt:
            return kernels.coherence_sum_uniform(taus[0], dt, n, coeffs, omega, offset)
    return kernels.coherence_sum(taus, coeffs, omega, offset)


def split_samples(samples: np.ndarray, pulse_times: Sequence[float]) -> list[slice]:
    """Slice ``samples`` into len(pulse_times)+1 segments.

    A sample equal to a pulse time belongs to the segment before that pulse
    (pre-kick value is recorded).
    """
    edges = np.searchsorted(samples, np.asarray(pulse_times, dtype=float), side="right")
    bounds = [0, *edges.tolist(), len(samples)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def check_sorted(samples, pulses: PulseSequence, t0: float):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise InvalidArgumentError("sample grid must be one-dimensional")
    if len(samples) > 1 and np.any(np.diff(samples) < 0):
        raise InvalidArgumentError("sample times must be sorted ascending")
    if len(samples) and samples[0] < t0:
        raise InvalidArgumentError(f"first sample {samples[0]} precedes the initial time {t0}")
    if len(pulses) and pulses.times[0] < t0:
        raise InvalidArgumentError(f"first pulse {pulses.times[0]} precedes the initial time {t0}")
    return samples


def run_sequence(initial: WavepacketState, pulses: PulseSequence, samples) -> np.ndarray:
    """<cos^2>(t) at each sample, evolving through the kicks in time order."""
    samples = check_sorted(samples, pulses, initial.t)
    out = np.empty(len(samples))
    state = initial
    segments = split_samples(samples, pulses.times)
    for i, seg in enumerate(segments):
        a = state.amplitudes
        rho = np.outer(a, a.conj())
        offset, coeffs, omega = coherence_terms(rho, state.M, state.jmax, state.spec)
        out[seg] = evaluate_terms(samples[seg] - state.t, offset, coeffs, omega)
        if i < len(pulses):
            t_k, p_k = pulses.events[i]
            state = apply_kick(free_propagate(state, t_k - state.t), p_k)
    return out


def dump_amplitudes(states: Iterable[WavepacketState], fh: TextIO) -> None:
    """Write ``t J re im`` rows, one per basis level per state."""
    fh.write("# t_ps J re im\n")
    for st in states:
        for j, a in zip(st.j_values, st.amplitudes):
            fh.write(f"{float(st.t)!r} {int(j)} {float(a.real)!r} {float(a.imag)!r}\n")
