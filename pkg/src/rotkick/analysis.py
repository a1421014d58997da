"""Revival-period extraction, isotopologue peak resolution and abundance estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import AlignmentTrace, SignalTrace, format_number
from .errors import InvalidArgumentError, NoCombFoundError, UnresolvedPeaksError
from .rotor_core import IsotopologueSpec, revival_time

COMB_CONTRAST_MIN = 0.1
# a comb tooth must reach this fraction of the strongest autocorrelation peak
FUNDAMENTAL_FRACTION = 0.8
WIDTH_LEVEL = 0.1
WINDOW_FRACTION = 0.25


def _uniform_step(times):
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise InvalidArgumentError("trace too short")
    d = np.diff(times)
    dt = (times[-1] - times[0]) / (len(times) - 1)
    if np.max(np.abs(d - dt)) > 1e-6 * dt:
        raise InvalidArgumentError("trace must be sampled on a uniform grid")
    return dt


def analysis_series(trace, species: str | None = None) -> tuple[np.ndarray, bool]:
    """(series, is_chi): one species' chi, the composite susceptibility if present, else S."""
    if species is not None:
        if isinstance(trace, AlignmentTrace):
            return trace.chi(species), True
        if species not in trace.chi:
            raise InvalidArgumentError(f"trace has no chi column for {species!r}")
        return np.asarray(trace.chi[species], dtype=float), True
    if isinstance(trace, AlignmentTrace):
        return sum(trace.chi(n) for n in trace.species), True
    if trace.chi:
        return trace.composite_chi(), True
    return np.asarray(trace.signal, dtype=float), False


def autocorrelation(x) -> np.ndarray:
    """Biased, mean-removed autocorrelation normalized to 1 at lag 0."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = len(x)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    ac = np.fft.irfft(f * np.conj(f), nfft)[:n]
    if ac[0] <= 0:
        return np.zeros(n)
    return ac / ac[0]


def _parabolic(y, k):
    ym, y0, yp = y[k - 1], y[k], y[k + 1]
    curv = ym - 2 * y0 + yp
    if curv >= 0:
        return float(k), y0, curv
    delta = 0.5 * (ym - yp) / curv
    return k + delta, y0 - 0.25 * (ym - yp) * delta, curv


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    uncertainty: float
    contrast: float
    n_teeth: int
    source: str  # "chi" or "signal"

    @property
    def relative_uncertainty(self) -> float:
        return self.uncertainty / self.period


def estimate_revival_period(trace, species: str | None = None) -> PeriodEstimate:
    """Fundamental comb period (ps) from the autocorrelation of the trace.

    Uses the composite susceptibility when the trace carries it, otherwise
    the signal itself (whose dominant spacing can be half a revival).  The
    first tooth fixes the period roughly; every tooth up to half the trace
    length is then located by parabolic interpolation and the period is
    the least-squares slope of tooth lag against tooth index.  With
    ``species`` only that species' chi column is analyzed.
    """
    series, is_chi = analysis_series(trace, species)
    dt = _uniform_step(trace.times)
    ac = autocorrelation(series)
    half = len(ac) // 2
    if not np.any(ac) or half < 3:
        raise NoCombFoundError("trace carries no structure")
    y = ac[: half + 1]
    peaks = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    if len(peaks) == 0:
        raise NoCombFoundError("autocorrelation has no peaks")
    contrast = float(np.max(y[peaks]))
    if contrast < COMB_CONTRAST_MIN:
        raise NoCombFoundError(f"autocorrelation contrast {contrast:.3g} < {COMB_CONTRAST_MIN}")
    first = peaks[y[peaks] >= FUNDAMENTAL_FRACTION * contrast][0]
    rough = _parabolic(y, first)[0]

    lags, weights = [], []
    m = 1
    while True:
        k = int(round(m * rough))
        if k + 2 >= len(y):
            break
        lo, hi = max(k - 3, 1), min(k + 4, len(y) - 1)
        kk = lo + int(np.argmax(y[lo:hi]))
        if y[kk] < FUNDAMENTAL_FRACTION * 0.5 * contrast or not 0 < kk < len(y) - 1:
            break
        pos, _, curv = _parabolic(y, kk)
        lags.append((m, pos))
        weights.append(-curv)
        rough = pos / m
        m += 1
    idx = np.array([a for a, _ in lags], dtype=float)
    pos = np.array([b for _, b in lags])
    period_steps = float(idx @ pos / (idx @ idx))
    if len(lags) > 2:
        resid = pos - period_steps * idx
        se = math.sqrt(float(resid @ resid) / (len(lags) - 1) / float(idx @ idx))
    else:
        se = 0.0
    # curvature floor: half the parabola width of the first tooth, spread over all teeth
    width = math.sqrt(max(y[first], 1e-12) / max(weights[0], 1e-12))
    se = max(se, 0.5 * width / float(idx[-1]) ** 1.5)
    return PeriodEstimate(period_steps * dt, se * dt, contrast, len(lags), "chi" if is_chi else "signal")


# -- interference prediction -------------------------------------------------


@dataclass(frozen=True)
class InterferenceEvent:
    time: float
    kind: str  # constructive / destructive / fractional
    multiple_a: float  # in units of T_A
    multiple_b: float


def _classify(qa, qb):
    if qa % 2 or qb % 2:
        return "fractional"
    if (qa // 2) % 2 == (qb // 2) % 2:
        return "constructive"
    return "destructive"


def predict_interference_times(spec_a, spec_b, horizon: float, tol: float = 0.1) -> list[InterferenceEvent]:
    """Coincidences of quarter-revival multiples of two species up to ``horizon`` ps.

    Full/full and half/half coincidences are constructive (same sign of
    the revival lobes), full/half destructive, anything involving a
    quarter revival fractional.
    """
    ta, tb = revival_time(spec_a), revival_time(spec_b)
    if not horizon > max(ta, tb):
        raise InvalidArgumentError(f"horizon {horizon} must exceed both revival times")
    qa_max = int(horizon / (ta / 4))
    out = []
    for qa in range(1, qa_max + 1):
        t_a = qa * ta / 4
        qb = int(round(t_a / (tb / 4)))
        if qb < 1:
            continue
        t_b = qb * tb / 4
        if abs(t_a - t_b) < tol and 0.5 * (t_a + t_b) <= horizon:
            out.append(InterferenceEvent(0.5 * (t_a + t_b), _classify(qa, qb), qa / 4, qb / 4))
    return out


# -- peak resolution and abundances ------------------------------------------


def _window(times, center, half):
    return (times >= center - half) & (times <= center + half)


def revival_group_width(trace: SignalTrace, spec: IsotopologueSpec, revival_index: float, t_kick: float = 0.0):
    """Extent (ps) of one species' revival feature at the 10% level.

    Measured on the species' own component signal when the trace carries
    it, else on the total signal.
    """
    period = revival_time(spec)
    center = t_kick + revival_index * period
    mask = _window(trace.times, center, period / 8)
    if not mask.any():
        raise InvalidArgumentError(f"revival index {revival_index} lies outside the trace")
    s = trace.component_signal(spec.name) if spec.name in trace.chi else trace.signal
    s, t = s[mask], trace.times[mask]
    if s.max() <= 0:
        return 0.0
    above = t[s >= WIDTH_LEVEL * s.max()]
    return float(above[-1] - above[0])


@dataclass(frozen=True)
class ResolvedPeak:
    species: str
    predicted_time: float
    time: float
    amplitude: float


def resolve_isotopologue_peaks(
    trace: SignalTrace, specs, revival_index: float, t_kick: float = 0.0
) -> list[ResolvedPeak]:
    """Locate each species' revival peak at ``revival_index`` (in units of its T_rev).

    Windows span +-25% of the smallest predicted inter-species spacing;
    they are unresolved when that spacing does not exceed the revival
    feature width of the most abundant species.
    """
    specs = list(specs)
    if not specs:
        raise InvalidArgumentError("no species given")
    predicted = sorted(((t_kick + revival_index * revival_time(s), s) for s in specs), key=lambda p: p[0])
    times = trace.times
    if len(specs) == 1:
        half = revival_time(specs[0]) / 8
    else:
        spacing = min(b[0] - a[0] for a, b in zip(predicted, predicted[1:]))
        dominant = max(specs, key=lambda s: trace.fractions.get(s.name, s.abundance))
        width = revival_group_width(trace, dominant, revival_index, t_kick)
        if spacing <= width:
            raise UnresolvedPeaksError(
                f"at revival index {revival_index} species are {spacing:.3g} ps apart but features are "
                f"{width:.3g} ps wide; try a larger index"
            )
        half = WINDOW_FRACTION * spacing
    out = []
    for t_pred, spec in predicted:
        mask = _window(times, t_pred, half)
        if not mask.any() or t_pred + half > times[-1] or t_pred - half < times[0]:
            raise InvalidArgumentError(f"window around {t_pred:.3f} ps not inside the trace")
        i = int(np.argmax(np.where(mask, trace.signal, -np.inf)))
        out.append(ResolvedPeak(spec.name, t_pred, float(times[i]), float(trace.signal[i])))
    return out


@dataclass(frozen=True)
class AbundanceEstimate:
    fractions: dict
    excluded: list = field(default_factory=list)


def estimate_abundances(peaks) -> AbundanceEstimate:
    """Fractions from peak amplitudes: S ~ (f chi)^2, so f ~ sqrt(amplitude).

    ``peaks`` is a mapping name -> amplitude or a list of ``ResolvedPeak``.
    Species with zero amplitude are excluded and listed in ``excluded``.
    """
    if not isinstance(peaks, dict):
        peaks = {p.species: p.amplitude for p in peaks}
    if any(a < 0 for a in peaks.values()):
        raise InvalidArgumentError("peak amplitudes must be >= 0")
    excluded = [n for n, a in peaks.items() if a == 0]
    roots = {n: math.sqrt(a) for n, a in peaks.items() if a > 0}
    if len(roots) < 2:
        raise InvalidArgumentError("need at least two species with positive amplitude")
    total = math.fsum(roots.values())
    return AbundanceEstimate({n: r / total for n, r in roots.items()}, excluded)


# -- revival features ----------------------------------------------------------


def window_max(times, values, center, half_width) -> float:
    mask = _window(np.asarray(times), center, half_width)
    if not mask.any():
        raise InvalidArgumentError(f"no samples within {half_width} ps of {center}")
    return float(np.max(np.asarray(values)[mask]))


def feature_amplitude(times, values, center, half_width) -> float:
    """Peak-to-peak excursion of ``values`` within a window."""
    mask = _window(np.asarray(times), center, half_width)
    if not mask.any():
        raise InvalidArgumentError(f"no samples within {half_width} ps of {center}")
    v = np.asarray(values)[mask]
    return float(v.max() - v.min())


def count_revival_features(trace, period: float, t_kick: float = 0.0, threshold: float = 0.5) -> int:
    """Number of full revivals whose feature reaches ``threshold`` of the first one."""
    series, _ = analysis_series(trace)
    times = trace.times
    half = period / 8
    n_max = int((times[-1] - half - t_kick) / period)
    if n_max < 1:
        return 0
    amps = [feature_amplitude(times, series, t_kick + n * period, half) for n in range(1, n_max + 1)]
    return sum(a >= threshold * amps[0] for a in amps)


def revival_peak_envelope(trace: SignalTrace, specs, t_kick: float = 0.0, half_width: float | None = None, signal=None):
    """Signal maxima around every half-revival of every species.

    Returns ``(times, envelope)`` sorted by time; revival times of
    different species closer than ``half_width`` are merged.
    """
    periods = [revival_time(s) for s in specs]
    if half_width is None:
        half_width = min(periods) / 16
    signal = trace.signal if signal is None else signal
    t_end = trace.times[-1] - half_width
    centers = sorted(t_kick + k * p / 2 for p in periods for k in range(1, int((t_end - t_kick) / (p / 2)) + 1))
    merged = []
    for c in centers:
        if merged and c - merged[-1][-1] < half_width:
            merged[-1].append(c)
        else:
            merged.append([c])
    t = np.array([np.mean(g) for g in merged])
    env = np.array([window_max(trace.times, signal, c, half_width) for c in t])
    return t, env


def local_extremum_near(t, env, target, tol, kind="min"):
    """Time and value of a local min/max of the envelope within ``tol`` of ``target``.

    Returns ``None`` when no such local extremum exists.
    """
    for i in range(1, len(t) - 1):
        if abs(t[i] - target) > tol:
            continue
        if kind == "min" and env[i] < env[i - 1] and env[i] < env[i + 1]:
            return float(t[i]), float(env[i])
        if kind == "max" and env[i] > env[i - 1] and env[i] > env[i + 1]:
            return float(t[i]), float(env[i])
    return None


# -- reports -------------------------------------------------------------------


def format_report(items) -> str:
    """``key: value`` lines; floats printed with 17 significant digits."""
    lines = []
    for k, v in items:
        if isinstance(v, float):
            v = format_number(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def format_table(header, rows, sep=",") -> str:
    out = [sep.join(header)]
    for row in rows:
        out.append(sep.join(format_number(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"
