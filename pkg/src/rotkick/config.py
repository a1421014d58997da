"""Run configuration: a plain ``key = value`` format with repeatable sections.

Example::

    temperature = 295          # K
    t_end = 340                # ps
    dt = 0.01

    [species]
    name = N2-14
    fraction = 0.5

    [species]
    name = N2-15
    fraction = 0.5

    [pulse]
    time = 0
    strength = 3

Top-level keys, sections and their keys are listed in ``TOP_KEYS`` and
``SECTION_KEYS``; anything else is rejected with the offending line number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import PulseSequence
from .errors import ConfigError, InvalidArgumentError, InvalidSpecError
from .rotor_core import IsotopologueSpec, load_molecule_library

TOP_KEYS = {
    "temperature": 295.0,
    "t_start": 0.0,
    "t_end": 340.0,
    "dt": 0.01,
    "decay_tau": None,
    "jmax": None,
    "output": None,
    "library": None,
    "normalize": True,
}

SECTION_KEYS = {
    "species": {"name": None, "fraction": None},
    "pulse": {"time": None, "strength": None},
    "control": {
        "delay_min": None,
        "delay_max": None,
        "delay_step": None,
        "objective": "selectivity",
        "target": None,
        "horizon": None,
        "resolution": 1e-3,
    },
    "analysis": {"input": None, "revival_index": None, "tolerance": 0.1},
}
REPEATABLE = {"species", "pulse"}


@dataclass
class RunConfig:
    mixture: list  # [(IsotopologueSpec, fraction)]
    temperature: float
    pulses: PulseSequence
    t_start: float
    t_end: float
    dt: float
    decay_tau: float | None = None
    jmax: int | None = None
    output: str | None = None
    normalize: bool = True
    library: str | None = None
    control: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    @property
    def specs(self) -> list[IsotopologueSpec]:
        return [s for s, _ in self.mixture]

    def echo(self) -> list[str]:
        """Fully resolved configuration as ``key = value`` lines."""
        lines = [
            f"temperature = {self.temperature!r}",
            f"t_start = {self.t_start!r}",
            f"t_end = {self.t_end!r}",
            f"dt = {self.dt!r}",
            f"decay_tau = {'none' if self.decay_tau is None else repr(self.decay_tau)}",
            f"jmax = {'auto' if self.jmax is None else self.jmax}",
            f"normalize = {'true' if self.normalize else 'false'}",
            f"library = {self.library or 'default'}",
        ]
        for spec, frac in self.mixture:
            lines.append(
                f"[species] name = {spec.name}, fraction = {frac!r}, B = {spec.B!r}, D = {spec.D!r}, "
                f"spin = {spec.nuclear_spin!r}, homonuclear = {spec.homonuclear}"
            )
        for t, p in self.pulses:
            lines.append(f"[pulse] time = {t!r}, strength = {p!r}")
        if self.control:
            lines.append("[control] " + ", ".join(f"{k} = {v!r}" for k, v in sorted(self.control.items())))
        if self.analysis:
            lines.append("[analysis] " + ", ".join(f"{k} = {v!r}" for k, v in sorted(self.analysis.items())))
        return lines


def _parse_value(key, raw, line):
    low = raw.lower()
    if key in ("name", "output", "library", "input", "objective", "target"):
        return raw
    if key == "normalize":
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key} must be true/false, got {raw!r}", line)
    if low in ("none", "off"):
        return None
    if key == "jmax":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}", line) from None
    if key == "revival_index":
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"{key} must be numbers, got {raw!r}", line) from None
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}", line) from None
    if not math.isfinite(val):
        raise ConfigError(f"{key} must be finite", line)
    return val


def _tokenize(text):
    """Yield (section or None, {key: (value, line)}, section_line) blocks."""
    top: dict = {}
    sections: list = []
    current = top
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip()
            if name not in SECTION_KEYS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name not in REPEATABLE and any(s[0] == name for s in sections):
                raise ConfigError(f"section [{name}] given twice", lineno)
            current = {}
            sections.append((name, current, lineno))
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        allowed = TOP_KEYS if current is top else SECTION_KEYS[sections[-1][0]]
        if key not in allowed:
            where = "top level" if current is top else f"[{sections[-1][0]}]"
            raise ConfigError(f"unknown key {key!r} at {where}", lineno)
        if key in current:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        current[key] = (_parse_value(key, value, lineno), lineno)
    return top, sections


def parse_config(text: str, base_dir: str | Path | None = None) -> RunConfig:
    """Parse and validate a config; relative paths resolve against ``base_dir``."""
    top, sections = _tokenize(text)
    vals = {k: (top[k][0] if k in top else d) for k, d in TOP_KEYS.items()}
    lines = {k: top[k][1] for k in top}

    lib_path = vals["library"]
    if lib_path is not None and base_dir is not None:
        lib_path = str(Path(base_dir) / lib_path)
    try:
        library = load_molecule_library(lib_path)
    except (InvalidSpecError, OSError) as exc:
        raise ConfigError(f"molecule library: {exc}", lines.get("library")) from None

    mixture = []
    pulses = []
    control: dict = {}
    analysis: dict = {}
    for name, body, lineno in sections:
        got = {k: v for k, (v, _) in body.items()}
        if name == "species":
            if "name" not in got:
                raise ConfigError("[species] needs a name", lineno)
            spec = library.get(got["name"])
            if spec is None:
                raise ConfigError(f"species {got['name']!r} not in the molecule library", body["name"][1])
            frac = got.get("fraction", spec.abundance)
            if frac is None or not 0 <= frac <= 1:
                raise ConfigError(f"fraction must lie in [0, 1], got {frac}", lineno)
            mixture.append((spec, frac))
        elif name == "pulse":
            missing = [k for k in ("time", "strength") if got.get(k) is None]
            if missing:
                raise ConfigError(f"[pulse] missing {missing}", lineno)
            if got["strength"] < 0:
                raise ConfigError("pulse strength must be >= 0", body["strength"][1])
            pulses.append((got["time"], got["strength"], lineno))
        elif name == "control":
            control = {k: got.get(k, d) for k, d in SECTION_KEYS["control"].items()}
            if control["objective"] not in ("selectivity", "suppression"):
                raise ConfigError(f"unknown objective {control['objective']!r}", body["objective"][1])
        else:
            analysis = {k: got.get(k, d) for k, d in SECTION_KEYS["analysis"].items()}
            if analysis["input"] is not None and base_dir is not None:
                analysis["input"] = str(Path(base_dir) / analysis["input"])

    if not mixture:
        raise ConfigError("no [species] section")
    names = [s.name for s, _ in mixture]
    if len(set(names)) != len(names):
        raise ConfigError(f"species listed twice: {names}")
    total = math.fsum(f for _, f in mixture)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"species fractions sum to {total!r}, not 1")
    pulses.sort(key=lambda p: p[0])
    for a, b in zip(pulses, pulses[1:]):
        if b[0] == a[0]:
            raise ConfigError(f"two pulses at t = {a[0]}", b[2])
    try:
        seq = PulseSequence(tuple((t, p) for t, p, _ in pulses))
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from None

    if not vals["dt"] or vals["dt"] <= 0:
        raise ConfigError("dt must be > 0", lines.get("dt"))
    if vals["t_end"] is None or vals["t_start"] is None or not vals["t_end"] > vals["t_start"]:
        raise ConfigError("t_end must exceed t_start", lines.get("t_end"))
    if vals["temperature"] is None or vals["temperature"] <= 0:
        raise ConfigError("temperature must be > 0", lines.get("temperature"))
    if vals["decay_tau"] is not None and vals["decay_tau"] <= 0:
        raise ConfigError("decay_tau must be > 0", lines.get("decay_tau"))
    if vals["jmax"] is not None and vals["jmax"] < 2:
        raise ConfigError("jmax must be >= 2", lines.get("jmax"))
    if len(seq) and seq.times[0] < vals["t_start"]:
        raise ConfigError("pulses must not precede t_start")

    return RunConfig(
        mixture=mixture,
        temperature=vals["temperature"],
        pulses=seq,
        t_start=vals["t_start"],
        t_end=vals["t_end"],
        dt=vals["dt"],
        decay_tau=vals["decay_tau"],
        jmax=vals["jmax"],
        output=vals["output"],
        normalize=vals["normalize"],
        library=vals["library"],
        control=control,
        analysis=analysis,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)
