"""Rigid-rotor basis: energies, nuclear-spin weights and cos^2(theta) blocks.

Units: energies and rotational constants in cm^-1, times in ps.  A phase
accumulated over ``t`` ps by a level of energy ``E`` cm^-1 is
``2*pi*C_CM_PER_PS*E*t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, InvalidSpecError

C_CM_PER_PS = 0.0299792458
# angular frequency (rad/ps) per cm^-1
OMEGA_PER_CM = 2.0 * math.pi * C_CM_PER_PS


@dataclass(frozen=True)
class IsotopologueSpec:
    """One molecular species.

    ``nuclear_spin`` is the spin I of each nucleus and is only used when
    ``homonuclear`` is true.
    """

    name: str
    mass_a: int
    mass_b: int
    B: float
    D: float = 0.0
    nuclear_spin: float = 0.0
    homonuclear: bool = False
    abundance: float = 1.0

    def __post_init__(self):
        if not self.B > 0:
            raise InvalidSpecError(f"{self.name}: B must be > 0, got {self.B}")
        if self.D < 0:
            raise InvalidSpecError(f"{self.name}: D must be >= 0, got {self.D}")
        if self.D > 1e-3 * self.B:
            warnings.warn(f"{self.name}: D/B = {self.D / self.B:.3g} is not small", stacklevel=3)
        if not 0.0 <= self.abundance <= 1.0:
            raise InvalidSpecError(f"{self.name}: abundance {self.abundance} outside [0, 1]")
        if self.homonuclear and self.mass_a != self.mass_b:
            raise InvalidSpecError(f"{self.name}: homonuclear species needs mass_a == mass_b")
        two_i = 2 * self.nuclear_spin
        if self.nuclear_spin < 0 or abs(two_i - round(two_i)) > 1e-12:
            raise InvalidSpecError(f"{self.name}: nuclear spin {self.nuclear_spin} is not a half-integer >= 0")

    def with_(self, **changes) -> "IsotopologueSpec":
        """Copy with some fields replaced (e.g. ``spec.with_(D=0.0)``)."""
        from dataclasses import replace

        return replace(self, **changes)


def check_mixture_abundances(specs, tol=1e-9):
    total = math.fsum(s.abundance for s in specs)
    if abs(total - 1.0) > tol:
        raise InvalidSpecError(f"mixture abundances sum to {total!r}, not 1")


@lru_cache(maxsize=256)
def rotational_energies(spec: IsotopologueSpec, jmax: int) -> np.ndarray:
    """E_J for J = 0..jmax (read-only); raises if the distortion term breaks monotonicity."""
    j = np.arange(jmax + 1, dtype=float)
    jj = j * (j + 1.0)
    e = spec.B * jj - spec.D * jj * jj
    if jmax > 0 and np.any(np.diff(e) <= 0):
        bad = int(np.argmax(np.diff(e) <= 0))
        raise InvalidSpecError(
            f"{spec.name}: energy not increasing between J={bad} and J={bad + 1}; D too large for Jmax={jmax}"
        )
    e.setflags(write=False)
    return e


def rotational_energy(spec: IsotopologueSpec, J: int) -> float:
    if J < 0:
        raise InvalidArgumentError(f"J must be >= 0, got {J}")
    return float(rotational_energies(spec, J)[J])


def revival_time(spec: IsotopologueSpec) -> float:
    """Full revival period 1/(2Bc) in ps.  D is ignored by definition."""
    return 1.0 / (2.0 * spec.B * C_CM_PER_PS)


def spin_weight(spec: IsotopologueSpec, J: int) -> float:
    """Nuclear-spin statistical weight g_J (1 for heteronuclear species)."""
    if J < 0:
        raise InvalidArgumentError(f"J must be >= 0, got {J}")
    if not spec.homonuclear:
        return 1.0
    spin = Fraction(spec.nuclear_spin).limit_denominator(2)
    sym = (spin + 1) * (2 * spin + 1)
    anti = spin * (2 * spin + 1)
    boson = spin.denominator == 1
    even = J % 2 == 0
    return float(sym if even == boson else anti)


def spin_weights(spec: IsotopologueSpec, jmax: int) -> np.ndarray:
    return np.array([spin_weight(spec, j) for j in range(jmax + 1)])


def cos2_diagonal(j, m):
    """<J,M|cos^2|J,M> for arrays of J at fixed M."""
    j = np.asarray(j, dtype=float)
    return 1.0 / 3.0 + (2.0 / 3.0) * (j * (j + 1.0) - 3.0 * m * m) / ((2.0 * j - 1.0) * (2.0 * j + 3.0))


def cos2_offdiagonal(j, m):
    """<J+2,M|cos^2|J,M> for arrays of J at fixed M."""
    j = np.asarray(j, dtype=float)
    num = ((j + 1.0) ** 2 - m * m) * ((j + 2.0) ** 2 - m * m)
    return np.sqrt(num) / ((2.0 * j + 3.0) * np.sqrt((2.0 * j + 1.0) * (2.0 * j + 5.0)))


@dataclass(frozen=True, eq=False)
class Cos2Block:
    """cos^2(theta) in the |J,M> basis, J = |M|..Jmax, with its eigenpairs.

    Even and odd J never couple, so each parity subspace is diagonalized on
    its own and the eigenvectors are stored in the full basis.
    """

    M: int
    j_values: np.ndarray
    matrix: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def jmax(self) -> int:
        return int(self.j_values[-1])

    @property
    def size(self) -> int:
        return len(self.j_values)

    def kick_unitary(self, P: float) -> np.ndarray:
        """exp(i P C) from the cached eigendecomposition."""
        return _kick_unitary(self, float(P))


@lru_cache(maxsize=1024)
def _kick_unitary(block, P):
    v = block.eigenvectors
    u = (v * np.exp(1j * P * block.eigenvalues)) @ v.T
    u.setflags(write=False)
    return u


@lru_cache(maxsize=512)
def build_cos2_block(M: int, jmax: int) -> Cos2Block:
    m = abs(int(M))
    if jmax < m:
        raise InvalidArgumentError(f"Jmax={jmax} < |M|={m}")
    j = np.arange(m, jmax + 1)
    n = len(j)
    c = np.zeros((n, n))
    c[np.arange(n), np.arange(n)] = cos2_diagonal(j, m)
    if n > 2:
        off = cos2_offdiagonal(j[:-2], m)
        idx = np.arange(n - 2)
        c[idx + 2, idx] = off
        c[idx, idx + 2] = off

    evals = np.empty(n)
    evecs = np.zeros((n, n))
    for start in (0, 1):
        sub = np.arange(start, n, 2)
        if len(sub) == 0:
            continue
        w, v = np.linalg.eigh(c[np.ix_(sub, sub)])
        evals[sub] = w
        evecs[np.ix_(sub, sub)] = v

    for arr in (j, c, evals, evecs):
        arr.setflags(write=False)
    return Cos2Block(M=m, j_values=j, matrix=c, eigenvalues=evals, eigenvectors=evecs)


# -- molecule library --------------------------------------------------------

LIBRARY_COLUMNS = ("name", "mass_a", "mass_b", "B_cm1", "D_cm1", "spin2", "abundance")
OPTIONAL_COLUMNS = ("homonuclear",)


def parse_molecule_library(text: str, source: str = "<string>") -> dict[str, IsotopologueSpec]:
    """Parse a molecule library.

    The first non-comment line is a header naming the columns; the required
    columns must appear in the order of ``LIBRARY_COLUMNS``, optionally
    followed by ``homonuclear``.  Any other column name is an error.
    """
    header = None
    out: dict[str, IsotopologueSpec] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if header is None:
            unknown = [t for t in tokens if t not in LIBRARY_COLUMNS + OPTIONAL_COLUMNS]
            if unknown:
                raise InvalidSpecError(f"{source}:{lineno}: unknown field(s) {unknown}")
            if tuple(tokens[: len(LIBRARY_COLUMNS)]) != LIBRARY_COLUMNS or len(tokens) > len(LIBRARY_COLUMNS) + 1:
                raise InvalidSpecError(f"{source}:{lineno}: header must be {' '.join(LIBRARY_COLUMNS)} [homonuclear]")
            header = tokens
            continue
        if len(tokens) != len(header):
            raise InvalidSpecError(f"{source}:{lineno}: expected {len(header)} fields, got {len(tokens)}")
        rec = dict(zip(header, tokens))
        try:
            mass_a, mass_b = int(rec["mass_a"]), int(rec["mass_b"])
            spin2 = int(rec["spin2"])
            homo = mass_a == mass_b
            if "homonuclear" in rec:
                if rec["homonuclear"] not in ("0", "1"):
                    raise ValueError(f"homonuclear must be 0 or 1, got {rec['homonuclear']!r}")
                homo = rec["homonuclear"] == "1"
            spec = IsotopologueSpec(
                name=rec["name"],
                mass_a=mass_a,
                mass_b=mass_b,
                B=float(rec["B_cm1"]),
                D=float(rec["D_cm1"]),
                nuclear_spin=spin2 / 2,
                homonuclear=homo,
                abundance=float(rec["abundance"]),
            )
        except InvalidSpecError as exc:
            raise InvalidSpecError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise InvalidSpecError(f"{source}:{lineno}: {exc}") from None
        if spec.name in out:
            raise InvalidSpecError(f"{source}:{lineno}: duplicate species {spec.name!r}")
        out[spec.name] = spec
    if header is None:
        raise InvalidSpecError(f"{source}: empty molecule library")
    return out


def load_molecule_library(path: str | Path | None = None) -> dict[str, IsotopologueSpec]:
    """Load a library file; ``None`` loads the shipped defaults."""
    if path is None:
        text = resources.files("rotkick").joinpath("data/molecules.dat").read_text()
        return parse_molecule_library(text, "molecules.dat")
    path = Path(path)
    return parse_molecule_library(path.read_text(), str(path))


def default_species(name: str) -> IsotopologueSpec:
    lib = load_molecule_library()
    try:
        return lib[name]
    except KeyError:
        raise InvalidSpecError(f"unknown species {name!r}; known: {sorted(lib)}") from None
