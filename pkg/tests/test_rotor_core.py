import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import quadrature_cos2
from rotkick.errors import InvalidArgumentError, InvalidSpecError
from rotkick.rotor_core import (
    C_CM_PER_PS,
    IsotopologueSpec,
    build_cos2_block,
    check_mixture_abundances,
    default_species,
    load_molecule_library,
    parse_molecule_library,
    revival_time,
    rotational_energies,
    rotational_energy,
    spin_weight,
)

N2 = IsotopologueSpec("n2", 14, 14, B=1.98958, D=5.76e-6, nuclear_spin=1, homonuclear=True)


def test_energy_examples():
    assert rotational_energy(N2, 0) == 0
    assert rotational_energy(N2, 1) == pytest.approx(2 * 1.98958 - 4 * 5.76e-6, abs=1e-12)
    assert rotational_energy(N2, 1) == pytest.approx(3.97913, abs=1e-5)
    rigid = N2.with_(D=0.0)
    assert rotational_energy(rigid, 10) == pytest.approx(110 * 1.98958, rel=1e-15)
    assert rotational_energy(rigid, 10) == pytest.approx(218.854, abs=1e-3)


@given(B=st.floats(0.01, 50), J=st.integers(0, 300))
def test_rigid_energy_spacing(B, J):
    spec = IsotopologueSpec("x", 1, 2, B=B)
    e = rotational_energies(spec, J + 1)
    assert e[J + 1] - e[J] == pytest.approx(2 * B * (J + 1), rel=1e-13)


def test_energy_monotonicity_error():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = IsotopologueSpec("bad", 1, 2, B=1.0, D=0.01)
    rotational_energies(spec, 5)
    with pytest.raises(InvalidSpecError):
        rotational_energies(spec, 10)
    with pytest.raises(InvalidArgumentError):
        rotational_energy(spec, -1)


def test_revival_time_anchors():
    t14 = revival_time(default_species("N2-14"))
    assert t14 == pytest.approx(8.383, abs=5e-4)
    # second full revival of chlorine near 137 ps
    t35 = revival_time(default_species("Cl2-35"))
    assert t35 == pytest.approx(68.3, abs=0.1)
    assert 130 < 2 * t35 < 145
    assert revival_time(N2.with_(B=2 * N2.B)) == pytest.approx(revival_time(N2) / 2, rel=1e-15)
    assert revival_time(N2) == pytest.approx(1 / (2 * N2.B * C_CM_PER_PS))


def test_mixed_nitrogen_revival_ratio():
    t14 = revival_time(default_species("N2-14"))
    t15 = revival_time(default_species("N2-15"))
    assert 7 * t15 == pytest.approx(7.5 * t14, abs=1e-3)
    assert 7 * t15 == pytest.approx(62.9, abs=0.05)


def test_spin_weights():
    n14, n15 = default_species("N2-14"), default_species("N2-15")
    assert (spin_weight(n14, 0), spin_weight(n14, 1)) == (6.0, 3.0)
    assert (spin_weight(n15, 2), spin_weight(n15, 3)) == (1.0, 3.0)
    het = default_species("Cl-35-37")
    assert all(spin_weight(het, j) == 1.0 for j in range(10))


@pytest.mark.parametrize("two_i", range(1, 8))
def test_spin_weight_ratio(two_i):
    spin = two_i / 2
    spec = IsotopologueSpec("h", 7, 7, B=1.0, nuclear_spin=spin, homonuclear=True)
    ge, go = spin_weight(spec, 4), spin_weight(spec, 5)
    assert ge * go > 0
    ratio = (spin + 1) / spin
    assert ge / go == pytest.approx(ratio if two_i % 2 == 0 else 1 / ratio, rel=1e-15)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 1, 1, B=0.0)
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 1, 1, B=1.0, D=-1)
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 14, 15, B=1.0, homonuclear=True)
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 14, 14, B=1.0, nuclear_spin=0.3, homonuclear=True)
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 14, 14, B=1.0, nuclear_spin=-1)
    with pytest.raises(InvalidSpecError):
        IsotopologueSpec("x", 14, 14, B=1.0, abundance=1.5)
    with pytest.warns(UserWarning):
        IsotopologueSpec("x", 14, 15, B=1.0, D=0.01)


def test_mixture_abundances():
    lib = load_molecule_library()
    check_mixture_abundances([lib["Cl2-35"], lib["Cl-35-37"], lib["Cl2-37"]])
    with pytest.raises(InvalidSpecError):
        check_mixture_abundances([lib["Cl2-35"], lib["Cl-35-37"]])


def test_cos2_examples():
    b0 = build_cos2_block(0, 6)
    assert b0.matrix[0, 0] == pytest.approx(1 / 3, abs=1e-15)
    assert b0.matrix[2, 0] == pytest.approx(2 / (3 * math.sqrt(5)), abs=1e-15)
    assert b0.matrix[1, 1] == pytest.approx(3 / 5, abs=1e-15)
    assert build_cos2_block(1, 5).matrix[0, 0] == pytest.approx(1 / 5, abs=1e-15)
    with pytest.raises(InvalidArgumentError):
        build_cos2_block(3, 2)


@pytest.mark.parametrize("m,jmax", [(0, 30), (1, 25), (3, 20), (7, 40), (15, 40), (-2, 12)])
def test_cos2_against_quadrature(m, jmax):
    block = build_cos2_block(m, jmax)
    j = block.j_values
    for a in range(block.size):
        for b in range(block.size):
            if abs(j[a] - j[b]) > 4:
                continue
            expect = quadrature_cos2(int(j[a]), int(j[b]), abs(m))
            assert abs(block.matrix[a, b] - expect) < 1e-10, (j[a], j[b])


@pytest.mark.parametrize("m,jmax", [(0, 2), (0, 50), (4, 33), (10, 60)])
def test_cos2_block_invariants(m, jmax):
    block = build_cos2_block(m, jmax)
    c = block.matrix
    assert np.allclose(c, c.T, rtol=1e-14, atol=0)
    j = block.j_values
    dj = np.abs(np.subtract.outer(j, j))
    assert np.all(c[(dj != 0) & (dj != 2)] == 0.0)
    assert np.all(block.eigenvalues > 0) and np.all(block.eigenvalues < 1)
    assert np.trace(c) == pytest.approx(block.eigenvalues.sum(), rel=1e-13)
    v = block.eigenvectors
    assert np.allclose(v.T @ v, np.eye(block.size), atol=1e-13)
    assert np.allclose((v * block.eigenvalues) @ v.T, c, atol=1e-13)


def test_block_cached():
    assert build_cos2_block(2, 20) is build_cos2_block(2, 20)
    assert not build_cos2_block(2, 20).matrix.flags.writeable


LIB_OK = """\
# comment
name mass_a mass_b B_cm1 D_cm1 spin2 abundance homonuclear
A 14 14 2.0 0 2 1.0 1
B 14 14 2.0 0 2 1.0 0
C 1 2 3.0 1e-6 0 0.5
"""


def test_library_parse():
    lib = parse_molecule_library(LIB_OK.replace(" 0.5\n", " 0.5 0\n"))
    assert lib["A"].homonuclear and not lib["B"].homonuclear
    assert lib["A"].nuclear_spin == 1.0
    assert lib["C"].D == 1e-6


@pytest.mark.parametrize(
    "text",
    [
        "name mass_a mass_b B_cm1 D_cm1 spin2 abundance colour\nA 1 1 1 0 0 1 red\n",
        "mass_a name mass_b B_cm1 D_cm1 spin2 abundance\n",
        "name mass_a mass_b B_cm1 D_cm1 spin2 abundance\nA 1 1 1 0 0\n",
        "name mass_a mass_b B_cm1 D_cm1 spin2 abundance\nA 1 1 x 0 0 1\n",
        "name mass_a mass_b B_cm1 D_cm1 spin2 abundance\nA 1 1 1 0 0 1\nA 1 1 1 0 0 1\n",
        "name mass_a mass_b B_cm1 D_cm1 spin2 abundance homonuclear\nA 1 2 1 0 0 1 1\n",
        "# nothing\n",
    ],
)
def test_library_strict(text):
    with pytest.raises(InvalidSpecError):
        parse_molecule_library(text)


def test_default_library():
    lib = load_molecule_library()
    assert set(lib) == {"N2-14", "N2-15", "Cl2-35", "Cl-35-37", "Cl2-37"}
    assert lib["Cl2-35"].homonuclear and not lib["Cl-35-37"].homonuclear
    assert lib["Cl2-35"].nuclear_spin == 1.5
    with pytest.raises(InvalidSpecError):
        default_species("O2")
