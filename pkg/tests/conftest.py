import numpy as np
import pytest
from scipy.special import sph_legendre_p

from rotkick.rotor_core import IsotopologueSpec, default_species


def quadrature_cos2(jp, j, m, nodes=None):
    """<J',M|cos^2|J,M> by Gauss-Legendre quadrature over cos(theta).

    sph_legendre_p is normalized so that 2*pi * int |P|^2 sin(theta) dtheta = 1.
    """
    nodes = nodes or (max(j, jp) + 8)
    x, w = np.polynomial.legendre.leggauss(nodes)
    th = np.arccos(x)
    return 2 * np.pi * float(np.sum(w * sph_legendre_p(jp, m, th) * x * x * sph_legendre_p(j, m, th)))


@pytest.fixture
def n14():
    return default_species("N2-14")


@pytest.fixture
def n15():
    return default_species("N2-15")


@pytest.fixture
def rigid():
    """Rigid-rotor N2 isotopologues (D = 0)."""
    return default_species("N2-14").with_(D=0.0), default_species("N2-15").with_(D=0.0)


@pytest.fixture
def toy():
    return IsotopologueSpec("toy", 1, 2, B=2.0)
