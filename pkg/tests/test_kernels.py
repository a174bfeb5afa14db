import os
import subprocess
import sys

import numpy as np
import pytest

from dicke_hp import _kernels as k

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("x", [0.0, 0.3, -1.7, 4.0, 12.5])
def test_displacement_paths_agree(x):
    a = k._displacement_numba(x, 120, 90)
    b = k._displacement_numpy(x, 120, 90)
    assert a.shape == b.shape == (120, 90)
    assert np.abs(a - b).max() < 1e-13


@needs_numba
@pytest.mark.parametrize("beta", [0j, 1 + 0j, -0.4 + 2.2j, 5.5 - 3j])
def test_coherent_paths_agree(beta):
    a = k._coherent_numba(beta.real, beta.imag, 100)
    b = k._coherent_numpy(beta.real, beta.imag, 100)
    assert np.abs(a - b).max() < 1e-14


@needs_numba
def test_curvature_paths_agree():
    y = np.sin(np.linspace(0, 3, 40))
    np.testing.assert_allclose(k._curvature_numba(y, 0.1), k._curvature_numpy(y, 0.1), atol=1e-12)


def test_second_difference_quadratic():
    x = np.linspace(-1, 1, 21)
    np.testing.assert_allclose(k.second_difference(3 * x**2, x[1] - x[0]), 6.0, rtol=1e-10)


def test_environment_flag_selects_numpy():
    env = dict(os.environ, DICKE_HP_NO_NUMBA="1")
    code = "import dicke_hp._kernels as k; print(k.USE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "False"
