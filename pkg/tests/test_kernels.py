import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import ball_points

from finslerlab import kernels
from finslerlab import norms as N

NORMS = [N.Euclidean(3), N.PowerSum(3, 2), N.QuarticSplit(1, 2), N.Ellipsoid((1.0, 0.4, 2.0))]
compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")


@pytest.mark.parametrize("nm", NORMS, ids=lambda n: type(n).__name__)
def test_python_kernel_solves_ray_equation(nm, rng):
    X = ball_points(rng, 200, 3, 0.9)
    X *= 0.9 / nm.value(X).max()
    Y = rng.standard_normal((200, 3))
    s = kernels.ray_exit(nm, X, Y, backend="python")
    assert np.all(s > 0)
    np.testing.assert_allclose(nm.value(X + s[:, None] * Y), 1.0, atol=1e-12)


@compiled
@pytest.mark.parametrize("nm", NORMS, ids=lambda n: type(n).__name__)
def test_backends_agree(nm, rng):
    X = ball_points(rng, 500, 3, 0.9)
    X *= 0.9 / nm.value(X).max()
    Y = rng.standard_normal((500, 3))
    a = kernels.ray_exit(nm, X, Y, backend="compiled")
    b = kernels.ray_exit(nm, X, Y, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_generic_norm_falls_back(rng):
    nm = N.CustomNorm(2, lambda y, xp=np: xp.sqrt(xp.sum(y * y, axis=-1)) + 0.3 * y[..., 0], "shift")
    X = np.zeros((4, 2))
    Y = rng.standard_normal((4, 2))
    s = kernels.ray_exit(nm, X, Y)
    np.testing.assert_allclose(nm.value(s[:, None] * Y), 1.0, atol=1e-12)


def test_broadcast_inputs():
    s = kernels.ray_exit(N.Euclidean(3), np.zeros(3), np.eye(3))
    np.testing.assert_allclose(s, 1.0)


def test_pure_env_selects_fallback():
    code = "import finslerlab.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, FINSLERLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
