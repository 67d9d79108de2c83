import math

import numpy as np
import pytest

from finslerlab import quadrature as QD
from finslerlab.errors import DivergenceError, InputError


def test_unit_ball_volume():
    assert QD.unit_ball_volume(2) == pytest.approx(math.pi)
    assert QD.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
    assert QD.sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("e", [-0.9, -0.5, 0.0, 1.5])
def test_graded_power_singularity(e):
    res = QD.graded_integral(lambda s: s ** e, 0.0, 1.0)
    assert res.value == pytest.approx(1 / (e + 1), rel=1e-10)


def test_graded_both_ends():
    res = QD.graded_integral(lambda s: (s * (1 - s)) ** -0.5, 0.0, 1.0)
    assert res.value == pytest.approx(math.pi, rel=1e-9)


def test_graded_divergence():
    with pytest.raises(DivergenceError):
        QD.graded_integral(lambda s: 1 / s, 0.0, 1.0)
    with pytest.raises(DivergenceError):
        QD.graded_integral(lambda s: 1 / (1 - s) ** 1.2, 0.0, 1.0)


def test_breakpoints_stay_distinct_near_nonzero_end():
    bp = QD.graded_breakpoints(0.0, 1.0, 60)
    assert np.all(np.diff(bp) > 0)
    assert bp[-2] < 1.0


def test_empty_interval():
    with pytest.raises(InputError):
        QD.graded_integral(lambda s: s, 1.0, 1.0)


def test_sphere_integrals():
    assert QD.sphere_integral(lambda w: np.ones(len(w)), 2) == pytest.approx(2 * math.pi)
    assert QD.sphere_integral(lambda w: w[:, 2] ** 2, 3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    v, se = QD.sphere_integral_qmc(lambda w: w[:, 0] ** 2, 4)
    assert abs(v - QD.sphere_area(4) / 4) < 4 * se + 1e-9


def test_sphere_directions_are_unit_and_deterministic():
    a = QD.sphere_directions(3, 100, seed=5)
    b = QD.sphere_directions(3, 100, seed=5)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0)


def test_config_validation():
    with pytest.raises(InputError):
        QD.QuadratureConfig(gl_order=1)
    with pytest.raises(InputError):
        QD.QuadratureConfig(mc_samples=4, mc_replicates=8)
