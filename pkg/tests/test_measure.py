import math

import numpy as np
import pytest
from conftest import ball_points
from scipy import special

from finslerlab import measure as ME
from finslerlab import metrics as M
from finslerlab import norms as N
from finslerlab.errors import BoundViolation, DomainError, InputError

BH = ME.BusemannHausdorff()


def test_domain_volumes():
    assert ME.domain_volume(N.Euclidean(3)) == pytest.approx(4 * math.pi / 3, rel=1e-9)
    assert ME.domain_volume(N.Ellipsoid((1.0, 0.5))) == pytest.approx(math.pi * 0.5, rel=1e-9)
    exact = 4 * special.gamma(1.25) ** 2 / special.gamma(1.5)
    assert ME.domain_volume(N.PowerSum(2, 2)) == pytest.approx(exact, rel=1e-6)


def test_powersum_area_against_grid_oracle():
    # independent midpoint-grid count of {y1^4 + y2^4 < 1}
    m = 4000
    t = (np.arange(m) + 0.5) / m
    Y1, Y2 = np.meshgrid(t, t)
    grid = 4 * np.mean(Y1 ** 4 + Y2 ** 4 < 1)
    assert ME.domain_volume(N.PowerSum(2, 2)) == pytest.approx(grid, rel=1e-3)


def test_qmc_volume_in_four_dimensions():
    v, err = ME.domain_volume(N.Euclidean(4), return_error=True)
    assert abs(v - math.pi ** 2 / 2) < 3 * err + 1e-12


def test_bh_density_examples():
    assert ME.bh_density(M.Minkowski(N.Euclidean(3)), BH, np.zeros(3)) == pytest.approx(1.0, rel=1e-9)
    ball2 = M.ExplicitBallFunk(2)
    x = np.array([0.3, 0.0])
    assert ME.bh_density(ball2, BH, x) == pytest.approx(1.0, abs=1e-12)
    assert ME.bh_density(ball2, BH, x, numeric=True) == pytest.approx(1.0, abs=1e-5)
    assert ME.bh_density(ball2, ME.ConstantDensity(2.5), x) == 2.5


def test_bh_constant_on_funk(rng):
    F = M.Funk(N.Ellipsoid((1.0, 0.6, 1.2)))
    X = ball_points(rng, 20, 3, 0.6)
    vals = np.array([ME.bh_density(F, BH, x, numeric=True) for x in X])
    target = ME.unit_ball_volume(3) / ME.domain_volume(N.Ellipsoid((1.0, 0.6, 1.2)))
    assert np.std(vals) / np.mean(vals) < 1e-5
    np.testing.assert_allclose(vals, target, rtol=1e-5)


def test_interpolated_density_closed_vs_numeric(rng):
    for a in (0.0, 0.3, 0.6):
        F = M.InterpolatedFunk(a, 3)
        for x in ball_points(rng, 3, 3, 0.8):
            assert ME.bh_density(F, BH, x) == pytest.approx(ME.bh_density(F, BH, x, numeric=True), rel=1e-8)


def test_klein_riemannian_equals_bh(rng):
    K = M.KleinRiemannian(3)
    for x in ball_points(rng, 3, 3, 0.8):
        assert ME.bh_density(K, ME.Riemannian(), x) == pytest.approx(ME.bh_density(K, BH, x), rel=1e-10)


def test_polar_profile():
    assert ME.polar_density_funk(3, math.log(2)) == pytest.approx(0.125, rel=1e-14)
    for n in (2, 3, 5):
        assert ME.polar_density_funk(n, 1e-7) / 1e-7 ** (n - 1) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        ME.polar_density_funk(3, 0.0)


def test_generalised_trig():
    t = np.linspace(0, 5, 51)
    np.testing.assert_allclose(ME.s_k(0.0, t), t)
    np.testing.assert_allclose(ME.s_k(-1.0, t), np.sinh(t), rtol=1e-14)
    np.testing.assert_allclose(ME.c_k(-1.0, t), np.cosh(t), rtol=1e-14)
    h = 1e-5
    for k in (-1.0, -0.25, 0.0, 0.25, 1.0):
        assert ME.s_k(k, np.array(0.0)) == 0.0 and ME.c_k(k, np.array(0.0)) == 1.0
        fd = (ME.s_k(k, t + h) - ME.s_k(k, t - h)) / (2 * h)
        np.testing.assert_allclose(fd, ME.c_k(k, t), atol=1e-8, rtol=1e-8)


def test_comparison_equality():
    for n in (2, 3, 4):
        rep = ME.check_comparison(ME.funk_profile(n), lambda r: ME.polar_density_funk(n, r),
                                  np.geomspace(0.01, 10, 300), equality=True)
        assert rep.equality_error < 1e-8
    assert ME.funk_profile(3).h == 1.0


def test_comparison_violation_names_worst_r():
    prof = ME.ComparisonProfile(0.5, 1.0, 3)
    with pytest.raises(BoundViolation, match="r ="):
        ME.check_comparison(prof, lambda r: 1.1 * ME.polar_density_funk(3, r), np.linspace(0.1, 1, 5))


def test_comparison_csv():
    rep = ME.check_comparison(ME.funk_profile(3), lambda r: ME.polar_density_funk(3, r), [0.5, 1.0])
    assert rep.to_csv().splitlines()[0] == "r,density,bound,ratio"


def test_integral_of_distortion():
    ball3 = M.ExplicitBallFunk(3)
    I3 = ME.integral_of_distortion(ball3, BH, np.zeros(3))
    assert I3.analytic == pytest.approx(4 * math.pi) and I3.numeric is None
    for spec in (M.ExplicitBallFunk(2), M.InterpolatedFunk(0.5, 2), M.Funk(N.Ellipsoid((1.0, 0.5)))):
        I2 = ME.integral_of_distortion(spec, BH, np.array([0.2, -0.1]))
        assert I2.analytic == pytest.approx(2 * math.pi)
        assert I2.rel_diff < 1e-3
    c2 = ME.integral_of_distortion(M.ExplicitBallFunk(2), ME.ConstantDensity(2.0), np.zeros(2))
    assert c2.analytic == pytest.approx(4 * math.pi)
    assert c2.numeric == pytest.approx(4 * math.pi, rel=1e-3)


def test_local_finiteness():
    ball = M.ExplicitBallFunk(3)
    p2 = ME.local_finiteness_probe(ball, BH, np.zeros(3), 2.0, 1.0)
    p3 = ME.local_finiteness_probe(ball, BH, np.zeros(3), 3.0, 1.0)
    p0 = ME.local_finiteness_probe(ball, BH, np.zeros(3), 0.0, 1.0)
    assert not p2.divergent and math.isfinite(p2.value) and p2.value > 0
    assert p3.divergent
    # p = 0 gives the BH measure of the forward unit ball, vol{phi < 1 - 1/e}
    assert p0.value == pytest.approx(4 * math.pi / 3 * (1 - math.exp(-1)) ** 3, rel=1e-9)
    with pytest.raises(InputError):
        ME.local_finiteness_probe(ball, BH, np.zeros(3), 2.0, -1.0)
