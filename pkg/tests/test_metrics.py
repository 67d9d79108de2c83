import math

import numpy as np
import pytest
from conftest import ball_points

from finslerlab import metrics as M
from finslerlab import norms as N
from finslerlab.errors import DomainError, InputError

BALL = M.ExplicitBallFunk(3)
FUNK = M.Funk(N.Euclidean(3))
ELL = M.Funk(N.Ellipsoid((1.0, 0.6, 1.4)))
HIL = M.Hilbert(BALL)
E1 = np.array([1.0, 0, 0])
H = np.array([0.5, 0, 0])


def test_ball_values():
    assert M.metric_eval(BALL, H, E1) == pytest.approx(2.0, rel=1e-14)
    assert M.metric_eval(BALL, H, -E1) == pytest.approx(2 / 3, rel=1e-14)
    assert M.metric_eval(HIL, H, E1) == pytest.approx(4 / 3, rel=1e-14)
    assert M.metric_eval(BALL, H, np.zeros(3)) == 0.0


def test_implicit_matches_explicit(rng):
    X = ball_points(rng, 100, 3, 0.95)
    Y = rng.standard_normal((100, 3))
    np.testing.assert_allclose(M.metric_eval(FUNK, X, Y), M.metric_eval(BALL, X, Y), rtol=1e-10)


def test_implicit_equation_residual(rng):
    X = ball_points(rng, 1000, 3, 0.95) * np.array([1.0, 0.6, 1.4])
    Y = rng.standard_normal((1000, 3))
    F = M.metric_eval(ELL, X, Y)
    res = np.abs(ELL.domain_norm.value(X + Y / F[:, None]) - 1.0)
    assert res.max() < 1e-10


def test_homogeneity(rng):
    X = ball_points(rng, 50, 3, 0.9)
    Y = rng.standard_normal((50, 3))
    for a in (0.3, 4.0):
        np.testing.assert_allclose(M.metric_eval(FUNK, X, a * Y), a * M.metric_eval(FUNK, X, Y), rtol=1e-12)


def test_outside_domain():
    with pytest.raises(DomainError):
        M.metric_eval(BALL, np.array([1.0, 0, 0]), E1)


def test_cometric():
    assert M.cometric_eval(FUNK, np.zeros(3), np.array([3.0, 4.0, 0])) == pytest.approx(5.0)
    assert M.cometric_eval(FUNK, H, -E1) == pytest.approx(1.5)


def test_cometric_generic_matches_closed(rng):
    X = ball_points(rng, 100, 3, 0.8)
    Xi = rng.standard_normal((100, 3))
    closed = M.cometric_eval(FUNK, X, Xi)
    generic = M.cometric_eval(FUNK, X, Xi, generic=True)
    np.testing.assert_allclose(generic, closed, rtol=1e-6)


def test_duality_pairing(rng):
    X = ball_points(rng, 200, 3, 0.9)
    Y = rng.standard_normal((200, 3))
    Xi = rng.standard_normal((200, 3))
    lhs = np.sum(Y * Xi, axis=1)
    rhs = M.metric_eval(FUNK, X, Y) * M.cometric_eval(FUNK, X, Xi)
    assert np.all(lhs <= rhs * (1 + 1e-10) + 1e-14)


def test_reversibility():
    assert M.metric_reversibility(M.Minkowski(N.Euclidean(3)), np.ones(3)) == 1.0
    assert M.metric_reversibility(FUNK, H) == pytest.approx(3.0, rel=1e-8)
    for t in (0.9, 0.99, 0.999):
        lam = M.metric_reversibility(BALL, t * E1)
        assert lam >= (1 + t) / (1 - t) * (1 - 1e-8)


def test_interpolated_sup_reversibility():
    assert M.sup_reversibility(M.InterpolatedFunk(0.5, 3)) == pytest.approx(3.0, rel=1e-2)
    assert M.sup_reversibility(BALL) == math.inf


def test_distance_values():
    assert M.funk_distance(BALL, np.zeros(3), H) == pytest.approx(math.log(2), abs=1e-14)
    assert M.funk_distance(BALL, H, np.zeros(3)) == pytest.approx(math.log(1.5), abs=1e-14)
    assert M.funk_distance(BALL, H, H) == 0.0


def test_triangle_inequality(rng):
    A, B, C = (ball_points(rng, 500, 3, 0.95) for _ in range(3))
    d = lambda a, b: M.funk_distance(FUNK, a, b)
    assert np.all(d(A, B) <= d(A, C) + d(C, B) + 1e-9)


def test_hilbert_symmetry(rng):
    A, B = ball_points(rng, 100, 3, 0.95), ball_points(rng, 100, 3, 0.95)
    np.testing.assert_allclose(M.funk_distance(HIL, A, B), M.funk_distance(HIL, B, A), atol=1e-10)


def test_forward_complete_backward_bounded():
    ts = 1 - 10.0 ** -np.arange(1, 8)
    fw = [M.funk_distance(BALL, np.zeros(3), t * E1) for t in ts]
    bw = [M.funk_distance(BALL, t * E1, np.zeros(3)) for t in ts]
    assert np.all(np.diff(fw) > 0) and fw[-1] > 15
    assert bw[-1] == pytest.approx(math.log(2), abs=1e-6)
    assert np.all(np.diff(bw) > 0)


def test_spray():
    np.testing.assert_allclose(M.spray_coefficients(BALL, H, E1), [1.0, 0, 0], atol=1e-12)
    mk = M.Minkowski(N.QuarticSplit(1, 2))
    np.testing.assert_allclose(M.spray_coefficients(mk, np.zeros(3), np.array([1.0, 2, 3])), 0, atol=1e-14)


def test_spray_funk_is_half_F_times_y(rng):
    for x, y in zip(ball_points(rng, 5, 3, 0.8), rng.standard_normal((5, 3))):
        G = M.spray_coefficients(ELL, x * np.array([1.0, 0.6, 1.4]), y)
        xx = x * np.array([1.0, 0.6, 1.4])
        np.testing.assert_allclose(G, 0.5 * M.metric_eval(ELL, xx, y) * y, rtol=1e-9, atol=1e-12)
        G2 = M.spray_coefficients(ELL, xx, 2 * y)
        np.testing.assert_allclose(G2, 4 * G, rtol=1e-10, atol=1e-12)


def test_projective_factor():
    assert M.projective_factor(HIL, np.zeros(3), E1) == pytest.approx(0.0, abs=1e-15)
    assert M.projective_factor(BALL, H, E1) == pytest.approx(1.0)
    assert M.projective_factor(HIL, H, E1) == pytest.approx(2 / 3)
    assert M.projective_factor(HIL, H, E1, method="generic") == pytest.approx(2 / 3, rel=1e-12)


def test_funk_equation_identity(rng):
    # y^k dF/dx^k = F^2 on Funk metrics, i.e. the generic projective factor is F/2
    for x, y in zip(ball_points(rng, 10, 3, 0.8), rng.standard_normal((10, 3))):
        P = M.projective_factor(FUNK, x, y, method="generic")
        F = M.metric_eval(FUNK, x, y)
        assert abs(2 * P * F - F * F) < 1e-8


def test_geodesic_endpoint():
    path = M.geodesic_integrate(BALL, np.zeros(3), E1, math.log(2), steps=4)
    np.testing.assert_allclose(path[-1].position, H, atol=1e-6)


def test_geodesic_is_straight_with_speed_law(rng):
    x0 = np.array([0.1, -0.2, 0.3])
    y0 = np.array([0.4, 0.5, -0.1])
    y0 = y0 / M.metric_eval(BALL, x0, y0)
    path = M.geodesic_integrate(BALL, x0, y0, 2.0, steps=8)
    u = y0 / np.linalg.norm(y0)
    for st in path:
        off = st.position - x0
        assert np.linalg.norm(off - (off @ u) * u) < 1e-9
        assert M.metric_eval(BALL, st.position, st.velocity) == pytest.approx(1.0, abs=1e-9)
        assert M.funk_distance(BALL, x0, st.position) == pytest.approx(st.parameter, abs=1e-6)


def test_minkowski_geodesic_is_linear():
    mk = M.Minkowski(N.Euclidean(2))
    path = M.geodesic_integrate(mk, np.zeros(2), np.array([3.0, 4.0]), 10.0, steps=2)
    np.testing.assert_allclose(path[-1].position, [6.0, 8.0], atol=1e-12)


def test_eikonal():
    assert M.eikonal_residual(BALL, np.zeros(3), np.array([0.3, 0.2, 0.0])) < 1e-6
    assert M.eikonal_residual(ELL, np.zeros(3), np.array([0.3, -0.2, 0.5])) < 1e-5
    assert M.eikonal_residual(BALL, np.zeros(3), np.array([0.3, 0.2, 0.0]), flip=True) > 0.1
    with pytest.raises(DomainError):
        M.eikonal_residual(BALL, np.zeros(3), np.zeros(3))


def test_powersum_domain_excluded():
    with pytest.raises(InputError):
        M.Funk(N.PowerSum(3, 2))
    M.Funk(N.PowerSum(3, 2), allow_flat_boundary=True)


def test_interpolated_endpoints():
    x, y = np.array([0.2, -0.1, 0.3]), np.array([0.3, 1.0, -0.5])
    assert M.metric_eval(M.InterpolatedFunk(1.0, 3), x, y) == pytest.approx(M.metric_eval(BALL, x, y))
    assert M.metric_eval(M.KleinRiemannian(3), x, y) == pytest.approx(M.metric_eval(HIL, x, y), rel=1e-12)
    with pytest.raises(InputError):
        M.InterpolatedFunk(1.5, 3)
