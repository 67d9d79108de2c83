"""Acceptance suite: one test per criterion, tolerances pinned to the contract."""
import math
import time

import numpy as np
import pytest
from conftest import ball_points

from finslerlab import curvature as C
from finslerlab import measure as ME
from finslerlab import metrics as M
from finslerlab import norms as N
from finslerlab import quotients as Q
from finslerlab.errors import DivergenceError

ALPHAS = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)
BH = ME.BusemannHausdorff()
SEED = 20240611

# Terminal-sweep oracle: 30-digit mpmath Beta-function reduction, tests/oracles/beta_oracle.py
ORACLE = {
    "hardy": [0.13192357729248099695862845375, 0.0613109224345458552280127531821,
              0.0162989392955684533675827141411, 0.00501938673811069808596914302584,
              0.0014075702935939726932913809069, 0.00024226012732286061064010972963,
              0.0000621027027588704624560770415751],
    "hpw": [0.827222222222222222222222222222, 0.399305555555555555555555555556,
            0.112045798711641529021353655905, 0.0355992452938475700161241350676,
            0.0101851365956667533458617921823, 0.0017775531353555976087966728106,
            0.000457957320201572600305372399113],
    "ckn": [0.253093004752431484707866064569, 0.15449588922815926946263648681,
            0.0619175364028491830862829132148, 0.0251797348285192619266710622611,
            0.0087068999808591657626266545871, 0.00177324407986418611727967181594,
            0.000486045880843192760679190670925],
}
PARAMS = {"hardy": {"p": 2.0}, "hpw": {}, "ckn": {"p": 2.5, "q": 1.0}}
SHARP = {"hardy": 0.25, "hpw": 2.25, "ckn": 0.64}


def _flags(rng, count, n, radius=0.8):
    return zip(ball_points(rng, count, n, radius), rng.standard_normal((count, n)),
               rng.standard_normal((count, n)))


def test_criterion_01_curvature_constants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    for n in (2, 3):
        ball = M.ExplicitBallFunk(n)
        for x, y, v in _flags(rng, 20, n):
            y = y / M.metric_eval(ball, x, y)
            assert C.flag_curvature(ball, x, y, v) == pytest.approx(-0.25, abs=1e-4)
            assert C.s_curvature(ball, BH, x, y) == pytest.approx((n + 1) / 2, abs=1e-4)
        for hyp in (M.KleinRiemannian(n), M.Hilbert(ball)):
            for x, y, v in _flags(rng, 20, n):
                assert C.flag_curvature(hyp, x, y, v) == pytest.approx(-1.0, abs=1e-4)
    mink = [N.Euclidean(3), N.Ellipsoid((1.0, 0.5, 2.0)), N.QuarticSplit(1, 2), N.PowerSum(3, 2)]
    for nm in mink:
        mk = M.Minkowski(nm)
        for x, y, v in _flags(rng, 3, 3):
            y = y / M.metric_eval(mk, x, y)
            assert abs(C.flag_curvature(mk, x, y, v)) <= 1e-8
            assert abs(C.ricci_curvature(mk, x, y)) <= 1e-8
            assert abs(C.s_curvature(mk, ME.Lebesgue(), x, y)) <= 1e-8
            for Nv in (4.0, 6.0, math.inf):
                assert abs(C.weighted_ricci(mk, ME.Lebesgue(), x, y, Nv)) <= 1e-8
    assert time.perf_counter() - t0 < 60.0


def _chord_length(spec, a, b, order=64):
    # arclength of the straight geodesic from a to b by Gauss-Legendre in the chord parameter
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (t + 1)
    d = b - a
    pts = a + t[:, None] * d
    return 0.5 * float(np.sum(w * M.metric_eval(spec, pts, np.broadcast_to(d, pts.shape))))


def test_criterion_02_distance_audit():
    ball = M.ExplicitBallFunk(3)
    rng = np.random.default_rng(SEED)
    X1 = ball_points(rng, 100, 3, 0.8)
    X2 = ball_points(rng, 100, 3, 0.8)
    ray = M.funk_distance(ball, X1, X2)
    quad = np.array([_chord_length(ball, a, b) for a, b in zip(X1, X2)])
    shoot = np.array([M.geodesic_arclength(ball, a, b, guess=float(g)) for a, b, g in zip(X1, X2, quad)])
    np.testing.assert_allclose(ray, quad, rtol=0, atol=1e-6)
    np.testing.assert_allclose(ray, shoot, rtol=0, atol=1e-6)
    O = np.zeros_like(X2)
    closed = M.distance_from_origin_closed(ball, X2)
    np.testing.assert_allclose(M.funk_distance(ball, O, X2), closed, rtol=0, atol=1e-6)
    np.testing.assert_allclose([_chord_length(ball, o, b) for o, b in zip(O, X2)], closed, rtol=0, atol=1e-6)
    h = np.array([0.5, 0.0, 0.0])
    assert M.funk_distance(ball, np.zeros(3), h) == pytest.approx(math.log(2.0), abs=1e-9)
    assert M.funk_distance(ball, h, np.zeros(3)) == pytest.approx(math.log(1.5), abs=1e-9)


def test_criterion_03_reversibility():
    ball = M.ExplicitBallFunk(3)
    rng = np.random.default_rng(SEED)
    dirs = rng.standard_normal((20, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for t, u in zip(np.linspace(0.0, 0.95, 20), dirs):
        assert M.metric_reversibility(ball, t * u) == pytest.approx((1 + t) / (1 - t), abs=1e-5)
    # on the ball the witness bound is attained exactly, elsewhere it is strict
    ell = M.Funk(N.Ellipsoid((1.0, 0.6, 1.4)))
    for spec in (ball, ell):
        for phi, bound in ((0.9, 19.0), (0.99, 199.0), (0.999, 1999.0)):
            lam = M.metric_reversibility(spec, np.array([phi, 0.0, 0.0]))
            assert lam >= bound * (1 - 1e-9)
    for a in (0.3, 0.6):
        assert M.sup_reversibility(M.InterpolatedFunk(a, 3)) == pytest.approx((1 + a) / (1 - a), rel=1e-2)


def test_criterion_04_eikonal_and_duality():
    rng = np.random.default_rng(SEED)
    ball = M.ExplicitBallFunk(3)
    ell = M.Funk(N.Ellipsoid((1.0, 0.7, 1.3)))
    for spec in (ball, ell):
        for x in ball_points(rng, 50, 3, 0.6):
            if np.linalg.norm(x) < 1e-3:
                continue
            assert M.eikonal_residual(spec, np.zeros(3), x) < 1e-5
    for nm in (N.Euclidean(3), N.Ellipsoid((1.0, 0.5, 2.0)), N.QuarticSplit(1, 2)):
        Y = rng.standard_normal((1000, 3))
        Xi = rng.standard_normal((1000, 3))
        assert np.all(np.sum(Y * Xi, axis=1) <= nm(Y) * N.dual_norm(nm, Xi) * (1 + 1e-8))
        L = N.legendre_transform(nm, Y)
        np.testing.assert_allclose(N.dual_norm(nm, L), nm(Y), rtol=1e-8)
        np.testing.assert_allclose(np.sum(Y * L, axis=1), nm(Y) ** 2, rtol=1e-10)


def test_criterion_05_quotient_exactness():
    ball = M.ExplicitBallFunk(3)
    o = np.zeros(3)
    for a in ALPHAS:
        row = Q.quotient_eval("eigenvalue", ball, BH, o, Q.GaussianBubble(a), p=2)
        assert row.quotient == pytest.approx(a * a, rel=1e-8)
        ck = Q.quotient_eval("ckn", ball, BH, o, Q.CKNBubble(a, 2.5, 1.0), p=2.5, q=1.0)
        assert ck.num1 / ck.num2 == pytest.approx(a * a * (1 / 0.5) ** 2, rel=1e-8)


def test_criterion_06_failure_sweeps():
    ball = M.ExplicitBallFunk(3)
    t0 = time.perf_counter()
    for kind in ("hardy", "hpw", "ckn"):
        sw = Q.alpha_sweep(kind, ball, BH, ALPHAS, PARAMS[kind])
        qs = np.asarray(sw.quotients)
        assert np.all(np.diff(qs) < 0)
        assert qs[-1] < 0.01 * SHARP[kind]
        np.testing.assert_allclose(qs, ORACLE[kind], rtol=1e-6)
    assert time.perf_counter() - t0 < 120.0


def test_criterion_07_klein_positive_control():
    rows = Q.reversible_contrast(M.KleinRiemannian(3), ME.Riemannian(), kinds=("hardy", "hpw"), alphas=ALPHAS)
    assert len(rows) == 2 * len(ALPHAS)
    for r in rows:
        assert r.quotient >= SHARP[r.kind] * (1 - 1e-6)


def test_criterion_08_volume_comparison_equality():
    r = np.geomspace(0.01, 10.0, 400)
    for n in (2, 3, 4, 6):
        prof = ME.funk_profile(n)
        assert prof.k == 0.5 and prof.h == pytest.approx((n + 1) / (2 * (n - 1)))
        rep = ME.check_comparison(prof, lambda s: ME.polar_density_funk(n, s), r, equality=True)
        assert rep.equality_error <= 1e-8


def test_criterion_09_montecarlo_crossvalidation():
    ball = M.ExplicitBallFunk(3)
    o = np.zeros(3)
    for kind in ("hardy", "hpw", "ckn"):
        for a in ALPHAS:
            tf = Q.make_testfn(kind, a, **PARAMS[kind])
            row = Q.quotient_eval(kind, ball, BH, o, tf, **PARAMS[kind])
            mc = Q.montecarlo_quotient_integrals(kind, ball, BH, o, tf, samples=2 ** 20, seed=SEED,
                                                 **PARAMS[kind])
            for name, (val, se) in mc.items():
                assert abs(val - getattr(row, name)) <= 3 * se, (kind, a, name)


def test_criterion_10_local_finiteness():
    ball = M.ExplicitBallFunk(3)
    p2 = ME.local_finiteness_probe(ball, BH, np.zeros(3), 2.0, 1.0)
    p3 = ME.local_finiteness_probe(ball, BH, np.zeros(3), 3.0, 1.0)
    assert not p2.divergent and math.isfinite(p2.value)
    assert p3.divergent
    with pytest.raises(DivergenceError):
        Q.radial_integral(lambda r: r ** -3.0, 3)


def test_criterion_11_hilbert_s_and_weighted_ricci():
    n = 3
    hil = M.Hilbert(M.ExplicitBallFunk(n))
    fb = ME.FunkBH()
    rng = np.random.default_rng(SEED)
    X = ball_points(rng, 50, n, 0.8)
    Y = rng.standard_normal((50, n))
    for x, y in zip(X, Y):
        y = y / M.metric_eval(hil, x, y)
        P = M.projective_factor(hil, x, y)
        assert C.s_curvature(hil, fb, x, y) == pytest.approx((n + 1) * P, abs=1e-5)
        cache = {}
        for Nv in (n + 1.0, 2.0 * n, math.inf):
            val = C.weighted_ricci(hil, fb, x, y, Nv, _cache=cache)
            assert val == pytest.approx(C.hilbert_weighted_ricci_closed(n, P, Nv), abs=1e-4)
            assert val >= C.hilbert_weighted_ricci_bound(n, Nv) - 1e-6
