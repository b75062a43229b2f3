import math

import numpy as np
import pytest
from scipy import integrate

from bcoh.hypervol import (
    IDENTITY_ISO,
    ORIGIN,
    REGULAR_IDEAL_VOLUME,
    GroupAction,
    Isometry,
    KleinPoint,
    NumericFailure,
    apply,
    boost,
    distance,
    lobachevsky,
    loxodromic_pair,
    rotation,
    simplex_signed_volume,
    simplex_volume_estimate,
    volume_cocycle,
)
from bcoh.words import IDENTITY, invert, multiply, parse_word, random_word

W = parse_word
ACTION = loxodromic_pair(1.0, 0.7, 1.0)


def random_point(rng, rmax=0.95):
    v = rng.normal(size=3)
    return KleinPoint(tuple(v / np.linalg.norm(v) * rmax * rng.random() ** (1 / 3)))


def regular_simplex(radius):
    dirs = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]) / math.sqrt(3)
    return [KleinPoint(tuple(radius * d)) for d in dirs]


def test_klein_point_validation():
    with pytest.raises(ValueError):
        KleinPoint((1.0, 0.0, 0.0))
    p = KleinPoint((0.6, 0.0, 0.0))
    assert p.one_minus_sq == pytest.approx(0.64)


def test_action_basics():
    assert np.array_equal(ACTION.matrix(IDENTITY), np.eye(4))
    a, A = ACTION.matrix(W("a")), ACTION.matrix(W("A"))
    assert np.allclose(a @ A, np.eye(4), atol=1e-12)
    ACTION.isometry(W("abAB")).check()


def test_boost_eigenvalues():
    lam = 1.3
    ev = np.sort(np.linalg.eigvals(boost(1, lam)[np.ix_([0, 1], [0, 1])]).real)
    assert ev == pytest.approx([math.exp(-lam), math.exp(lam)])


def test_rejects_bad_translation():
    with pytest.raises(ValueError):
        loxodromic_pair(0.0)
    with pytest.raises(ValueError):
        Isometry(np.diag([1.0, 2.0, 1.0, 1.0])).check()


def test_action_is_homomorphism():
    rng = np.random.default_rng(2)
    for _ in range(50):
        u, v = random_word(rng, 6), random_word(rng, 6)
        m = ACTION.matrix(u) @ ACTION.matrix(v)
        assert np.allclose(ACTION.matrix(multiply(u, v)), m, atol=1e-10 * np.abs(m).max())


def test_apply_properties():
    rng = np.random.default_rng(3)
    g = ACTION.isometry(W("ab"))
    h = ACTION.isometry(W("B"))
    for _ in range(30):
        p, q = random_point(rng, 0.8), random_point(rng, 0.8)
        assert apply(IDENTITY_ISO, p).coords == pytest.approx(p.coords, abs=1e-15)
        assert distance(apply(g, p), apply(g, q)) == pytest.approx(distance(p, q), abs=1e-10)
        assert np.allclose(apply(g @ h, p).array, apply(g, apply(h, p)).array, atol=1e-10)


def test_apply_numeric_failure():
    far = Isometry(boost(1, 40.0))
    with pytest.raises(NumericFailure):
        apply(far, ORIGIN)


def test_lobachevsky_oracle():
    assert 2 * lobachevsky(math.pi / 6) == pytest.approx(REGULAR_IDEAL_VOLUME, abs=1e-9)


def test_near_ideal_regular_simplex():
    vol = simplex_signed_volume(*regular_simplex(1 - 1e-4))
    assert abs(vol) == pytest.approx(2 * lobachevsky(math.pi / 6), abs=0.01)


def test_coplanar_and_orientation():
    pts = [KleinPoint((0.1, 0.2, 0.0)), KleinPoint((-0.3, 0.1, 0.0)), KleinPoint((0.2, -0.4, 0.0)), KleinPoint((0.0, 0.0, 0.0))]
    assert simplex_signed_volume(*pts) == 0.0
    rng = np.random.default_rng(5)
    v = [random_point(rng) for _ in range(4)]
    a = simplex_signed_volume(*v)
    b = simplex_signed_volume(v[1], v[0], v[2], v[3])
    assert a == pytest.approx(-b, abs=2e-6)
    det = np.linalg.det(np.array([p.coords for p in v[1:]]) - np.array(v[0].coords))
    assert np.sign(a) == np.sign(det)


def test_matches_direct_quadrature():
    # oracle: integrate (1-|x|^2)^-2 over the Euclidean simplex with scipy
    rng = np.random.default_rng(9)
    v = [random_point(rng, 0.7) for _ in range(4)]
    x = np.array([p.coords for p in v])
    jac = abs(np.linalg.det(x[1:] - x[0]))

    def f(w, u, s):
        y = x[0] + s * (x[1] - x[0]) + u * (x[2] - x[0]) + w * (x[3] - x[0])
        return (1 - y @ y) ** -2

    ref, _ = integrate.tplquad(f, 0, 1, 0, lambda s: 1 - s, 0, lambda s, u: 1 - s - u, epsabs=1e-11, epsrel=1e-11)
    assert abs(simplex_signed_volume(*v, tol=1e-9)) == pytest.approx(ref * jac, abs=1e-8)


def test_volumes_bounded_and_isometry_invariant():
    rng = np.random.default_rng(13)
    g = ACTION.isometry(W("aB"))
    for _ in range(60):
        v = [random_point(rng, 0.999) for _ in range(4)]
        val, err = simplex_volume_estimate(v)
        assert abs(val) <= 1.015 and err <= 1e-6
    for _ in range(10):
        v = [random_point(rng, 0.9) for _ in range(4)]
        moved = [apply(g, p) for p in v]
        assert simplex_signed_volume(*moved) == pytest.approx(simplex_signed_volume(*v), abs=1e-5)


def test_volume_cocycle_properties():
    vol = volume_cocycle(ACTION)
    assert vol.degree == 3 and vol.sup_bound == REGULAR_IDEAL_VOLUME
    assert vol(W("a"), W("a"), W("b"), W("ab")) == 0.0
    rng = np.random.default_rng(17)
    for _ in range(10):
        g = [random_word(rng, 4) for _ in range(5)]
        h = random_word(rng, 3)
        assert vol(*(multiply(x, h) for x in g[:4])) == pytest.approx(vol(*g[:4]), abs=1e-5)
        d = sum((-1) ** i * vol(*(g[:i] + g[i + 1 :])) for i in range(5))
        assert abs(d) <= 5e-6


def test_orbit_point_convention():
    # vertex for w is rho(w^-1) x
    w = W("ab")
    p = ACTION.orbit_point(invert(w))
    fn = volume_cocycle(ACTION).fn
    assert fn.point(w).coords == pytest.approx(p.coords)


def test_custom_action():
    act = GroupAction(Isometry(boost(1, 0.5)), Isometry(rotation(1, 2, 0.3) @ boost(3, 0.4)))
    vol = volume_cocycle(act)
    assert abs(vol(IDENTITY, W("a"), W("b"), W("ab"))) <= REGULAR_IDEAL_VOLUME
