import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcoh import sampling
from bcoh.eightmodel import RegionLabel, TransformationElement, apply, classify_many, classify_region
from bcoh.homotopy import (
    CollarError,
    CutSystem,
    DegenerateLoopError,
    GeometryError,
    conjugator,
    crossing_sequence,
    decode_row,
    gamma,
    gamma_batch,
    gamma_detailed,
    gamma_piecewise,
    loop_class,
    validate_cuts,
)
from bcoh.words import IDENTITY, multiply, parse_word, random_word

W = parse_word


def circle(center, radius, start_angle, turns=1.0, n=400):
    ang = start_angle + 2 * math.pi * turns * np.linspace(0, 1, n)
    pts = np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], -1)
    pts[-1] = pts[0]
    return pts


def element(rng, max_len):
    return TransformationElement(random_word(rng, max_len).letters)


def points(geom, n, seed):
    return sampling.domain_block(geom, seed, 0, n)


def test_cut_rays(geom, cuts):
    assert cuts.origins[0] == (-1.0, 0.0) and cuts.directions[1] == (1.0, 0.0)
    assert np.linalg.norm(cuts.endpoint(0)) == pytest.approx(geom.R)
    bad = CutSystem(((-1.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (-1.0, 0.0)), (5.0, 5.0))
    with pytest.raises(GeometryError):
        validate_cuts(geom, bad)


def test_loop_class_examples(geom, cuts):
    assert loop_class(cuts, circle((3.0, 3.0), 0.5, 0.0)) == IDENTITY
    z = geom.z
    start = math.atan2(z[1] - 0.0, z[0] + 1.0)
    assert loop_class(cuts, circle(geom.c_alpha, geom.r_alpha, start)) == W("a")
    assert loop_class(cuts, circle(geom.c_alpha, geom.r_alpha, start, turns=-1.0)) == W("A")
    start_b = math.atan2(z[1], z[0] - 1.0)
    assert loop_class(cuts, circle(geom.c_beta, geom.r_beta, start_b)) == W("b")
    with pytest.raises(ValueError):
        loop_class(cuts, np.array([[0.0, 1.0], [1.0, 1.0]]))


def test_loop_concatenation(geom, cuts):
    # traversing loop u then loop v reads v*u in product order
    z = geom.z
    la = circle(geom.c_alpha, geom.r_alpha, math.atan2(z[1], z[0] + 1.0))
    lb = circle(geom.c_beta, geom.r_beta, math.atan2(z[1], z[0] - 1.0), turns=-1.0)
    for loop in (la, lb):
        loop[0] = loop[-1] = z
    rng = np.random.default_rng(0)
    for _ in range(30):
        seq = rng.integers(0, 2, size=rng.integers(1, 6))
        loop = np.vstack([la if s == 0 else lb for s in seq])
        expect = IDENTITY
        for s in seq:
            expect = multiply(W("a") if s == 0 else W("B"), expect)
        assert loop_class(cuts, loop) == expect


def test_degenerate_vertex_on_ray(cuts):
    loop = np.array([[-3.0, 1.0], [-3.0, 0.0], [-3.0, -1.0], [-3.0, 1.0]])
    with pytest.raises(DegenerateLoopError):
        crossing_sequence(cuts, loop)


def test_gamma_examples(geom, cuts):
    e = TransformationElement()
    for p in points(geom, 200, 1):
        assert gamma(geom, cuts, e, p) == IDENTITY
    g = TransformationElement.parse("abAAb")
    for p in points(geom, 500, 2):
        if classify_region(geom, p) == RegionLabel.OUTSIDE:
            assert gamma(geom, cuts, g, p) == IDENTITY
    ab = TransformationElement.rho("ab")
    assert gamma(geom, cuts, ab, geom.z + np.array([0.01, -0.02])) == W("ab")


def test_gamma_perturbation_is_recorded(geom, cuts):
    # a point exactly on ray_a
    w, k = gamma_detailed(geom, cuts, TransformationElement.parse("a"), np.array([-2.0, 0.0]))
    assert k >= 1


def test_piecewise_examples(geom, cuts):
    assert gamma_piecewise(geom, cuts, W("ab"), np.array([5.0, 0.0])) == IDENTITY
    c = np.array(geom.c_alpha)
    x = c + geom.r_alpha * np.array([-1.0, 0.3]) / math.hypot(1.0, 0.3)
    assert classify_region(geom, x) == RegionLabel.CORE_A_ONLY
    u = conjugator(geom, cuts, x, 0)
    assert gamma_piecewise(geom, cuts, W("abaB"), x) == multiply(multiply(u, W("aa")), u.inverse())
    collar = c + (geom.r_alpha + geom.w_alpha * (1 - geom.epsilon / 2)) * np.array([-1.0, 0.0])
    with pytest.raises(CollarError):
        gamma_piecewise(geom, cuts, W("a"), collar)


def test_piecewise_matches_tracer(geom, cuts):
    rng = np.random.default_rng(8)
    pts = points(geom, 4000, 3)
    pts = pts[classify_many(geom, pts) != 4]
    for p in pts[:800]:
        w = random_word(rng, 6)
        assert gamma_piecewise(geom, cuts, w, p) == gamma(geom, cuts, TransformationElement(w.letters), p)


def test_cocycle_identity(geom, cuts):
    rng = np.random.default_rng(21)
    for p in points(geom, 300, 5):
        g1, g2 = element(rng, 6), element(rng, 6)
        lhs = gamma(geom, cuts, g1 * g2, p)
        rhs = multiply(gamma(geom, cuts, g1, apply(geom, g2, p)), gamma(geom, cuts, g2, p))
        assert lhs == rhs


def test_refinement_invariance(geom, cuts):
    rng = np.random.default_rng(22)
    for p in points(geom, 300, 6):
        g = element(rng, 6)
        assert gamma(geom, cuts, g, p, samples_per_letter=16) == gamma(geom, cuts, g, p, samples_per_letter=64)


def test_batch_matches_tracer(geom, cuts):
    rng = np.random.default_rng(23)
    for _ in range(5):
        g = element(rng, 8)
        pts = points(geom, 400, int(rng.integers(1000)))
        words, lengths = gamma_batch(geom, cuts, g, pts)
        for row, n, p in zip(words, lengths, pts):
            w = decode_row(row)
            assert len(w) == n
            assert w == gamma(geom, cuts, g, p)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=6), st.floats(-5.5, 5.5), st.floats(-5.5, 5.5))
def test_batch_matches_tracer_property(letters, x, y):
    from bcoh.eightmodel import DEFAULT_GEOMETRY
    from bcoh.homotopy import default_cuts

    geom = DEFAULT_GEOMETRY
    p = np.array([x, y])
    if not geom.in_domain(p)[0]:
        return
    cuts = default_cuts(geom)
    g = TransformationElement(tuple(letters))
    words, _ = gamma_batch(geom, cuts, g, p[None, :])
    assert decode_row(words[0]) == gamma(geom, cuts, g, p)
