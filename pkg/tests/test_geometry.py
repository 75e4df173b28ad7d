import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distspace.errors import DuplicatePointError, RealizabilityError, ShapeError
from distspace.geometry import (
    DistanceAssignment,
    DistanceMultiset,
    PointConfiguration,
    cayley_menger_squared_volume,
    congruent,
    construction_pairs,
    distance_matrix,
    embed,
    free_dimension,
    gram_from_distances,
    n_from_pair_count,
    pairwise_distances,
    realizability_check,
    simplex_inequality_holds,
)

from conftest import random_config, random_rotation

FIG5 = (1.0, 1.58114, 0.70710, 0.87228, 1.32698, 1.54551)


def coordinate_volume_sq(points: np.ndarray) -> float:
    edges = points[1:] - points[0]
    k = len(edges)
    return float(np.linalg.det(edges @ edges.T)) / math.factorial(k) ** 2


# --- types ------------------------------------------------------------------


def test_point_configuration_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        PointConfiguration(np.zeros((0, 2)))
    with pytest.raises(ShapeError):
        PointConfiguration([[0, 0], [1, 1]], dimension=3)
    with pytest.raises(ValueError):
        PointConfiguration([[0, np.nan]])


def test_point_configuration_is_immutable():
    c = PointConfiguration([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        c.points[0, 0] = 3.0


def test_distance_assignment_validation():
    with pytest.raises(ValueError):
        DistanceAssignment([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        DistanceAssignment([[1, 1], [1, 0]])
    with pytest.raises(DuplicatePointError):
        DistanceAssignment([[0, 0], [0, 0]])
    assert DistanceAssignment([[0, 0], [0, 0]], allow_coincident=True).n == 2


def test_from_pairs_requires_every_pair():
    with pytest.raises(ShapeError):
        DistanceAssignment.from_pairs(3, {(0, 1): 1.0, (0, 2): 1.0})


def test_construction_order_matches_pair_labels():
    assert construction_pairs(4) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    a = DistanceAssignment.from_ordered([1, 2, 3, 4, 5, 6])
    assert a.matrix[1, 2] == 3 and a.matrix[0, 3] == 4 and a.matrix[2, 3] == 6
    np.testing.assert_array_equal(a.ordered(), [1, 2, 3, 4, 5, 6])


def test_multiset_sorted_and_sized():
    m = DistanceMultiset([3, 1, 2])
    assert m.values == (1.0, 2.0, 3.0) and m.n == 3
    with pytest.raises(ShapeError):
        DistanceMultiset([1, 2])
    assert [n_from_pair_count(k) for k in (1, 3, 6, 10)] == [2, 3, 4, 5]


def test_pairwise_distances_detects_duplicates():
    with pytest.raises(DuplicatePointError):
        pairwise_distances(PointConfiguration([[0, 0], [1, 0], [0, 0]]))
    a = pairwise_distances(PointConfiguration([[0, 0], [3, 4]]))
    assert a.matrix[0, 1] == pytest.approx(5.0)


# --- Cayley-Menger ----------------------------------------------------------


def test_cayley_menger_unit_simplices():
    tri = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], float)
    assert cayley_menger_squared_volume(tri) == pytest.approx(3 / 16)
    tet = np.ones((4, 4)) - np.eye(4)
    assert cayley_menger_squared_volume(tet) == pytest.approx(1 / 72)


def test_cayley_menger_matches_heron():
    a, b, c = 3.0, 4.0, 5.0
    mat = np.array([[0, a, b], [a, 0, c], [b, c, 0]])
    s = (a + b + c) / 2
    assert cayley_menger_squared_volume(mat) == pytest.approx(s * (s - a) * (s - b) * (s - c))


def test_cayley_menger_sign_for_impossible_triangle():
    mat = np.array([[0, 1, 1], [1, 0, 5], [1, 5, 0]], float)
    assert cayley_menger_squared_volume(mat) < 0
    assert not simplex_inequality_holds(mat)


def test_simplex_inequality_strict_flags_flat_triangle():
    flat = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
    assert simplex_inequality_holds(flat)
    assert not simplex_inequality_holds(flat, strict=True)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
def test_cayley_menger_matches_coordinates(seed, k):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(k + 1, k))
    expected = coordinate_volume_sq(pts)
    got = cayley_menger_squared_volume(distance_matrix(pts))
    assert got == pytest.approx(expected, rel=1e-8, abs=1e-12)


# --- Gram and realizability -------------------------------------------------


def test_gram_matches_difference_vectors(rng):
    c = random_config(rng, 5, 3)
    g = gram_from_distances(distance_matrix(c))
    v = c.points[1:] - c.points[0]
    np.testing.assert_allclose(g, v @ v.T, atol=1e-12)


def test_fig5_assignment_is_planar():
    a = DistanceAssignment.from_ordered(FIG5)
    assert realizability_check(a, 2, tol=1e-4).realizable


def test_unit_triangle_needs_two_dimensions():
    tri = np.ones((3, 3)) - np.eye(3)
    assert realizability_check(tri, 2)
    rep = realizability_check(tri, 1)
    assert not rep.realizable and rep.failed_condition.startswith("gram-rank")


def test_violated_triangle_reports_condition():
    rep = realizability_check(np.array([[0, 1, 1], [1, 0, 5], [1, 5, 0]], float), 2)
    assert not rep.realizable
    assert rep.failed_condition.startswith("simplex-inequality")
    failed = rep.residual_labels.index(rep.failed_condition)
    assert rep.residuals[failed] < 0


def test_random_space_configuration_is_not_planar(rng):
    c = random_config(rng, 6, 3)
    a = pairwise_distances(c)
    assert realizability_check(a, 3).realizable
    assert not realizability_check(a, 2).realizable


def test_scale_invariance_of_verdict(rng):
    c = random_config(rng, 5, 2)
    a = distance_matrix(c)
    for s in (1e-3, 1.0, 1e4):
        assert realizability_check(a * s, 2).realizable


# --- embedding --------------------------------------------------------------


def test_embed_canonical_gauge(rng):
    c = random_config(rng, 5, 3)
    e = embed(pairwise_distances(c), 3)
    np.testing.assert_allclose(e.points[0], 0.0)
    assert e.points[1, 1:] == pytest.approx([0, 0]) and e.points[1, 0] > 0
    assert e.points[2, 2] == pytest.approx(0.0) and e.points[2, 1] > 0
    assert e.points[3, 2] > 0
    np.testing.assert_allclose(distance_matrix(e), distance_matrix(c), atol=1e-10)


def test_embed_fig5_reproduces_caption_values():
    e = embed(DistanceAssignment.from_ordered(FIG5), 2, tol=1e-4)
    got = DistanceAssignment(distance_matrix(e)).ordered()
    np.testing.assert_allclose(got, FIG5, atol=1e-4)


def test_embed_fig5_second_ordering_is_not_congruent():
    x = np.array(FIG5)
    first = embed(DistanceAssignment.from_ordered(x), 2, tol=1e-4)
    second = embed(DistanceAssignment.from_ordered(x[[0, 1, 2, 5, 3, 4]]), 2, tol=1e-4)
    assert not congruent(first, second)


def test_embed_collinear_points_get_zero_trailing_coordinates():
    c = PointConfiguration([[0.0, 0.0], [1.0, 0.0], [2.5, 0.0], [0.3, 1.0]])
    e = embed(pairwise_distances(c), 2)
    assert e.points[2, 1] == 0.0
    assert e.points[3, 1] > 0


def test_embed_strict_rejects_low_rank():
    c = PointConfiguration([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    embed(pairwise_distances(c), 2)
    with pytest.raises(RealizabilityError):
        embed(pairwise_distances(c), 2, strict=True)


def test_embed_unrealizable_raises_with_report():
    with pytest.raises(RealizabilityError) as info:
        embed(np.array([[0, 1, 1], [1, 0, 5], [1, 5, 0]], float), 2)
    assert info.value.report.failed_condition is not None


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), d=st.integers(1, 4))
def test_embed_round_trip(seed, n, d):
    rng = np.random.default_rng(seed)
    c = random_config(rng, n, d)
    a = pairwise_distances(c)
    e = embed(a, d)
    scale = a.upper().mean()
    assert np.max(np.abs(distance_matrix(e) - a.matrix)) <= 1e-8 * scale


# --- congruence -------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7), d=st.integers(2, 3), reflect=st.booleans())
def test_isometry_invariance(seed, n, d, reflect):
    rng = np.random.default_rng(seed)
    c = random_config(rng, n, d)
    moved = c.transformed(random_rotation(rng, d, reflect), rng.normal(size=d))
    shuffled = moved.relabeled(rng.permutation(n))
    np.testing.assert_allclose(
        np.sort(pairwise_distances(c).upper()), np.sort(pairwise_distances(shuffled).upper()), atol=1e-10
    )
    assert congruent(c, shuffled)


def test_rescaled_copy_needs_rescale_flag(rng):
    c = random_config(rng, 5, 2)
    big = c.scaled(2.0)
    assert not congruent(c, big)
    assert congruent(c, big, allow_isotropic_rescale=True)


def test_perturbed_point_not_congruent(rng):
    c = random_config(rng, 5, 2)
    pts = c.points.copy()
    pts[2] += [0.1, 0.0]
    assert not congruent(c, PointConfiguration(pts))


def test_congruent_shape_mismatch():
    with pytest.raises(ShapeError):
        congruent(PointConfiguration([[0, 0], [1, 0]]), PointConfiguration([[0, 0], [1, 0], [0, 1]]))


def test_free_dimension():
    assert free_dimension(4, 2) == 5
    assert free_dimension(3, 2) == 3
    assert free_dimension(2, 3) == 1
    # n points in R^d have nd coordinates less d(d+1)/2 rigid motions
    for n, d in itertools.product(range(2, 9), range(1, 5)):
        if n > d:
            assert free_dimension(n, d) == n * d - d * (d + 1) // 2


def test_embed_three_four_five():
    e = embed(DistanceAssignment.from_ordered([3.0, 4.0, 5.0]), 2)
    np.testing.assert_allclose(e.points[:2], [[0, 0], [3, 0]], atol=1e-12)
    assert e.points[2, 1] > 0
    assert np.linalg.norm(e.points[2]) == pytest.approx(4.0)
    assert np.linalg.norm(e.points[2] - e.points[1]) == pytest.approx(5.0)
