import math

import numpy as np
import pytest

from consensim.spaces import (
    EUCLID2D,
    EmbedVec,
    Point2D,
    SpaceKind,
    SpaceMismatchError,
    dist,
    geometric_median,
    median_objective,
    normalize_distances,
    weighted_mean,
)

EMB3 = SpaceKind.embedding(3)


def grid_min_objective(weighted_points, resolution=201, lo=0.0, hi=200.0):
    """Brute-force oracle: exhaustive evaluation of the weighted-distance
    objective on a regular grid over the square."""
    xs = np.linspace(lo, hi, resolution)
    gx, gy = np.meshgrid(xs, xs)
    total = np.zeros_like(gx)
    for p, w in weighted_points:
        total += w * np.hypot(gx - p.x, gy - p.y)
    return float(total.min())


# --- dist -------------------------------------------------------------------

def test_dist_euclid_pythagorean():
    assert dist(EUCLID2D, Point2D(0, 0), Point2D(3, 4)) == 5.0


def test_dist_embedding_identical_is_zero():
    a = EmbedVec(np.array([0.3, -1.2, 2.0]))
    assert dist(EMB3, a, a) == 0.0


def test_dist_embedding_orthogonal_unit():
    a = EmbedVec(np.array([1.0, 0.0, 0.0]))
    b = EmbedVec(np.array([0.0, 1.0, 0.0]))
    assert dist(EMB3, a, b) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_dist_embedding_antipodal_hits_upper_bound():
    a = EmbedVec(np.array([0.5, -1.0, 2.0]))
    b = EmbedVec(-np.array([0.5, -1.0, 2.0]))
    assert dist(EMB3, a, b) == pytest.approx(2.0, abs=1e-12)


def test_dist_embedding_colinear_scaling_is_zero():
    a = EmbedVec(np.array([0.5, -1.0, 2.0]))
    for c in (0.1, 1.0, 7.5):
        b = EmbedVec(c * a.vec)
        assert dist(EMB3, a, b) == pytest.approx(0.0, abs=1e-7)


def test_dist_dimension_mismatch_rejected():
    a = EmbedVec(np.array([1.0, 0.0]))
    b = EmbedVec(np.array([1.0, 0.0, 0.0]))
    with pytest.raises(SpaceMismatchError):
        dist(EMB3, a, b)


def test_zero_vector_rejected_on_construction():
    with pytest.raises(ValueError):
        EmbedVec(np.zeros(3))
    with pytest.raises(ValueError):
        EmbedVec(np.array([1.0, np.nan, 0.0]))


def test_point2d_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2D(float("inf"), 0.0)


def test_dist_symmetry_and_nonnegativity_both_spaces():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = Point2D(*rng.uniform(-50, 50, 2))
        q = Point2D(*rng.uniform(-50, 50, 2))
        d1, d2 = dist(EUCLID2D, p, q), dist(EUCLID2D, q, p)
        assert d1 == d2 >= 0.0
        a = EmbedVec(rng.standard_normal(3))
        b = EmbedVec(rng.standard_normal(3))
        e1, e2 = dist(EMB3, a, b), dist(EMB3, b, a)
        assert e1 == e2 >= 0.0


def test_embedding_triangle_inequality_on_unit_sphere():
    # The sqrt-cosine distance of unit vectors equals their chord length,
    # so the triangle inequality must hold after normalization.
    rng = np.random.default_rng(12)
    for _ in range(300):
        vecs = []
        for _ in range(3):
            v = rng.standard_normal(3)
            vecs.append(EmbedVec(v / np.linalg.norm(v)))
        a, b, c = vecs
        assert dist(EMB3, a, c) <= dist(EMB3, a, b) + dist(EMB3, b, c) + 1e-9


# --- weighted_mean ------------------------------------------------------------

def test_weighted_mean_convex_combination():
    result = weighted_mean([(Point2D(0, 0), 1.0), (Point2D(4, 0), 3.0)])
    assert result == Point2D(3.0, 0.0)


def test_weighted_mean_singleton_identity():
    assert weighted_mean([(Point2D(2, 2), 5.0)]) == Point2D(2.0, 2.0)


def test_weighted_mean_equal_weights():
    result = weighted_mean([(Point2D(0, 0), 1.0), (Point2D(2, 0), 1.0), (Point2D(0, 2), 1.0)])
    assert result.x == pytest.approx(2 / 3)
    assert result.y == pytest.approx(2 / 3)


def test_weighted_mean_rejects_bad_input():
    with pytest.raises(ValueError):
        weighted_mean([])
    with pytest.raises(ValueError):
        weighted_mean([(Point2D(0, 0), 0.0)])
    with pytest.raises(ValueError):
        weighted_mean([(Point2D(0, 0), -1.0)])


def test_weighted_mean_embedding_drops_source_text():
    a = EmbedVec(np.array([1.0, 0.0, 0.0]), source_text="a")
    b = EmbedVec(np.array([0.0, 1.0, 0.0]), source_text="b")
    m = weighted_mean([(a, 1.0), (b, 1.0)])
    assert isinstance(m, EmbedVec)
    assert m.source_text is None
    np.testing.assert_allclose(m.vec, [0.5, 0.5, 0.0])


def test_weighted_mean_in_convex_hull():
    rng = np.random.default_rng(13)
    for _ in range(100):
        pts = [(Point2D(*rng.uniform(0, 200, 2)), float(rng.uniform(0.1, 5))) for _ in range(6)]
        m = weighted_mean(pts)
        xs = [p.x for p, _ in pts]
        ys = [p.y for p, _ in pts]
        assert min(xs) - 1e-9 <= m.x <= max(xs) + 1e-9
        assert min(ys) - 1e-9 <= m.y <= max(ys) + 1e-9


# --- geometric_median -----------------------------------------------------------

def test_geometric_median_single_point():
    assert geometric_median([(Point2D(5, 5), 2.0)]) == Point2D(5.0, 5.0)


def test_geometric_median_equilateral_triangle():
    pts = [
        (Point2D(0, 0), 1.0),
        (Point2D(2, 0), 1.0),
        (Point2D(1, math.sqrt(3)), 1.0),
    ]
    m = geometric_median(pts)
    assert m.x == pytest.approx(1.0, abs=1e-6)
    assert m.y == pytest.approx(math.sqrt(3) / 3, abs=1e-6)


def test_geometric_median_two_points_sits_on_heavier():
    # For two points the weighted sum of distances is minimised at the
    # heavier endpoint; exercises the anchor-handling branch.
    m = geometric_median([(Point2D(0, 0), 3.0), (Point2D(10, 0), 1.0)])
    assert m.x == pytest.approx(0.0, abs=1e-6)
    assert m.y == pytest.approx(0.0, abs=1e-6)


def test_geometric_median_matches_grid_oracle():
    # One-sided: the lattice minimum overestimates the true minimum (its own
    # resolution error can exceed 1e-3 near sharp optima), so Weiszfeld must
    # land at or below it within tolerance, never meaningfully above.
    rng = np.random.default_rng(21)
    for _ in range(10):
        pts = [
            (Point2D(*rng.uniform(0, 200, 2)), float(rng.uniform(1, 10)))
            for _ in range(5)
        ]
        m = geometric_median(pts)
        obj = median_objective(m, pts)
        oracle = grid_min_objective(pts)
        assert obj <= oracle * (1 + 1e-3)


def test_geometric_median_never_worse_than_mean_or_inputs():
    rng = np.random.default_rng(22)
    for _ in range(50):
        pts = [
            (Point2D(*rng.uniform(0, 200, 2)), float(rng.uniform(0.5, 8)))
            for _ in range(rng.integers(1, 8))
        ]
        m = geometric_median(pts)
        obj = median_objective(m, pts)
        assert obj <= median_objective(weighted_mean(pts), pts) + 1e-9
        for p, _ in pts:
            assert obj <= median_objective(p, pts) + 1e-6


# --- normalize_distances ----------------------------------------------------------

def test_normalize_distances_basic():
    assert normalize_distances([0.0, 5.0, 10.0]) == [0.0, 0.5, 1.0]


def test_normalize_distances_all_zero():
    assert normalize_distances([0.0, 0.0, 0.0]) == [0.0, 0.0, 0.0]


def test_normalize_distances_singleton():
    assert normalize_distances([7.0]) == [1.0]


def test_normalize_distances_rejects_negative_and_empty():
    with pytest.raises(ValueError):
        normalize_distances([-1.0, 2.0])
    with pytest.raises(ValueError):
        normalize_distances([])
