"""Tree model tests: validation, path metric, geodesics, ends, projections.

Oracles: breadth-first path search for distances, dense locus sampling for
projections, direct definition checks for the small named trees.
"""

import math

import numpy as np
import pytest

import treeot as T
from treeot.errors import (
    ConstantGeodesic,
    EqualEnds,
    FlagInvalid,
    MalformedTree,
    OutOfInterval,
)

import helpers


# -- validation -------------------------------------------------------------


def test_tripod_valid_with_leaves_flagged(tripod):
    report = T.validate(tripod)
    assert report.ok
    assert set(report.leaves) == {"a", "b", "c"}


def test_star3_valid_no_leaves(star3):
    report = T.validate(star3)
    assert report.ok
    assert report.leaves == ()
    assert set(report.infinite_edges) == {"r1", "r2", "r3"}


def test_triangle_rejected():
    with pytest.raises(MalformedTree):
        T.MetricTree(
            ["a", "b", "c"],
            [("e1", ("a", "b"), 1.0), ("e2", ("b", "c"), 1.0), ("e3", ("c", "a"), 1.0)],
            "a",
        )


def test_disconnected_rejected():
    with pytest.raises(MalformedTree):
        T.MetricTree(["a", "b", "c", "d"], [("e1", ("a", "b"), 1.0)], "a")


def test_nonpositive_length_rejected():
    with pytest.raises(MalformedTree):
        T.MetricTree(["a", "b"], [("e1", ("a", "b"), 0.0)], "a")


def test_two_endpoint_infinite_edge_rejected():
    with pytest.raises(MalformedTree):
        T.MetricTree(["a", "b"], [("e1", ("a", "b"), math.inf)], "a")


def test_self_loop_rejected():
    with pytest.raises(MalformedTree):
        T.MetricTree(["a"], [("e1", ("a", "a"), 1.0)], "a")


# -- distance ---------------------------------------------------------------


def test_tripod_leaf_distance(tripod):
    a, b = tripod.vertex_point("a"), tripod.vertex_point("b")
    assert tripod.distance(a, b) == pytest.approx(2.0, abs=1e-12)
    assert tripod.distance(a, a) == 0.0


def test_distance_matches_bfs_oracle():
    rng = np.random.default_rng(7)
    for _ in range(30):
        tree = helpers.random_tree(rng, int(rng.integers(2, 12)), int(rng.integers(0, 3)))
        for _ in range(8):
            p = helpers.random_point(rng, tree)
            q = helpers.random_point(rng, tree)
            assert tree.distance(p, q) == pytest.approx(
                helpers.bfs_distance(tree, p, q), abs=1e-9
            )


def test_four_point_condition():
    rng = np.random.default_rng(11)
    for _ in range(20):
        tree = helpers.random_tree(rng, 9, 2)
        pts = [helpers.random_point(rng, tree) for _ in range(4)]
        p, q, r, s = pts
        sums = sorted(
            [
                tree.distance(p, q) + tree.distance(r, s),
                tree.distance(p, r) + tree.distance(q, s),
                tree.distance(p, s) + tree.distance(q, r),
            ]
        )
        assert sums[2] - sums[1] <= 1e-9


# -- geodesic segments --------------------------------------------------------


def test_tripod_segment(tripod):
    g = tripod.geodesic_segment(
        tripod.vertex_point("a"), tripod.vertex_point("b"), 0.0, 1.0
    )
    assert g.speed == pytest.approx(2.0)
    assert [p.vertex for _, p in g.nodes] == ["a", "o", "b"]
    assert g.evaluate(0.5) == tripod.vertex_point("o")


def test_constant_segment(tripod):
    o = tripod.vertex_point("o")
    g = tripod.geodesic_segment(o, o, 0.0, 1.0)
    assert g.is_constant
    assert g.evaluate(0.3) == o


def test_segment_midpoints_match_oracle():
    rng = np.random.default_rng(13)
    count = 0
    while count < 50:
        tree = helpers.random_tree(rng, int(rng.integers(2, 10)), 1)
        p, q = helpers.random_point(rng, tree), helpers.random_point(rng, tree)
        if p == q:
            continue
        count += 1
        g = tree.geodesic_segment(p, q, 0.0, 1.0)
        mid = g.evaluate(0.5)
        # metric midpoint: equidistant and on the p-q path
        half = 0.5 * tree.distance(p, q)
        assert tree.distance(p, mid) == pytest.approx(half, abs=1e-9)
        assert tree.distance(mid, q) == pytest.approx(half, abs=1e-9)


def test_segment_speed_parametrization():
    rng = np.random.default_rng(17)
    tree = helpers.random_tree(rng, 8, 1)
    p, q = helpers.distinct_points(rng, tree, 2)
    g = tree.geodesic_segment(p, q, -1.0, 3.0)
    for s, t in [(-1.0, 0.2), (0.0, 3.0), (1.5, 2.5)]:
        assert tree.distance(g.evaluate(s), g.evaluate(t)) == pytest.approx(
            g.speed * abs(s - t), abs=1e-9
        )


def test_along_geodesic_additivity():
    rng = np.random.default_rng(19)
    tree = helpers.random_tree(rng, 10, 2)
    p, q = helpers.distinct_points(rng, tree, 2)
    g = tree.geodesic_segment(p, q, 0.0, 1.0)
    for s, t, u in [(0.0, 0.3, 1.0), (0.1, 0.5, 0.9)]:
        d_su = tree.distance(g.evaluate(s), g.evaluate(u))
        d_st = tree.distance(g.evaluate(s), g.evaluate(t))
        d_tu = tree.distance(g.evaluate(t), g.evaluate(u))
        assert d_su == pytest.approx(d_st + d_tu, abs=1e-9)


def test_evaluate_out_of_interval(tripod):
    g = tripod.geodesic_segment(
        tripod.vertex_point("a"), tripod.vertex_point("b"), 0.0, 1.0
    )
    with pytest.raises(OutOfInterval):
        g.evaluate(1.5)
    assert g.evaluate(0.0) == tripod.vertex_point("a")
    assert g.evaluate(1.0) == tripod.vertex_point("b")


# -- rays ----------------------------------------------------------------------


def test_ray_along_edge(star3):
    ray = star3.ray_to_end(star3.vertex_point("o"), star3.end("r1"), 1.0)
    assert ray.evaluate(2.5) == star3.edge_point("r1", 2.5)
    assert ray.pos_end == star3.end("r1")


def test_ray_passes_center(star3):
    start = star3.edge_point("r2", 1.0)
    ray = star3.ray_to_end(start, star3.end("r1"), 1.0)
    assert ray.evaluate(1.0) == star3.vertex_point("o")
    assert ray.evaluate(3.0) == star3.edge_point("r1", 2.0)


def test_zero_speed_ray_is_constant(star3):
    p = star3.edge_point("r3", 0.7)
    ray = star3.ray_to_end(p, star3.end("r1"), 0.0)
    assert ray.is_constant
    assert ray.evaluate(100.0) == p


# -- Gromov products and geodesics between ends -----------------------------------


def test_gromov_product_star3(star3):
    assert T.gromov_product(star3, star3.end("r1"), star3.end("r2")) == 0.0
    assert T.gromov_product(star3, star3.end("r1"), star3.end("r1")) == math.inf


def test_gromov_product_interior_basepoint():
    tree = T.MetricTree(
        ["o"],
        [("r1", ("o",), math.inf), ("r2", ("o",), math.inf), ("r3", ("o",), math.inf)],
        T.TreePoint(edge="r1", offset=1.0),
    )
    assert T.gromov_product(tree, tree.end("r2"), tree.end("r3")) == pytest.approx(
        1.0, abs=1e-12
    )


def test_between_ends_star3(star3):
    g = star3.geodesic_between_ends(star3.end("r1"), star3.end("r2"))
    assert g.evaluate(0.0) == star3.vertex_point("o")
    assert g.evaluate(3.0) == star3.edge_point("r2", 3.0)
    assert g.evaluate(-3.0) == star3.edge_point("r1", 3.0)
    with pytest.raises(EqualEnds):
        star3.geodesic_between_ends(star3.end("r1"), star3.end("r1"))


def _comb_tree():
    """Base vertices u0..u6 with unit edges, an infinite tooth at each."""
    vs = [f"u{i}" for i in range(7)]
    edges = [(f"b{i}", (vs[i], vs[i + 1]), 1.0) for i in range(6)]
    edges += [(f"t{i}", (vs[i],), math.inf) for i in range(7)]
    return T.MetricTree(vs, edges, "u0")


def test_between_ends_comb_anchor():
    comb = _comb_tree()
    g = comb.geodesic_between_ends(comb.end("t2"), comb.end("t5"))
    # the locus runs t2 - u2 - .. - u5 - t5; u2 is nearest the base u0
    assert g.evaluate(0.0) == comb.vertex_point("u2")
    assert comb.distance(comb.basepoint, g.evaluate(0.0)) == pytest.approx(
        T.gromov_product(comb, comb.end("t2"), comb.end("t5"))
    )


def test_between_ends_reversal_same_anchor():
    comb = _comb_tree()
    g = comb.geodesic_between_ends(comb.end("t2"), comb.end("t5"))
    h = comb.geodesic_between_ends(comb.end("t5"), comb.end("t2"))
    assert g.evaluate(0.0) == h.evaluate(0.0)
    assert g.evaluate(1.5) == h.evaluate(-1.5)


def test_gromov_symmetry_random():
    rng = np.random.default_rng(23)
    for _ in range(10):
        tree = helpers.random_tree(rng, 8, 4)
        ends = tree.ends()
        i, j = rng.integers(0, len(ends), size=2)
        assert T.gromov_product(tree, ends[i], ends[j]) == pytest.approx(
            T.gromov_product(tree, ends[j], ends[i]), abs=1e-12
        )


# -- projection --------------------------------------------------------------------


def test_projection_branch_point(tripod):
    g = tripod.geodesic_segment(
        tripod.vertex_point("a"), tripod.vertex_point("b"), 0.0, 1.0
    )
    assert T.project_to_geodesic(tripod, tripod.vertex_point("c"), g) == tripod.vertex_point("o")


def test_projection_idempotent(tripod):
    g = tripod.geodesic_segment(
        tripod.vertex_point("a"), tripod.vertex_point("b"), 0.0, 1.0
    )
    y = tripod.edge_point("ea", 0.4)
    assert T.project_to_geodesic(tripod, y, g) == y


def test_projection_constant_rejected(tripod):
    g = tripod.constant_geodesic(tripod.vertex_point("o"))
    with pytest.raises(ConstantGeodesic):
        T.project_to_geodesic(tripod, tripod.vertex_point("a"), g)


def test_projection_matches_dense_sampling():
    rng = np.random.default_rng(29)
    for _ in range(8):
        tree = helpers.random_tree(rng, 8, 2, min_len=0.3, max_len=1.0)
        p, q = helpers.distinct_points(rng, tree, 2)
        g = tree.geodesic_segment(p, q, 0.0, 1.0)
        y = helpers.random_point(rng, tree)
        proj = T.project_to_geodesic(tree, y, g)
        assert tree.distance(y, proj) <= helpers.dense_projection(tree, y, g) + 1e-9


def test_projection_is_1_lipschitz():
    rng = np.random.default_rng(31)
    for _ in range(10):
        tree = helpers.random_tree(rng, 9, 2)
        p, q = helpers.distinct_points(rng, tree, 2)
        g = tree.geodesic_segment(p, q, 0.0, 1.0)
        y, z = helpers.random_point(rng, tree), helpers.random_point(rng, tree)
        py = T.project_to_geodesic(tree, y, g)
        pz = T.project_to_geodesic(tree, z, g)
        assert tree.distance(py, pz) <= tree.distance(y, z) + 1e-9


# -- perpendiculars ------------------------------------------------------------------


def test_perpendicular_star3(star3):
    assert T.perpendicular(star3, "o", "r1", "r2") == frozenset({"o"})


def test_perpendicular_barbell(barbell):
    assert T.perpendicular(barbell, "u", "r1", "r2") == frozenset({"u", "v"})
    assert T.perpendicular(barbell, "u", "euv", "r1") == frozenset({"u"})


def test_perpendicular_flag_validation(barbell):
    with pytest.raises(FlagInvalid):
        T.perpendicular(barbell, "u", "r1", "r1")
    with pytest.raises(FlagInvalid):
        T.perpendicular(barbell, "u", "r1", "r3")
