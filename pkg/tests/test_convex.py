import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmink.convex import (
    SupportFunction,
    ball_polytope,
    ball_support,
    body_from_dict,
    body_to_dict,
    cube,
    hausdorff_distance,
    lebesgue_volume,
    lp_combination,
    max_radial,
    polar_body,
    radial_distance,
    radial_of,
    random_polytope,
    square,
    support_of,
    support_on,
    wulff_shape,
)
from gmink.errors import DegenerateBodyError, HemisphereError, NotSupportFunctionError
from gmink.sphere import build_grid

SQUARE_NORMALS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
DIAG = np.array([1.0, 1.0]) / np.sqrt(2.0)


def polytopes(dim=2):
    return st.integers(0, 2**32 - 1).map(lambda s: random_polytope(np.random.default_rng(s), dim, max_radius=10))


# --------------------------------------------------------------------------
# Wulff shapes


def test_square_from_axis_normals():
    K = wulff_shape(2, SQUARE_NORMALS, np.ones(4))
    assert np.allclose(np.sort(np.abs(K.vertices).ravel()), 1.0)
    assert len(K.vertices) == 4
    assert not K.redundant.any()
    assert np.allclose(K.facet_sizes(), 2.0)
    assert lebesgue_volume(K) == pytest.approx(4.0)


def test_square_with_far_fourth_constraint_is_a_rectangle():
    K = wulff_shape(2, SQUARE_NORMALS, [1.0, 1.0, 1.0, 3.0])
    assert not K.redundant.any()
    assert lebesgue_volume(K) == pytest.approx(8.0)


def test_redundant_constraint_is_flagged():
    normals = np.vstack((SQUARE_NORMALS, DIAG))
    K = wulff_shape(2, normals, [1.0, 1.0, 1.0, 1.0, 3.0])
    assert K.redundant.tolist() == [False, False, False, False, True]
    assert K.support_values[4] == pytest.approx(np.sqrt(2.0))
    assert np.allclose(K.facet_sizes(), [2, 2, 2, 2, 0])
    assert hausdorff_distance(K, square()) < 1e-12


def test_dense_unit_ball_approximation():
    K = ball_polytope(2, 1.0, 720)
    g = build_grid(2, 720)
    assert np.all(support_on(K, g) <= 1.0 + 1e-12)
    assert max_radial(K)[0] == pytest.approx(1.0, abs=1e-4)


def test_cube_from_dual_hull():
    K = cube()
    assert len(K.vertices) == 8
    assert np.allclose(K.facet_sizes(), 4.0)
    assert lebesgue_volume(K) == pytest.approx(8.0)


def test_wulff_rejects_hemisphere_and_bad_values():
    with pytest.raises(HemisphereError):
        wulff_shape(2, SQUARE_NORMALS[:3], np.ones(3))
    with pytest.raises(ValueError):
        wulff_shape(2, SQUARE_NORMALS, [1.0, -1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        wulff_shape(2, 2 * SQUARE_NORMALS, np.ones(4))


@settings(max_examples=40, deadline=None)
@given(polytopes(2))
def test_wulff_round_trip(K):
    again = wulff_shape(2, K.normals, K.support_numbers)
    assert hausdorff_distance(K, again) < 1e-9
    assert np.allclose(K.support_values, K.support_numbers)


@settings(max_examples=15, deadline=None)
@given(polytopes(3))
def test_wulff_round_trip_3d(K):
    again = wulff_shape(3, K.normals, K.support_numbers)
    assert hausdorff_distance(K, again) < 1e-9
    assert np.allclose(K.support_values[K.active], K.support_numbers[K.active])


# --------------------------------------------------------------------------
# support and radial functions


def test_support_values():
    assert support_of(square(), [1.0, 0.0]) == pytest.approx(1.0)
    assert support_of(square(), DIAG) == pytest.approx(np.sqrt(2.0))
    assert support_of(cube(), np.ones(3) / np.sqrt(3.0)) == pytest.approx(np.sqrt(3.0))


def test_radial_values():
    assert radial_of(square(), [1.0, 0.0]) == pytest.approx(1.0)
    assert radial_of(square(), DIAG) == pytest.approx(np.sqrt(2.0))
    K = ball_polytope(2, 2.5, 720)
    g = build_grid(2, 97)
    assert np.allclose(radial_of(K, g.nodes), 2.5, atol=1e-4)


@settings(max_examples=40, deadline=None)
@given(polytopes(2), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(0.1, 10))
def test_support_sublinear(K, a, b, lam):
    u = np.array([np.cos(a), np.sin(a)])
    v = np.array([np.cos(b), np.sin(b)])
    assert support_of(K, u + v) <= support_of(K, u) + support_of(K, v) + 1e-12
    assert support_of(K, lam * u) == pytest.approx(lam * support_of(K, u), rel=1e-12)


# --------------------------------------------------------------------------
# polar bodies


def test_polar_of_square_is_cross_polytope():
    P = polar_body(square())
    verts = {tuple(np.round(v, 12) + 0.0) for v in P.vertices}
    assert verts == {(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)}


def test_polar_scaling_and_ball():
    P = polar_body(square(2.0))
    assert hausdorff_distance(P, polar_body(square()).scaled(0.5)) < 1e-12
    B = ball_polytope(2, 1.0, 360)
    assert hausdorff_distance(polar_body(B), B) < 1e-4


@settings(max_examples=30, deadline=None)
@given(polytopes(2))
def test_polar_duality(K):
    g = build_grid(2, 720)
    P = polar_body(K)
    assert np.allclose(support_of(K, g.nodes) * radial_of(P, g.nodes), 1.0, atol=1e-8)
    assert hausdorff_distance(polar_body(P), K) < 1e-8


def test_polar_duality_3d():
    K = random_polytope(np.random.default_rng(3), 3, max_radius=10)
    g = build_grid(3, 500)
    P = polar_body(K)
    assert np.allclose(support_of(K, g.nodes) * radial_of(P, g.nodes), 1.0, atol=1e-8)
    assert hausdorff_distance(polar_body(P), K, g) < 1e-8


def test_polar_requires_interior_origin():
    K = wulff_shape(2, SQUARE_NORMALS, [1.0, 1.0, 1e-12, 1.0])
    with pytest.raises(DegenerateBodyError):
        polar_body(K)


# --------------------------------------------------------------------------
# distances, combinations, radii


def test_distances():
    K = square()
    assert hausdorff_distance(K, K) == 0.0
    assert radial_distance(K, K) == 0.0
    B1, B2 = ball_support(1.0), ball_support(2.0)
    assert hausdorff_distance(B1, B2) == pytest.approx(1.0, abs=1e-12)
    assert radial_distance(B1, B2) == pytest.approx(1.0, abs=1e-4)
    assert hausdorff_distance(K, B1) == pytest.approx(np.sqrt(2) - 1, abs=1e-5)
    assert radial_distance(K, B1) == pytest.approx(np.sqrt(2) - 1, abs=1e-4)


def test_metric_equivalence_on_a_sequence():
    K = random_polytope(np.random.default_rng(11), max_radius=10)
    dh, dr = [], []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        Ki = wulff_shape(2, K.normals, K.support_numbers * (1 + eps * np.cos(np.arange(len(K)))))
        dh.append(hausdorff_distance(Ki, K))
        dr.append(radial_distance(Ki, K))
    assert dh[-1] < 1e-3 and dr[-1] < 1e-3
    assert all(a > b for a, b in zip(dr, dr[1:]))


def test_lp_combinations():
    B = ball_support(1.0)
    K = square()
    assert hausdorff_distance(lp_combination(2.0, 1.0, K, 0.0, B), K) < 1e-12
    assert hausdorff_distance(lp_combination(1.0, 1.0, B, 1.0, B), ball_support(2.0)) < 1e-9
    assert hausdorff_distance(lp_combination(2.0, 1.0, B, 3.0, B), ball_support(2.0)) < 1e-9
    with pytest.raises(ValueError):
        lp_combination(0.5, 1.0, K, 1.0, B)


def test_max_radial():
    R, u = max_radial(ball_support(1.0))
    assert R == pytest.approx(1.0, abs=1e-12)
    R, u = max_radial(square())
    assert R == pytest.approx(np.sqrt(2.0))
    assert np.allclose(np.abs(u), DIAG)
    assert max_radial(ball_support(3.0))[0] == pytest.approx(3.0)


def test_smooth_support_function_checks():
    g = build_grid(2, 360)
    # h = 1 + 0.9 cos(3 theta) is not a support function: h + h'' < 0 somewhere
    bad = SupportFunction(g, 1.0 + 0.9 * np.cos(3 * g.angles))
    with pytest.raises(NotSupportFunctionError):
        bad.curvature_radius()
    assert bad.defect() > 1e-3
    with pytest.raises(DegenerateBodyError):
        SupportFunction(g, np.zeros(360))
    # ellipse support function is genuine
    a, b = 2.0, 1.0
    ell = SupportFunction(g, np.sqrt(a**2 * g.nodes[:, 0] ** 2 + b**2 * g.nodes[:, 1] ** 2))
    assert ell.defect() < 1e-12
    assert np.min(ell.curvature_radius()) > 0


def test_body_json_round_trip():
    K = random_polytope(np.random.default_rng(5), max_radius=10)
    again = body_from_dict(body_to_dict(K))
    assert hausdorff_distance(K, again) == 0.0
    with pytest.raises(ValueError):
        body_from_dict({"dim": 2, "normals": [[2.0, 0.0]], "support_numbers": [1.0]})
    with pytest.raises(ValueError):
        body_from_dict({"dim": 2})
