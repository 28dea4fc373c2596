import numpy as np
import pytest
from hypothesis import given, strategies as st

from vortexlab.errors import NonTimelike, ZeroVector
from vortexlab.geometry import (
    TWO_PI,
    Geometry,
    canonicalize_torus,
    cross_L,
    hyperbolic_exp_apex,
    lorentz_boost,
    lorentz_rotation,
    minkowski_dot,
    pair_separation,
    pairwise_separations,
    poincare_disk,
    project_to_manifold,
    random_rotation,
    sample_points,
    spherical_coordinates,
    wrap_difference,
)

from strategies import seeds

finite = st.floats(-50, 50, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_geometry_parse():
    assert Geometry.parse("Sphere") is Geometry.SPHERE
    assert Geometry.parse(Geometry.TORUS) is Geometry.TORUS
    with pytest.raises(ValueError):
        Geometry.parse("cylinder")
    assert Geometry.SPHERE.dim == 3 and Geometry.PLANE.dim == 2
    assert Geometry.HYPERBOLIC.curved and not Geometry.TORUS.curved


def test_minkowski_cross_is_orthogonal():
    a, b = np.array([0.3, -0.2, 1.5]), np.array([1.0, 0.4, 2.0])
    c = cross_L(a, b)
    assert abs(minkowski_dot(c, a)) < 1e-14
    assert abs(minkowski_dot(c, b)) < 1e-14


@given(vec3)
def test_sphere_projection(p):
    if np.linalg.norm(p) < 1e-6:
        with pytest.raises(ZeroVector):
            project_to_manifold("sphere", np.zeros(3))
        return
    q = project_to_manifold("sphere", p)
    assert abs(np.linalg.norm(q) - 1.0) <= 1e-12
    np.testing.assert_allclose(project_to_manifold("sphere", q), q, atol=1e-15)


@given(st.tuples(finite, finite, st.floats(0.1, 10)))
def test_hyperboloid_projection(xyz):
    x, y, t = xyz
    z = np.hypot(x, y) + t  # strictly inside the future cone
    q = project_to_manifold("hyperbolic", [x, y, z])
    assert abs(minkowski_dot(q, q) - 1.0) <= 1e-12 * q[2] ** 2
    assert q[2] > 0


def test_hyperboloid_projection_rejects_spacelike():
    with pytest.raises(NonTimelike):
        project_to_manifold("hyperbolic", [2.0, 0.0, 1.0])
    with pytest.raises(NonTimelike):
        project_to_manifold("hyperbolic", [0.0, 0.0, -1.0])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=2))
def test_torus_canonical_cell(p):
    c = canonicalize_torus(p)
    assert np.all((c >= 0) & (c < TWO_PI))
    np.testing.assert_allclose(wrap_difference(c - np.array(p)), 0.0, atol=1e-9 * max(1.0, np.max(np.abs(p))))


def test_torus_canonical_tiny_negative():
    assert canonicalize_torus([-1e-18, 0.0])[0] == 0.0


@given(seeds)
def test_sphere_separations_invariant_under_rotation(seed):
    rng = np.random.default_rng(seed)
    p = sample_points("sphere", 4, rng)
    R = random_rotation(rng)
    np.testing.assert_allclose(pairwise_separations("sphere", p @ R.T), pairwise_separations("sphere", p), atol=1e-14)


@given(seeds, st.floats(-2, 2), st.floats(-np.pi, np.pi))
def test_hyperbolic_separations_invariant_under_lorentz(seed, rapidity, angle):
    rng = np.random.default_rng(seed)
    p = sample_points("hyperbolic", 4, rng)
    M = lorentz_boost(0, rapidity) @ lorentz_rotation(angle) @ lorentz_boost(1, -0.5 * rapidity)
    s0 = pairwise_separations("hyperbolic", p)
    s1 = pairwise_separations("hyperbolic", p @ M.T)
    np.testing.assert_allclose(s1, s0, rtol=1e-9, atol=1e-10)


@given(seeds, st.lists(st.integers(-5, 5), min_size=8, max_size=8))
def test_torus_separation_uses_nearest_image(seed, shifts):
    rng = np.random.default_rng(seed)
    p = sample_points("torus", 4, rng)
    q = p + TWO_PI * np.array(shifts, dtype=float).reshape(4, 2)
    np.testing.assert_allclose(pairwise_separations("torus", q), pairwise_separations("torus", p), atol=1e-12)
    assert np.all(pairwise_separations("torus", p) <= np.pi * np.sqrt(2) + 1e-12)


def test_pair_separation_matches_vectorized():
    rng = np.random.default_rng(0)
    for g in Geometry:
        p = sample_points(g, 3, rng)
        vec = pairwise_separations(g, p)
        scalar = [pair_separation(g, p[i], p[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
        np.testing.assert_allclose(vec, scalar, rtol=1e-14)


def test_sphere_sampling_moments():
    # uniform on S^2: coordinate means 0, second moments 1/3
    n = 200_000
    p = sample_points("sphere", n, np.random.default_rng(1))
    three_sigma = 3 * np.sqrt(1 / 3 / n)
    assert np.all(np.abs(p.mean(axis=0)) < three_sigma)
    # var(x^2) = 1/5 - 1/9 for a uniform sphere coordinate
    assert np.all(np.abs((p**2).mean(axis=0) - 1 / 3) < 3 * np.sqrt((1 / 5 - 1 / 9) / n))


@given(st.tuples(st.floats(-5, 5), st.floats(-5, 5)))
def test_exp_map_lands_on_hyperboloid_at_geodesic_distance(v):
    p = hyperbolic_exp_apex([v])[0]
    r = np.hypot(*v)
    assert abs(minkowski_dot(p, p) - 1.0) <= 1e-12 * p[2] ** 2
    # geodesic distance from the apex equals |v|
    assert abs(np.arccosh(max(1.0, p[2])) - r) <= 1e-7 * max(1.0, r)


@given(seeds)
def test_poincare_disk_inside_unit_disk(seed):
    p = sample_points("hyperbolic", 20, np.random.default_rng(seed))
    assert np.all(np.linalg.norm(poincare_disk(p), axis=-1) < 1.0)


def test_spherical_coordinates_branch():
    p = np.array([[0, 0, 1.0], [0, 0, -1.0], [-1.0, 0, 0], [0, 1.0, 0]])
    az_col = spherical_coordinates(p)
    np.testing.assert_allclose(az_col[:, 1], [0, np.pi, np.pi / 2, np.pi / 2])
    assert az_col[2, 0] == pytest.approx(np.pi)
    assert az_col[3, 0] == pytest.approx(np.pi / 2)


def test_random_rotation_is_rotation():
    R = random_rotation(np.random.default_rng(5))
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0)
