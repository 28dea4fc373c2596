"""Embedding-space primitives for the four constant-curvature surfaces.

Points on the sphere and on the hyperboloid are stored as 3-vectors in the
ambient space; points on the plane and on the torus are 2-vectors.  Torus
points may live on the unbounded lift ``R^2`` and are only mapped into the
canonical cell ``[0, 2*pi)^2`` on request.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NonTimelike, ZeroVector

TWO_PI = 2.0 * np.pi

#: Lorentz metric diag(-1, -1, 1) of the hyperboloid model.
MINKOWSKI = np.diag([-1.0, -1.0, 1.0])


class Geometry(str, enum.Enum):
    SPHERE = "sphere"
    PLANE = "plane"
    HYPERBOLIC = "hyperbolic"
    TORUS = "torus"

    @property
    def dim(self) -> int:
        """Number of embedding coordinates per vortex."""
        return 3 if self in (Geometry.SPHERE, Geometry.HYPERBOLIC) else 2

    @property
    def curved(self) -> bool:
        return self.dim == 3

    @classmethod
    def parse(cls, value: str | Geometry) -> Geometry:
        if isinstance(value, Geometry):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(g.value for g in cls)
            raise ValueError(f"unknown geometry {value!r}; expected one of {names}") from None


def minkowski_dot(a: ArrayLike, b: ArrayLike) -> NDArray | float:
    """Lorentzian product ``-a_x b_x - a_y b_y + a_z b_z`` over the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = -a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]
    return float(out) if out.ndim == 0 else out


def cross_L(a: ArrayLike, b: ArrayLike) -> NDArray:
    """Lorentzian cross product: the Euclidean cross product followed by the metric flip."""
    c = np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    c[..., :2] *= -1.0
    return c


def project_to_manifold(geometry: Geometry, p: ArrayLike) -> NDArray:
    """Map ``p`` (a point or an ``(N, d)`` array of points) onto the manifold.

    Sphere points are normalized, hyperboloid points are Minkowski-normalized,
    torus points are reduced into ``[0, 2*pi)`` coordinate-wise and plane points
    are returned unchanged.
    """
    geometry = Geometry.parse(geometry)
    p = np.array(p, dtype=float)
    if geometry is Geometry.SPHERE:
        norm = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(norm < 1e-300):
            raise ZeroVector("cannot normalize a zero vector onto the sphere")
        return p / norm
    if geometry is Geometry.HYPERBOLIC:
        q = np.atleast_1d(minkowski_dot(p, p))
        if np.any(q <= 0.0) or np.any(p[..., 2] <= 0.0):
            raise NonTimelike("point is not future timelike; cannot normalize onto the hyperboloid")
        return p / np.sqrt(q).reshape(p.shape[:-1] + (1,))
    if geometry is Geometry.TORUS:
        return canonicalize_torus(p)
    return p


def canonicalize_torus(p: ArrayLike) -> NDArray:
    """Reduce lift coordinates into the canonical cell ``[0, 2*pi)``."""
    p = np.mod(np.asarray(p, dtype=float), TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    return np.where(p >= TWO_PI, 0.0, p)


def wrap_difference(d: ArrayLike) -> NDArray:
    """Minimum-image representative of a torus displacement, in ``[-pi, pi]``."""
    d = np.asarray(d, dtype=float)
    return d - TWO_PI * np.round(d / TWO_PI)


def pair_separation(geometry: Geometry, a: ArrayLike, b: ArrayLike) -> float:
    """Monotone separation measure used for collision guards and diagnostics.

    sphere: ``1 - a.b``; plane: Euclidean distance; hyperbolic: ``a._L b - 1``;
    torus: distance to the nearest periodic image.
    """
    geometry = Geometry.parse(geometry)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if geometry is Geometry.SPHERE:
        return max(0.0, 1.0 - float(a @ b))
    if geometry is Geometry.HYPERBOLIC:
        return max(0.0, float(minkowski_dot(a, b)) - 1.0)
    if geometry is Geometry.PLANE:
        return float(np.hypot(*(a - b)))
    d = wrap_difference(a - b)
    return float(np.hypot(*d))


def pairwise_separations(geometry: Geometry, positions: ArrayLike) -> NDArray:
    """Separations for all pairs ``i < j`` of an ``(..., N, d)`` position array.

    Vectorized over leading axes; pair order is ``(0,1), (0,2), ..., (N-2,N-1)``.
    """
    geometry = Geometry.parse(geometry)
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[-2]
    i, j = np.triu_indices(n, k=1)
    a = pos[..., i, :]
    b = pos[..., j, :]
    if geometry is Geometry.SPHERE:
        return np.maximum(0.0, 1.0 - np.sum(a * b, axis=-1))
    if geometry is Geometry.HYPERBOLIC:
        return np.maximum(0.0, minkowski_dot(a, b) - 1.0)
    d = a - b
    if geometry is Geometry.TORUS:
        d = wrap_difference(d)
    return np.sqrt(np.sum(d * d, axis=-1))


def sample_point(geometry: Geometry, rng: np.random.Generator) -> NDArray:
    """Draw one random point.

    Sphere: uniform with respect to area.  Torus: uniform on the canonical cell.
    Plane: standard bivariate Gaussian.  Hyperbolic: a standard Gaussian tangent
    vector at the apex ``(0, 0, 1)`` pushed through the exponential map.
    """
    return sample_points(geometry, 1, rng)[0]


def sample_points(geometry: Geometry, n: int, rng: np.random.Generator) -> NDArray:
    geometry = Geometry.parse(geometry)
    if geometry is Geometry.SPHERE:
        v = rng.standard_normal((n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    if geometry is Geometry.TORUS:
        return canonicalize_torus(rng.uniform(0.0, TWO_PI, size=(n, 2)))
    if geometry is Geometry.PLANE:
        return rng.standard_normal((n, 2))
    return hyperbolic_exp_apex(rng.standard_normal((n, 2)))


def hyperbolic_exp_apex(v: ArrayLike) -> NDArray:
    """Exponential map of the hyperboloid at the apex; ``v`` holds tangent (x, y) parts."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    r = np.linalg.norm(v, axis=1)
    scale = np.where(r > 0.0, np.sinh(r) / np.where(r > 0.0, r, 1.0), 1.0)
    out = np.empty((v.shape[0], 3))
    out[:, :2] = v * scale[:, None]
    # cosh(r) agrees with sqrt(1 + |xy|^2) but keeps z exact for small r
    out[:, 2] = np.sqrt(1.0 + np.sum(out[:, :2] ** 2, axis=1))
    return out


def random_rotation(rng: np.random.Generator) -> NDArray:
    """Haar-distributed element of SO(3)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotation_2d(angle: float) -> NDArray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def lorentz_boost(axis: int, rapidity: float) -> NDArray:
    """Boost mixing coordinate ``axis`` (0 for x, 1 for y) with z."""
    if axis not in (0, 1):
        raise ValueError("boost axis must be 0 (x) or 1 (y)")
    m = np.eye(3)
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    m[axis, axis] = c
    m[2, 2] = c
    m[axis, 2] = s
    m[2, axis] = s
    return m


def lorentz_rotation(angle: float) -> NDArray:
    """Rotation about the z axis, an isometry of the hyperboloid."""
    m = np.eye(3)
    m[:2, :2] = rotation_2d(angle)
    return m


def poincare_disk(p: ArrayLike) -> NDArray:
    """Image ``(x, y) / (1 + z)`` of hyperboloid points in the Poincaré disk."""
    p = np.asarray(p, dtype=float)
    return p[..., :2] / (1.0 + p[..., 2:3])


def spherical_coordinates(p: ArrayLike) -> NDArray:
    """``(azimuth, colatitude)`` with azimuth in ``(-pi, pi]`` and colatitude in ``[0, pi]``."""
    p = np.asarray(p, dtype=float)
    azimuth = np.arctan2(p[..., 1], p[..., 0])
    colat = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    return np.stack([azimuth, colat], axis=-1)
