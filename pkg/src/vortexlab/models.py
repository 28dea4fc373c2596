"""Hamiltonians and point-vortex vector fields on the four geometries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels as K
from .errors import Collision
from .geometry import Geometry, pairwise_separations

EPS_COLL = K.EPS_COLL
DEFAULT_TRUNCATION = 10


@dataclass(frozen=True)
class TorusKernel:
    """Truncation of the image sum in the torus kernel to ``|m| <= truncation``."""

    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if int(self.truncation) < 1:
            raise ValueError("torus truncation must be a positive integer")
        object.__setattr__(self, "truncation", int(self.truncation))


@dataclass(frozen=True, eq=False)
class VortexState:
    """Positions (``(N, d)`` embedding coordinates) and strengths of N vortices.

    Arrays are copied on construction and marked read-only.
    """

    geometry: Geometry
    positions: NDArray
    strengths: NDArray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        geometry = Geometry.parse(self.geometry)
        pos = np.array(self.positions, dtype=float, ndmin=2)
        gam = np.array(self.strengths, dtype=float, ndmin=1)
        pos.setflags(write=False)
        gam.setflags(write=False)
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "strengths", gam)
        if self.validate:
            self._check()

    def _check(self):
        pos, gam, g = self.positions, self.strengths, self.geometry
        if pos.ndim != 2 or pos.shape[1] != g.dim:
            raise ValueError(f"{g.value} positions must have shape (N, {g.dim}), got {pos.shape}")
        if gam.shape != (pos.shape[0],):
            raise ValueError("need exactly one strength per vortex")
        if pos.shape[0] < 1:
            raise ValueError("need at least one vortex")
        if np.any(gam == 0.0) or not np.all(np.isfinite(gam)):
            raise ValueError("vortex strengths must be finite and nonzero")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if g is Geometry.SPHERE:
            if np.max(np.abs(np.sum(pos * pos, axis=1) - 1.0)) > 1e-9:
                raise ValueError("sphere positions must have unit norm")
        elif g is Geometry.HYPERBOLIC:
            q = pos[:, 2] ** 2 - pos[:, 0] ** 2 - pos[:, 1] ** 2
            if np.max(np.abs(q - 1.0) / pos[:, 2] ** 2) > 1e-9 or np.any(pos[:, 2] <= 0):
                raise ValueError("hyperbolic positions must lie on the upper sheet z^2-x^2-y^2=1")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def circulation(self) -> float:
        return float(np.sum(self.strengths))

    def with_positions(self, positions: ArrayLike) -> VortexState:
        return VortexState(self.geometry, positions, self.strengths, validate=self.validate)

    def with_strengths(self, strengths: ArrayLike) -> VortexState:
        return VortexState(self.geometry, self.positions, strengths, validate=self.validate)

    def permuted(self, order: ArrayLike) -> VortexState:
        order = np.asarray(order)
        return VortexState(self.geometry, self.positions[order], self.strengths[order])

    def min_separation(self) -> float:
        if self.n < 2:
            return np.inf
        return float(np.min(pairwise_separations(self.geometry, self.positions)))


_VELOCITY = {
    Geometry.SPHERE: K.vel_sphere,
    Geometry.PLANE: K.vel_plane,
    Geometry.HYPERBOLIC: K.vel_hyperbolic,
    Geometry.TORUS: K.vel_torus,
}
_HAMILTONIAN = {
    Geometry.SPHERE: K.ham_sphere,
    Geometry.PLANE: K.ham_plane,
    Geometry.HYPERBOLIC: K.ham_hyperbolic,
    Geometry.TORUS: K.ham_torus,
}


_CODE = {Geometry.SPHERE: K.SPHERE, Geometry.PLANE: K.PLANE, Geometry.HYPERBOLIC: K.HYPERBOLIC, Geometry.TORUS: K.TORUS}


def geometry_code(geometry: Geometry) -> int:
    """Integer code understood by the compiled stepping loops."""
    return _CODE[Geometry.parse(geometry)]


def _truncation(kernel: TorusKernel | None) -> int:
    return (kernel or TorusKernel()).truncation


def _check_collisions(state: VortexState):
    if state.n > 1 and state.min_separation() < EPS_COLL:
        raise Collision(f"vortices closer than {EPS_COLL:g} in {state.geometry.value} separation")


def hamiltonian(state: VortexState, kernel: TorusKernel | None = None) -> float:
    """Point-vortex energy, summed over ordered pairs ``i != j``."""
    _check_collisions(state)
    fn = _HAMILTONIAN[state.geometry]
    return float(fn(np.ascontiguousarray(state.positions), state.strengths, _truncation(kernel)))


def _rhs(state: VortexState, geometry: Geometry, kernel: TorusKernel | None) -> NDArray:
    if state.geometry is not geometry:
        raise ValueError(f"expected a {geometry.value} state, got {state.geometry.value}")
    pos = np.ascontiguousarray(state.positions)
    out = np.empty_like(pos)
    status = _VELOCITY[geometry](pos, state.strengths, _truncation(kernel), out)
    if status == K.COLLISION:
        raise Collision(f"vortices closer than {EPS_COLL:g} in {geometry.value} separation")
    return out


def rhs_sphere(state: VortexState) -> NDArray:
    return _rhs(state, Geometry.SPHERE, None)


def rhs_plane(state: VortexState) -> NDArray:
    return _rhs(state, Geometry.PLANE, None)


def rhs_hyperbolic(state: VortexState) -> NDArray:
    return _rhs(state, Geometry.HYPERBOLIC, None)


def rhs_torus(state: VortexState, kernel: TorusKernel | None = None) -> NDArray:
    """Torus velocities on the lift; pair displacements are reduced to the minimum image."""
    return _rhs(state, Geometry.TORUS, kernel)


def rhs(state: VortexState, kernel: TorusKernel | None = None) -> NDArray:
    """Velocities ``(N, d)`` for any geometry."""
    return _rhs(state, state.geometry, kernel)


def torus_kernel(dx: float, dy: float, kernel: TorusKernel | None = None) -> float:
    """Truncated kernel h at ``(dx, dy)``, evaluated without image reduction."""
    return float(K.torus_h(float(dx), float(dy), _truncation(kernel)))


def torus_kernel_grad(dx: float, dy: float, kernel: TorusKernel | None = None) -> tuple[float, float]:
    """Gradient of the truncated kernel h at ``(dx, dy)``, evaluated without image reduction."""
    rx = dx - K.TWO_PI * np.round(dx / K.TWO_PI)
    ry = dy - K.TWO_PI * np.round(dy / K.TWO_PI)
    if np.hypot(rx, ry) < EPS_COLL:
        raise Collision("kernel gradient is singular at the lattice points")
    gx, gy = K.torus_grad_h(float(dx), float(dy), _truncation(kernel))
    return float(gx), float(gy)


def hamiltonian_gradient(state: VortexState, kernel: TorusKernel | None = None, step: float = 1e-6) -> NDArray:
    """Central-difference Euclidean gradient of the Hamiltonian in embedding coordinates.

    Used as an independent check of the analytic vector fields; positions are
    perturbed off the manifold, which is fine because every Hamiltonian here is
    defined on an open neighbourhood of it.
    """
    pos = np.array(state.positions)
    fn = _HAMILTONIAN[state.geometry]
    m = _truncation(kernel)
    grad = np.zeros_like(pos)
    for i in range(pos.shape[0]):
        for k in range(pos.shape[1]):
            pos[i, k] += step
            hp = fn(pos, state.strengths, m)
            pos[i, k] -= 2 * step
            hm = fn(pos, state.strengths, m)
            pos[i, k] += step
            grad[i, k] = (hp - hm) / (2 * step)
    return grad


def hamiltonian_vector_field(state: VortexState, grad: ArrayLike) -> NDArray:
    """Turn a Hamiltonian gradient into velocities via each geometry's Poisson structure.

    sphere: ``r_i x grad_i / G_i``; hyperbolic: ``-r_i x_L (L grad_i) / G_i``;
    torus: ``skew(grad_i) / G_i``; plane: ``skew(grad_i) / (2 G_i)``, where
    ``skew(g) = (g_y, -g_x)``.  The factor 1/2 on the plane keeps the planar
    field at its classical normalization (a unit dipole translates at speed
    1/(2 pi) per unit separation).
    """
    g = np.asarray(grad, dtype=float)
    pos = state.positions
    gam = state.strengths[:, None]
    geom = state.geometry
    if geom is Geometry.SPHERE:
        return np.cross(pos, g) / gam
    if geom is Geometry.HYPERBOLIC:
        lg = g * np.array([-1.0, -1.0, 1.0])
        c = np.cross(pos, lg)
        c[:, :2] *= -1.0
        return -c / gam
    skew = np.stack([g[:, 1], -g[:, 0]], axis=1)
    if geom is Geometry.PLANE:
        return skew / (2.0 * gam)
    return skew / gam
