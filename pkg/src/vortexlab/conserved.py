"""Momentum maps, circulation, equivariance checks and constraint projection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import Infeasible, NonTimelike, NotARotation, ZeroVector
from .geometry import Geometry, canonicalize_torus, project_to_manifold
from .models import EPS_COLL, TorusKernel, VortexState, hamiltonian

PROJECTION_TOL = 1e-12
PROJECTION_MAX_SWEEPS = 100


@dataclass(frozen=True)
class ConservedSet:
    """Conserved quantities of one state.

    ``momentum`` is the flat momentum vector written to the conserved CSV:
    ``(J_x, J_y, J_z)`` on the sphere and hyperboloid, ``(angular, J_x, J_y)``
    on the plane and ``(J_x, J_y)`` on the torus lift.
    """

    geometry: Geometry
    energy: float
    momentum: NDArray
    circulation: float
    extras: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return momentum_columns(self.geometry)


def momentum_columns(geometry: Geometry) -> list[str]:
    geometry = Geometry.parse(geometry)
    if geometry is Geometry.PLANE:
        return ["J_angular", "J_x", "J_y"]
    if geometry is Geometry.TORUS:
        return ["J_x", "J_y"]
    return ["J_x", "J_y", "J_z"]


def linear_momentum(state: VortexState) -> NDArray:
    """Weighted position sum ``sum_i G_i r_i`` (torus: on the lift)."""
    return state.strengths @ state.positions


def angular_momentum(state: VortexState) -> float:
    if state.geometry is not Geometry.PLANE:
        raise ValueError("angular momentum is only defined here for the plane")
    return 0.5 * float(state.strengths @ np.sum(state.positions**2, axis=1))


def momentum(state: VortexState) -> NDArray:
    """Momentum-map value in the flat layout described on :class:`ConservedSet`."""
    lin = linear_momentum(state)
    if state.geometry is Geometry.PLANE:
        return np.concatenate([[angular_momentum(state)], lin])
    return lin


def plane_l_map(state: VortexState) -> tuple[float, float]:
    """Equivariant map ``(1/2 sum G_i |r_i|^2, 1/2 |sum G_i r_i|^2)`` for the plane."""
    lin = linear_momentum(state)
    return angular_momentum(state), 0.5 * float(lin @ lin)


def circulation(state: VortexState) -> float:
    return float(np.sum(state.strengths))


def conserved_set(state: VortexState, kernel: TorusKernel | None = None) -> ConservedSet:
    extras = {}
    if state.geometry is Geometry.PLANE:
        extras["L"] = plane_l_map(state)
    elif state.geometry is Geometry.TORUS:
        extras["J_canonical"] = state.strengths @ canonicalize_torus(state.positions)
    return ConservedSet(
        geometry=state.geometry,
        energy=hamiltonian(state, kernel),
        momentum=momentum(state),
        circulation=circulation(state),
        extras=extras,
    )


def _check_rotation(R: NDArray, dim: int):
    R = np.asarray(R, dtype=float)
    if R.shape != (dim, dim):
        raise NotARotation(f"expected a {dim}x{dim} matrix")
    if not np.allclose(R.T @ R, np.eye(dim), atol=1e-10, rtol=0) or np.linalg.det(R) < 0:
        raise NotARotation("matrix is not orthogonal with determinant +1")
    return R


def equivariance_residual_sphere(state: VortexState, R: ArrayLike) -> float:
    """``|R J(r) - J(R r)|`` for a rotation ``R``."""
    if state.geometry is not Geometry.SPHERE:
        raise ValueError("sphere state required")
    R = _check_rotation(R, 3)
    rotated = state.with_positions(state.positions @ R.T)
    return float(np.linalg.norm(R @ linear_momentum(state) - linear_momentum(rotated)))


def equivariance_residual_hyperbolic(state: VortexState, Lambda: ArrayLike) -> float:
    """``|Lambda J(r) - J(Lambda r)|`` for an isometry ``Lambda`` of the hyperboloid."""
    Lambda = np.asarray(Lambda, dtype=float)
    eta = np.diag([-1.0, -1.0, 1.0])
    if not np.allclose(Lambda.T @ eta @ Lambda, eta, atol=1e-10, rtol=0) or Lambda[2, 2] < 1.0:
        raise NotARotation("matrix is not an orientation-preserving, future-preserving Lorentz map")
    moved = state.with_positions(state.positions @ Lambda.T)
    j0 = linear_momentum(state)
    return float(np.linalg.norm(Lambda @ j0 - linear_momentum(moved)))


def plane_coadjoint(R: NDArray, u: NDArray, xi: float, w: NDArray) -> tuple[float, NDArray]:
    """Coadjoint action of ``(R, u)`` in SO(2) x| R^2 on ``(xi, w)``."""
    Rw = R @ w
    return xi + float(u @ Rw), Rw


def equivariance_defect_plane(state: VortexState, R: ArrayLike, u: ArrayLike) -> tuple[float, NDArray]:
    """``J((R, u) . r) - Ad*_(R, u) J(r)`` for the planar momentum map."""
    if state.geometry is not Geometry.PLANE:
        raise ValueError("plane state required")
    R = _check_rotation(R, 2)
    u = np.asarray(u, dtype=float)
    moved = state.with_positions(state.positions @ R.T + u)
    xi, w = plane_coadjoint(R, u, angular_momentum(state), linear_momentum(state))
    return angular_momentum(moved) - xi, linear_momentum(moved) - w


def _tangent_projectors(geom: Geometry, pos: NDArray) -> NDArray:
    """Euclidean orthogonal projectors onto the tangent planes, shape ``(N, 3, 3)``."""
    normal = pos if geom is Geometry.SPHERE else pos * np.array([-1.0, -1.0, 1.0])
    normal = normal / np.linalg.norm(normal, axis=1, keepdims=True)
    return np.eye(3)[None] - normal[:, :, None] * normal[:, None, :]


def _zero_momentum_curved(geom: Geometry, pos: NDArray, gam: NDArray, tol: float, max_sweeps: int) -> NDArray:
    # each sweep: least-norm correction of the weighted sum within the tangent
    # planes, then renormalization onto the manifold; halve the step if it
    # leaves the manifold or fails to reduce |J|
    J = gam @ pos
    for _ in range(max_sweeps):
        if np.linalg.norm(J) <= tol:
            return pos
        P = _tangent_projectors(geom, pos)
        gram = np.einsum("i,ijk->jk", gam**2, P)
        lam = np.linalg.lstsq(gram, -J, rcond=None)[0]
        delta = gam[:, None] * np.einsum("ijk,k->ij", P, lam)
        step = 1.0
        while step > 1e-6:
            try:
                trial = project_to_manifold(geom, pos + step * delta)
            except (ZeroVector, NonTimelike):
                step *= 0.5
                continue
            J_trial = gam @ trial
            if np.linalg.norm(J_trial) < np.linalg.norm(J):
                pos, J = trial, J_trial
                break
            step *= 0.5
        else:
            raise Infeasible(f"zero-momentum projection stalled at |J| = {np.linalg.norm(J):.3g}")
    if np.linalg.norm(J) > tol:
        raise Infeasible(f"zero-momentum projection did not converge in {max_sweeps} sweeps (|J| = {np.linalg.norm(J):.3g})")
    return pos


def project_constraints(
    state: VortexState,
    want_zero_circulation: bool = False,
    want_zero_momentum: bool = False,
    *,
    tol: float = PROJECTION_TOL,
    max_sweeps: int = PROJECTION_MAX_SWEEPS,
) -> VortexState:
    """Orthogonally project a state onto the zero-circulation and/or zero-momentum sets.

    Circulation is handled first (strengths shifted by their mean), then momentum.
    On the plane and torus the momentum projection is a single linear step.  On
    the sphere and hyperboloid it alternates between a least-norm correction of
    the weighted sum inside the tangent planes and renormalization onto the
    manifold until ``|J| <= tol``.
    """
    geom = state.geometry
    gam = np.array(state.strengths)
    pos = np.array(state.positions)

    if want_zero_circulation:
        gam = gam - gam.mean()
        if np.any(np.abs(gam) < 1e-12 * max(1.0, np.max(np.abs(state.strengths)))):
            raise Infeasible("zero-circulation projection produced a vanishing strength")

    if want_zero_momentum:
        if geom.curved:
            pos = _zero_momentum_curved(geom, pos, gam, tol, max_sweeps)
        else:
            pos = pos - np.outer(gam / float(gam @ gam), gam @ pos)

    out = VortexState(geom, pos, gam)
    moved = want_zero_circulation or want_zero_momentum
    if moved and out.n > 1 and out.min_separation() < EPS_COLL:
        raise Infeasible("constraint projection makes two vortices coincide")
    return out
