"""Midpoint-type integrators and the trajectory driver.

All three schemes solve ``b = a + dt * X(m(a, b))`` for the new state ``b``:

* implicit midpoint (plane, torus lift): ``m = (a + b) / 2``;
* spherical midpoint: ``m_i = (a_i + b_i) / |a_i + b_i|``;
* hyperbolic midpoint: ``m_i = (a_i + b_i) / sqrt((a_i + b_i) ._L (a_i + b_i))``.

Because the vector field is tangent at the normalized midpoint, the latter two
keep ``|r_i|`` and ``r_i ._L r_i`` fixed up to the solver tolerance.
"""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _kernels as K
from .conserved import ConservedSet, conserved_set
from .errors import Collision, IncompatibleMethod, NonTimelike, SolverDiverged, ZeroVector
from .geometry import Geometry
from .models import TorusKernel, VortexState, geometry_code


class Method(str, enum.Enum):
    IMPLICIT_MIDPOINT = "implicit_midpoint"
    SPHERICAL_MIDPOINT = "spherical_midpoint"
    HYPERBOLIC_MIDPOINT = "hyperbolic_midpoint"

    @classmethod
    def parse(cls, value) -> Method:
        if isinstance(value, Method):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {value!r}; expected one of {names}") from None


_COMPATIBLE = {
    Method.IMPLICIT_MIDPOINT: (Geometry.PLANE, Geometry.TORUS),
    Method.SPHERICAL_MIDPOINT: (Geometry.SPHERE,),
    Method.HYPERBOLIC_MIDPOINT: (Geometry.HYPERBOLIC,),
}
_NORMALIZE = {Method.IMPLICIT_MIDPOINT: 0, Method.SPHERICAL_MIDPOINT: 1, Method.HYPERBOLIC_MIDPOINT: 2}

DEFAULT_METHOD = {
    Geometry.SPHERE: Method.SPHERICAL_MIDPOINT,
    Geometry.PLANE: Method.IMPLICIT_MIDPOINT,
    Geometry.HYPERBOLIC: Method.HYPERBOLIC_MIDPOINT,
    Geometry.TORUS: Method.IMPLICIT_MIDPOINT,
}
DEFAULT_DT = {Geometry.SPHERE: 1e-2, Geometry.PLANE: 1e-3, Geometry.HYPERBOLIC: 1e-2, Geometry.TORUS: 1e-2}


def check_compatible(method: Method, geometry: Geometry):
    if Geometry.parse(geometry) not in _COMPATIBLE[Method.parse(method)]:
        raise IncompatibleMethod(f"{Method.parse(method).value} cannot integrate {Geometry.parse(geometry).value} states")


@dataclass(frozen=True)
class IntegratorSpec:
    method: Method
    dt: float
    t_final: float
    solver_tol: float = 1e-12
    solver_max_iter: int = 100
    record_stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.t_final > 0 and self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")
        if int(self.solver_max_iter) < 1 or int(self.record_stride) < 1:
            raise ValueError("solver_max_iter and record_stride must be positive integers")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @classmethod
    def default_for(cls, geometry: Geometry, **overrides) -> IntegratorSpec:
        geometry = Geometry.parse(geometry)
        kw = dict(method=DEFAULT_METHOD[geometry], dt=DEFAULT_DT[geometry], t_final=100.0)
        kw.update(overrides)
        return cls(**kw)


class Status(str, enum.Enum):
    COMPLETED = "completed"
    COLLISION = "collision"
    SOLVER_DIVERGED = "solver_diverged"
    ZERO_VECTOR = "zero_vector"
    NON_TIMELIKE = "non_timelike"


_STATUS = {
    K.OK: Status.COMPLETED,
    K.COLLISION: Status.COLLISION,
    K.DIVERGED: Status.SOLVER_DIVERGED,
    K.ZERO_VECTOR: Status.ZERO_VECTOR,
    K.NON_TIMELIKE: Status.NON_TIMELIKE,
}


@dataclass
class Trajectory:
    """Sampled solution.  ``positions`` has shape ``(n_samples, N, d)``."""

    geometry: Geometry
    times: NDArray
    positions: NDArray
    strengths: NDArray
    status: Status = Status.COMPLETED
    failure_time: float | None = None
    kernel: TorusKernel | None = None
    _diagnostics: list[ConservedSet] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.geometry = Geometry.parse(self.geometry)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> VortexState:
        return VortexState(self.geometry, self.positions[k], self.strengths, validate=False)

    @property
    def states(self) -> list[VortexState]:
        return [self.state(k) for k in range(len(self))]

    @property
    def diagnostics(self) -> list[ConservedSet]:
        if self._diagnostics is None:
            self._diagnostics = [conserved_set(s, self.kernel) for s in self.states]
        return self._diagnostics

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED


def _raise_for(status: int, where: str):
    if status == K.COLLISION:
        raise Collision(f"collision during {where}")
    if status == K.DIVERGED:
        raise SolverDiverged(f"fixed-point iteration did not converge during {where}")
    if status == K.ZERO_VECTOR:
        raise ZeroVector(f"midpoint sum vanished during {where}; step too large")
    if status == K.NON_TIMELIKE:
        raise NonTimelike(f"midpoint sum left the timelike cone during {where}")


def _compiled_step(state: VortexState, method: Method, dt: float, tol: float, max_iter: int, kernel) -> VortexState:
    check_compatible(method, state.geometry)
    a = np.ascontiguousarray(state.positions, dtype=float)
    b, mid, v = np.empty_like(a), np.empty_like(a), np.empty_like(a)
    m = (kernel or TorusKernel()).truncation
    st, _ = K.midpoint_step(
        geometry_code(state.geometry), a, state.strengths, float(dt), m, _NORMALIZE[method], float(tol), int(max_iter), b, mid, v
    )
    _raise_for(st, f"{method.value} step")
    return VortexState(state.geometry, b, state.strengths, validate=False)


def _generic_step(f: Callable[[NDArray], NDArray], y: NDArray, dt: float, tol: float, max_iter: int, mid_fn) -> NDArray:
    y = np.asarray(y, dtype=float)
    b = y + dt * np.asarray(f(y))
    for _ in range(max_iter):
        nb = y + dt * np.asarray(f(mid_fn(y, b)))
        err = np.max(np.abs(nb - b)) if nb.size else 0.0
        b = nb
        if err <= tol * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0):
            return b
    raise SolverDiverged(f"fixed-point iteration did not converge in {max_iter} iterations")


def _sphere_mid(a, b):
    s = a + b
    nrm = np.linalg.norm(s, axis=-1, keepdims=True)
    if np.any(nrm < 1e-8):
        raise ZeroVector("midpoint sum vanished; step too large")
    return s / nrm


def _hyperbolic_mid(a, b):
    s = a + b
    q = s[..., 2] ** 2 - s[..., 0] ** 2 - s[..., 1] ** 2
    if np.any(q <= 0) or np.any(s[..., 2] <= 0):
        raise NonTimelike("midpoint sum left the timelike cone")
    return s / np.sqrt(q)[..., None]


def step_implicit_midpoint(rhs, state, dt: float, tol: float = 1e-12, max_iter: int = 100, kernel=None):
    """One implicit-midpoint step.

    ``state`` is either a :class:`VortexState` (plane or torus; ``rhs`` may then
    be ``None`` to use the compiled point-vortex field) or a raw array, in which
    case ``rhs`` maps arrays to arrays.
    """
    if isinstance(state, VortexState) and rhs is None:
        return _compiled_step(state, Method.IMPLICIT_MIDPOINT, dt, tol, max_iter, kernel)
    return _generic_step(rhs, state, dt, tol, max_iter, lambda a, b: 0.5 * (a + b))


def step_spherical_midpoint(rhs, state, dt: float, tol: float = 1e-12, max_iter: int = 100):
    """One spherical-midpoint step; same calling conventions as :func:`step_implicit_midpoint`."""
    if isinstance(state, VortexState) and rhs is None:
        return _compiled_step(state, Method.SPHERICAL_MIDPOINT, dt, tol, max_iter, None)
    return _generic_step(rhs, state, dt, tol, max_iter, _sphere_mid)


def step_hyperbolic_midpoint(rhs, state, dt: float, tol: float = 1e-12, max_iter: int = 100):
    if isinstance(state, VortexState) and rhs is None:
        return _compiled_step(state, Method.HYPERBOLIC_MIDPOINT, dt, tol, max_iter, None)
    return _generic_step(rhs, state, dt, tol, max_iter, _hyperbolic_mid)


def integrate(state: VortexState, spec: IntegratorSpec, kernel: TorusKernel | None = None) -> Trajectory:
    """Integrate from ``t = 0`` to ``spec.t_final``.

    Failures inside a step (collision, divergence, midpoint degeneracy)
    truncate the trajectory at the last recorded sample and set ``status``.
    """
    check_compatible(spec.method, state.geometry)
    n_steps = spec.n_steps
    stride = int(spec.record_stride)
    n_rec = n_steps // stride + 1
    y0 = np.ascontiguousarray(state.positions, dtype=float)
    out = np.empty((n_rec,) + y0.shape)
    kernel = kernel or TorusKernel()
    st, done = K.advance(
        geometry_code(state.geometry),
        y0,
        np.ascontiguousarray(state.strengths, dtype=float),
        float(spec.dt),
        n_steps,
        stride,
        kernel.truncation,
        _NORMALIZE[spec.method],
        float(spec.solver_tol),
        int(spec.solver_max_iter),
        out,
    )
    kept = done // stride + 1
    times = np.arange(kept) * (spec.dt * stride)
    return Trajectory(
        geometry=state.geometry,
        times=times,
        positions=out[:kept],
        strengths=np.array(state.strengths),
        status=_STATUS[st],
        failure_time=None if st == K.OK else (done + 1) * spec.dt,
        kernel=kernel,
    )


def final_state(state: VortexState, spec: IntegratorSpec, kernel: TorusKernel | None = None) -> VortexState:
    """State at ``spec.t_final`` without storing intermediate samples; raises on failure."""
    check_compatible(spec.method, state.geometry)
    kernel = kernel or TorusKernel()
    st, done, y = K.advance_final(
        geometry_code(state.geometry),
        np.ascontiguousarray(state.positions, dtype=float),
        np.ascontiguousarray(state.strengths, dtype=float),
        float(spec.dt),
        spec.n_steps,
        kernel.truncation,
        _NORMALIZE[spec.method],
        float(spec.solver_tol),
        int(spec.solver_max_iter),
    )
    _raise_for(st, f"step {done + 1}")
    return VortexState(state.geometry, y, state.strengths, validate=False)
