"""Post-hoc diagnostics: drifts, relative-equilibrium residuals, separation
exponents, convergence order and regime classification."""

from __future__ import annotations

import enum
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from . import _kernels as K
from .conserved import project_constraints
from .errors import Infeasible, VortexError
from .geometry import Geometry, pairwise_separations, project_to_manifold
from .integrators import IntegratorSpec, Method, Trajectory, _NORMALIZE, check_compatible
from .models import TorusKernel, VortexState, geometry_code

#: Versioned verdict thresholds.  Bump ``version`` whenever a value changes.
THRESHOLDS = {
    "version": 1,
    "equilibrium_displacement": 1e-10,
    "relative_equilibrium_pairwise_drift": 1e-5,
    "chaotic_exponent": 0.05,
    "chaotic_min_time": 200.0,
    "quasi_periodic_exponent": 0.01,
}

#: Fixed-point tolerance used by both trajectories of the separation exponent.
EXPONENT_SOLVER_TOL = 1e-14
#: Companion distance; smaller values sink towards the rounding noise floor.
DEFAULT_DELTA0 = 1e-6
#: Horizon, step and transient fraction used when classifying a regime.
EXPONENT_HORIZON = 1000.0
EXPONENT_DT = 5e-3


class Verdict(str, enum.Enum):
    EQUILIBRIUM = "Equilibrium"
    RELATIVE_EQUILIBRIUM = "RelativeEquilibrium"
    QUASI_PERIODIC = "QuasiPeriodic"
    CHAOTIC = "Chaotic"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class DriftReport:
    quantity: str
    max_abs: float
    max_rel: float
    slope: float


@dataclass(frozen=True)
class ClassificationReport:
    pairwise_drift: float
    displacement: float
    exponent: float
    exponent_time: float
    verdict: Verdict
    thresholds: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["exponent"] = None if not np.isfinite(self.exponent) else self.exponent
        return d


def _series(traj: Trajectory, quantity: str) -> NDArray:
    diags = traj.diagnostics
    if quantity == "energy":
        return np.array([d.energy for d in diags])
    if quantity == "circulation":
        return np.array([d.circulation for d in diags])
    mom = np.array([d.momentum for d in diags])
    if quantity == "momentum":
        return mom
    if traj.geometry is Geometry.PLANE and quantity == "angular":
        return mom[:, 0]
    if traj.geometry is Geometry.PLANE and quantity == "linear":
        return mom[:, 1:]
    if quantity.startswith("momentum:"):
        return mom[:, int(quantity.split(":", 1)[1])]
    raise ValueError(f"unknown quantity {quantity!r}")


def conservation_drift(traj: Trajectory, quantity: str = "energy") -> DriftReport:
    """Drift of a conserved quantity relative to its initial value.

    ``quantity`` is one of ``energy``, ``circulation``, ``momentum`` (all
    components), ``momentum:<k>``, and on the plane ``angular`` or ``linear``.
    For vector quantities the drift is the Euclidean norm of the deviation and
    the relative drift divides by the norm of the initial value; when the
    initial value is zero the relative drift equals the absolute one.
    """
    if len(traj) < 2:
        raise ValueError("need at least two samples")
    q = _series(traj, quantity)
    dev = q - q[0]
    if dev.ndim > 1:
        mag = np.linalg.norm(dev, axis=1)
        scale = float(np.linalg.norm(q[0]))
    else:
        mag = np.abs(dev)
        scale = float(abs(q[0]))
    max_abs = float(mag.max())
    max_rel = max_abs / scale if scale > 0 else max_abs
    slope = float(np.polyfit(traj.times, mag, 1)[0]) if np.ptp(traj.times) > 0 else 0.0
    return DriftReport(quantity, max_abs, max_rel, abs(slope))


def pairwise_invariant_drift(traj: Trajectory) -> float:
    """Largest change of any pair separation over the trajectory.

    Zero for (relative) equilibria, since isometric group orbits keep every
    pairwise separation fixed.
    """
    if len(traj) < 2:
        raise ValueError("need at least two samples")
    if traj.positions.shape[1] < 2:
        return 0.0
    sep = pairwise_separations(traj.geometry, traj.positions)
    return float(np.max(np.abs(sep - sep[0])))


def max_displacement(traj: Trajectory) -> float:
    """Largest distance of any vortex from its initial embedding position."""
    d = traj.positions - traj.positions[0]
    return float(np.max(np.linalg.norm(d, axis=-1)))


def _tangent_part(geom: Geometry, base: NDArray, v: NDArray) -> NDArray:
    if geom is Geometry.SPHERE:
        return v - np.sum(v * base, axis=1, keepdims=True) * base
    if geom is Geometry.HYPERBOLIC:
        vl = -v[:, 0] * base[:, 0] - v[:, 1] * base[:, 1] + v[:, 2] * base[:, 2]
        return v - vl[:, None] * base
    return v


def state_distance(geometry: Geometry, a: NDArray, b: NDArray) -> float:
    """Isometry-invariant distance between two nearby configurations.

    Euclidean on the sphere, plane and torus lift.  On the hyperboloid the
    per-vortex chord is measured with the Minkowski form, so that a pair
    drifting towards the ideal boundary does not inflate the distance through
    the growth of its ambient coordinates.
    """
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if Geometry.parse(geometry) is Geometry.HYPERBOLIC:
        q = d[:, 0] ** 2 + d[:, 1] ** 2 - d[:, 2] ** 2
        return float(np.sqrt(np.sum(np.maximum(q, 0.0))))
    return float(np.linalg.norm(d))


def _place(state: VortexState, direction: NDArray, size: float, zero_momentum: bool) -> NDArray:
    """Companion at distance ``size`` from ``state`` along the tangent part of ``direction``."""
    geom = state.geometry
    base = np.asarray(state.positions)
    t = _tangent_part(geom, base, direction)
    nrm = state_distance(geom, np.zeros_like(t), t)
    if not nrm > 0:
        raise Infeasible("perturbation direction has no tangent component")
    pos = base + (size / nrm) * t
    if geom.curved:
        pos = project_to_manifold(geom, pos)
    if zero_momentum:
        pos = project_constraints(VortexState(geom, pos, state.strengths, validate=False), False, True).positions
    return np.ascontiguousarray(pos, dtype=float)


def separation_history(
    state: VortexState,
    spec: IntegratorSpec,
    delta0: float = DEFAULT_DELTA0,
    renorm_interval: float = 1.0,
    *,
    kernel: TorusKernel | None = None,
    zero_momentum: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[NDArray, NDArray, bool]:
    """Per-block log growth of the companion separation.

    Returns ``(times, log_growth, ok)``: ``times[k]`` is the end of block k and
    ``log_growth[k] = log(d_end / d_start)`` over that block.  ``ok`` is False
    when either trajectory failed, in which case the arrays stop at the last
    complete block.
    """
    if not 1e-10 <= delta0 <= 1e-6:
        raise ValueError("delta0 must lie in [1e-10, 1e-6]")
    check_compatible(spec.method, state.geometry)
    rng = rng if rng is not None else np.random.default_rng(0)
    kernel = kernel or TorusKernel()
    steps_per = max(1, int(round(renorm_interval / spec.dt)))
    n_blocks = max(1, spec.n_steps // steps_per)
    block = steps_per * spec.dt
    geometry = state.geometry
    growth = []

    def done(ok):
        g = np.array(growth)
        return block * np.arange(1, len(g) + 1), g, ok

    try:
        other = _place(state, rng.standard_normal(state.positions.shape), delta0, zero_momentum)
    except VortexError:
        return done(False)
    geom = geometry_code(geometry)
    gam = np.ascontiguousarray(state.strengths, dtype=float)
    # the fixed-point stopping error is not a smooth function of the initial
    # data; at the default tolerance it accumulates to a sizeable fraction of
    # delta0 per block, so both trajectories are solved to near rounding level
    tol = min(float(spec.solver_tol), EXPONENT_SOLVER_TOL)
    args = (float(spec.dt), steps_per, kernel.truncation, _NORMALIZE[spec.method], tol, max(int(spec.solver_max_iter), 200))
    base = np.ascontiguousarray(state.positions, dtype=float)
    for _ in range(n_blocks):
        d_start = state_distance(geometry, base, other)
        st1, _, base = K.advance_final(geom, base, gam, *args)
        st2, _, other = K.advance_final(geom, other, gam, *args)
        if st1 != K.OK or st2 != K.OK:
            return done(False)
        d_end = state_distance(geometry, base, other)
        if not (d_end > 0 and d_start > 0):
            return done(False)
        growth.append(np.log(d_end / d_start))
        try:
            base_state = VortexState(geometry, base, gam, validate=False)
            other = _place(base_state, other - base, delta0, zero_momentum)
        except VortexError:
            return done(False)
    return done(True)


def separation_exponent(
    state: VortexState,
    spec: IntegratorSpec,
    delta0: float = DEFAULT_DELTA0,
    renorm_interval: float = 1.0,
    *,
    kernel: TorusKernel | None = None,
    zero_momentum: bool = False,
    rng: np.random.Generator | None = None,
    transient: float = 0.5,
) -> float:
    """Finite-time leading Lyapunov exponent by the two-trajectory method.

    A companion state at distance ``delta0`` is integrated alongside the base
    trajectory over ``spec.t_final``; every ``renorm_interval`` time units the
    separation is logged and the companion is pulled back to distance
    ``delta0`` along the current separation direction.  With
    ``zero_momentum`` the companion is kept on the zero-momentum set (by
    re-projection), so the estimate probes the constrained dynamics.

    The exponent is the least-squares slope of the cumulative log-stretch
    over the final ``1 - transient`` fraction of the horizon.  Dropping the
    alignment transient and fitting instead of differencing keeps the
    ``log(t) / t`` tail of regular motion and its bounded oscillations from
    reading as growth.

    Returns NaN when either trajectory fails (collision, solver divergence).
    """
    if not 0.0 <= transient < 1.0:
        raise ValueError("transient must lie in [0, 1)")
    times, growth, ok = separation_history(
        state, spec, delta0, renorm_interval, kernel=kernel, zero_momentum=zero_momentum, rng=rng
    )
    if not ok or len(growth) == 0:
        return float("nan")
    cum = np.concatenate([[0.0], np.cumsum(growth)])
    t = np.concatenate([[0.0], times])
    keep = t >= transient * t[-1]
    if np.count_nonzero(keep) < 3:
        return float(cum[-1] / t[-1])
    return float(np.polyfit(t[keep], cum[keep], 1)[0])


def regime_exponent(
    state: VortexState,
    *,
    zero_momentum: bool = False,
    kernel: TorusKernel | None = None,
    rng: np.random.Generator | None = None,
    horizon: float = EXPONENT_HORIZON,
    dt: float = EXPONENT_DT,
    delta0: float = DEFAULT_DELTA0,
) -> tuple[float, float]:
    """Separation exponent with the classification settings; returns ``(exponent, horizon)``."""
    spec = IntegratorSpec.default_for(state.geometry, dt=dt, t_final=horizon)
    lam = separation_exponent(state, spec, delta0, 1.0, kernel=kernel, zero_momentum=zero_momentum, rng=rng)
    return lam, float(horizon)


def _order_final(state: VortexState, method, dt: float, t: float, kernel, tol: float) -> NDArray:
    n = int(round(t / dt))
    if callable(method) and not isinstance(method, Method):
        y = np.array(state.positions, dtype=float)
        for _ in range(n):
            y = method(y, dt)
        return y
    method = Method.parse(method)
    geom = geometry_code(state.geometry)
    st, _, y = K.advance_final(
        geom,
        np.ascontiguousarray(state.positions, dtype=float),
        np.ascontiguousarray(state.strengths, dtype=float),
        float(dt),
        n,
        (kernel or TorusKernel()).truncation,
        _NORMALIZE[method],
        tol,
        200,
    )
    if st != K.OK:
        from .integrators import _raise_for

        _raise_for(st, f"convergence run at dt={dt:g}")
    return y


def convergence_order(
    state: VortexState,
    method: Method | str | Callable[[NDArray, float], NDArray],
    dts: Sequence[float] = (1e-2, 5e-3, 2.5e-3, 1.25e-3),
    t: float = 1.0,
    *,
    kernel: TorusKernel | None = None,
    solver_tol: float = 1e-14,
) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``.

    The error at time ``t`` is measured in the max norm against a reference
    computed with step ``min(dts) / 8``.  ``method`` may also be a one-step
    map ``(positions, dt) -> positions`` (used for control experiments).
    """
    dts = sorted(float(d) for d in dts)
    if len(dts) < 4:
        raise ValueError("need a ladder of at least four step sizes")
    if not (callable(method) and not isinstance(method, (Method, str))):
        check_compatible(method, state.geometry)
    ref = _order_final(state, method, dts[0] / 8.0, t, kernel, solver_tol)
    errs = [np.max(np.abs(_order_final(state, method, dt, t, kernel, solver_tol) - ref)) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return float(slope)


def verdict_for(pairwise_drift: float, displacement: float, exponent: float, exponent_time: float) -> Verdict:
    """Deterministic verdict from the diagnostics and :data:`THRESHOLDS`."""
    th = THRESHOLDS
    if displacement <= th["equilibrium_displacement"]:
        return Verdict.EQUILIBRIUM
    if pairwise_drift <= th["relative_equilibrium_pairwise_drift"]:
        return Verdict.RELATIVE_EQUILIBRIUM
    if np.isfinite(exponent):
        if exponent >= th["chaotic_exponent"] and exponent_time >= th["chaotic_min_time"]:
            return Verdict.CHAOTIC
        if exponent <= th["quasi_periodic_exponent"]:
            return Verdict.QUASI_PERIODIC
    return Verdict.INDETERMINATE


def classify(traj: Trajectory, exponent: float, exponent_time: float) -> ClassificationReport:
    drift = pairwise_invariant_drift(traj) if len(traj) > 1 else 0.0
    disp = max_displacement(traj)
    if not traj.completed:
        verdict = Verdict.INDETERMINATE
    else:
        verdict = verdict_for(drift, disp, exponent, exponent_time)
    return ClassificationReport(drift, disp, float(exponent), float(exponent_time), verdict, dict(THRESHOLDS))
