"""Command-line front end.

    vortexlab run SCENARIO [--out DIR]
    vortexlab gallery --out DIR [--seed SEED]
    vortexlab order --method METHOD --geometry GEOMETRY [--seed SEED]
    vortexlab check

Exit codes: 0 success, 1 config error, 2 solver divergence, 3 collision,
4 infeasible constraints, 5 a ``check`` invariant failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, conserved, gallery, geometry, models
from .errors import Collision, ConfigError, Infeasible, NonTimelike, SolverDiverged, VortexError, ZeroVector
from .geometry import Geometry
from .integrators import DEFAULT_METHOD, IntegratorSpec, Method, Status, check_compatible, integrate
from .output import atomic_write, classification_json, conserved_csv, render_svg, trajectory_csv
from .scenario import STREAM_PERTURBATION, ScenarioSpec, build_initial_state, load_scenario, make_rng

log = logging.getLogger("vortexlab")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_COLLISION = 3
EXIT_INFEASIBLE = 4
EXIT_CHECK_FAILED = 5

_STATUS_EXIT = {
    Status.COMPLETED: EXIT_OK,
    Status.COLLISION: EXIT_COLLISION,
    Status.SOLVER_DIVERGED: EXIT_DIVERGED,
    Status.ZERO_VECTOR: EXIT_DIVERGED,
    Status.NON_TIMELIKE: EXIT_DIVERGED,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_INFEASIBLE if exc.reason == "Infeasible" else EXIT_CONFIG
    if isinstance(exc, Infeasible):
        return EXIT_INFEASIBLE
    if isinstance(exc, Collision):
        return EXIT_COLLISION
    if isinstance(exc, (SolverDiverged, ZeroVector, NonTimelike)):
        return EXIT_DIVERGED
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def run_spec(spec: ScenarioSpec, out_dir, *, with_exponent: bool = True) -> tuple[int, str]:
    """Run one scenario, write its requested outputs and return ``(exit code, summary)``."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    state = build_initial_state(spec)
    traj = integrate(state, spec.integrator, spec.kernel)
    code = _STATUS_EXIT[traj.status]

    drift_h = drift_j = float("nan")
    diagnostics_ok = False
    if len(traj) >= 2:
        try:
            drift_h = analysis.conservation_drift(traj, "energy").max_rel
            drift_j = analysis.conservation_drift(traj, "momentum").max_abs
            diagnostics_ok = True
        except Collision:
            code = EXIT_COLLISION

    lam, horizon = float("nan"), 0.0
    report = analysis.classify(traj, lam, horizon)
    if with_exponent and traj.completed and report.verdict not in (
        analysis.Verdict.EQUILIBRIUM,
        analysis.Verdict.RELATIVE_EQUILIBRIUM,
    ):
        lam, horizon = analysis.regime_exponent(
            state,
            zero_momentum=spec.zero_momentum,
            kernel=spec.kernel,
            rng=make_rng(spec.seed, STREAM_PERTURBATION),
        )
        report = analysis.classify(traj, lam, horizon)

    context = {"scenario": spec.name, "seed": spec.seed, "status": traj.status.value}
    if traj.failure_time is not None:
        context["failure_time"] = traj.failure_time
    if "trajectory_csv" in spec.outputs:
        atomic_write(out_dir / f"{spec.name}.trajectory.csv", trajectory_csv(traj))
    if "conserved_csv" in spec.outputs and diagnostics_ok:
        atomic_write(out_dir / f"{spec.name}.conserved.csv", conserved_csv(traj))
    if "classification_json" in spec.outputs:
        atomic_write(out_dir / f"{spec.name}.classification.json", classification_json(report, **context))
    if "figure_svg" in spec.outputs:
        meta = dict(context, t_final=spec.integrator.t_final, dt=spec.integrator.dt, verdict=report.verdict.value)
        atomic_write(out_dir / f"{spec.name}.svg", render_svg(traj, title=spec.name, metadata=meta))

    summary = (
        f"{spec.name}: verdict={report.verdict.value} status={traj.status.value} "
        f"H_rel_drift={drift_h:.3g} J_drift={drift_j:.3g} pairwise_drift={report.pairwise_drift:.3g} "
        f"lambda={report.exponent:.3g} runtime={time.perf_counter() - t0:.2f}s"
    )
    return code, summary


def cmd_run(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    try:
        code, summary = run_spec(spec, args.out, with_exponent=not args.no_exponent)
    except VortexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    print(summary)
    return code


# ---------------------------------------------------------------------------
# gallery
# ---------------------------------------------------------------------------


def cmd_gallery(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    panels = gallery.PANELS
    if args.geometry:
        panels = tuple(p for p in panels if p.geometry is Geometry.parse(args.geometry))
    from concurrent.futures import ThreadPoolExecutor

    def one(p):
        try:
            return p, gallery.run_panel(p, args.seed, out), None
        except VortexError as exc:
            return p, None, exc

    with ThreadPoolExecutor(gallery.worker_count()) as ex:
        results = list(ex.map(one, panels))
    for p, res, exc in results:
        if exc is not None:
            print(f"{p.key}: FAILED {type(exc).__name__}: {exc}")
            code = code or exit_code_for(exc)
            continue
        tag = "ok" if gallery.matches_expectation(p, res.report.verdict) else "differs"
        print(
            f"{p.key}: N={p.n} expected={p.expected} verdict={res.report.verdict.value} "
            f"lambda={res.report.exponent:.3g} status={res.trajectory.status.value} [{tag}] -> {res.path}"
        )
        code = code or _STATUS_EXIT[res.trajectory.status]
    return code


# ---------------------------------------------------------------------------
# order
# ---------------------------------------------------------------------------


def cmd_order(args) -> int:
    try:
        geom = Geometry.parse(args.geometry)
        method = Method.parse(args.method) if args.method else DEFAULT_METHOD[geom]
        check_compatible(method, geom)
    except (ValueError, VortexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    spec = ScenarioSpec(name="order", geometry=geom, n=args.n, seed=args.seed)
    try:
        state = build_initial_state(spec)
        order = analysis.convergence_order(state, method, kernel=spec.kernel)
    except VortexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    print(f"{method.value} on {geom.value} N={args.n} seed={args.seed}: observed order {order:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _check_antipodal():
    s = models.VortexState("sphere", [[0, 0, 1], [0, 0, -1]], [1.0, 1.0])
    v = np.max(np.abs(models.rhs(s)))
    traj = integrate(s, IntegratorSpec.default_for("sphere", t_final=10.0))
    return max(v, analysis.max_displacement(traj)) <= 1e-12, f"max |rhs|, displacement = {v:.2e}, {analysis.max_displacement(traj):.2e}"


def _check_dipole():
    s = models.VortexState("plane", [[-0.5, 0.0], [0.5, 0.0]], [1.0, -1.0])
    v = models.rhs(s)
    err = float(np.max(np.abs(v - np.array([0.0, 1.0 / (2 * np.pi)]))))
    return err <= 1e-15, f"velocity error {err:.2e}"


def _check_conservation(g: str):
    # same-sign strengths keep hyperbolic vortices bounded; mixed signs can escape to the boundary
    strengths = (1.0, 0.6, 1.4) if g == "hyperbolic" else None
    integ = IntegratorSpec.default_for(g, dt=1e-3, t_final=5.0)
    spec = ScenarioSpec(name="check", geometry=g, n=3, seed=1, strengths=strengths, integrator=integ)
    traj = integrate(build_initial_state(spec), spec.integrator)
    h = analysis.conservation_drift(traj, "energy").max_rel
    j = analysis.conservation_drift(traj, "momentum").max_abs
    c = analysis.conservation_drift(traj, "circulation").max_abs
    return traj.completed and h <= 1e-6 and j <= 1e-8 and c == 0.0, f"H {h:.2e}, J {j:.2e}, circulation {c:.1e}"


def _check_manifold():
    errs = []
    for g in ("sphere", "hyperbolic"):
        strengths = (1.0, 0.6, 1.4) if g == "hyperbolic" else None
        spec = ScenarioSpec(name="check", geometry=g, n=3, seed=2, strengths=strengths, integrator=IntegratorSpec.default_for(g, t_final=20.0))
        traj = integrate(build_initial_state(spec), spec.integrator)
        p = traj.positions
        if g == "sphere":
            errs.append(float(np.max(np.abs(np.linalg.norm(p, axis=-1) - 1.0))))
        else:
            errs.append(float(np.max(np.abs(p[..., 2] ** 2 - p[..., 0] ** 2 - p[..., 1] ** 2 - 1.0))))
    return max(errs) <= 1e-11, f"sphere {errs[0]:.2e}, hyperboloid {errs[1]:.2e}"


def _check_equivariance():
    rng = make_rng(3)
    s = ScenarioSpec(name="check", geometry="sphere", n=4, seed=3)
    state = build_initial_state(s)
    r = conserved.equivariance_residual_sphere(state, geometry.random_rotation(rng))
    return r <= 1e-12, f"sphere residual {r:.2e}"


def _check_torus_periodicity():
    state = build_initial_state(ScenarioSpec(name="check", geometry="torus", n=3, seed=4))
    shifted = state.with_positions(state.positions + 2 * np.pi * np.array([[1, 0], [0, -1], [2, 1]]))
    d = float(np.max(np.abs(models.rhs(state) - models.rhs(shifted))))
    return d <= 1e-9, f"rhs change under 2 pi shifts {d:.2e}"


CHECKS = (
    ("antipodal equilibrium", _check_antipodal),
    ("dipole velocity", _check_dipole),
    ("sphere conservation", lambda: _check_conservation("sphere")),
    ("hyperbolic conservation", lambda: _check_conservation("hyperbolic")),
    ("torus conservation", lambda: _check_conservation("torus")),
    ("manifold preservation", _check_manifold),
    ("sphere equivariance", _check_equivariance),
    ("torus periodicity", _check_torus_periodicity),
)


def cmd_check(args) -> int:
    failed = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except VortexError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vortexlab", description="Point-vortex dynamics on the sphere, plane, hyperbolic plane and torus.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--no-exponent", action="store_true", help="skip the separation exponent")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gallery", help="render the regime gallery as SVG")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--geometry", choices=[g.value for g in Geometry])
    p.set_defaults(func=cmd_gallery)

    p = sub.add_parser("order", help="convergence-order study on a random scenario")
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--geometry", required=True, choices=[g.value for g in Geometry])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=3)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("check", help="invariant smoke suite")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
